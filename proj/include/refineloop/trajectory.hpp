#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refineloop/errors.hpp"

namespace refineloop {

enum class ActionTag { think = 0, search = 1, documents = 2, refine = 3, answer = 4 };

inline constexpr std::size_t kActionTagCount = 5;

std::string_view tag_name(ActionTag tag);
std::string open_tag(ActionTag tag);
std::string close_tag(ActionTag tag);
std::optional<ActionTag> tag_from_name(std::string_view name);

enum class StepOrigin { policy, engine };

struct Step {
  ActionTag tag;
  std::string content;
  StepOrigin origin = StepOrigin::policy;
};

enum class TerminationReason {
  answered,
  length_budget,
  search_budget_then_no_answer,
  malformed,
};

std::string_view termination_reason_name(TerminationReason reason);
std::optional<TerminationReason> termination_reason_from_name(std::string_view name);

struct Trajectory {
  std::string question;
  std::vector<Step> steps;
  bool terminated = false;
  std::optional<TerminationReason> termination_reason;

  std::size_t count(ActionTag tag) const;
};

struct DerivedOutputs {
  std::optional<std::string> final_answer;
  std::string refine_concat;
  std::array<std::size_t, kActionTagCount> counts{};

  std::size_t count(ActionTag tag) const { return counts[static_cast<std::size_t>(tag)]; }
};

enum class ParseMode { strict, lenient };

/// Parses raw generated text (after the prompt) into tagged steps. Leading
/// free text becomes a synthetic think step; interior free text is a
/// ParseError in strict mode and dropped in lenient mode. Whitespace-only
/// segments between blocks are treated as separators in both modes.
Trajectory parse_trajectory(std::string_view raw, std::string_view question,
                            ParseMode mode = ParseMode::strict);

DerivedOutputs derive_outputs(const Trajectory& trajectory);

/// Inverse of parse_trajectory in strict mode: blocks concatenated with no
/// separators.
std::string serialize_trajectory(const Trajectory& trajectory);

/// Best-effort extraction of well-formed blocks from arbitrary text, skipping
/// everything that does not parse. Used to keep reward computation total on
/// malformed rollouts.
std::vector<Step> salvage_steps(std::string_view raw);

/// True if text contains any open or close literal of the five action tags.
bool contains_tag_literal(std::string_view text);

}  // namespace refineloop
