#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refineloop/dataset.hpp"
#include "refineloop/policy.hpp"
#include "refineloop/retrieval.hpp"
#include "refineloop/toy_agent.hpp"
#include "refineloop/trajectory.hpp"

namespace refineloop {

struct RolloutConfig {
  int max_search_actions = 5;
  int max_response_tokens = 2048;
  int group_size = 5;
  double temperature = 1.0;
  TemplateMode template_mode = TemplateMode::refine;
};

struct RolloutRecord {
  std::string example_id;
  Trajectory trajectory;
  std::vector<std::vector<Document>> retrieved;  // per executed search
  std::optional<ToyStream> stream;               // toy policy only
  std::uint64_t seed = 0;
  int searches_requested = 0;  // includes over-budget searches
  int retrieval_calls = 0;     // queries actually executed
  int sentinel_blocks = 0;     // searches answered with the budget sentinel
  int policy_tokens = 0;       // whitespace tokens of policy-origin text

  TrajectoryLogRecord to_log_record(const QaExample& example) const;
};

inline constexpr std::string_view kBudgetSentinel =
    "Search budget exhausted; provide your final answer.";

/// Instantiates the rollout prompt with {QUESTION}; no_refine mode omits the
/// refinement instruction sentence. Throws std::invalid_argument on an empty
/// question.
std::string build_prompt(const std::string& question, TemplateMode mode = TemplateMode::refine);

RolloutRecord run_rollout(const Policy& policy, const RetrievalIndex& index,
                          const QaExample& example, const RolloutConfig& cfg,
                          const RetrievalConfig& rcfg, std::uint64_t seed);

/// G independent rollouts with seeds seed+0 .. seed+G−1. During training the
/// caller passes the frozen behaviour snapshot, not the live policy.
std::vector<RolloutRecord> run_group(const Policy& policy, const RetrievalIndex& index,
                                     const QaExample& example, const RolloutConfig& cfg,
                                     const RetrievalConfig& rcfg, std::uint64_t seed);

}  // namespace refineloop
