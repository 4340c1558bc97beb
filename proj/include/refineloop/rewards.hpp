#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refineloop/dataset.hpp"
#include "refineloop/retrieval.hpp"
#include "refineloop/rollout.hpp"
#include "refineloop/trajectory.hpp"

namespace refineloop {

enum class RewardPlacement { refine, documents };
enum class RewardCombination { nonlinear, linear, answer_only };
enum class RetrievalGranularity { cover, token_recall, word_recall };

struct RewardMode {
  RewardPlacement placement = RewardPlacement::refine;
  RewardCombination combination = RewardCombination::nonlinear;
  RetrievalGranularity granularity = RetrievalGranularity::cover;
};

struct RewardBreakdown {
  double r_ans = 0.0;
  double r_ret = 0.0;
  double r_overall = 0.0;
  RewardMode mode;
  std::optional<std::string> matched_gold;
};

/// Lowercase, strip punctuation, drop articles {a, an, the}, collapse
/// whitespace.
std::string normalize(std::string_view text);

/// Max over gold aliases of the F1 between the deduplicated normalized word
/// sets of prediction and gold. Missing prediction scores 0.
double answer_reward(const std::optional<std::string>& prediction,
                     const std::vector<std::string>& gold);

/// Reward on the refined knowledge (or on raw retrieved documents). cover is
/// the word-set inclusion indicator; the recall variants score the fraction
/// of gold words (unique) or tokens (with multiplicity) present. Max over
/// gold aliases.
double retrieval_reward(const Trajectory& trajectory,
                        const std::vector<std::vector<Document>>& retrieved,
                        const std::vector<std::string>& gold, const RewardMode& mode);

/// nonlinear: r_ans if r_ans > 0, else 0.1 if r_ret > 0, else 0.
/// linear: r_ans + r_ret, unclamped (group normalization absorbs the scale).
/// answer_only: r_ans.
double combine(double r_ans, double r_ret, const RewardMode& mode);

RewardBreakdown score_rollout(const RolloutRecord& record, const QaExample& example,
                              const RewardMode& mode);

}  // namespace refineloop
