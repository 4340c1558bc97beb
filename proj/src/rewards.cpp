#include "refineloop/rewards.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "refineloop/text.hpp"

namespace refineloop {

namespace {

std::set<std::string> word_set(std::string_view text) {
  std::vector<std::string> words = normalized_words(text);
  return {words.begin(), words.end()};
}

double set_f1(const std::set<std::string>& pred, const std::set<std::string>& gold) {
  if (pred.empty() || gold.empty()) return 0.0;
  std::size_t overlap = 0;
  for (const std::string& w : pred) overlap += gold.count(w);
  if (overlap == 0) return 0.0;
  return 2.0 * static_cast<double>(overlap) /
         static_cast<double>(pred.size() + gold.size());
}

std::string reward_target_text(const Trajectory& trajectory,
                               const std::vector<std::vector<Document>>& retrieved,
                               RewardPlacement placement) {
  if (placement == RewardPlacement::refine) {
    return derive_outputs(trajectory).refine_concat;
  }
  // Reward on the raw retrieved documents. Falls back to the documents-step
  // contents when the per-search document lists were not kept (replayed logs).
  std::string text;
  if (!retrieved.empty()) {
    for (const auto& docs : retrieved) {
      for (const Document& d : docs) {
        if (!text.empty()) text.push_back(' ');
        text += d.title + " " + d.body;
      }
    }
    return text;
  }
  for (const Step& step : trajectory.steps) {
    if (step.tag != ActionTag::documents) continue;
    if (!text.empty()) text.push_back(' ');
    text += step.content;
  }
  return text;
}

}  // namespace

std::string normalize(std::string_view text) { return normalize_answer(text); }

double answer_reward(const std::optional<std::string>& prediction,
                     const std::vector<std::string>& gold) {
  if (!prediction) return 0.0;
  std::set<std::string> pred = word_set(*prediction);
  double best = 0.0;
  for (const std::string& g : gold) {
    best = std::max(best, set_f1(pred, word_set(g)));
  }
  return best;
}

double retrieval_reward(const Trajectory& trajectory,
                        const std::vector<std::vector<Document>>& retrieved,
                        const std::vector<std::string>& gold, const RewardMode& mode) {
  const std::string target = reward_target_text(trajectory, retrieved, mode.placement);
  double best = 0.0;
  if (mode.granularity == RetrievalGranularity::token_recall) {
    std::map<std::string, std::size_t> have;
    for (const std::string& w : normalized_words(target)) have[w] += 1;
    for (const std::string& g : gold) {
      std::vector<std::string> gw = normalized_words(g);
      if (gw.empty()) continue;
      std::map<std::string, std::size_t> need;
      for (const std::string& w : gw) need[w] += 1;
      std::size_t hit = 0;
      for (const auto& [w, n] : need) {
        auto it = have.find(w);
        hit += std::min(n, it == have.end() ? std::size_t{0} : it->second);
      }
      best = std::max(best, static_cast<double>(hit) / static_cast<double>(gw.size()));
    }
    return best;
  }

  std::set<std::string> have = word_set(target);
  for (const std::string& g : gold) {
    std::set<std::string> need = word_set(g);
    if (need.empty()) continue;
    std::size_t hit = 0;
    for (const std::string& w : need) hit += have.count(w);
    if (mode.granularity == RetrievalGranularity::cover) {
      if (hit == need.size()) return 1.0;
    } else {
      best = std::max(best, static_cast<double>(hit) / static_cast<double>(need.size()));
    }
  }
  return mode.granularity == RetrievalGranularity::cover ? 0.0 : best;
}

double combine(double r_ans, double r_ret, const RewardMode& mode) {
  switch (mode.combination) {
    case RewardCombination::nonlinear:
      if (r_ans > 0.0) return r_ans;
      if (r_ret > 0.0) return 0.1;
      return 0.0;
    case RewardCombination::linear:
      return r_ans + r_ret;
    case RewardCombination::answer_only:
      return r_ans;
  }
  return 0.0;
}

RewardBreakdown score_rollout(const RolloutRecord& record, const QaExample& example,
                              const RewardMode& mode) {
  RewardBreakdown out;
  out.mode = mode;
  DerivedOutputs derived = derive_outputs(record.trajectory);
  out.r_ans = answer_reward(derived.final_answer, example.gold_answers);
  out.r_ret = retrieval_reward(record.trajectory, record.retrieved, example.gold_answers, mode);
  if (out.r_ans > 0.0 && derived.final_answer) {
    std::set<std::string> pred = word_set(*derived.final_answer);
    double best = -1.0;
    for (const std::string& g : example.gold_answers) {
      double f1 = set_f1(pred, word_set(g));
      if (f1 > best) {
        best = f1;
        out.matched_gold = g;
      }
    }
  }
  out.r_overall = combine(out.r_ans, out.r_ret, mode);
  return out;
}

}  // namespace refineloop
