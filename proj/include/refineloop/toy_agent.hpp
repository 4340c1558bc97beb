#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "refineloop/policy.hpp"
#include "refineloop/toy_policy.hpp"

namespace refineloop {

enum class TemplateMode { refine, no_refine };

/// Closed symbol vocabulary for the toy agent: action tags, pointer symbols
/// rendered from the rollout state, engine bookkeeping markers, and the
/// surface words of the synthetic world.
struct ToyAgentVocab {
  enum class SymClass { tag, pointer, marker, word, unk };

  std::vector<std::string> symbols;
  std::vector<SymClass> classes;
  std::unordered_map<std::string, int> ids;

  // action tags
  int think_open = -1, think_close = -1;
  int search_open = -1, search_close = -1;
  int documents_open = -1, documents_close = -1;
  int refine_open = -1, refine_close = -1;
  int answer_open = -1, answer_close = -1;
  // pointer symbols
  int p_plan = -1, p_topic = -1, p_naive = -1, p_query = -1;
  int p_fact = -1, p_first = -1, p_result = -1;
  // markers and unknown-word bucket
  int unk = -1;
  static constexpr int kMaxHops = 3;
  static constexpr int kMaxSearchMarker = 6;
  int question_marker(int hops) const;             // #q1..#q3
  int state_marker(int hops, int searches) const;  // #h<hops>k<searches>, clamped

  bool is_close_tag(int id) const;
  bool is_open_tag(int id) const;
  int close_of(int open_id) const;

  std::size_t size() const { return symbols.size(); }
};

ToyAgentVocab build_toy_vocab(const std::vector<std::string>& entities,
                              const std::vector<std::string>& relations);

/// Grammar-shaped initial logits: block structure is likely from the start,
/// while the content choices inside each block stay near-uniform so GRPO has
/// real decisions to learn.
class AgentPrior : public PriorModel {
 public:
  AgentPrior(std::shared_ptr<const ToyAgentVocab> vocab, TemplateMode mode);
  std::vector<double> row(int prev2, int prev1) const override;
  std::string kind() const override;

  // prior shape knobs
  static constexpr double kDecisionBoost = 5.0;
  static constexpr double kChoiceBoost = 5.0;
  static constexpr double kCloseBoost = 7.0;
  static constexpr double kLooseCloseBoost = 2.5;
  static constexpr double kBanned = -40.0;

 private:
  std::shared_ptr<const ToyAgentVocab> vocab_;
  TemplateMode mode_;
};

/// Trainable rollout actor: an order-2 softmax table over the toy vocabulary,
/// with deterministic rendering of pointer symbols against the question and
/// the latest documents block.
class ToyAgentPolicy : public Policy {
 public:
  ToyAgentPolicy(std::shared_ptr<const ToyAgentVocab> vocab, TemplateMode mode);
  ToyAgentPolicy(std::shared_ptr<const ToyAgentVocab> vocab, TemplateMode mode,
                 ToySoftmaxPolicy table);

  std::unique_ptr<PolicySession> start(const std::string& prompt,
                                       std::uint64_t seed) const override;
  std::string name() const override { return "toy"; }

  ToySoftmaxPolicy& table() { return table_; }
  const ToySoftmaxPolicy& table() const { return table_; }
  const ToyAgentVocab& vocab() const { return *vocab_; }
  std::shared_ptr<const ToyAgentVocab> vocab_ptr() const { return vocab_; }
  TemplateMode mode() const { return mode_; }

  ToyAgentPolicy snapshot() const { return *this; }

  void save(const std::string& path) const;
  static ToyAgentPolicy load(const std::string& path);

 private:
  std::shared_ptr<const ToyAgentVocab> vocab_;
  TemplateMode mode_;
  ToySoftmaxPolicy table_;
};

ToyAgentPolicy make_world_policy(const std::vector<std::string>& entities,
                                 const std::vector<std::string>& relations,
                                 TemplateMode mode = TemplateMode::refine);

}  // namespace refineloop
