#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refineloop/dataset.hpp"
#include "refineloop/retrieval.hpp"
#include "refineloop/rewards.hpp"
#include "refineloop/rollout.hpp"
#include "refineloop/toy_agent.hpp"
#include "refineloop/toy_policy.hpp"

namespace refineloop {

struct GrpoConfig {
  double clip_ratio = 0.2;
  double kl_coeff = 0.001;
  int group_size = 5;
  double learning_rate = 1e-6;  // paper-parity default; toy training uses TrainOptions
  int steps = 0;
  double std_epsilon = 1e-6;
};

struct BatchToken {
  int symbol = 0;
  std::uint64_t ctx_key = 0;
  double old_logprob = 0.0;
  double ref_logprob = 0.0;
  bool loss_mask = true;  // false on engine-origin (documents) tokens
};

struct BatchRollout {
  std::vector<BatchToken> tokens;
  double reward = 0.0;
  double advantage = 0.0;  // broadcast to every unmasked token
};

struct GroupBatch {
  std::vector<BatchRollout> rollouts;
};

struct TrainStats {
  int step = 0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

struct LossStats {
  double loss = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Group-relative advantages: (r − mean) / pop-std, all zero when the group
/// is degenerate (std < std_epsilon). Throws GroupTooSmall for G < 2.
std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_epsilon);

/// Assembles a GroupBatch from toy rollouts: recorded sampling logprobs are
/// the old-policy values; the reference policy rescoring fills ref_logprob.
GroupBatch build_group_batch(const std::vector<RolloutRecord>& group,
                             const std::vector<double>& rewards,
                             const ToySoftmaxPolicy& ref_policy, double std_epsilon);

/// Negative Eq.-style objective: token terms averaged over unmasked tokens
/// within each rollout, then over rollouts; clipped importance-weighted
/// advantages minus the kl_coeff-scaled estimator (ratio_ref − log ratio_ref
/// − 1). Masked tokens contribute nothing to any term.
LossStats surrogate_loss(const GroupBatch& batch, const ToySoftmaxPolicy& live,
                         const GrpoConfig& cfg);

/// Exact analytic gradient of the loss with respect to the live logits table
/// (flattened in row-creation order). The clipped branch carries zero
/// gradient. All batch contexts are materialized on the live policy first.
std::vector<double> gradient(const GroupBatch& batch, ToySoftmaxPolicy& live,
                             const GrpoConfig& cfg);

struct TrainOptions {
  int questions_per_step = 8;
  double learning_rate = 4.0;  // toy-scale default; see GrpoConfig for parity value
  std::uint64_t seed = 7;
};

/// One GRPO step per `cfg.steps`: snapshot the behaviour policy, sample G
/// rollouts per question, score, normalize within groups, take one gradient
/// ascent step. Deterministic per seed.
std::vector<TrainStats> train(ToyAgentPolicy& policy, const std::vector<QaExample>& examples,
                              const RetrievalIndex& index, const RolloutConfig& rollout_cfg,
                              const RetrievalConfig& retrieval_cfg, const GrpoConfig& cfg,
                              const RewardMode& reward_mode, const TrainOptions& options);

}  // namespace refineloop
