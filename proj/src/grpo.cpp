#include "refineloop/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "refineloop/text.hpp"

namespace refineloop {

std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_epsilon) {
  if (rewards.size() < 2) {
    throw GrpoError(GrpoErrorKind::GroupTooSmall, "advantage normalization needs G >= 2");
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double stddev = std::sqrt(var);
  std::vector<double> out(rewards.size(), 0.0);
  if (stddev < std_epsilon) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / stddev;
  return out;
}

GroupBatch build_group_batch(const std::vector<RolloutRecord>& group,
                             const std::vector<double>& rewards,
                             const ToySoftmaxPolicy& ref_policy, double std_epsilon) {
  if (group.size() != rewards.size()) {
    throw GrpoError(GrpoErrorKind::ShapeMismatch, "group/reward size mismatch");
  }
  std::vector<double> advantages = compute_advantages(rewards, std_epsilon);
  GroupBatch batch;
  batch.rollouts.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!group[i].stream) {
      throw PolicyError(PolicyErrorKind::BackendUnsupported,
                        "GRPO batches need toy-policy token streams");
    }
    BatchRollout rollout;
    rollout.reward = rewards[i];
    rollout.advantage = advantages[i];
    for (const StreamToken& tok : *group[i].stream) {
      BatchToken bt;
      bt.symbol = tok.symbol;
      bt.ctx_key = tok.ctx_key;
      bt.old_logprob = tok.logprob;
      bt.ref_logprob = ref_policy.logprob_key(tok.ctx_key, tok.symbol);
      bt.loss_mask = !tok.engine_origin;
      rollout.tokens.push_back(bt);
    }
    batch.rollouts.push_back(std::move(rollout));
  }
  return batch;
}

LossStats surrogate_loss(const GroupBatch& batch, const ToySoftmaxPolicy& live,
                         const GrpoConfig& cfg) {
  if (batch.rollouts.empty()) {
    throw GrpoError(GrpoErrorKind::ShapeMismatch, "empty batch");
  }
  double objective = 0.0;
  double kl_sum = 0.0;
  std::size_t kl_tokens = 0;
  std::size_t clipped = 0;
  std::size_t considered = 0;

  for (const BatchRollout& rollout : batch.rollouts) {
    std::size_t unmasked = 0;
    for (const BatchToken& tok : rollout.tokens) unmasked += tok.loss_mask ? 1 : 0;
    if (unmasked == 0) continue;
    double rollout_term = 0.0;
    for (const BatchToken& tok : rollout.tokens) {
      if (!tok.loss_mask) continue;
      const double live_lp = live.logprob_key(tok.ctx_key, tok.symbol);
      const double ratio = std::exp(live_lp - tok.old_logprob);
      const double unclipped = ratio * rollout.advantage;
      const double clipped_ratio =
          std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
      const double clipped_term = clipped_ratio * rollout.advantage;
      rollout_term += std::min(unclipped, clipped_term);
      ++considered;
      if (clipped_term < unclipped) ++clipped;

      const double ratio_ref = std::exp(tok.ref_logprob - live_lp);
      const double kl = ratio_ref - (tok.ref_logprob - live_lp) - 1.0;
      rollout_term -= cfg.kl_coeff * kl;
      kl_sum += kl;
      ++kl_tokens;
    }
    objective += rollout_term / static_cast<double>(unmasked);
  }
  objective /= static_cast<double>(batch.rollouts.size());

  LossStats stats;
  stats.loss = -objective;
  stats.mean_kl = kl_tokens ? kl_sum / static_cast<double>(kl_tokens) : 0.0;
  stats.clip_fraction =
      considered ? static_cast<double>(clipped) / static_cast<double>(considered) : 0.0;
  return stats;
}

std::vector<double> gradient(const GroupBatch& batch, ToySoftmaxPolicy& live,
                             const GrpoConfig& cfg) {
  for (const BatchRollout& rollout : batch.rollouts) {
    for (const BatchToken& tok : rollout.tokens) {
      if (tok.loss_mask) live.ensure_row(tok.ctx_key);
    }
  }
  const std::size_t vocab = static_cast<std::size_t>(live.vocab_size());
  std::vector<double> grad(live.param_count(), 0.0);
  const double group_scale = 1.0 / static_cast<double>(batch.rollouts.size());

  for (const BatchRollout& rollout : batch.rollouts) {
    std::size_t unmasked = 0;
    for (const BatchToken& tok : rollout.tokens) unmasked += tok.loss_mask ? 1 : 0;
    if (unmasked == 0) continue;
    const double token_scale = group_scale / static_cast<double>(unmasked);

    for (const BatchToken& tok : rollout.tokens) {
      if (!tok.loss_mask) continue;
      const double live_lp = live.logprob_key(tok.ctx_key, tok.symbol);
      const double ratio = std::exp(live_lp - tok.old_logprob);
      const double unclipped = ratio * rollout.advantage;
      const double clipped_ratio =
          std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
      const double clipped_term = clipped_ratio * rollout.advantage;

      // d objective / d live_lp; the clipped branch is constant in theta.
      double dobj_dlp = 0.0;
      if (unclipped <= clipped_term) {
        dobj_dlp += ratio * rollout.advantage;
      }
      const double ratio_ref = std::exp(tok.ref_logprob - live_lp);
      // d kl / d live_lp = 1 − ratio_ref; objective subtracts kl_coeff * kl.
      dobj_dlp -= cfg.kl_coeff * (1.0 - ratio_ref);

      const double dloss_dlp = -dobj_dlp * token_scale;
      std::vector<double> row_grad = live.logprob_grad_row(tok.ctx_key, tok.symbol);
      const std::size_t base = live.row_index(tok.ctx_key) * vocab;
      for (std::size_t j = 0; j < vocab; ++j) grad[base + j] += dloss_dlp * row_grad[j];
    }
  }
  return grad;
}

std::vector<TrainStats> train(ToyAgentPolicy& policy, const std::vector<QaExample>& examples,
                              const RetrievalIndex& index, const RolloutConfig& rollout_cfg,
                              const RetrievalConfig& retrieval_cfg, const GrpoConfig& cfg,
                              const RewardMode& reward_mode, const TrainOptions& options) {
  if (examples.empty()) {
    throw GrpoError(GrpoErrorKind::ShapeMismatch, "empty training set");
  }
  const ToyAgentPolicy reference = policy.snapshot();
  std::vector<TrainStats> history;

  for (int step = 0; step < cfg.steps; ++step) {
    const ToyAgentPolicy behaviour = policy.snapshot();

    std::vector<double> step_grad;
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    double kl_sum = 0.0;
    double clip_sum = 0.0;
    std::size_t groups = 0;

    for (int b = 0; b < options.questions_per_step; ++b) {
      const std::uint64_t salt = static_cast<std::uint64_t>(step) * 1000003ULL +
                                 static_cast<std::uint64_t>(b);
      const std::uint64_t pick = mix_seed(options.seed, salt);
      const QaExample& example = examples[pick % examples.size()];
      const std::uint64_t group_seed = mix_seed(options.seed, salt ^ 0x9e37ULL);

      RolloutConfig rc = rollout_cfg;
      rc.group_size = cfg.group_size;
      std::vector<RolloutRecord> group =
          run_group(behaviour, index, example, rc, retrieval_cfg, group_seed);

      std::vector<double> rewards;
      rewards.reserve(group.size());
      for (const RolloutRecord& rec : group) {
        rewards.push_back(score_rollout(rec, example, reward_mode).r_overall);
      }
      reward_sum += std::accumulate(rewards.begin(), rewards.end(), 0.0);
      reward_count += rewards.size();

      GroupBatch batch =
          build_group_batch(group, rewards, reference.table(), cfg.std_epsilon);
      LossStats stats = surrogate_loss(batch, policy.table(), cfg);
      std::vector<double> g = gradient(batch, policy.table(), cfg);
      if (step_grad.size() < g.size()) step_grad.resize(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) step_grad[i] += g[i];
      kl_sum += stats.mean_kl;
      clip_sum += stats.clip_fraction;
      ++groups;
    }

    for (double& v : step_grad) v /= static_cast<double>(groups);
    double norm = 0.0;
    for (double v : step_grad) norm += v * v;
    norm = std::sqrt(norm);

    // Gradient ascent on the objective = descent on the loss.
    step_grad.resize(policy.table().param_count(), 0.0);
    policy.table().add_scaled(step_grad, -options.learning_rate);

    TrainStats ts;
    ts.step = step;
    ts.mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
    ts.mean_kl = groups ? kl_sum / static_cast<double>(groups) : 0.0;
    ts.clip_fraction = groups ? clip_sum / static_cast<double>(groups) : 0.0;
    ts.grad_norm = norm;
    history.push_back(ts);
  }
  return history;
}

}  // namespace refineloop
