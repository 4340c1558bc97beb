#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refineloop/errors.hpp"

namespace refineloop {

struct GenerationRequest {
  std::string prompt;
  std::vector<std::string> stop_sequences;
  int max_new_tokens = 1024;  // whitespace-token cap for the segment
  double temperature = 1.0;
};

struct PolicySample {
  std::vector<int> tokens;        // engine vocabulary ids (toy policy only)
  std::string text;
  std::vector<double> logprobs;   // aligned to tokens when present
  std::optional<std::string> stop_hit;
};

/// One token of a toy-policy symbol stream, in generation order.
struct StreamToken {
  int symbol = 0;
  std::uint64_t ctx_key = 0;
  bool engine_origin = false;  // injected documents / bookkeeping, masked in the loss
  double logprob = 0.0;        // under the sampling policy, temperature 1
};

using ToyStream = std::vector<StreamToken>;

/// A single rollout's worth of interaction with one policy. Sessions are
/// stateful and single-threaded; create one per rollout.
class PolicySession {
 public:
  virtual ~PolicySession() = default;

  /// Generates the next policy segment, halting at the first emitted stop
  /// sequence (included in the output, stop_hit set) or at max_new_tokens.
  virtual PolicySample generate(const GenerationRequest& req) = 0;

  /// Feeds engine-injected text (a documents block) back to the policy.
  virtual void observe(std::string_view engine_text) = 0;

  /// Full symbol stream for GRPO batches; nullopt for backends without
  /// per-token log-probabilities.
  virtual std::optional<ToyStream> stream() const { return std::nullopt; }
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::unique_ptr<PolicySession> start(const std::string& prompt,
                                               std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

/// Single-shot convenience wrapper over start() + one generate() call.
PolicySample generate(const Policy& policy, const GenerationRequest& req,
                      std::uint64_t seed = 0);

/// Extracts {QUESTION} back out of an assembled rollout prompt.
std::optional<std::string> question_from_prompt(std::string_view prompt);

/// Fixture policy replaying canned text segments. Segments are split at stop
/// sequences during generation; remainders stay queued.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> segments);
  /// Per-question scripts: the provider receives the question text.
  explicit ScriptedPolicy(
      std::function<std::vector<std::string>(const std::string& question)> provider);

  std::unique_ptr<PolicySession> start(const std::string& prompt,
                                       std::uint64_t seed) const override;
  std::string name() const override { return "scripted"; }

 private:
  std::function<std::vector<std::string>(const std::string& question)> provider_;
};

}  // namespace refineloop
