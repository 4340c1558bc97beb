#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "refineloop/errors.hpp"

namespace refineloop {

/// Deterministic initial logits for contexts the table has not materialized.
class PriorModel {
 public:
  virtual ~PriorModel() = default;
  virtual std::vector<double> row(int prev2, int prev1) const = 0;
  virtual std::string kind() const = 0;
};

class ZeroPrior : public PriorModel {
 public:
  explicit ZeroPrior(std::size_t vocab_size) : vocab_size_(vocab_size) {}
  std::vector<double> row(int, int) const override {
    return std::vector<double>(vocab_size_, 0.0);
  }
  std::string kind() const override { return "zeros"; }

 private:
  std::size_t vocab_size_;
};

/// Order-2 context categorical over a closed symbol vocabulary. Rows of the
/// logits table materialize lazily from the prior; unmaterialized contexts
/// are scored from the prior directly, so reads are const and thread-safe.
class ToySoftmaxPolicy {
 public:
  using CtxKey = std::uint64_t;
  static constexpr int kBos = -1;

  ToySoftmaxPolicy(std::vector<std::string> vocabulary,
                   std::shared_ptr<const PriorModel> prior = nullptr);

  int vocab_size() const { return static_cast<int>(vocabulary_.size()); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  int symbol_id(std::string_view symbol) const;  // throws UnknownSymbol
  const std::string& symbol(int id) const { return vocabulary_.at(static_cast<std::size_t>(id)); }

  static CtxKey context_key(int prev2, int prev1);

  /// Exact log softmax of the context row (temperature 1).
  double logprob(int prev2, int prev1, int symbol) const;
  double logprob_key(CtxKey key, int symbol) const;
  std::vector<double> logits_row(CtxKey key) const;
  std::vector<double> log_softmax_row(CtxKey key) const;

  /// Temperature 0 decodes the argmax (lowest id on ties); otherwise samples
  /// softmax(logits / temperature) by inverse CDF on one rng draw.
  int sample(CtxKey key, double temperature, std::mt19937_64& rng) const;

  /// d logprob(key, symbol) / d logits = onehot(symbol) − softmax(row).
  std::vector<double> logprob_grad_row(CtxKey key, int symbol) const;

  void ensure_row(CtxKey key);
  bool has_row(CtxKey key) const { return row_of_.count(key) > 0; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t row_index(CtxKey key) const;  // materialized rows only
  const std::vector<CtxKey>& row_keys() const { return row_keys_; }

  /// Parameters are the materialized rows flattened in creation order.
  std::size_t param_count() const { return rows_.size() * vocabulary_.size(); }
  std::vector<double> params() const;
  void set_params(const std::vector<double>& p);
  void add_scaled(const std::vector<double>& direction, double scale);
  double& param_at(std::size_t flat_index);

  void set_row(CtxKey key, std::vector<double> logits);

  /// Deep, immutable-by-convention copy; later updates to the live policy do
  /// not affect it.
  ToySoftmaxPolicy snapshot() const { return *this; }

  const PriorModel& prior() const { return *prior_; }
  std::shared_ptr<const PriorModel> prior_ptr() const { return prior_; }

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, int> ids_;
  std::shared_ptr<const PriorModel> prior_;
  std::unordered_map<CtxKey, std::size_t> row_of_;
  std::vector<CtxKey> row_keys_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace refineloop
