#include "refineloop/toy_policy.hpp"

#include <algorithm>
#include <cmath>

namespace refineloop {

namespace {

// One uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double log_sum_exp(const std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

ToySoftmaxPolicy::ToySoftmaxPolicy(std::vector<std::string> vocabulary,
                                   std::shared_ptr<const PriorModel> prior)
    : vocabulary_(std::move(vocabulary)), prior_(std::move(prior)) {
  if (!prior_) prior_ = std::make_shared<ZeroPrior>(vocabulary_.size());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    ids_[vocabulary_[i]] = static_cast<int>(i);
  }
}

int ToySoftmaxPolicy::symbol_id(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) {
    throw PolicyError(PolicyErrorKind::UnknownSymbol,
                      "symbol not in vocabulary: " + std::string(symbol));
  }
  return it->second;
}

ToySoftmaxPolicy::CtxKey ToySoftmaxPolicy::context_key(int prev2, int prev1) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev2 + 1)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev1 + 1));
}

std::vector<double> ToySoftmaxPolicy::logits_row(CtxKey key) const {
  auto it = row_of_.find(key);
  if (it != row_of_.end()) return rows_[it->second];
  int prev1 = static_cast<int>(key & 0xffffffffULL) - 1;
  int prev2 = static_cast<int>(key >> 32) - 1;
  std::vector<double> row = prior_->row(prev2, prev1);
  row.resize(vocabulary_.size(), 0.0);
  return row;
}

std::vector<double> ToySoftmaxPolicy::log_softmax_row(CtxKey key) const {
  std::vector<double> z = logits_row(key);
  double lse = log_sum_exp(z);
  for (double& v : z) v -= lse;
  return z;
}

double ToySoftmaxPolicy::logprob_key(CtxKey key, int symbol) const {
  std::vector<double> z = logits_row(key);
  return z[static_cast<std::size_t>(symbol)] - log_sum_exp(z);
}

double ToySoftmaxPolicy::logprob(int prev2, int prev1, int symbol) const {
  return logprob_key(context_key(prev2, prev1), symbol);
}

int ToySoftmaxPolicy::sample(CtxKey key, double temperature, std::mt19937_64& rng) const {
  std::vector<double> z = logits_row(key);
  if (temperature <= 0.0) {
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  for (double& v : z) v /= temperature;
  double lse = log_sum_exp(z);
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += std::exp(z[i] - lse);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(z.size()) - 1;
}

std::vector<double> ToySoftmaxPolicy::logprob_grad_row(CtxKey key, int symbol) const {
  std::vector<double> z = logits_row(key);
  double lse = log_sum_exp(z);
  std::vector<double> grad(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) grad[i] = -std::exp(z[i] - lse);
  grad[static_cast<std::size_t>(symbol)] += 1.0;
  return grad;
}

void ToySoftmaxPolicy::ensure_row(CtxKey key) {
  if (row_of_.count(key)) return;
  row_of_[key] = rows_.size();
  row_keys_.push_back(key);
  rows_.push_back(logits_row(key));
}

std::size_t ToySoftmaxPolicy::row_index(CtxKey key) const {
  auto it = row_of_.find(key);
  if (it == row_of_.end()) {
    throw GrpoError(GrpoErrorKind::ShapeMismatch, "context row not materialized");
  }
  return it->second;
}

std::vector<double> ToySoftmaxPolicy::params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& row : rows_) out.insert(out.end(), row.begin(), row.end());
  return out;
}

void ToySoftmaxPolicy::set_params(const std::vector<double>& p) {
  if (p.size() != param_count()) {
    throw GrpoError(GrpoErrorKind::ShapeMismatch, "parameter vector size mismatch");
  }
  std::size_t at = 0;
  for (auto& row : rows_) {
    for (double& v : row) v = p[at++];
  }
}

void ToySoftmaxPolicy::add_scaled(const std::vector<double>& direction, double scale) {
  if (direction.size() != param_count()) {
    throw GrpoError(GrpoErrorKind::ShapeMismatch, "direction vector size mismatch");
  }
  std::size_t at = 0;
  for (auto& row : rows_) {
    for (double& v : row) v += scale * direction[at++];
  }
}

double& ToySoftmaxPolicy::param_at(std::size_t flat_index) {
  std::size_t v = vocabulary_.size();
  return rows_.at(flat_index / v).at(flat_index % v);
}

void ToySoftmaxPolicy::set_row(CtxKey key, std::vector<double> logits) {
  logits.resize(vocabulary_.size(), 0.0);
  auto it = row_of_.find(key);
  if (it == row_of_.end()) {
    row_of_[key] = rows_.size();
    row_keys_.push_back(key);
    rows_.push_back(std::move(logits));
  } else {
    rows_[it->second] = std::move(logits);
  }
}

}  // namespace refineloop
