//
// Copyright 2026 The ppate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Renyi-DP accounting for Gaussian noisy-argmax aggregation: closed-form costs
// of Gaussian mechanisms, composition, conversion to (epsilon, delta)-DP and
// the data-dependent bound driven by the probability that the noisy argmax
// deviates from the plurality class. Every function here is pure.

#ifndef PPATE_RDP_ACCOUNTANT_HPP_
#define PPATE_RDP_ACCOUNTANT_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppate/error.hpp"

namespace ppate {

// Renyi order; always finite and strictly greater than one.
class RdpOrder {
 public:
  explicit RdpOrder(double alpha) : alpha_(alpha) {
    Require(std::isfinite(alpha) && alpha > 1.0,
            ErrorCategory::kInvalidParameter,
            "Renyi order must be finite and > 1, got " + std::to_string(alpha));
  }

  double value() const { return alpha_; }

  auto operator<=>(const RdpOrder&) const = default;

 private:
  double alpha_;
};

// Individual L2 sensitivity of a vote count with respect to one data point.
class Sensitivity {
 public:
  explicit Sensitivity(double value) : value_(value) {
    Require(std::isfinite(value) && value > 0.0,
            ErrorCategory::kInvalidParameter,
            "sensitivity must be finite and > 0, got " + std::to_string(value));
  }

  double value() const { return value_; }

  auto operator<=>(const Sensitivity&) const = default;

 private:
  double value_;
};

class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, double delta) : epsilon_(epsilon), delta_(delta) {
    Require(std::isfinite(epsilon) && epsilon >= 0.0,
            ErrorCategory::kInvalidParameter,
            "budget epsilon must be finite and >= 0");
    Require(delta > 0.0 && delta <= 1.0, ErrorCategory::kInvalidParameter,
            "budget delta must lie in (0, 1]");
  }

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

  bool operator==(const PrivacyBudget&) const = default;

 private:
  double epsilon_;
  double delta_;
};

// The integer orders 2..50.
inline std::vector<double> DefaultOrders() {
  std::vector<double> orders;
  for (int alpha = 2; alpha <= 50; ++alpha) orders.push_back(alpha);
  return orders;
}

// Accumulated RDP cost per order for one accounting unit.
class RdpCurve {
 public:
  RdpCurve() = default;

  // All-zero curve over `orders`, which must be strictly increasing and > 1.
  explicit RdpCurve(std::vector<double> orders)
      : orders_(std::move(orders)), costs_(orders_.size(), 0.0) {
    ValidateOrders();
  }

  RdpCurve(std::vector<double> orders, std::vector<double> costs)
      : orders_(std::move(orders)), costs_(std::move(costs)) {
    ValidateOrders();
    Require(costs_.size() == orders_.size(), ErrorCategory::kInvalidParameter,
            "curve needs one cost per order");
    for (double c : costs_) {
      Require(std::isfinite(c) && c >= 0.0, ErrorCategory::kInvalidParameter,
              "RDP costs must be finite and >= 0");
    }
  }

  std::span<const double> orders() const { return orders_; }
  std::span<const double> costs() const { return costs_; }
  std::size_t size() const { return orders_.size(); }
  bool empty() const { return orders_.empty(); }

  bool SameGrid(const RdpCurve& other) const { return orders_ == other.orders_; }

  // Adds `other` entry-wise. Grids must match exactly.
  void Accumulate(const RdpCurve& other) {
    Require(SameGrid(other), ErrorCategory::kGridMismatch,
            "cannot compose curves over different order grids");
    for (std::size_t i = 0; i < costs_.size(); ++i) costs_[i] += other.costs_[i];
  }

  bool operator==(const RdpCurve&) const = default;

 private:
  void ValidateOrders() const {
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      RdpOrder checked(orders_[i]);
      (void)checked;
      Require(i == 0 || orders_[i] > orders_[i - 1],
              ErrorCategory::kInvalidParameter,
              "order grid must be strictly increasing");
    }
  }

  std::vector<double> orders_;
  std::vector<double> costs_;
};

namespace internal {

inline void CheckSigma(double sigma) {
  Require(std::isfinite(sigma) && sigma > 0.0, ErrorCategory::kInvalidParameter,
          "noise standard deviation must be finite and > 0");
}

// log(1 - exp(x)) for x < 0.
inline double Log1mExp(double x) {
  if (x >= 0.0) return -std::numeric_limits<double>::infinity();
  return x > -M_LN2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

inline double LogAddExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(erfc(x)) for x >= 0; switches to the asymptotic expansion where erfc
// underflows.
inline double LogErfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  const double inv2 = 1.0 / (x * x);
  const double series =
      1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2;
  return -x * x - std::log(x * std::sqrt(M_PI)) + std::log(series);
}

inline std::size_t Plurality(std::span<const double> counts) {
  return static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
}

inline void CheckCounts(std::span<const double> counts) {
  Require(!counts.empty(), ErrorCategory::kInvalidVote,
          "vote vector must not be empty");
  for (double c : counts) {
    Require(std::isfinite(c) && c >= 0.0, ErrorCategory::kInvalidVote,
            "vote counts must be finite and >= 0");
  }
}

// Data-dependent bound evaluated from log q. Returns nullopt when the
// applicability conditions fail or the evaluation is not finite.
inline std::optional<double> TightBoundFromLogQ(double log_q, double alpha1,
                                                double alpha2, double eps1,
                                                double eps2, double alpha) {
  if (log_q == -std::numeric_limits<double>::infinity()) return 0.0;
  if (!(log_q < 0.0) || alpha > alpha1) return std::nullopt;
  const double log_threshold =
      (alpha2 - 1.0) * eps2 -
      alpha2 * (std::log(alpha1 / (alpha1 - 1.0)) +
                std::log(alpha2 / (alpha2 - 1.0)));
  if (log_q > log_threshold) return std::nullopt;
  // A must stay positive: q * exp(eps2) < 1.
  if (log_q + eps2 >= 0.0) return std::nullopt;

  const double log1q = Log1mExp(log_q);
  const double log_a =
      (alpha - 1.0) *
      (log1q - Log1mExp((log_q + eps2) * (alpha2 - 1.0) / alpha2));
  const double log_b = (alpha - 1.0) * (eps1 - log_q / (alpha1 - 1.0));
  const double eps = LogAddExp(log1q + log_a, log_q + log_b) / (alpha - 1.0);
  if (!std::isfinite(eps)) return std::nullopt;
  return std::max(eps, 0.0);
}

}  // namespace internal

// Delta^2 * alpha / (2 sigma^2): one Gaussian mechanism.
inline double GaussianRdp(Sensitivity sensitivity, double sigma, RdpOrder alpha) {
  internal::CheckSigma(sigma);
  const double d = sensitivity.value();
  return d * d * alpha.value() / (2.0 * sigma * sigma);
}

// Delta^2 * alpha / sigma^2: data-independent cost of one noisy-argmax
// release, i.e. two composed Gaussian mechanisms.
inline double LooseBound(Sensitivity sensitivity, double sigma, RdpOrder alpha) {
  internal::CheckSigma(sigma);
  const double d = sensitivity.value();
  return d * d * alpha.value() / (sigma * sigma);
}

inline RdpCurve LooseBoundCurve(Sensitivity sensitivity, double sigma,
                                std::span<const double> orders) {
  std::vector<double> costs;
  costs.reserve(orders.size());
  for (double alpha : orders) {
    costs.push_back(LooseBound(sensitivity, sigma, RdpOrder(alpha)));
  }
  return RdpCurve({orders.begin(), orders.end()}, std::move(costs));
}

inline RdpCurve Compose(const RdpCurve& a, const RdpCurve& b) {
  RdpCurve result = a;
  result.Accumulate(b);
  return result;
}

struct DpConversion {
  double epsilon;
  double best_alpha;

  bool operator==(const DpConversion&) const = default;
};

// min over the grid of eps_alpha + ln(1/delta) / (alpha - 1); ties keep the
// smaller order.
inline DpConversion RdpToDp(const RdpCurve& curve, double delta) {
  Require(!curve.empty(), ErrorCategory::kEmptyInput,
          "cannot convert an empty RDP curve");
  Require(delta > 0.0 && delta <= 1.0, ErrorCategory::kInvalidParameter,
          "delta must lie in (0, 1]");
  const double log_inv_delta = -std::log(delta);
  const auto orders = curve.orders();
  const auto costs = curve.costs();
  DpConversion best{std::numeric_limits<double>::infinity(), orders[0]};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double eps = costs[i] + log_inv_delta / (orders[i] - 1.0);
    if (eps < best.epsilon) best = {eps, orders[i]};
  }
  return best;
}

// log of the bound 1/2 * sum_{j != j*} erfc((n_j* - n_j) / (2 sigma)),
// clamped at log(1) = 0. j* is the plurality class (smallest index on ties).
inline double LogDeviationProbabilityBound(std::span<const double> counts,
                                           double sigma) {
  internal::CheckCounts(counts);
  internal::CheckSigma(sigma);
  const std::size_t top = internal::Plurality(counts);
  double log_sum = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (j == top) continue;
    const double x = (counts[top] - counts[j]) / (2.0 * sigma);
    log_sum = internal::LogAddExp(log_sum, internal::LogErfc(x));
  }
  return std::min(0.0, log_sum - M_LN2);
}

// Upper bound on the probability that noisy argmax with noise sigma does not
// return the plurality class.
inline double DeviationProbabilityBound(std::span<const double> counts,
                                        double sigma) {
  internal::CheckCounts(counts);
  internal::CheckSigma(sigma);
  const std::size_t top = internal::Plurality(counts);
  double sum = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (j == top) continue;
    sum += std::erfc((counts[top] - counts[j]) / (2.0 * sigma));
  }
  return std::min(1.0, 0.5 * sum);
}

struct TightBoundInputs {
  double q;
  RdpOrder alpha1;
  RdpOrder alpha2;
  double eps1;
  double eps2;
  RdpOrder target_alpha;
};

// Data-dependent RDP cost at `target_alpha` for a mechanism satisfying
// (alpha1, eps1)- and (alpha2, eps2)-RDP whose output deviates from the
// plurality class with probability at most q. nullopt means the bound does
// not apply and the caller should use the loose bound.
inline std::optional<double> TightBound(const TightBoundInputs& in) {
  Require(in.q >= 0.0 && in.q <= 1.0, ErrorCategory::kInvalidParameter,
          "q must lie in [0, 1]");
  Require(std::isfinite(in.eps1) && in.eps1 >= 0.0 && std::isfinite(in.eps2) &&
              in.eps2 >= 0.0,
          ErrorCategory::kInvalidParameter, "RDP costs must be finite and >= 0");
  return internal::TightBoundFromLogQ(std::log(in.q), in.alpha1.value(),
                                      in.alpha2.value(), in.eps1, in.eps2,
                                      in.target_alpha.value());
}

// How the pair of higher orders feeding the data-dependent bound is chosen.
enum class OrderSelection {
  // alpha2 = sigma * sqrt(-log q), alpha1 = alpha2 + 1 (continuous).
  kReference,
  // alpha1 = alpha2 searched over the accounting grid; best value kept.
  kGrid,
};

// RDP cost of one answered query for data of individual sensitivity
// `sensitivity`: per order, the smaller of the individual loose bound and the
// data-dependent bound evaluated at noise sigma / sensitivity.
inline RdpCurve PerQueryCost(std::span<const double> counts,
                             Sensitivity sensitivity, double sigma,
                             std::span<const double> orders,
                             OrderSelection selection = OrderSelection::kReference) {
  RdpCurve loose = LooseBoundCurve(sensitivity, sigma, orders);
  const double log_q = LogDeviationProbabilityBound(counts, sigma);
  if (log_q >= 0.0) return loose;

  const double sigma_eff = sigma / sensitivity.value();
  const double variance = sigma_eff * sigma_eff;
  std::vector<double> costs(loose.costs().begin(), loose.costs().end());

  auto improve = [&](double alpha1, double alpha2) {
    const double eps1 = alpha1 / variance;
    const double eps2 = alpha2 / variance;
    for (std::size_t i = 0; i < orders.size(); ++i) {
      if (orders[i] > alpha1) break;
      const auto tight = internal::TightBoundFromLogQ(log_q, alpha1, alpha2,
                                                      eps1, eps2, orders[i]);
      if (tight && *tight < costs[i]) costs[i] = *tight;
    }
  };

  if (log_q == -std::numeric_limits<double>::infinity()) {
    std::fill(costs.begin(), costs.end(), 0.0);
  } else if (selection == OrderSelection::kReference) {
    const double alpha2 = sigma_eff * std::sqrt(-log_q);
    if (alpha2 > 1.0) improve(alpha2 + 1.0, alpha2);
  } else {
    for (double alpha1 : orders) improve(alpha1, alpha1);
  }
  return RdpCurve({orders.begin(), orders.end()}, std::move(costs));
}

}  // namespace ppate

#endif  // PPATE_RDP_ACCOUNTANT_HPP_
