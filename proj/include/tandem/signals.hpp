// Copyright 2026 The Tandem Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tandem/common.hpp"

namespace tandem {

/// Likelihood-ratio bounds of a signal model: every ratio dF0/dF1 lies in
/// [lower, upper], with 0 < lower < 1 < upper.
struct BlrBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Bernoulli signal law pair. `p(theta)` is P(s = 1 | theta).
///
/// Stored canonically with p0 < p1. When constructed from a pair with
/// p0 > p1 the signal labels are swapped (s -> 1 - s), which keeps the
/// meaning of theta intact; `relabeled()` reports whether that happened.
class SignalModel {
 public:
  SignalModel(double p0, double p1) {
    if (!(std::isfinite(p0) && std::isfinite(p1))) throw ModelError("signal probabilities must be finite");
    if (p0 == p1) throw ModelError("p0 == p1: signals carry no information");
    if (p0 > p1) {
      p0 = 1.0 - p0;
      p1 = 1.0 - p1;
      relabeled_ = true;
    }
    if (!(p0 > 0.0 && p1 < 1.0)) {
      throw ModelError("signal probabilities must lie strictly inside (0, 1) (bounded likelihood ratios)");
    }
    p_ = {p0, p1};
  }

  double p0() const { return p_[0]; }
  double p1() const { return p_[1]; }
  double q0() const { return 1.0 - p_[0]; }
  double q1() const { return 1.0 - p_[1]; }
  double p(Theta t) const { return p_[to_int(t)]; }
  double q(Theta t) const { return 1.0 - p_[to_int(t)]; }
  double p_bar() const { return 0.5 * (p_[0] + p_[1]); }
  double q_bar() const { return 1.0 - p_bar(); }
  bool relabeled() const { return relabeled_; }

  /// P(s_n = s | theta).
  double signal_probability(Theta t, int s) const { return s == 1 ? p(t) : q(t); }

  friend bool operator==(const SignalModel& a, const SignalModel& b) { return a.p_ == b.p_; }

 private:
  std::array<double, 2> p_{};
  bool relabeled_ = false;
};

/// Finite-support signal model with a probability vector per state of the world.
class DiscreteGeneralModel {
 public:
  DiscreteGeneralModel(std::vector<double> support, std::vector<double> f0, std::vector<double> f1)
      : support_(std::move(support)), f0_(std::move(f0)), f1_(std::move(f1)) {
    if (support_.empty()) throw ModelError("empty signal support");
    if (f0_.size() != support_.size() || f1_.size() != support_.size()) {
      throw ModelError("f0/f1 must have one entry per support point");
    }
    for (std::size_t i = 0; i < support_.size(); ++i) {
      for (std::size_t j = i + 1; j < support_.size(); ++j) {
        if (support_[i] == support_[j]) throw ModelError("duplicate support value");
      }
    }
    auto check_vector = [](const std::vector<double>& f, const char* name) {
      for (double x : f) {
        if (!(x >= 0.0 && x <= 1.0)) throw ModelError(std::string(name) + " has an entry outside [0, 1]");
      }
      const double total = std::accumulate(f.begin(), f.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-12) throw ModelError(std::string(name) + " does not sum to 1");
    };
    check_vector(f0_, "f0");
    check_vector(f1_, "f1");
    for (std::size_t i = 0; i < f0_.size(); ++i) {
      if ((f0_[i] > 0.0) != (f1_[i] > 0.0)) {
        throw ModelError("f0 and f1 are not mutually absolutely continuous");
      }
    }
    if (f0_ == f1_) throw ModelError("f0 == f1: signals carry no information");
  }

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& f0() const { return f0_; }
  const std::vector<double>& f1() const { return f1_; }

  /// Position of `s` in the support; throws std::domain_error if absent.
  std::size_t index_of(double s) const {
    auto it = std::find(support_.begin(), support_.end(), s);
    if (it == support_.end()) throw std::domain_error("signal value not in support");
    return static_cast<std::size_t>(it - support_.begin());
  }

 private:
  std::vector<double> support_;
  std::vector<double> f0_;
  std::vector<double> f1_;
};

/// dF0/dF1 at signal s (0 or 1).
inline double likelihood_ratio(const SignalModel& model, int s) {
  if (s != 0 && s != 1) throw std::domain_error("binary signal must be 0 or 1");
  return model.signal_probability(Theta::Zero, s) / model.signal_probability(Theta::One, s);
}

/// dF0/dF1 at support value s. Zero-mass points have no defined ratio.
inline double likelihood_ratio(const DiscreteGeneralModel& model, double s) {
  const std::size_t i = model.index_of(s);
  if (model.f1()[i] == 0.0) throw std::domain_error("likelihood ratio undefined at a zero-mass signal");
  return model.f0()[i] / model.f1()[i];
}

inline BlrBounds blr_bounds(const SignalModel& model) {
  return {likelihood_ratio(model, 1), likelihood_ratio(model, 0)};
}

inline BlrBounds blr_bounds(const DiscreteGeneralModel& model) {
  BlrBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < model.support().size(); ++i) {
    if (model.f1()[i] == 0.0) continue;
    const double r = model.f0()[i] / model.f1()[i];
    b.lower = std::min(b.lower, r);
    b.upper = std::max(b.upper, r);
  }
  return b;
}

/// Reduces a general model to a binary one via h(s) = 1 iff f1(s) > f0(s).
/// Ties map to 0.
inline SignalModel quantize(const DiscreteGeneralModel& model) {
  double p0 = 0.0;
  double p1 = 0.0;
  for (std::size_t i = 0; i < model.support().size(); ++i) {
    if (model.f1()[i] > model.f0()[i]) {
      p0 += model.f0()[i];
      p1 += model.f1()[i];
    }
  }
  if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0)) {
    throw ModelError("quantized signal is degenerate (probability 0 or 1)");
  }
  return SignalModel(p0, p1);
}

/// The three quantities of the complement-product sandwich
///   1 - sum(q) <= prod(1 - q) <= exp(-sum(q)),  q_i in [0, 1].
struct ProductBounds {
  double lower = 0.0;
  double product = 1.0;
  double upper = 1.0;
};

inline ProductBounds complement_product_bounds(std::span<const double> q) {
  double sum = 0.0;
  double prod = 1.0;
  for (double x : q) {
    require(x >= 0.0 && x <= 1.0, "complement_product_bounds: entries must lie in [0, 1]");
    sum += x;
    prod *= 1.0 - x;
  }
  return {1.0 - sum, prod, std::exp(-sum)};
}

}  // namespace tandem
