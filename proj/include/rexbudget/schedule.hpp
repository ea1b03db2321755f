/*
 * Copyright (c) 2026, the rexbudget authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rexbudget/errors.hpp"
#include "rexbudget/text.hpp"

namespace rexbudget {

/**
 * A learning-rate schedule is a *profile* (the continuous curve mapping
 * normalized progress x = t/T to a multiplier of the base learning rate)
 * combined with a *sampling policy* (how often the curve is re-sampled;
 * between samples the rate is held constant). Per-iteration sampling of a
 * linear profile is the usual linear decay; sampling a step profile only at
 * its milestones is the classic 50-75 step schedule; the same profile under
 * a different sampling rate is a different schedule.
 */

// ---------------------------------------------------------------------------
// Profiles. Every LR multiplier lies in [0, 1] over x in [0, 1].
// ---------------------------------------------------------------------------

struct Constant {};

/// (1 - x)
struct Linear {};

/// (1 + cos(pi * x)) / 2
struct Cosine {};

/// exp(gamma * x); gamma <= 0 so the multiplier stays in [0, 1].
struct Exponential {
  double gamma = -3.0;
};

/// Reflected exponential: (1 - x) / (1/2 + (1 - x)/2). Decays slowly early
/// and aggressively late; sits pointwise between Linear and
/// DelayedLinear(0.5).
struct Rex {};

/// Piecewise-constant: multiply by `factor` at each milestone fraction.
struct Step {
  std::vector<double> milestones{0.5, 0.75};
  double factor = 0.1;
};

/// Smooth stand-in for the step profile: 10^(-rate * x). The default rate of
/// 2 makes the curve pass through the step schedule's first decay (0.1 at
/// x = 0.5).
struct StepApprox {
  double rate = 2.0;
};

/// Hold 1 until x = delay_frac, then decay linearly to 0 at x = 1.
struct DelayedLinear {
  double delay_frac = 0.5;
};

/// Triangular LR between lr_min_ratio and 1 (peak at x = 1/2), with the
/// momentum cycled inversely between beta_max (endpoints) and beta_min
/// (midpoint). The multiplier is relative to the peak rate, so base_lr plays
/// the role of eta_max.
struct OneCycle {
  double lr_min_ratio = 0.1;
  double beta_max = 0.95;
  double beta_min = 0.85;
};

using Profile =
    std::variant<Constant, Linear, Cosine, Exponential, Rex, Step, StepApprox, DelayedLinear, OneCycle>;

struct ProfileSample {
  double lr_mult = 1.0;
  /// Present only for profiles that cycle momentum (OneCycle).
  std::optional<double> momentum;
};

/// Throws config_error if the profile's parameters violate its invariants.
inline void validate_profile(const Profile& profile) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Exponential>) {
          if (p.gamma > 0.0) throw config_error("exponential profile requires gamma <= 0");
        } else if constexpr (std::is_same_v<P, Step>) {
          if (p.milestones.empty()) throw config_error("step profile requires at least one milestone");
          double prev = 0.0;
          for (double m : p.milestones) {
            if (!(m > 0.0 && m < 1.0)) throw config_error("step milestones must lie in (0,1)");
            if (m <= prev && prev != 0.0) throw config_error("step milestones must be strictly increasing");
            prev = m;
          }
          if (!(p.factor > 0.0 && p.factor < 1.0)) throw config_error("step factor must lie in (0,1)");
        } else if constexpr (std::is_same_v<P, StepApprox>) {
          if (!(p.rate > 0.0)) throw config_error("step-approx rate must be > 0");
        } else if constexpr (std::is_same_v<P, DelayedLinear>) {
          if (!(p.delay_frac >= 0.0 && p.delay_frac < 1.0))
            throw config_error("delayed-linear delay must lie in [0,1)");
        } else if constexpr (std::is_same_v<P, OneCycle>) {
          if (!(p.lr_min_ratio >= 0.0 && p.lr_min_ratio <= 1.0))
            throw config_error("onecycle lr_min_ratio must lie in [0,1]");
          if (!(p.beta_min >= 0.0 && p.beta_min <= p.beta_max && p.beta_max < 1.0))
            throw config_error("onecycle requires 0 <= beta_min <= beta_max < 1");
        }
      },
      profile);
}

/**
 * Evaluate a profile at normalized progress x in [0, 1].
 *
 * Returns the LR multiplier and, for OneCycle only, the momentum value for
 * that point of the cycle. Throws std::domain_error outside [0, 1].
 */
inline ProfileSample eval_profile(const Profile& profile, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("profile progress x must lie in [0,1]");
  return std::visit(
      [x](const auto& p) -> ProfileSample {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Constant>) {
          return {1.0, {}};
        } else if constexpr (std::is_same_v<P, Linear>) {
          return {1.0 - x, {}};
        } else if constexpr (std::is_same_v<P, Cosine>) {
          return {0.5 * (1.0 + std::cos(std::numbers::pi * x)), {}};
        } else if constexpr (std::is_same_v<P, Exponential>) {
          return {std::exp(p.gamma * x), {}};
        } else if constexpr (std::is_same_v<P, Rex>) {
          return {(1.0 - x) / (0.5 + 0.5 * (1.0 - x)), {}};
        } else if constexpr (std::is_same_v<P, Step>) {
          double mult = 1.0;
          for (double m : p.milestones)
            if (m <= x) mult *= p.factor;
          return {mult, {}};
        } else if constexpr (std::is_same_v<P, StepApprox>) {
          return {std::pow(10.0, -p.rate * x), {}};
        } else if constexpr (std::is_same_v<P, DelayedLinear>) {
          if (x < p.delay_frac) return {1.0, {}};
          return {(1.0 - x) / (1.0 - p.delay_frac), {}};
        } else {
          static_assert(std::is_same_v<P, OneCycle>);
          const double tri = x < 0.5 ? 2.0 * x : 2.0 - 2.0 * x;
          const double lr = p.lr_min_ratio + (1.0 - p.lr_min_ratio) * tri;
          const double beta = x < 0.5 ? p.beta_max - (p.beta_max - p.beta_min) * 2.0 * x
                                      : p.beta_min + (p.beta_max - p.beta_min) * (2.0 * x - 1.0);
          return {lr, beta};
        }
      },
      profile);
}

/// True for profiles that carry a momentum cycle.
inline bool cycles_momentum(const Profile& profile) {
  return std::holds_alternative<OneCycle>(profile);
}

// ---------------------------------------------------------------------------
// Sampling policies.
// ---------------------------------------------------------------------------

/// Re-sample the profile at every iteration (the maximum sampling rate).
struct EveryIteration {};

/// Re-sample once at each listed fraction of the horizon (e.g. {0.5, 0.75}
/// is the classic 50-75 rate).
struct AtFractions {
  std::vector<double> points;
};

/// Re-sample once every `interval` fraction of the horizon (e.g. 0.10 splits
/// training into 10 equal segments).
struct EveryFraction {
  double interval = 1.0;
};

using SamplingPolicy = std::variant<EveryIteration, AtFractions, EveryFraction>;

inline void validate_policy(const SamplingPolicy& policy) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, AtFractions>) {
          if (p.points.empty()) throw config_error("at-fractions policy requires at least one point");
          double prev = 0.0;
          for (double f : p.points) {
            if (!(f > 0.0 && f < 1.0)) throw config_error("sampling fractions must lie in (0,1)");
            if (f <= prev && prev != 0.0) throw config_error("sampling fractions must be strictly increasing");
            prev = f;
          }
        } else if constexpr (std::is_same_v<P, EveryFraction>) {
          if (!(p.interval > 0.0 && p.interval <= 1.0))
            throw config_error("sampling interval must lie in (0,1]");
        }
      },
      policy);
}

/// Linear LR ramp prepended to a schedule. Warmup iterations are extra: they
/// do not consume the training budget T.
struct Warmup {
  int steps = 0;
  double lr_start = 0.0;
  double lr_end = 0.0;
};

// ---------------------------------------------------------------------------
// Schedule: profile x policy x base LR x horizon.
// ---------------------------------------------------------------------------

/**
 * An immutable per-iteration schedule over t in [0, warmup + T).
 *
 * Under EveryIteration, lr_at(t) = base_lr * profile(t/T) exactly. Under a
 * coarser policy the rate is piecewise constant; each segment takes the
 * profile's value at the segment's left endpoint, so a step profile sampled
 * at its own milestones reproduces the conventional step schedule.
 * Fraction p maps to iteration floor(p*T).
 *
 * Values are safe to share across threads.
 */
class Schedule {
 public:
  double lr_at(int t) const {
    const int w = warmup_steps();
    check_range(t);
    if (t < w) {
      return warmup_->lr_start +
             (warmup_->lr_end - warmup_->lr_start) * (static_cast<double>(t) / warmup_->steps);
    }
    const int s = t - w;
    if (per_iteration_) {
      return base_lr_ * eval_profile(profile_, static_cast<double>(s) / horizon_).lr_mult;
    }
    return seg_lr_[segment_of(s)];
  }

  /// Momentum for iteration t, present only when the profile cycles momentum.
  /// Sampled under the same policy as the learning rate; during warmup the
  /// cycle has not started, so the x = 0 value is used.
  std::optional<double> momentum_at(int t) const {
    const int w = warmup_steps();
    check_range(t);
    if (!cycles_momentum_) return std::nullopt;
    if (t < w) return eval_profile(profile_, 0.0).momentum;
    const int s = t - w;
    if (per_iteration_) return eval_profile(profile_, static_cast<double>(s) / horizon_).momentum;
    return seg_momentum_[segment_of(s)];
  }

  const Profile& profile() const { return profile_; }
  const SamplingPolicy& policy() const { return policy_; }
  double base_lr() const { return base_lr_; }
  /// Budgeted horizon T (warmup excluded).
  int horizon() const { return horizon_; }
  int warmup_steps() const { return warmup_ ? warmup_->steps : 0; }
  /// Number of addressable iterations: warmup + T.
  int total_steps() const { return warmup_steps() + horizon_; }
  bool has_momentum_cycle() const { return cycles_momentum_; }

  friend Schedule make_schedule(Profile profile, SamplingPolicy policy, double base_lr, int horizon,
                                std::optional<Warmup> warmup);

 private:
  Schedule() = default;

  void check_range(int t) const {
    if (t < 0 || t >= total_steps())
      throw std::domain_error("iteration " + std::to_string(t) + " outside schedule range [0," +
                              std::to_string(total_steps()) + ")");
  }

  std::size_t segment_of(int s) const {
    auto it = std::upper_bound(seg_start_.begin(), seg_start_.end(), s);
    return static_cast<std::size_t>(it - seg_start_.begin()) - 1;
  }

  Profile profile_;
  SamplingPolicy policy_;
  double base_lr_ = 0.0;
  int horizon_ = 0;
  std::optional<Warmup> warmup_;
  bool per_iteration_ = false;
  bool cycles_momentum_ = false;
  std::vector<int> seg_start_;  // ascending, front() == 0; empty when per-iteration
  std::vector<double> seg_lr_;
  std::vector<double> seg_momentum_;
};

/**
 * Compose a profile and a sampling policy into a concrete schedule.
 *
 * Segment boundaries: AtFractions{p_i} -> floor(p_i * T); EveryFraction{f} ->
 * floor(k * f * T) for k = 1 .. ceil(1/f) - 1. Duplicate or degenerate
 * boundaries collapse. The optional warmup prepends `steps` iterations of a
 * linear lr_start -> lr_end ramp ahead of the budget.
 */
inline Schedule make_schedule(Profile profile, SamplingPolicy policy, double base_lr, int horizon,
                              std::optional<Warmup> warmup = std::nullopt) {
  validate_profile(profile);
  validate_policy(policy);
  if (horizon < 1) throw config_error("schedule horizon must be >= 1");
  if (!(base_lr > 0.0)) throw config_error("base learning rate must be > 0");
  if (warmup) {
    if (warmup->steps < 1) throw config_error("warmup steps must be >= 1");
    if (warmup->steps >= horizon) throw config_error("warmup steps must be < horizon");
    if (!(warmup->lr_start > 0.0 && warmup->lr_end > 0.0))
      throw config_error("warmup learning rates must be > 0");
  }

  Schedule s;
  s.profile_ = std::move(profile);
  s.policy_ = std::move(policy);
  s.base_lr_ = base_lr;
  s.horizon_ = horizon;
  s.warmup_ = warmup;
  s.cycles_momentum_ = cycles_momentum(s.profile_);
  s.per_iteration_ = std::holds_alternative<EveryIteration>(s.policy_);

  if (!s.per_iteration_) {
    // The +1e-9 nudge keeps decimal fractions like 0.29 from flooring one
    // iteration early due to binary representation.
    std::vector<int> starts{0};
    const double T = static_cast<double>(horizon);
    if (const auto* at = std::get_if<AtFractions>(&s.policy_)) {
      for (double p : at->points) starts.push_back(static_cast<int>(std::floor(p * T + 1e-9)));
    } else {
      const auto& ef = std::get<EveryFraction>(s.policy_);
      const int segments = static_cast<int>(std::ceil(1.0 / ef.interval - 1e-9));
      for (int k = 1; k < segments; ++k)
        starts.push_back(static_cast<int>(std::floor(k * ef.interval * T + 1e-9)));
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    while (!starts.empty() && starts.back() >= horizon) starts.pop_back();
    s.seg_start_ = std::move(starts);
    s.seg_lr_.reserve(s.seg_start_.size());
    for (int start : s.seg_start_) {
      const ProfileSample sample = eval_profile(s.profile_, static_cast<double>(start) / horizon);
      s.seg_lr_.push_back(base_lr * sample.lr_mult);
      s.seg_momentum_.push_back(sample.momentum.value_or(0.0));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Curve dumps (plot fodder).
// ---------------------------------------------------------------------------

struct CurvePoint {
  int step = 0;
  double lr = 0.0;
  std::optional<double> momentum;
};

/// `resolution` evenly spaced samples across the schedule's addressable
/// range, endpoints included. Values are exact lr_at / momentum_at outputs.
inline std::vector<CurvePoint> dump_curve(const Schedule& schedule, int resolution) {
  if (resolution < 2) throw config_error("curve resolution must be >= 2");
  const int n = schedule.total_steps();
  std::vector<CurvePoint> out;
  out.reserve(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) {
    const int t = static_cast<int>(
        std::llround(static_cast<double>(i) * (n - 1) / (resolution - 1)));
    out.push_back({t, schedule.lr_at(t), schedule.momentum_at(t)});
  }
  return out;
}

/// Tab-separated dump: header `step\tlr\tmomentum`, momentum column empty for
/// profiles without a momentum cycle. UTF-8, LF line endings.
inline void write_curve_tsv(std::ostream& os, const std::vector<CurvePoint>& points) {
  os << "step\tlr\tmomentum\n";
  for (const CurvePoint& p : points) {
    os << p.step << '\t' << format_double(p.lr) << '\t'
       << (p.momentum ? format_double(*p.momentum) : std::string()) << '\n';
  }
}

}  // namespace rexbudget
