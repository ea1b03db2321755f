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

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rexbudget {

/**
 * From-scratch parameter-update rules. Each step consumes the learning rate
 * (and optionally a momentum override) supplied by the schedule, so the
 * optimizer and the schedule stay fully decoupled: running N steps with
 * lr_at(t) is identical to running them against a precomputed LR list.
 *
 * Steps are deterministic and pure given (params, grads, state, lr). They do
 * not inspect values for finiteness; the training loop treats a non-finite
 * loss or gradient as a diverged trial.
 */

/// Heavy-ball momentum state: v <- beta*v + g; p <- p - lr*v.
struct SgdmState {
  explicit SgdmState(std::size_t n, double beta = 0.9) : velocity(n, 0.0), beta(beta) {}

  std::vector<double> velocity;
  double beta = 0.9;
};

inline void sgdm_step(std::vector<double>& params, const std::vector<double>& grads, SgdmState& state,
                      double lr, std::optional<double> momentum_override = std::nullopt) {
  if (params.size() != grads.size() || params.size() != state.velocity.size())
    throw std::invalid_argument("sgdm_step: parameter/gradient/velocity shapes differ");
  const double beta = momentum_override.value_or(state.beta);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.velocity[i] = beta * state.velocity[i] + grads[i];
    params[i] -= lr * state.velocity[i];
  }
}

/// Bias-corrected Adam state; weight_decay > 0 selects AdamW's decoupled
/// decay (applied to the parameters before the Adam update).
struct AdamState {
  explicit AdamState(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                     double weight_decay = 0.0)
      : m(n, 0.0), v(n, 0.0), beta1(beta1), beta2(beta2), eps(eps), weight_decay(weight_decay) {}

  std::vector<double> m, v;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

inline void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
                      double lr, std::optional<double> beta1_override = std::nullopt) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/moment shapes differ");
  // When the schedule cycles momentum, the effective beta1 also drives the
  // bias correction for that step.
  const double b1 = beta1_override.value_or(state.beta1);
  const double b2 = state.beta2;
  state.step_count += 1;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.weight_decay != 0.0) params[i] -= lr * state.weight_decay * params[i];
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / corr1;
    const double v_hat = state.v[i] / corr2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

/**
 * Decay-on-plateau controller. Observed once per epoch with the validation
 * loss; when the loss fails to improve (strict <, no minimum delta) for
 * `patience_epochs` consecutive epochs, the LR multiplier decays by `factor`
 * and the counter resets. The multiplier is non-increasing and only ever
 * takes values factor^k; the effective rate is base_lr * current_mult().
 */
class PlateauController {
 public:
  explicit PlateauController(int patience_epochs, double factor = 0.1)
      : patience_(patience_epochs), factor_(factor) {
    if (patience_epochs < 1) throw std::invalid_argument("plateau patience must be >= 1");
    if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("plateau factor must lie in (0,1)");
  }

  /// Returns the multiplier in force after observing this epoch's loss.
  double observe(double val_loss) {
    if (!std::isfinite(val_loss)) throw std::invalid_argument("plateau controller observed non-finite loss");
    if (val_loss < best_val_) {
      best_val_ = val_loss;
      epochs_since_improve_ = 0;
    } else {
      ++epochs_since_improve_;
      if (epochs_since_improve_ >= patience_) {
        current_mult_ *= factor_;
        epochs_since_improve_ = 0;
      }
    }
    return current_mult_;
  }

  double current_mult() const { return current_mult_; }
  double best_val() const { return best_val_; }
  int epochs_since_improve() const { return epochs_since_improve_; }
  int patience() const { return patience_; }
  double factor() const { return factor_; }

 private:
  int patience_;
  double factor_;
  double best_val_ = std::numeric_limits<double>::infinity();
  int epochs_since_improve_ = 0;
  double current_mult_ = 1.0;
};

}  // namespace rexbudget
