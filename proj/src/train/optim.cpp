#include "tilebench/train/optim.hpp"

#include <cmath>
#include <string>

#include "tilebench/core/errors.hpp"

namespace tilebench::train {

template <typename T>
void adam_step(std::vector<nn::Tensor<T>>& params, AdamState<T>& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  }
  if (state.m.size() != params.size()) throw InvariantViolation("Adam state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) continue;
    for (T g : params[i].grad()) {
      if (!std::isfinite(g)) throw NonFiniteGradient("parameter " + std::to_string(i) + " has a non-finite gradient");
    }
  }
  ++state.step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    auto value = params[i].data();
    const bool has = params[i].has_grad();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double g = has ? static_cast<double>(params[i].grad()[j]) : 0.0;
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      value[j] -= static_cast<T>(cfg.learning_rate * (mj / c1) / (std::sqrt(vj / c2) + cfg.epsilon));
    }
  }
}

template <typename T>
void zero_grad(std::vector<nn::Tensor<T>>& params) {
  for (auto& p : params) p.zero_grad();
}

template void adam_step(std::vector<nn::Tensor<float>>&, AdamState<float>&, const AdamConfig&);
template void adam_step(std::vector<nn::Tensor<double>>&, AdamState<double>&, const AdamConfig&);
template void zero_grad(std::vector<nn::Tensor<float>>&);
template void zero_grad(std::vector<nn::Tensor<double>>&);

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

bool EarlyStopping::update(int epoch, double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch;
    since_improvement_ = 0;
    return true;
  }
  ++since_improvement_;
  return false;
}

}  // namespace tilebench::train
