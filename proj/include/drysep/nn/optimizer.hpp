#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "drysep/nn/tensor.hpp"

namespace drysep::nn {

// Step-decay schedule: base_lr * decay^floor(step / interval). The first
// drop lands exactly on `interval`.
struct LrSchedule {
  double base_lr = 0.001;
  double decay = 0.9;
  uint64_t interval = 15000;

  void validate() const {
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("schedule: decay must be in (0, 1]");
    if (interval < 1) throw ConfigError("schedule: interval must be >= 1");
    if (base_lr <= 0.0) throw ConfigError("schedule: base_lr must be positive");
  }
};

inline double lr_at(const LrSchedule& schedule, uint64_t step) {
  schedule.validate();
  return schedule.base_lr * std::pow(schedule.decay, static_cast<double>(step / schedule.interval));
}

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
template <typename T>
class Adam {
 public:
  struct Moments {
    std::vector<T> m;
    std::vector<T> v;
  };

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  uint64_t step_count() const { return step_; }
  void set_step_count(uint64_t s) { step_ = s; }

  // One update over the whole store; requires populated grads.
  void step(ParamStore<T>& params, double lr) {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (auto& [name, p] : params.items()) {
      if (p->grad.size() != p->value.size()) {
        throw DataError("adam: missing gradient for parameter " + name);
      }
      Moments& mom = moments_[name];
      if (mom.m.size() != p->value.size()) {
        mom.m.assign(p->value.size(), T(0));
        mom.v.assign(p->value.size(), T(0));
      }
      for (size_t i = 0; i < p->value.size(); ++i) {
        const double g = static_cast<double>(p->grad[i]);
        mom.m[i] = static_cast<T>(beta1 * mom.m[i] + (1.0 - beta1) * g);
        mom.v[i] = static_cast<T>(beta2 * mom.v[i] + (1.0 - beta2) * g * g);
        const double mhat = static_cast<double>(mom.m[i]) / bc1;
        const double vhat = static_cast<double>(mom.v[i]) / bc2;
        p->value[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }

  std::unordered_map<std::string, Moments>& moments() { return moments_; }
  const std::unordered_map<std::string, Moments>& moments() const { return moments_; }

 private:
  uint64_t step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace drysep::nn
