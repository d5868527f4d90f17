#pragma once

#include <cstdint>

#include "backdiff/denoiser.hpp"

namespace backdiff {

struct AdamWOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;

  friend bool operator==(const AdamWOptions&, const AdamWOptions&) = default;
};

// Adam with decoupled weight decay. Parameters are rounded back to float
// after each update.
class AdamW {
 public:
  AdamW() = default;
  AdamW(const DenoiserModel& model, AdamWOptions options);

  void step(DenoiserModel& model, const Gradients& grads);

  std::int64_t steps_taken() const noexcept { return step_; }
  const AdamWOptions& options() const noexcept { return opt_; }

 private:
  AdamWOptions opt_;
  std::int64_t step_ = 0;
  Gradients m_;
  Gradients v_;
};

}  // namespace backdiff
