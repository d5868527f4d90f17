#include "backdiff/optimizer.hpp"

#include <cmath>

#include "backdiff/error.hpp"

namespace backdiff {

AdamW::AdamW(const DenoiserModel& model, AdamWOptions options)
    : opt_(options), m_(model.zero_gradients()), v_(model.zero_gradients()) {}

void AdamW::step(DenoiserModel& model, const Gradients& grads) {
  auto& tensors = model.tensors();
  if (grads.size() != tensors.size() || m_.size() != tensors.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match the model");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    m_[k] = opt_.beta1 * m_[k] + (1.0 - opt_.beta1) * grads[k];
    v_[k] = opt_.beta2 * v_[k] + (1.0 - opt_.beta2) * grads[k].cwiseAbs2();
    auto& w = tensors[k].value;
    w *= 1.0 - opt_.learning_rate * opt_.weight_decay;
    w.array() -= opt_.learning_rate * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + opt_.eps);
  }
  model.round_to_float();
}

}  // namespace backdiff
