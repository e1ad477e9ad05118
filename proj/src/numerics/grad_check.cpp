#include "vica/numerics/grad_check.hpp"

#include "vica/error.hpp"

#include <cmath>

namespace vica::nx {
namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::kEvaluation, "loss is not finite");
  return v;
}

} // namespace

double evaluate_loss(const LossBuilder& f, const ParamStore& store) {
  ag::Tape tape(false);
  ag::ParamBinder bind(tape, store);
  return checked(f(tape, bind).value()(0, 0));
}

std::map<std::string, Tensor> gradients(const LossBuilder& f, const ParamStore& store,
                                        double* loss) {
  ag::Tape tape;
  ag::ParamBinder bind(tape, store);
  ag::Var l = f(tape, bind);
  const double v = checked(l.value()(0, 0));
  if (loss) *loss = v;
  tape.backward(l);
  return bind.gradients();
}

double grad_check(const LossBuilder& f, ParamStore& store, const std::string& leaf,
                  double epsilon) {
  if (!store.leaf(leaf).trainable) {
    throw Error(ErrorCode::kInput, "grad_check: leaf " + leaf + " is frozen");
  }
  const auto grads = gradients(f, store);
  Tensor ad(store.value(leaf).shape());
  if (auto it = grads.find(leaf); it != grads.end()) ad = it->second;

  double worst = 0.0;
  Vector& data = store.value(leaf).data();
  for (Index i = 0; i < data.size(); ++i) {
    const double orig = data[i];
    data[i] = orig + epsilon;
    const double plus = evaluate_loss(f, store);
    data[i] = orig - epsilon;
    const double minus = evaluate_loss(f, store);
    data[i] = orig;
    const double fd = (plus - minus) / (2.0 * epsilon);
    const double g = ad.data()[i];
    worst = std::max(worst, std::abs(fd - g) / (std::abs(fd) + std::abs(g) + 1e-8));
  }
  return worst;
}

} // namespace vica::nx
