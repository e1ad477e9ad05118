#pragma once

#include "vica/numerics/autograd.hpp"
#include "vica/numerics/param_store.hpp"

#include <functional>
#include <string>

namespace vica::nx {

// Builds a scalar loss on the given tape, reading parameters through the binder.
using LossBuilder = std::function<ag::Var(ag::Tape&, ag::ParamBinder&)>;

double evaluate_loss(const LossBuilder& f, const ParamStore& store);

// Reverse-mode gradient of `f` for every trainable leaf it touches.
std::map<std::string, Tensor> gradients(const LossBuilder& f, const ParamStore& store,
                                        double* loss = nullptr);

// Compares the reverse-mode gradient of `leaf` against central differences.
// Returns max_i |fd_i - ad_i| / (|fd_i| + |ad_i| + 1e-8). The store is
// perturbed in place and restored bit-for-bit before returning.
double grad_check(const LossBuilder& f, ParamStore& store, const std::string& leaf,
                  double epsilon = 1e-5);

} // namespace vica::nx
