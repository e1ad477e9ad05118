#pragma once

#include "vica/numerics/autograd.hpp"
#include "vica/numerics/grad_check.hpp"
#include "vica/numerics/kernels.hpp"
#include "vica/numerics/param_store.hpp"
#include "vica/numerics/random.hpp"
#include "vica/numerics/serialize.hpp"
#include "vica/numerics/tensor.hpp"
