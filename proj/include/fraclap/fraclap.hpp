#pragma once

#include "errors.hpp"
#include "quadrature.hpp"
#include "smooth.hpp"
#include "symbol.hpp"
#include "fft.hpp"
#include "kernel.hpp"
#include "model.hpp"
#include "conjugate.hpp"
#include "resolvent.hpp"
#include "dynamics.hpp"
#include "scattering.hpp"

namespace fraclap {

inline constexpr const char* version = "1.0.0";

} // namespace fraclap
