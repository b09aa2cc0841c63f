#pragma once

#include "gibbs/core/contracts.hpp"

namespace gibbs {

/// Per-point sample variances below this are left out of the geometric mean.
inline constexpr double kVarianceFloor = 1e-12;

/// R_n(theta) = (1/n) sum_i L(theta, y_i). Independent of observation order.
double average_loss(const LossModel& loss, const ParameterVector& theta, const Dataset& data);

/// W0 = 1 / (2 s), s = geometric mean over grid points of the per-point
/// sample variance across observations. Needs n >= 2; throws
/// DegenerateDataError if every per-point variance is below kVarianceFloor.
double loss_scale_estimate(const Dataset& data);

}  // namespace gibbs
