#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace impulse {

/// Radical inverse of `index` in `base` (van der Corput).
double radical_inverse(std::uint64_t index, int base);

/// Point `index` (0-based, the origin is skipped) of the Halton sequence mapped into [lo, hi].
Eigen::VectorXd halton_point(std::uint64_t index, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

std::vector<Eigen::VectorXd> halton_points(int count, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

}  // namespace impulse
