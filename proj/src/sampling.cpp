#include "impulse/sampling.hpp"

#include <array>
#include <stdexcept>

namespace impulse {

namespace {
constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
}

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

Eigen::VectorXd halton_point(std::uint64_t index, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() > static_cast<Eigen::Index>(kPrimes.size())) {
    throw std::invalid_argument("halton_point: dimension above 16 not supported");
  }
  Eigen::VectorXd p(lo.size());
  for (Eigen::Index d = 0; d < lo.size(); ++d) {
    p[d] = lo[d] + (hi[d] - lo[d]) * radical_inverse(index + 1, kPrimes[static_cast<std::size_t>(d)]);
  }
  return p;
}

std::vector<Eigen::VectorXd> halton_points(int count, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(halton_point(static_cast<std::uint64_t>(i), lo, hi));
  return out;
}

}  // namespace impulse
