#include "impulse/report.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/errors.hpp"

namespace impulse {

bool ConvergenceReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

std::vector<double> ConvergenceReport::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("report has no column " + name);
  const auto c = static_cast<std::size_t>(std::distance(columns.begin(), it));
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

json ConvergenceReport::to_json() const {
  json j;
  j["study"] = study;
  j["columns"] = columns;
  j["rows"] = rows;
  j["metrics"] = json::object();
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  j["checks"] = json::object();
  for (const auto& [k, v] : checks) j["checks"][k] = v;
  j["notes"] = notes;
  j["pass"] = pass();
  return j;
}

std::string ConvergenceReport::to_csv() const {
  CsvWriter csv(columns);
  for (const auto& r : rows) csv.row(r);
  return csv.str();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? std::nan("") : (n * sxy - sx * sy) / den;
}

bool nonincreasing_with_noise(const std::vector<double>& e, double rel_noise, double floor) {
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    if (e[i + 1] > (1.0 + rel_noise) * e[i] + floor) return false;
  }
  return true;
}

}  // namespace impulse
