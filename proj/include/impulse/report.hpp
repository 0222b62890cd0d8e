#pragma once

// Tabular study results.

#include <map>
#include <string>
#include <vector>

#include "impulse/io.hpp"

namespace impulse {

struct ConvergenceReport {
  std::string study;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> metrics;
  std::map<std::string, bool> checks;
  std::vector<std::string> notes;

  bool pass() const;
  std::vector<double> column(const std::string& name) const;
  json to_json() const;
  std::string to_csv() const;
};

/// Least-squares slope of log y against log x over entries with x, y > 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// e[i+1] <= (1 + rel_noise) e[i] + floor for all i.
bool nonincreasing_with_noise(const std::vector<double>& e, double rel_noise, double floor);

}  // namespace impulse
