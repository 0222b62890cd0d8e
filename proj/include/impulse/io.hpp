#pragma once

// File formats: JSON controls, CSV tables, number formatting.

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "impulse/control.hpp"

namespace impulse {

using json = nlohmann::ordered_json;

/// Shortest text that reads back to the same double (17 significant digits, '.' decimal).
std::string format_double(double x);

/// Accepts a number (dimension 1) or an array of numbers. Checks the size when `dim` >= 0.
VectorXd vector_from_json(const json& j, int dim = -1, const std::string& what = "vector");
json vector_to_json(const VectorXd& v);

/// Control document:
///
///   {"a": 0, "b": 1,
///    "u": {"pieces": [{"interval": [0, 0.5], "kind": "constant", "value": 1},
///                     {"interval": [0.5, 1], "kind": "affine", "start": 1, "end": 0},
///                     {"interval": [..], "kind": "expression", "expr": "sin(t)"}],
///          "terminal": 0, "initial": 1},
///    "v": {"pieces": [{"interval": [0, 1], "value": 0}]}}
///
/// or {"family": {"type": "alternating", "k_max": 12}} for the alternating control.
ControlSignal control_from_json(const json& j);
json control_to_json(const ControlSignal& u);
ControlSignal load_control(const std::string& path);

json load_json(const std::string& path);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Minimal CSV writer with exact number formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& values);
  std::string str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

}  // namespace impulse
