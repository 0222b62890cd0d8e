#include "impulse/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "impulse/errors.hpp"

namespace impulse {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

VectorXd vector_from_json(const json& j, int dim, const std::string& what) {
  VectorXd out;
  if (j.is_number()) {
    out = VectorXd::Constant(1, j.get<double>());
  } else if (j.is_array()) {
    out.resize(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ValidationError(what + ": entries must be numbers");
      out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
  } else {
    throw ValidationError(what + ": expected a number or an array of numbers");
  }
  if (dim >= 0 && out.size() != dim) {
    throw ValidationError(what + ": expected " + std::to_string(dim) + " components, got " +
                          std::to_string(out.size()));
  }
  return out;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

namespace {

std::pair<double, double> interval_from_json(const json& p) {
  if (!p.contains("interval") || !p["interval"].is_array() || p["interval"].size() != 2) {
    throw ValidationError("piece needs \"interval\": [t0, t1]");
  }
  return {p["interval"][0].get<double>(), p["interval"][1].get<double>()};
}

ControlPiece piece_from_json(const json& p) {
  const auto [t0, t1] = interval_from_json(p);
  const std::string kind = p.value("kind", "constant");
  if (kind == "constant") return ControlPiece::constant(t0, t1, vector_from_json(p.at("value"), -1, "value"));
  if (kind == "affine") {
    return ControlPiece::affine(t0, t1, vector_from_json(p.at("start"), -1, "start"),
                                vector_from_json(p.at("end"), -1, "end"));
  }
  if (kind == "expression") {
    std::vector<expr::Expr> exprs;
    const json& e = p.at("expr");
    if (e.is_string()) {
      exprs.push_back(expr::parse(e.get<std::string>()));
    } else {
      for (const auto& s : e) exprs.push_back(expr::parse(s.get<std::string>()));
    }
    return ControlPiece::expression(t0, t1, std::move(exprs));
  }
  throw ValidationError("unknown piece kind \"" + kind + "\"");
}

}  // namespace

ControlSignal control_from_json(const json& j) {
  if (j.contains("family")) {
    const json& f = j["family"];
    const std::string type = f.value("type", "");
    if (type == "alternating") return alternating_control(f.value("k_max", 12));
    throw ValidationError("unknown control family \"" + type + "\"");
  }
  const double a = j.value("a", 0.0);
  const double b = j.value("b", 1.0);
  std::vector<ControlPiece> pieces;
  for (const auto& p : j.at("u").at("pieces")) pieces.push_back(piece_from_json(p));
  std::optional<VectorXd> terminal, initial;
  if (j["u"].contains("terminal")) terminal = vector_from_json(j["u"]["terminal"], -1, "terminal");
  if (j["u"].contains("initial")) initial = vector_from_json(j["u"]["initial"], -1, "initial");
  std::vector<VPiece> v;
  if (j.contains("v")) {
    for (const auto& p : j["v"].at("pieces")) {
      const auto [t0, t1] = interval_from_json(p);
      v.push_back({t0, t1, vector_from_json(p.at("value"), -1, "v value")});
    }
  }
  ControlSignal out(a, b, std::move(pieces), terminal, std::move(v), initial);
  out.set_truncation_level(j.value("truncation_level", 0));
  return out;
}

json control_to_json(const ControlSignal& u) {
  json j;
  j["a"] = u.a();
  j["b"] = u.b();
  json pieces = json::array();
  for (const auto& p : u.u_pieces()) {
    json q;
    q["interval"] = {p.t0, p.t1};
    switch (p.kind) {
      case ControlPiece::Kind::Constant:
        q["kind"] = "constant";
        q["value"] = vector_to_json(p.start);
        break;
      case ControlPiece::Kind::Affine:
        q["kind"] = "affine";
        q["start"] = vector_to_json(p.start);
        q["end"] = vector_to_json(p.end);
        break;
      case ControlPiece::Kind::Expression: {
        q["kind"] = "expression";
        json e = json::array();
        for (const auto& x : p.exprs) e.push_back(x.str());
        q["expr"] = e;
        break;
      }
    }
    pieces.push_back(q);
  }
  j["u"]["pieces"] = pieces;
  j["u"]["terminal"] = vector_to_json(u.terminal());
  if (u.initial()) j["u"]["initial"] = vector_to_json(*u.initial());
  if (!u.v_pieces().empty()) {
    json vp = json::array();
    for (const auto& p : u.v_pieces()) vp.push_back({{"interval", {p.t0, p.t1}}, {"value", vector_to_json(p.value)}});
    j["v"]["pieces"] = vp;
  }
  if (u.truncation_level() > 0) j["truncation_level"] = u.truncation_level();
  return j;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

json load_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(path) + ": " + e.what(), 1, static_cast<int>(e.byte));
  }
}

ControlSignal load_control(const std::string& path) { return control_from_json(load_json(path)); }

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw ValidationError("csv row has wrong width");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

}  // namespace impulse
