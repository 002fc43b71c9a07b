#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhm/core.hpp"
#include "qhm/metric.hpp"

namespace qhm {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal, always with a fractional part ("1.0", "2.5e-07").
inline std::string format_real(double v) {
  if (v == 0.0) v = 0.0;  // folds -0.0
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

/// a+bi form, e.g. "1.0+0.0i".
inline std::string format_complex(cd z) {
  std::string im = format_real(z.imag());
  return format_real(z.real()) + (im.front() == '-' ? "" : "+") + im + "i";
}

inline json to_json(const ManifoldParams& p) { return {{"c", p.c}, {"hbar", p.hbar}, {"mu", p.mu}, {"nu", p.nu}}; }
inline json to_json(const Grid& g) { return {{"nx", g.nx}, {"ny", g.ny}, {"p_max", g.p_max}}; }

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(path + key, "missing");
  return j.at(key);
}

inline int get_int(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer()) throw FormatError(path + key, "expected an integer");
  return v.get<int>();
}

inline double get_real(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw FormatError(path + key, "expected a number");
  return v.get<double>();
}

}  // namespace detail

inline ManifoldParams params_from_json(const json& j) {
  ManifoldParams p{detail::get_int(j, "c", "params."), detail::get_real(j, "hbar", "params."),
                   detail::get_real(j, "mu", "params."), detail::get_real(j, "nu", "params.")};
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError("params", e.what());
  }
  return p;
}

inline Grid grid_from_json(const json& j) {
  Grid g{detail::get_int(j, "nx", "grid."), detail::get_int(j, "ny", "grid."), detail::get_int(j, "p_max", "grid.")};
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError("grid", e.what());
  }
  return g;
}

template <class Tag>
json to_json(const Field<Tag>& f) {
  json data = json::array();
  for (const cd& v : f.data()) {
    data.push_back(v.real());
    data.push_back(v.imag());
  }
  return {{"kind", Tag::kind}, {"params", to_json(f.params())}, {"grid", to_json(f.grid())}, {"data", std::move(data)}};
}

template <class Tag>
Field<Tag> field_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("document", "expected a JSON object");
  const json& kind = detail::field(j, "kind", "");
  if (!kind.is_string() || kind.get<std::string>() != Tag::kind)
    throw FormatError("kind", std::string("expected \"") + Tag::kind + "\"");
  const ManifoldParams p = params_from_json(detail::field(j, "params", ""));
  const Grid g = grid_from_json(detail::field(j, "grid", ""));
  const json& data = detail::field(j, "data", "");
  if (!data.is_array()) throw FormatError("data", "expected an array");
  if (data.size() != 2 * g.size())
    throw FormatError("data", "length " + std::to_string(data.size()) + ", expected " + std::to_string(2 * g.size()));
  std::vector<cd> values(g.size());
  for (std::size_t n = 0; n < values.size(); ++n) {
    const json& re = data[2 * n];
    const json& im = data[2 * n + 1];
    if (!re.is_number() || !im.is_number()) throw FormatError("data[" + std::to_string(2 * n) + "]", "expected numbers");
    values[n] = cd(re.get<double>(), im.get<double>());
    if (!std::isfinite(values[n].real()) || !std::isfinite(values[n].imag()))
      throw FormatError("data[" + std::to_string(2 * n) + "]", "non-finite sample");
  }
  return Field<Tag>(p, g, std::move(values));
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path, e.what());
  }
}

inline Element read_element(const std::string& path) { return field_from_json<ElementTag>(read_json_file(path)); }
inline StateVector read_state(const std::string& path) { return field_from_json<StateTag>(read_json_file(path)); }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError(path, "cannot write file");
  out << text;
}

inline json to_json(const SeminormReport& r) {
  return {{"name", r.name}, {"value", r.value}, {"samples", r.samples}, {"argmax", r.argmax}, {"flow", r.argmax_flow}};
}

/// One line of a verification report.
struct CheckResult {
  std::string check;
  std::string paper_ref;
  /// Positive when the check holds: tolerance minus measured deviation, or the analogous slack.
  double margin = 0.0;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
};

inline json to_json(const CheckResult& r) {
  return {{"check", r.check}, {"paper_ref", r.paper_ref}, {"margin", r.margin}, {"pass", r.pass},
          {"measured", r.measured}, {"tolerance", r.tolerance}};
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline std::string to_csv(const std::vector<CheckResult>& rows) {
  std::ostringstream os;
  os << "check,paper_ref,margin,pass,measured,tolerance\n";
  for (const auto& r : rows)
    os << csv_escape(r.check) << ',' << csv_escape(r.paper_ref) << ',' << format_real(r.margin) << ','
       << (r.pass ? "true" : "false") << ',' << format_real(r.measured) << ',' << format_real(r.tolerance) << '\n';
  return os.str();
}

}  // namespace qhm
