// qhm: command-line front end for the quantum Heisenberg manifold engine.

#include <CLI11.hpp>

#include <array>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qhm/action.hpp"
#include "qhm/algebra.hpp"
#include "qhm/classical.hpp"
#include "qhm/core.hpp"
#include "qhm/io.hpp"
#include "qhm/metric.hpp"
#include "qhm/spectral.hpp"
#include "qhm/verify.hpp"

namespace {

using namespace qhm;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out;
  std::string format = "text";
};

/// Thrown for usage problems detected after parsing.
struct UsageError : Error {
  using Error::Error;
};

VerifyConfig load_config(const Globals& g) {
  VerifyConfig cfg;
  if (!g.config_path.empty()) {
    const json j = read_json_file(g.config_path);
    if (!j.is_object()) throw FormatError("config", "expected a JSON object");
    if (j.contains("params")) cfg.params = params_from_json(j.at("params"));
    if (j.contains("grid")) cfg.grid = grid_from_json(j.at("grid"));
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw FormatError("seed", "expected a nonnegative integer");
      cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      if (!t.is_object()) throw FormatError("tolerances", "expected an object");
      for (const auto& [k, v] : t.items()) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) throw FormatError("tolerances." + k, "expected a positive number");
        cfg.tolerances[k] = v.get<double>();
      }
    }
  }
  if (g.seed_given || g.config_path.empty()) cfg.seed = g.seed;
  return cfg;
}

json config_json(const Globals& g, const ManifoldParams& p, const Grid& grid) {
  VerifyConfig cfg = load_config(g);
  cfg.params = p;
  cfg.grid = grid;
  json j = to_json(cfg);
  j["format"] = g.format;
  return j;
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty())
    std::cout << text;
  else
    write_text(g.out, text);
}

/// Element and state outputs are always JSON documents (with the config embedded) so they can be chained.
template <class Tag>
void emit_field(const Globals& g, const Field<Tag>& f) {
  json doc = to_json(f);
  doc["config"] = config_json(g, f.params(), f.grid());
  emit(g, doc.dump(2) + "\n");
}

/// Scalar outputs: bare text by default, otherwise a JSON or CSV record.
void emit_scalars(const Globals& g, const ManifoldParams& p, const Grid& grid, const std::string& command,
                  const std::vector<std::pair<std::string, json>>& values, const std::string& text) {
  if (g.format == "text") {
    emit(g, text + "\n");
    return;
  }
  if (g.format == "csv") {
    std::ostringstream os;
    os << "name,value\n";
    for (const auto& [k, v] : values) os << csv_escape(k) << ',' << csv_escape(v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    emit(g, os.str());
    return;
  }
  json doc;
  doc["command"] = command;
  doc["config"] = config_json(g, p, grid);
  json res = json::object();
  for (const auto& [k, v] : values) res[k] = v;
  doc["result"] = res;
  emit(g, doc.dump(2) + "\n");
}

HPoint parse_point(const std::string& s, const std::string& what) {
  HPoint p{};
  std::stringstream ss(s);
  std::string item;
  int n = 0;
  while (std::getline(ss, item, ',')) {
    if (n >= 3) throw UsageError(what + ": expected three comma-separated numbers");
    try {
      std::size_t used = 0;
      p[n] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
    ++n;
  }
  if (n != 3) throw UsageError(what + ": expected three comma-separated numbers");
  return p;
}

std::string render_table(const std::vector<CheckResult>& rows) {
  std::ostringstream os;
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.check.size());
  int failed = 0;
  for (const auto& r : rows) {
    os << (r.pass ? "PASS  " : "FAIL  ") << r.check << std::string(width + 2 - r.check.size(), ' ')
       << "measured=" << format_real(r.measured) << "  tolerance=" << format_real(r.tolerance)
       << "  margin=" << format_real(r.margin) << '\n';
    failed += r.pass ? 0 : 1;
  }
  os << rows.size() - failed << " passed, " << failed << " failed\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Heisenberg manifolds: algebra, flows, metric, trace, heat and classical checks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run config (params, grid, seed, tolerances)");
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed (overrides the config)")->capture_default_str();
  app.add_option("--out", g.out, "write output to a file instead of stdout");
  app.add_option("--format", g.format, "scalar/report format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();

  std::function<int()> action;
  auto bind = [&](CLI::App* sub, std::function<int()> fn) { sub->callback([&action, fn] { action = fn; }); };

  // gen
  double decay = 1.0;
  int support = -1;
  std::string state_kind = "element";
  auto* gen = app.add_subcommand("gen", "random element (or state) from the seed");
  gen->add_option("--decay", decay, "slice amplitude decay e^{-decay |p|}")->capture_default_str();
  gen->add_option("--support", support, "restrict to |p| <= support");
  gen->add_option("--kind", state_kind)->check(CLI::IsMember({"element", "state"}))->capture_default_str();
  bind(gen, [&] {
    const VerifyConfig cfg = load_config(g);
    RandomOptions o;
    o.support = support;
    if (state_kind == "state")
      emit_field(g, random_field<StateTag>(cfg.params, cfg.grid, cfg.seed, decay, o));
    else
      emit_field(g, random_element(cfg.params, cfg.grid, cfg.seed, decay, o));
    return kOk;
  });

  std::string fa, fb;
  auto file_arg = [](CLI::App* sub, std::string& dst, const char* name) {
    sub->add_option(name, dst, "element file")->required()->check(CLI::ExistingFile);
  };

  auto* star_cmd = app.add_subcommand("star", "star product A * B");
  file_arg(star_cmd, fa, "A");
  file_arg(star_cmd, fb, "B");
  bool report = false;
  star_cmd->add_flag("--report", report, "print the modulus clipped by truncation to stderr");
  bind(star_cmd, [&] {
    const Element a = read_element(fa), b = read_element(fb);
    const StarReport r = star_with_report(a, b);
    if (report) std::cerr << "discarded " << format_real(r.discarded) << "\n";
    emit_field(g, r.product);
    return kOk;
  });

  auto* adj = app.add_subcommand("adjoint", "involution A*");
  file_arg(adj, fa, "A");
  bind(adj, [&] {
    emit_field(g, adjoint(read_element(fa)));
    return kOk;
  });

  auto* nrm = app.add_subcommand("norm", "operator norm of A");
  file_arg(nrm, fa, "A");
  bind(nrm, [&] {
    const Element a = read_element(fa);
    const NormEstimate n = op_norm_estimate(a);
    emit_scalars(g, a.params(), a.grid(), "norm",
                 {{"op_norm", n.value}, {"converged", n.converged}, {"iterations", n.iterations}}, format_real(n.value));
    return kOk;
  });

  std::string fxi;
  auto* app_cmd = app.add_subcommand("apply", "action of A on a state XI");
  file_arg(app_cmd, fa, "A");
  app_cmd->add_option("XI", fxi, "state file")->required()->check(CLI::ExistingFile);
  bind(app_cmd, [&] {
    emit_field(g, apply(read_element(fa), read_state(fxi)));
    return kOk;
  });

  int n_index = 0;
  auto* four = app.add_subcommand("fourier", "Fourier coefficient a_n along gamma");
  file_arg(four, fa, "A");
  four->add_option("--n", n_index)->required();
  bind(four, [&] {
    emit_field(g, fourier_coeff(read_element(fa), n_index));
    return kOk;
  });

  int N = 0;
  auto* ces = app.add_subcommand("cesaro", "Cesaro mean sigma_N");
  file_arg(ces, fa, "A");
  ces->add_option("--N", N)->required();
  bind(ces, [&] {
    emit_field(g, cesaro(read_element(fa), N));
    return kOk;
  });

  GroupPoint gp;
  auto* actc = app.add_subcommand("act", "group action gamma_t alpha_r beta_s");
  file_arg(actc, fa, "A");
  actc->add_option("--r", gp.r)->capture_default_str();
  actc->add_option("--s", gp.s)->capture_default_str();
  actc->add_option("--t", gp.t)->capture_default_str();
  bind(actc, [&] {
    emit_field(g, act(read_element(fa), gp));
    return kOk;
  });

  int m_index = 0;
  auto* sm = app.add_subcommand("smooth", "twisted convolution smoothing");
  file_arg(sm, fa, "A");
  sm->add_option("--m", m_index)->required();
  bind(sm, [&] {
    emit_field(g, twisted_smooth(read_element(fa), m_index));
    return kOk;
  });

  int which = 1;
  auto* der = app.add_subcommand("deriv", "derivation delta_1 or delta_2");
  file_arg(der, fa, "A");
  der->add_option("--which", which)->required()->check(CLI::IsMember({1, 2}));
  bind(der, [&] {
    const Element a = read_element(fa);
    emit_field(g, which == 1 ? delta1(a) : delta2(a));
    return kOk;
  });

  auto* lip = app.add_subcommand("lipnorm", "Lipschitz norm max(||x||, ||dx||_l, ||dx||_r)");
  file_arg(lip, fa, "A");
  bind(lip, [&] {
    const Element a = read_element(fa);
    const ModuleNorms m = module_norms(dmap(a));
    const double on = op_norm(a), L = std::max({on, m.l, m.r});
    emit_scalars(g, a.params(), a.grid(), "lipnorm", {{"lip_norm", L}, {"op_norm", on}, {"l", m.l}, {"r", m.r}},
                 format_real(L));
    return kOk;
  });

  double hA = 1.0, hB = 1.0, hC = 0.5;
  auto* hol = app.add_subcommand("holder", "sampled Holder seminorm");
  file_arg(hol, fa, "FILE");
  hol->add_option("--A", hA)->capture_default_str();
  hol->add_option("--B", hB)->capture_default_str();
  hol->add_option("--C", hC)->capture_default_str();
  bind(hol, [&] {
    const Element a = read_element(fa);
    const SeminormReport r = holder_seminorm(a, hA, hB, hC);
    emit_scalars(g, a.params(), a.grid(), "holder",
                 {{"value", r.value}, {"argmax", r.argmax}, {"flow", r.argmax_flow}, {"samples", r.samples}},
                 format_real(r.value));
    return kOk;
  });

  auto* tr = app.add_subcommand("trace", "trace tau(A)");
  file_arg(tr, fa, "A");
  bind(tr, [&] {
    const Element a = read_element(fa);
    const std::string v = format_complex(trace(a));
    emit_scalars(g, a.params(), a.grid(), "trace", {{"trace", v}}, v);
    return kOk;
  });

  auto* lap = app.add_subcommand("laplacian", "sub-Riemannian Laplacian");
  file_arg(lap, fa, "A");
  bind(lap, [&] {
    emit_field(g, laplacian(read_element(fa)));
    return kOk;
  });

  double t_heat = 0.0;
  auto* ht = app.add_subcommand("heat", "heat semigroup e^{t Delta}");
  file_arg(ht, fa, "A");
  ht->add_option("--t", t_heat)->required();
  bind(ht, [&] {
    emit_field(g, heat(read_element(fa), t_heat));
    return kOk;
  });

  std::string from = "0,0,0", to;
  DistanceOptions dopt;
  auto* cd_cmd = app.add_subcommand("classical-distance", "upper bound for the Carnot-Caratheodory distance");
  cd_cmd->add_option("--from", from, "x,y,z")->capture_default_str();
  cd_cmd->add_option("--to", to, "x,y,z")->required();
  cd_cmd->add_option("--segments", dopt.n_segments)->capture_default_str();
  cd_cmd->add_option("--restarts", dopt.restarts)->capture_default_str();
  bind(cd_cmd, [&] {
    const VerifyConfig cfg = load_config(g);
    dopt.seed = cfg.seed;
    const HPoint a = parse_point(from, "--from"), b = parse_point(to, "--to");
    const DistanceResult r = cc_distance_upper(a, b, dopt);
    emit_scalars(g, cfg.params, cfg.grid, "classical-distance",
                 {{"from", a}, {"to", b}, {"upper_bound", r.upper_bound}, {"gap", r.gap}, {"iterations", r.iterations}},
                 format_real(r.upper_bound));
    return kOk;
  });

  std::string fname;
  int pairs = 9;
  double lip_tol = 0.02;
  auto* cl = app.add_subcommand("classical-lip", "Lipschitz check of a function on the Heisenberg group");
  cl->add_option("F", fname, "sin-x, sin-y, or an hbar = 0 element file")->required();
  cl->add_option("--pairs", pairs)->capture_default_str();
  cl->add_option("--tol", lip_tol)->capture_default_str();
  bind(cl, [&] {
    const VerifyConfig cfg = load_config(g);
    ManifoldParams p = cfg.params;
    Grid grid = cfg.grid;
    ChartFunction F;
    if (fname == "sin-x") {
      F = {[](double x, double, double) { return std::sin(x); }, [](double x, double, double) { return std::cos(x); },
           [](double, double, double) { return 0.0; }};
    } else if (fname == "sin-y") {
      F = {[](double, double y, double) { return std::sin(y); }, [](double, double, double) { return 0.0; },
           [](double, double y, double) { return std::cos(y); }};
    } else {
      const Element e = read_element(fname);
      p = e.params();
      grid = e.grid();
      F = chart_function(e);
    }
    DistanceOptions o;
    o.seed = cfg.seed;
    const LipschitzReport r = lipschitz_check(F, pairs, cfg.seed + 1, lip_tol, o);
    emit_scalars(g, p, grid, "classical-lip",
                 {{"gradient_sup", r.gradient_sup}, {"max_ratio", r.max_ratio}, {"pass", r.pass}},
                 std::string(r.pass ? "PASS" : "FAIL") + " max_ratio=" + format_real(r.max_ratio) +
                     " gradient_sup=" + format_real(r.gradient_sup));
    return r.pass ? kOk : kCheckFailed;
  });

  std::string filter;
  bool list_only = false;
  auto* ver = app.add_subcommand("verify", "run the invariant and acceptance checks");
  ver->add_option("--filter", filter, "check name substring or tag (e.g. thm19, acceptance, spectral)");
  ver->add_flag("--list", list_only, "list matching checks without running them");
  bind(ver, [&] {
    const VerifyConfig cfg = load_config(g);
    if (list_only) {
      std::ostringstream os;
      for (const auto& s : registry())
        if (matches(s, filter)) os << s.name << '\n';
      emit(g, os.str());
      return kOk;
    }
    const std::vector<CheckResult> rows = run_checks(cfg, filter);
    if (rows.empty()) throw UsageError("no check matches filter '" + filter + "'");
    bool all = true;
    for (const auto& r : rows) all = all && r.pass;
    if (g.format == "csv") {
      emit(g, to_csv(rows));
    } else if (g.format == "json" || !g.out.empty()) {
      json doc;
      doc["config"] = to_json(cfg);
      doc["filter"] = filter;
      json arr = json::array();
      for (const auto& r : rows) arr.push_back(to_json(r));
      doc["checks"] = arr;
      doc["pass"] = all;
      emit(g, doc.dump(2) + "\n");
      if (g.format == "text") std::cout << render_table(rows);
    } else {
      emit(g, render_table(rows));
    }
    return all ? kOk : kCheckFailed;
  });

  try {
    app.parse(argc, argv);
    g.seed_given = seed_opt->count() > 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action();
  } catch (const FormatError& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Mismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (best estimate " << format_real(e.best_estimate()) << ")\n";
    return kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}
