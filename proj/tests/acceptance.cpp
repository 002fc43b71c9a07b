// Acceptance criteria 1-14 at the desk configuration; one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "qhm/io.hpp"
#include "qhm/verify.hpp"

namespace {

struct Criterion {
  int id;
  const char* title;
  double budget_s;
};

const std::vector<Criterion> kCriteria = {
    {1, "star product fidelity", 60},
    {2, "involution and C*-identity", 60},
    {3, "commutants of the right action", 60},
    {4, "Fourier coefficients and Cesaro means", 60},
    {5, "gamma as a commutator of alpha and beta", 60},
    {6, "Lipschitz constant of alpha", 60},
    {7, "Leibniz rule", 60},
    {8, "Lipschitz versus Holder seminorms", 60},
    {9, "trace invariance, traciality, faithfulness", 60},
    {10, "GNS inner product routes", 60},
    {11, "Laplacian routes", 60},
    {12, "heat semigroup", 300},
    {13, "classical limit", 600},
    {14, "deterministic verify reports", 60},
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const Criterion& c, bool pass, double elapsed) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " ("
            << qhm::format_real(std::round(elapsed * 10.0) / 10.0) << " s";
  if (elapsed > c.budget_s) std::cout << ", over the " << c.budget_s << " s budget";
  std::cout << ")" << std::endl;
}

bool determinism(std::string& detail) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "qhm_acceptance";
  fs::create_directories(dir);
  const fs::path a = dir / "verify_a.json", b = dir / "verify_b.json";
  fs::remove(a);
  fs::remove(b);
  auto run = [](const fs::path& out) {
    const std::string cmd = std::string("\"") + QHM_CLI + "\" --seed 7 --out \"" + out.string() + "\" verify > /dev/null";
    return std::system(cmd.c_str());
  };
  const int ra = run(a), rb = run(b);
  const std::string sa = slurp(a), sb = slurp(b);
  if (sa.empty() || sb.empty()) {
    detail = "verify produced no report";
    return false;
  }
  detail = std::to_string(sa.size()) + " bytes, exit codes " + std::to_string(ra) + " and " + std::to_string(rb);
  return sa == sb && ra == rb;
}

}  // namespace

int main() {
  const qhm::VerifyConfig cfg;
  qhm::VerifyContext ctx(cfg);
  const auto checks = qhm::registry();
  int failed = 0;

  for (const auto& c : kCriteria) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    if (c.id == 14) {
      std::string detail;
      pass = determinism(detail);
      std::cout << "    verify twice with seed 7: " << detail << std::endl;
    } else {
      for (const auto& entry : checks) {
        if (entry.criterion != c.id) continue;
        qhm::CheckResult r;
        try {
          r = entry.run(ctx, entry);
        } catch (const std::exception& e) {
          r.check = entry.name;
          r.pass = false;
          std::cout << "    " << entry.name << " threw: " << e.what() << std::endl;
        }
        std::cout << "    " << (r.pass ? "ok   " : "FAIL ") << r.check << "  measured=" << qhm::format_real(r.measured)
                  << "  tolerance=" << qhm::format_real(r.tolerance) << std::endl;
        pass = pass && r.pass;
      }
    }
    report(c, pass, seconds_since(t0));
    failed += pass ? 0 : 1;
  }
  std::cout << (kCriteria.size() - failed) << " of " << kCriteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
