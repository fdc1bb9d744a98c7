#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fraclap {

/// Failure categories. The CLI maps `nonconvergence` and `line_search` to exit code 3, the rest to 2.
enum class errc {
  domain,
  shape,
  non_integrable,
  trace_undefined,
  trace_singular,
  trace_nonconvergent,
  decomposition_failure,
  coercivity_violation,
  expected_kernel,
  norm_gate,
  out_of_validity,
  assembly,
  spec_error,
  line_search,
  parse,
  io,
  nonconvergence,
  untrusted_value,
  config,
};

inline const char* errc_name(errc e) {
  switch (e) {
    case errc::domain: return "domain";
    case errc::shape: return "shape";
    case errc::non_integrable: return "non-integrable";
    case errc::trace_undefined: return "trace-undefined";
    case errc::trace_singular: return "trace-singular";
    case errc::trace_nonconvergent: return "trace-nonconvergent";
    case errc::decomposition_failure: return "decomposition-failure";
    case errc::coercivity_violation: return "coercivity-violation";
    case errc::expected_kernel: return "expected-kernel";
    case errc::norm_gate: return "norm-gate";
    case errc::out_of_validity: return "out-of-validity";
    case errc::assembly: return "assembly-error";
    case errc::spec_error: return "spec-error";
    case errc::line_search: return "line-search";
    case errc::parse: return "parse";
    case errc::io: return "io";
    case errc::nonconvergence: return "nonconvergence";
    case errc::untrusted_value: return "untrusted-value";
    case errc::config: return "config";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

enum class Side { left, right };

inline Side opposite(Side s) { return s == Side::left ? Side::right : Side::left; }
inline const char* side_name(Side s) { return s == Side::left ? "left" : "right"; }

/// Finite interval (a,b), a < b.
struct Interval {
  double a = 0.0;
  double b = 1.0;

  Interval() = default;
  Interval(double a_, double b_) : a(a_), b(b_) {
    if (!(std::isfinite(a) && std::isfinite(b) && a < b))
      throw error(errc::domain, "interval requires finite a < b");
  }
  double length() const { return b - a; }
};

/// (alpha, p, theta, lambda). alpha*p > 1 is enforced only where traces are used.
struct FracParams {
  double alpha = 0.5;
  double p = 2.0;
  double theta = 0.0;
  int lambda = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw error(errc::domain, "alpha must lie in (0,1)");
    if (!(p > 1.0 && std::isfinite(p))) throw error(errc::domain, "p must lie in (1,inf)");
    if (!(theta >= 0.0 && theta <= 1.0)) throw error(errc::domain, "theta must lie in [0,1]");
    if (lambda != 0 && lambda != 1) throw error(errc::domain, "lambda must be 0 or 1");
  }
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw error(errc::domain, "alpha must lie in (0,1)");
}

// ---------------------------------------------------------------------------
// Parallelism. FRACLAP_THREADS caps the worker count; unset means hardware concurrency.

inline unsigned& thread_override() {
  static unsigned n = 0;
  return n;
}

inline unsigned max_threads() {
  if (thread_override() > 0) return thread_override();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FRACLAP_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

/// Runs body(i) for i in [0,n). Iterations must not share mutable state.
template <class F>
void parallel_for(std::size_t n, F&& body, std::size_t grain = 64) {
  unsigned nt = max_threads();
  if (nt <= 1 || n < 2 * grain) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, (n + grain - 1) / grain));
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += nt) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fraclap
