#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace varipath {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto process exit codes.
// ---------------------------------------------------------------------------

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input: bad dimensions, unknown family, invalid parameters.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A search over a bounded range failed to attain its target condition.
class RangeError : public Error {
public:
  explicit RangeError(const std::string& msg) : Error(msg) {}
};

/// No strictly feasible starting point exists (phase-I failure).
class InfeasibleError : public Error {
public:
  explicit InfeasibleError(const std::string& msg) : Error(msg) {}
};

/// An iteration cap was exceeded.
class IterationCapError : public Error {
public:
  explicit IterationCapError(const std::string& msg) : Error(msg) {}
};

/// Which group of barrier terms rejected a point.
enum class BarrierGroup { Epigraph, SigmaCap, Polyhedral, Box };

inline const char* to_string(BarrierGroup g) {
  switch (g) {
    case BarrierGroup::Epigraph: return "epigraph";
    case BarrierGroup::SigmaCap: return "sigma_cap";
    case BarrierGroup::Polyhedral: return "polyhedral";
    case BarrierGroup::Box: return "box";
  }
  return "?";
}

/// A point left the strict barrier domain; carries the offending group/index.
class DomainViolation : public Error {
public:
  DomainViolation(BarrierGroup group, int index, const std::string& msg)
      : Error(msg), group(group), index(index) {}
  BarrierGroup group;
  int index;
};

// ---------------------------------------------------------------------------
// Thread budget. VARIPATH_THREADS caps internal parallelism (0 = auto).
// ---------------------------------------------------------------------------

inline int thread_count() {
  int requested = 0;
  if (const char* env = std::getenv("VARIPATH_THREADS")) {
    requested = std::atoi(env);
  }
  if (requested <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    requested = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return requested < 1 ? 1 : requested;
}

/// Max-reduction of fn(i) over [0, count). Chunked across the thread budget;
/// max is order-independent so the result does not depend on the partition.
template <typename Fn>
double parallel_max(long long count, const Fn& fn) {
  const int threads = thread_count();
  if (count <= 0) return -std::numeric_limits<double>::infinity();
  if (threads == 1 || count < 1024) {
    double best = -std::numeric_limits<double>::infinity();
    for (long long i = 0; i < count; ++i) best = std::max(best, fn(i));
    return best;
  }
  std::vector<double> partial(threads, -std::numeric_limits<double>::infinity());
  std::vector<std::thread> pool;
  const long long chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      const long long lo = t * chunk;
      const long long hi = std::min(count, lo + chunk);
      double best = -std::numeric_limits<double>::infinity();
      for (long long i = lo; i < hi; ++i) best = std::max(best, fn(i));
      partial[t] = best;
    });
  }
  for (auto& th : pool) th.join();
  double best = -std::numeric_limits<double>::infinity();
  for (double v : partial) best = std::max(best, v);
  return best;
}

}  // namespace varipath
