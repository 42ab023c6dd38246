#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "vbgp/error.hpp"

namespace vbgp {

/// Thrown when a replication fails; carries the failing replication index.
class ReplicationError : public NumericalError {
 public:
  ReplicationError(std::size_t replication, const std::string& what)
      : NumericalError("replication " + std::to_string(replication) + ": " + what),
        replication_(replication) {}

  [[nodiscard]] std::size_t replication() const noexcept { return replication_; }

 private:
  std::size_t replication_;
};

/// Runs body(r) for r = 0..reps-1 on up to `threads` workers (0 = hardware
/// concurrency) and returns the results in replication order. Any result is
/// a pure function of r, so the output does not depend on scheduling.
template <typename Body>
auto run_replications(std::size_t reps, unsigned threads, Body&& body)
    -> std::vector<std::invoke_result_t<Body&, std::size_t>> {
  using Result = std::invoke_result_t<Body&, std::size_t>;
  std::vector<Result> results(reps);
  std::vector<std::exception_ptr> errors(reps);
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(reps, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      try {
        results[r] = body(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  for (std::size_t r = 0; r < reps; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const ConfigError&) {
      throw;
    } catch (const ReplicationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ReplicationError(r, e.what());
    }
  }
  return results;
}

}  // namespace vbgp
