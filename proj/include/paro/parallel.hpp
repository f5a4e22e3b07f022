#pragma once

// Index-parallel loops with a serial reference path. Each index must only
// touch state private to that index; callers merge results in index order.

#include <cstddef>
#include <exception>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paro {

enum class ExecutionPolicy { serial, openmp };

ExecutionPolicy parse_execution_policy(const std::string& name);
const char* to_string(ExecutionPolicy policy);

/// Number of threads an openmp loop would use (1 without OpenMP).
int max_threads();

/// Runs body(i) for i in [0, n). The exception raised by the lowest failing
/// index is rethrown after all iterations finish.
template <class Body>
void parallel_for(ExecutionPolicy policy, std::size_t n, Body&& body) {
  if (policy == ExecutionPolicy::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace paro
