#include "paro/parallel.hpp"

#include <stdexcept>

namespace paro {

ExecutionPolicy parse_execution_policy(const std::string& name) {
  if (name == "serial") return ExecutionPolicy::serial;
  if (name == "openmp" || name == "omp") return ExecutionPolicy::openmp;
  throw std::invalid_argument("unknown execution policy '" + name + "'");
}

const char* to_string(ExecutionPolicy policy) {
  return policy == ExecutionPolicy::serial ? "serial" : "openmp";
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace paro
