#include "asif/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace asif {

int max_threads() { return omp_get_max_threads(); }

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

std::optional<int> threads_from_env() {
  const char* raw = std::getenv("ASIF_NUM_THREADS");
  if (!raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const int n = std::stoi(raw, &used);
    if (used != std::string(raw).size() || n <= 0) return std::nullopt;
    return n;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace asif
