#pragma once

#include <optional>

namespace asif {

int max_threads();
/// Caps the worker count used by every parallel kernel.
void set_num_threads(int n);
/// Parses ASIF_NUM_THREADS; nullopt when unset or not a positive integer.
std::optional<int> threads_from_env();

}  // namespace asif
