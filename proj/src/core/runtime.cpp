#include "core/runtime.hpp"

#include <ATen/Parallel.h>

#include "core/errors.hpp"

namespace gemix {

void set_compute_threads(int threads) {
  require(threads >= 1, "thread count must be >= 1");
  at::set_num_threads(threads);
}

int compute_threads() { return at::get_num_threads(); }

}  // namespace gemix
