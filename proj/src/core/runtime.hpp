#pragma once

namespace gemix {

/// Intra-op thread count for tensor math. 1 is the determinism reference.
void set_compute_threads(int threads);
int compute_threads();

}  // namespace gemix
