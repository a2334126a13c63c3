#pragma once

namespace bioinverse {

// Concurrency cap for parallel kernels: min(BIOINVERSE_THREADS, hardware).
// Unset, empty or invalid BIOINVERSE_THREADS means the hardware default.
int max_threads();

} // namespace bioinverse
