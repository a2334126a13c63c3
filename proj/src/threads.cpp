#include "bioinverse/threads.hpp"

#include <cstdlib>
#include <thread>

namespace bioinverse {

int max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    const char* env = std::getenv("BIOINVERSE_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    char* end = nullptr;
    const long requested = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || requested < 1) return hw;
    return requested < hw ? static_cast<int>(requested) : hw;
}

} // namespace bioinverse
