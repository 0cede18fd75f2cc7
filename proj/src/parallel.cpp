#include "colmat/parallel.hpp"

#include <atomic>

namespace colmat {

namespace {
std::atomic<bool> g_parallel_enabled{true};
}

void set_parallel_enabled(bool enabled) { g_parallel_enabled.store(enabled); }

bool parallel_enabled() { return g_parallel_enabled.load(); }

} // namespace colmat
