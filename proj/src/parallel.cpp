#include "treelab/parallel.hpp"

namespace treelab {

namespace {
std::atomic<bool> g_interrupt{false};
}

void request_interrupt() noexcept { g_interrupt.store(true, std::memory_order_relaxed); }
void clear_interrupt() noexcept { g_interrupt.store(false, std::memory_order_relaxed); }
bool interrupt_requested() noexcept { return g_interrupt.load(std::memory_order_relaxed); }

}  // namespace treelab
