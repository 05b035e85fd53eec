#include "fblab/parallel.hpp"

#include <atomic>

namespace fblab {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() { return g_threads.load(); }

void set_thread_count(int threads) { g_threads.store(std::max(1, threads)); }

}  // namespace fblab
