#include "ergodeq/parallel.hpp"

namespace ergodeq {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_max_threads(unsigned n) { g_threads.store(n == 0 ? 1 : n); }

unsigned max_threads() { return g_threads.load(); }

}  // namespace ergodeq
