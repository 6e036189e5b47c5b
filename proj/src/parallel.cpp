#include "tucker/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace tucker {
namespace {

unsigned from_environment() {
  if (const char *env = std::getenv("TUCKER_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned> &override_slot() {
  static std::atomic<unsigned> slot{0};
  return slot;
}

} // namespace

unsigned thread_count() {
  if (unsigned v = override_slot().load(); v > 0) return v;
  static const unsigned env = from_environment();
  return env;
}

void set_thread_count(unsigned n) { override_slot().store(n); }

} // namespace tucker
