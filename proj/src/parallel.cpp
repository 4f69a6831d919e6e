#include "levyruin/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace levyruin {
namespace {

std::atomic<unsigned> configured{0};

unsigned from_environment() {
  const char* raw = std::getenv("LEVYRUIN_THREADS");
  if (raw == nullptr) return 1;
  try {
    const long v = std::stol(raw);
    return v > 0 ? static_cast<unsigned>(v) : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace

void set_thread_count(unsigned n) { configured.store(n); }

unsigned thread_count() {
  const unsigned n = configured.load();
  return n > 0 ? n : from_environment();
}

}  // namespace levyruin
