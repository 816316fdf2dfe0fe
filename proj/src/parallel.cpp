#include "geobmo/parallel.hpp"

#include <cstdlib>
#include <string>

namespace geobmo {

unsigned worker_count() {
  static const unsigned count = [] {
    if (const char* env = std::getenv("GEOBMO_THREADS")) {
      try {
        const int v = std::stoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
      } catch (const std::exception&) {
      }
    }
    return std::max(1u, std::thread::hardware_concurrency());
  }();
  return count;
}

}  // namespace geobmo
