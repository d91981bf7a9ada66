#include "mfhd/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mfhd {

int resolve_threads(int requested) {
  if (const char* env = std::getenv("MFHD_THREADS"); env && *env) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (const std::exception&) {
      // fall through to the flag
    }
  }
  if (requested > 0) return requested;
  const unsigned cores = std::thread::hardware_concurrency();
  return cores > 0 ? static_cast<int>(cores) : 1;
}

}  // namespace mfhd
