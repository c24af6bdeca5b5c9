// SPDX-License-Identifier: Apache-2.0
#include "dtloc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dtloc {

int default_workers() {
  if (const char *env = std::getenv("DTLOC_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

} // namespace dtloc
