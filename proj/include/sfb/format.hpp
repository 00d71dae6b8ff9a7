#pragma once

#include <cstdio>
#include <string>

namespace sfb {

// Lossless, locale-independent double formatting. All CSV output goes through
// this so identical runs produce byte-identical files.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace sfb
