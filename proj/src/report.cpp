#include "mgtrade/report.hpp"

#include <cmath>
#include <cstdio>

namespace mgtrade {

std::string format_fixed(double v) {
  if (std::abs(v) < 5e-7) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace mgtrade
