#pragma once

#include <string>

namespace mgtrade {

/// Fixed 6-decimal rendering used by every CSV the library writes. Values that
/// round to zero print without a sign.
std::string format_fixed(double v);

}  // namespace mgtrade
