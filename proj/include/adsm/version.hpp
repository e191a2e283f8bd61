#pragma once

namespace adsm {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace adsm
