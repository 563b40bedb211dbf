#pragma once

namespace sfree {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sfree
