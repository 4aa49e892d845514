#pragma once

namespace foggy {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace foggy
