#pragma once

namespace flowemu {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowemu
