#pragma once

namespace unidecon {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace unidecon
