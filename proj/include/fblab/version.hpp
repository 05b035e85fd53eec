#pragma once

namespace fblab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kFieldFormat = "FBLAB1";

}  // namespace fblab
