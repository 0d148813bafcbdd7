#pragma once

namespace damsa {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace damsa
