#pragma once

namespace mfl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mfl
