#pragma once

namespace vlsf {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace vlsf
