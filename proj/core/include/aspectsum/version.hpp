#pragma once

namespace aspectsum {

inline constexpr const char* kToolVersion = "aspectsum 0.1.0";

}  // namespace aspectsum
