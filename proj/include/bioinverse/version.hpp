#pragma once

namespace bioinverse {

inline constexpr const char* kToolName = "bioinverse";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace bioinverse
