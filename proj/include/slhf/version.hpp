#pragma once

namespace slhf {

inline constexpr const char* code_version = "0.1.0";
/// Bumped whenever the SCF cache layout or the SCF numerics change.
inline constexpr int cache_format_version = 1;

} // namespace slhf
