#pragma once

namespace rbound {

inline constexpr const char* kVersion = "0.1.0";

} // namespace rbound
