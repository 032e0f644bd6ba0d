#pragma once

namespace cml {

inline constexpr const char* version = "1.0.0";

}  // namespace cml
