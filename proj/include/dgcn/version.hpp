#pragma once

namespace dgcn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dgcn
