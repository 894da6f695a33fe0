#pragma once

namespace gridmesh {

inline constexpr const char* version = "0.1.0";

} // namespace gridmesh
