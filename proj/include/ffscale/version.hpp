#pragma once

namespace ffscale {
inline constexpr const char* kVersion = "0.1.0";
}
