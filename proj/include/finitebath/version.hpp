#pragma once

namespace finitebath {
inline constexpr const char* kVersion = "0.1.0";
}
