#pragma once

namespace wavedisp {
inline constexpr const char* kVersion = "0.1.0";
}
