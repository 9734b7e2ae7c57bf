#pragma once

namespace crstokes {
inline constexpr const char* kVersion = "crstokes-1.0.0";
}
