#pragma once

namespace scm {
inline constexpr const char* kVersion = "0.1.0";
}
