#pragma once

namespace reachbound {

inline constexpr const char* kVersion = "0.1.0";

}
