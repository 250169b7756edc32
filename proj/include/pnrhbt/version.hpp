#pragma once

namespace pnrhbt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pnrhbt
