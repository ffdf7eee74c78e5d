#pragma once

namespace hypercqa {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hypercqa
