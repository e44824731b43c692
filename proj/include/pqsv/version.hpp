#pragma once

namespace pqsv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pqsv
