#pragma once

#include <string_view>

#ifndef ARBOR_VERSION
#define ARBOR_VERSION "0.1.0"
#endif

namespace arbor {

inline constexpr std::string_view kVersion = ARBOR_VERSION;

}  // namespace arbor
