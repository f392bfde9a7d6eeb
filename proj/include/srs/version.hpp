#pragma once

namespace srs {

inline constexpr const char* version_string = "0.1.0";
inline constexpr int manifest_schema_version = 1;

} // namespace srs
