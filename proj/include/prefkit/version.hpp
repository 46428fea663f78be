#pragma once

namespace prefkit {

inline constexpr const char* kToolName = "prefkit";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

}  // namespace prefkit
