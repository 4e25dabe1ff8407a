#pragma once

namespace mtad {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Version stamp for serialized outputs (checkpoints, run manifests).
inline constexpr int kFormatVersion = 1;

}  // namespace mtad
