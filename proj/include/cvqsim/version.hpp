#pragma once

namespace cvq {

inline constexpr const char* kLibraryVersion = "1.0.0";

// Identifier of the counter-based random generator; recorded in dataset
// sidecars so ports can verify they reproduce the same streams.
inline constexpr const char* kGeneratorName = "cvq-splitmix64-v1";

inline constexpr const char* kCsvSchemaVersion = "cvqsim-csv-v1";

}  // namespace cvq
