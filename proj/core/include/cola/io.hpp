#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cola/cam.hpp"
#include "cola/classifier.hpp"
#include "cola/matrix.hpp"

namespace cola {

// All three formats share a 21-byte little-endian header:
//
//   offset  size  field
//   0       8     magic ("COLAFEAT" | "COLAPROT" | "COLACKPT")
//   8       4     format version (u32, = 1)
//   12      4     rows (u32): samples, classes, or feature dim for checkpoints
//   16      4     cols (u32): feature dim, or hidden dim for checkpoints
//   20      1     flag byte (u8)
//
// followed by row-major IEEE-754 float32 payloads. See docs/formats.md.

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 21;

using Bytes = std::vector<std::uint8_t>;

struct FeatureSet {
  Matrix features;
  /// Ground-truth class per row, evaluation only.
  std::optional<std::vector<std::size_t>> labels;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

Bytes encode_features(const FeatureSet& set);
FeatureSet decode_features(std::span<const std::uint8_t> bytes);

/// Class names are stored after the payload as (u32 byte length, UTF-8 bytes).
/// Rows must be unit-norm within 1e-4.
Bytes encode_prototypes(const ClassPrototypes& protos);
ClassPrototypes decode_prototypes(std::span<const std::uint8_t> bytes);

Bytes encode_checkpoint(const CamParameters<float>& params);
CamParameters<float> decode_checkpoint(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline FeatureSet read_features(const std::filesystem::path& p) { return decode_features(read_file(p)); }
inline void write_features(const std::filesystem::path& p, const FeatureSet& s) { write_file(p, encode_features(s)); }
inline ClassPrototypes read_prototypes(const std::filesystem::path& p) { return decode_prototypes(read_file(p)); }
inline void write_prototypes(const std::filesystem::path& p, const ClassPrototypes& c) {
  write_file(p, encode_prototypes(c));
}
inline CamParameters<float> read_checkpoint(const std::filesystem::path& p) {
  return decode_checkpoint(read_file(p));
}
inline void write_checkpoint(const std::filesystem::path& p, const CamParameters<float>& c) {
  write_file(p, encode_checkpoint(c));
}

}  // namespace cola
