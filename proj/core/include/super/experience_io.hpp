#pragma once

// Binary wire/dump format for experiences.
//
// Stream header (12 bytes):
//   char[4]  magic "SPXR"
//   u16      format version (1)
//   u16      reserved (0)
//   u32      observation_dim
//
// Record (8 * observation_dim + 18 bytes), all fields little-endian:
//   f32[dim] obs
//   i32      action
//   f32      reward
//   f32[dim] next_obs
//   u8       done (0/1)
//   u32      origin_agent
//   u8       has_td (0/1)
//   f32      td_at_share (0 when absent)

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "super/types.hpp"

namespace super {

inline constexpr std::uint16_t kExperienceFormatVersion = 1;
inline constexpr std::size_t kExperienceHeaderSize = 12;

constexpr std::size_t experience_record_size(std::size_t observation_dim) {
  return 8 * observation_dim + 18;
}

/// Appends the record for `exp` to `out`.
void encode_experience(const Experience& exp, std::size_t observation_dim,
                       std::vector<std::byte>& out);
Experience decode_experience(std::span<const std::byte> record, std::size_t observation_dim);

void write_experience_header(std::ostream& os, std::size_t observation_dim);
/// Returns the declared observation_dim.
std::size_t read_experience_header(std::istream& is);

void write_experiences(std::ostream& os, std::size_t observation_dim,
                       std::span<const Experience> experiences);
/// Reads a header and every record that follows it.
std::vector<Experience> read_experiences(std::istream& is, std::size_t* observation_dim = nullptr);

}  // namespace super
