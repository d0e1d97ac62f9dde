#include "super/experience_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "super/errors.hpp"

namespace super {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'X', 'R'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFU));
}

void put_f32(std::vector<std::byte>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Cursor {
 public:
  explicit Cursor(std::span<const std::byte> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return std::to_integer<std::uint8_t>(data_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(data_[pos_++])) << (8 * i);
    }
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("truncated experience record");
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void encode_experience(const Experience& exp, std::size_t observation_dim,
                       std::vector<std::byte>& out) {
  if (exp.obs.size() != observation_dim || exp.next_obs.size() != observation_dim) {
    throw ContractViolation("cannot encode experience: observation dimension mismatch");
  }
  out.reserve(out.size() + experience_record_size(observation_dim));
  for (float v : exp.obs) put_f32(out, v);
  put_u32(out, static_cast<std::uint32_t>(exp.action));
  put_f32(out, exp.reward);
  for (float v : exp.next_obs) put_f32(out, v);
  out.push_back(static_cast<std::byte>(exp.done ? 1 : 0));
  put_u32(out, exp.origin_agent);
  out.push_back(static_cast<std::byte>(exp.td_at_share ? 1 : 0));
  put_f32(out, exp.td_at_share.value_or(0.0F));
}

Experience decode_experience(std::span<const std::byte> record, std::size_t observation_dim) {
  if (record.size() != experience_record_size(observation_dim)) {
    throw FormatError("experience record has " + std::to_string(record.size()) +
                      " bytes, expected " +
                      std::to_string(experience_record_size(observation_dim)));
  }
  Cursor in(record);
  Experience exp;
  exp.obs.resize(observation_dim);
  for (auto& v : exp.obs) v = in.f32();
  exp.action = static_cast<int>(in.u32());
  exp.reward = in.f32();
  exp.next_obs.resize(observation_dim);
  for (auto& v : exp.next_obs) v = in.f32();
  const auto done = in.u8();
  if (done > 1) throw FormatError("invalid done flag in experience record");
  exp.done = done == 1;
  exp.origin_agent = in.u32();
  const auto has_td = in.u8();
  const float td = in.f32();
  if (has_td > 1) throw FormatError("invalid td flag in experience record");
  if (has_td == 1) exp.td_at_share = td;
  return exp;
}

void write_experience_header(std::ostream& os, std::size_t observation_dim) {
  std::vector<std::byte> header;
  for (char c : kMagic) header.push_back(static_cast<std::byte>(c));
  header.push_back(static_cast<std::byte>(kExperienceFormatVersion & 0xFFU));
  header.push_back(static_cast<std::byte>(kExperienceFormatVersion >> 8));
  header.push_back(std::byte{0});
  header.push_back(std::byte{0});
  put_u32(header, static_cast<std::uint32_t>(observation_dim));
  os.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
}

std::size_t read_experience_header(std::istream& is) {
  std::array<char, kExperienceHeaderSize> raw{};
  if (!is.read(raw.data(), raw.size())) throw FormatError("truncated experience stream header");
  if (std::memcmp(raw.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("bad experience stream magic");
  }
  const auto version = static_cast<std::uint16_t>(static_cast<unsigned char>(raw[4]) |
                                                  (static_cast<unsigned char>(raw[5]) << 8));
  if (version != kExperienceFormatVersion) {
    throw FormatError("unsupported experience format version " + std::to_string(version));
  }
  std::uint32_t dim = 0;
  for (int i = 0; i < 4; ++i) dim |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[8 + i])) << (8 * i);
  if (dim == 0) throw FormatError("experience stream declares zero observation_dim");
  return dim;
}

void write_experiences(std::ostream& os, std::size_t observation_dim,
                       std::span<const Experience> experiences) {
  write_experience_header(os, observation_dim);
  std::vector<std::byte> buf;
  for (const auto& exp : experiences) {
    buf.clear();
    encode_experience(exp, observation_dim, buf);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

std::vector<Experience> read_experiences(std::istream& is, std::size_t* observation_dim) {
  const std::size_t dim = read_experience_header(is);
  if (observation_dim != nullptr) *observation_dim = dim;
  const std::size_t size = experience_record_size(dim);
  std::vector<Experience> out;
  std::vector<std::byte> buf(size);
  while (true) {
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
    const auto got = static_cast<std::size_t>(is.gcount());
    if (got == 0) break;
    if (got != size) throw FormatError("truncated experience record at end of stream");
    out.push_back(decode_experience(buf, dim));
  }
  return out;
}

}  // namespace super
