#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quarks {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return {s.begin(), s.end()}; }
inline std::string to_string(ByteView b) { return {b.begin(), b.end()}; }
inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

/// Standard base64 with padding. Decoding rejects malformed input with a validation error.
std::string to_base64(ByteView data);
Bytes from_base64(std::string_view text);

/// Append-only writer for canonical, injective encodings: every variable-length
/// field is prefixed by its 4-byte big-endian length.
class CanonicalWriter {
 public:
  CanonicalWriter& field(ByteView value);
  CanonicalWriter& field(std::string_view value) { return field(as_bytes(value)); }
  CanonicalWriter& u64(std::uint64_t value);

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// True if `needle` occurs anywhere in `haystack`.
bool contains(ByteView haystack, ByteView needle);

}  // namespace quarks
