#include "avcurate/binary_io.h"

#include <array>
#include <bit>
#include <cstring>

namespace avcurate {

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kBadMagic: return "bad magic";
    case FormatErrorKind::kDimMismatch: return "dimension mismatch";
    case FormatErrorKind::kTruncated: return "truncated file";
    case FormatErrorKind::kNonFinite: return "non-finite value";
    case FormatErrorKind::kInvalidValue: return "invalid value";
    case FormatErrorKind::kIo: return "i/o error";
  }
  return "unknown";
}

FormatError::FormatError(FormatErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

namespace binio {
namespace {

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> buf;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  os.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(U)> buf;
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw FormatError(FormatErrorKind::kTruncated, std::string("while reading ") + what);
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(buf[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void write_u8(std::ostream& os, std::uint8_t v) { put_le(os, v); }
void write_u16(std::ostream& os, std::uint16_t v) { put_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

void expect_magic(std::istream& is, std::string_view magic, const std::string& file) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (is.gcount() != static_cast<std::streamsize>(got.size()) || got != magic) {
    throw FormatError(FormatErrorKind::kBadMagic,
                      file + " does not start with \"" + std::string(magic) + "\"");
  }
}

std::uint8_t read_u8(std::istream& is, const char* what) { return get_le<std::uint8_t>(is, what); }
std::uint16_t read_u16(std::istream& is, const char* what) { return get_le<std::uint16_t>(is, what); }
std::uint32_t read_u32(std::istream& is, const char* what) { return get_le<std::uint32_t>(is, what); }

float read_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(get_le<std::uint32_t>(is, what));
}

double read_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is, what));
}

bool at_eof(std::istream& is) {
  return is.peek() == std::char_traits<char>::eof();
}

}  // namespace binio
}  // namespace avcurate
