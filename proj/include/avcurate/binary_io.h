// Little-endian primitives shared by the EMB1, FRF1, SYN1 and PLDA1 containers.

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace avcurate {

enum class FormatErrorKind {
  kBadMagic,
  kDimMismatch,
  kTruncated,
  kNonFinite,
  kInvalidValue,
  kIo,
};

const char* to_string(FormatErrorKind kind);

// Raised by every binary/JSON reader in the project. The kind lets callers
// (and tests) tell the diagnostics apart without parsing messages.
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what);
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

namespace binio {

void write_magic(std::ostream& os, std::string_view magic);
void write_u8(std::ostream& os, std::uint8_t v);
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);

// Readers throw FormatError(kTruncated) when the stream ends early. `what`
// names the field for the diagnostic.
void expect_magic(std::istream& is, std::string_view magic, const std::string& file);
std::uint8_t read_u8(std::istream& is, const char* what);
std::uint16_t read_u16(std::istream& is, const char* what);
std::uint32_t read_u32(std::istream& is, const char* what);
float read_f32(std::istream& is, const char* what);
double read_f64(std::istream& is, const char* what);

// True when the stream has no more bytes (peek hits EOF).
bool at_eof(std::istream& is);

}  // namespace binio
}  // namespace avcurate
