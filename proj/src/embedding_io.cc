#include "avcurate/embedding_io.h"

#include <cmath>
#include <fstream>
#include <limits>

#include "avcurate/binary_io.h"

namespace avcurate {

namespace {
constexpr std::string_view kMagic = "EMB1";
}

void write_embeddings(std::ostream& os, const EmbeddingSet& set) {
  if (set.dim == 0) {
    throw FormatError(FormatErrorKind::kDimMismatch, "embedding dim must be positive");
  }
  if (set.items.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(FormatErrorKind::kInvalidValue, "too many embeddings for EMB1");
  }
  for (const auto& e : set.items) {
    if (e.dim() != set.dim) {
      throw FormatError(FormatErrorKind::kDimMismatch,
                        "embedding '" + e.id + "' has dim " + std::to_string(e.dim()) +
                            ", set dim is " + std::to_string(set.dim));
    }
    if (e.id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError(FormatErrorKind::kInvalidValue, "embedding id too long");
    }
    for (float v : e.values) {
      if (!std::isfinite(v)) {
        throw FormatError(FormatErrorKind::kNonFinite, "embedding '" + e.id + "'");
      }
    }
  }
  binio::write_magic(os, kMagic);
  binio::write_u32(os, set.dim);
  binio::write_u32(os, static_cast<std::uint32_t>(set.items.size()));
  for (const auto& e : set.items) {
    binio::write_u16(os, static_cast<std::uint16_t>(e.id.size()));
    os.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
    for (float v : e.values) binio::write_f32(os, v);
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string() + " for writing");
  write_embeddings(os, set);
  if (!os) throw FormatError(FormatErrorKind::kIo, "write failed for " + path.string());
}

EmbeddingSet read_embeddings(std::istream& is, const std::string& name,
                             std::optional<std::uint32_t> expected_dim) {
  binio::expect_magic(is, kMagic, name);
  EmbeddingSet set;
  set.dim = binio::read_u32(is, "EMB1 dim");
  const std::uint32_t count = binio::read_u32(is, "EMB1 count");
  if (set.dim == 0) {
    throw FormatError(FormatErrorKind::kDimMismatch, name + ": header dim is 0");
  }
  if (expected_dim && *expected_dim != set.dim) {
    throw FormatError(FormatErrorKind::kDimMismatch,
                      name + ": header dim " + std::to_string(set.dim) + ", expected " +
                          std::to_string(*expected_dim));
  }
  set.items.reserve(std::min<std::uint32_t>(count, 1u << 16));
  for (std::uint32_t r = 0; r < count; ++r) {
    Embedding e;
    const std::uint16_t len = binio::read_u16(is, "EMB1 id length");
    e.id.resize(len);
    is.read(e.id.data(), len);
    if (is.gcount() != len) {
      throw FormatError(FormatErrorKind::kTruncated, name + ": record " + std::to_string(r) + " id");
    }
    e.values.resize(set.dim);
    for (std::uint32_t k = 0; k < set.dim; ++k) {
      float v;
      try {
        v = binio::read_f32(is, "EMB1 value");
      } catch (const FormatError&) {
        throw FormatError(FormatErrorKind::kTruncated,
                          name + ": record " + std::to_string(r) + " ('" + e.id + "') has " +
                              std::to_string(k) + " of " + std::to_string(set.dim) + " values");
      }
      if (!std::isfinite(v)) {
        throw FormatError(FormatErrorKind::kNonFinite,
                          name + ": record " + std::to_string(r) + " ('" + e.id + "') value " +
                              std::to_string(k));
      }
      e.values[k] = v;
    }
    set.items.push_back(std::move(e));
  }
  return set;
}

EmbeddingSet read_embeddings(const std::filesystem::path& path,
                             std::optional<std::uint32_t> expected_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  return read_embeddings(is, path.string(), expected_dim);
}

}  // namespace avcurate
