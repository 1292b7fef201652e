// EMB1 embedding container.
//
// Layout (all little-endian):
//   "EMB1"  u32 dim  u32 count
//   count x { u16 id_len, id_len bytes of UTF-8 id, dim x f32 }
//
// Every reader failure is a FormatError whose kind tells the cause apart:
// kBadMagic, kDimMismatch (dim is zero, a writer got mixed dims, or the
// caller's expected dim differs), kTruncated, kNonFinite.

#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>

#include "avcurate/core.h"

namespace avcurate {

void write_embeddings(std::ostream& os, const EmbeddingSet& set);
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);

EmbeddingSet read_embeddings(std::istream& is, const std::string& name,
                             std::optional<std::uint32_t> expected_dim = std::nullopt);
EmbeddingSet read_embeddings(const std::filesystem::path& path,
                             std::optional<std::uint32_t> expected_dim = std::nullopt);

}  // namespace avcurate
