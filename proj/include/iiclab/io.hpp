#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iiclab/percolation.hpp"

namespace iiclab {

// Binary sample layout, all fields little-endian:
//   bytes 0..3   magic "IICB"
//   u32          format version (1)
//   i64          half-width n
//   i64 i64      region offset (x, y)
//   f64          p
//   u64          seed
//   u64          word count
//   u64[words]   bit-packed edge indicators in the canonical edge order
// A JSON sidecar at <path>.json carries the same header plus the open-edge
// count and a checksum of the binary payload.
void write_sample(const PercolationSample& sample, const std::filesystem::path& path);

// Parses and validates a binary sample; throws std::runtime_error with the
// offending field on any mismatch (magic, version, sizes, p range).
PercolationSample read_sample(const std::filesystem::path& path);

std::uint64_t fnv1a_bytes(const void* data, std::size_t len);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

// shortest round-trip decimal of a double; locale-independent
std::string fmt_double(double v);

// Write via a sibling temp file and rename, so readers never observe a
// partial file and interrupted runs leave either the old or the new content.
void atomic_write_bytes(const std::filesystem::path& path, const void* data, std::size_t len);
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header);
    void row(std::vector<std::string> cells);  // must match the header width
    std::string render() const;
    void save(const std::filesystem::path& path) const;  // atomic
    std::size_t rows() const { return rows_.size(); }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace iiclab
