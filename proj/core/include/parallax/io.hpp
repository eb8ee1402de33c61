#pragma once

#include "tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace parallax::io {

/*
 * CFL pairs: "<base>.hdr" holds "# Dimensions" and a line of extents,
 * "<base>.cfl" holds little-endian float32 (real, imag) pairs in column-major
 * order over those extents. A row-major (N, H, W) tensor is written with
 * extents "W H N 1 1", so the byte order is the same in memory and on disk.
 */
std::filesystem::path cfl_base(std::filesystem::path const &path);

std::vector<Index> read_cfl_extents(std::filesystem::path const &path);

template <typename S> Tensor<std::complex<S>> read_cfl(std::filesystem::path const &path);
template <typename S> void write_cfl(std::filesystem::path const &path, Tensor<std::complex<S>> const &t);

// Byte-level checksum (FNV-1a 64) of a CFL data file.
std::uint64_t cfl_checksum(std::filesystem::path const &path);

struct ManifestEntry
{
  std::string id;
  std::string kspace_path; // relative to the manifest directory
  std::string image_path;  // empty when no reference image is stored
  std::string maps_path;
  std::uint64_t seed = 0;
  std::string contrast;
  std::string split;
  Index volume = -1;
};

struct Manifest
{
  std::vector<ManifestEntry> samples;
  std::vector<std::string> errors; // converter skip records, carried through verbatim
  std::filesystem::path directory;

  std::filesystem::path resolve(std::string const &relative) const { return directory / relative; }
};

// Accepts the converter's "path" key as an alias for "kspace_path".
Manifest read_manifest(std::filesystem::path const &path);
void write_manifest(std::filesystem::path const &path, Manifest const &m);

std::string read_text(std::filesystem::path const &path);
void write_text(std::filesystem::path const &path, std::string const &text);

} // namespace parallax::io
