#pragma once

#include "pactomo/medium.hpp"

#include <filesystem>

namespace pactomo {

/// A volumetric data set as stored on disk: a JSON sidecar (grid, frequency
/// list, endianness tag) next to a raw payload of little-endian float64,
/// complex values interleaved (re, im), frequency-major then row-major
/// voxel order. Real volumes have an empty imaginary part.
struct VolumeData {
  Grid3 grid;
  std::vector<double> frequencies;  // empty for a single static volume
  bool symmetric_closure = true;
  bool is_complex = false;
  std::vector<double> real;
  std::vector<double> imag;  // only when is_complex
};

/// Writes `<stem>.json` and `<stem>.bin`.
void write_volume(const std::filesystem::path& stem, const VolumeData& data);

/// Reads a volume given either the sidecar path or the common stem.
VolumeData read_volume(const std::filesystem::path& path);

VolumeData to_volume(const SusceptibilityField& field);
SusceptibilityField to_susceptibility(const VolumeData& data, std::size_t boundary_width = 1);

}  // namespace pactomo
