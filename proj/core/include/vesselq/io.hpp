#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "vesselq/volume.hpp"

namespace vesselq {

enum class ByteOrder { little, big };

/// The subset of the NIfTI-1 header this library interprets. Orientation
/// (qform/sform) is parsed for callers that need it but never applied: all
/// geometry works in voxel index space scaled by pixdim.
struct NiftiHeader {
    ByteOrder byte_order = ByteOrder::little;
    std::array<std::int16_t, 8> dim{};
    std::array<float, 8> pixdim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    float vox_offset = 352.0f;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    std::array<float, 3> quatern{};
    std::array<float, 3> qoffset{};
    std::array<std::array<float, 4>, 3> srow{};
    bool single_file = true;  // "n+1" vs "ni1"
};

/// Parses and validates the 348-byte header at `path`.
NiftiHeader read_nifti_header(const std::filesystem::path& path);

/// Loads an uncompressed NIfTI-1 volume (datatypes 2, 4, 16, 64). For the
/// two-file "ni1" variant `path` is the .hdr and the payload is read from the
/// sibling .img. When scl_slope is non-zero and not the identity (1, 0), values
/// are rescaled and the result is f64.
VoxelVolume load_nifti(const std::filesystem::path& path);

/// Writes a single-file "n+1" volume with vox_offset 352.
void save_nifti(const VoxelVolume& vol, const std::filesystem::path& path,
                ByteOrder order = ByteOrder::little);

/// Raw format: `<name>.json` sidecar with keys {dims, spacing_mm, dtype,
/// byte_order, data_file} and a headerless x-fastest payload. data_file is
/// resolved relative to the sidecar's directory.
VoxelVolume load_raw(const std::filesystem::path& sidecar);
void save_raw(const VoxelVolume& vol, const std::filesystem::path& sidecar,
              ByteOrder order = ByteOrder::little);

/// Dispatches on extension: ".json" is the raw sidecar, anything else NIfTI.
VoxelVolume load_volume(const std::filesystem::path& path);
void save_volume(const VoxelVolume& vol, const std::filesystem::path& path);

}  // namespace vesselq
