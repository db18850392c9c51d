// NIfTI-1 single-file reader/writer (.nii, .nii.gz).
//
// Supported datatypes: uint8, int16, float32. Scalar volumes are written as
// float32 and label volumes as uint8, so a save/load round trip is bit-exact.

#pragma once

#include <filesystem>
#include <variant>

#include "tumorsynth/grid.hpp"

namespace tumorsynth::nifti {

enum class DataType : int16_t { UInt8 = 2, Int16 = 4, Float32 = 16 };

struct Header {
    Geometry geometry;
    DataType datatype = DataType::Float32;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
};

/// Reads only the header.
Header read_header(const std::filesystem::path& path);

/// uint8 files load as LabelVolume, everything else as ScalarVolume.
std::variant<ScalarVolume, LabelVolume> load(const std::filesystem::path& path);

/// Any supported datatype, scaled by scl_slope/scl_inter when the slope is nonzero.
ScalarVolume load_scalar(const std::filesystem::path& path);

/// Integral-valued file rounded into 0..255. Values outside that range are a format error.
LabelVolume load_labels(const std::filesystem::path& path);

void save(const ScalarVolume& volume, const std::filesystem::path& path);
void save(const LabelVolume& labels, const std::filesystem::path& path);
void save(const VesselMask& mask, const std::filesystem::path& path);

/// True when the path ends in ".gz".
bool is_gzip_path(const std::filesystem::path& path);

}  // namespace tumorsynth::nifti
