// Slice extraction, HU windowing and PNG encoding.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

enum class Axis { Sagittal = 0, Coronal = 1, Axial = 2 };

/// Accepts "axial"/"z", "coronal"/"y", "sagittal"/"x".
Axis parse_axis(const std::string& name);

struct Window {
    double center = 40.0;
    double width = 400.0;
    void validate() const;  // width must be positive and both finite
};

/// clamp((hu - (center - width/2)) / width, 0, 1) * 255, rounded half up.
uint8_t window_value(double hu, const Window& w);

struct GraySlice {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major
};

/// Axial slices are x by y, coronal x by z, sagittal y by z. BoundsError on a bad index.
GraySlice extract_slice(const ScalarVolume& volume, Axis axis, int index, const Window& window);

std::string encode_png(const GraySlice& slice);

}  // namespace tumorsynth
