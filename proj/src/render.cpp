#include "tumorsynth/render.hpp"

#include <algorithm>
#include <cmath>

#include <png.h>

namespace tumorsynth {

Axis parse_axis(const std::string& name) {
    if (name == "axial" || name == "z") return Axis::Axial;
    if (name == "coronal" || name == "y") return Axis::Coronal;
    if (name == "sagittal" || name == "x") return Axis::Sagittal;
    throw ArgumentError("unknown axis '" + name + "'");
}

void Window::validate() const {
    if (!std::isfinite(center) || !std::isfinite(width) || !(width > 0.0))
        throw ArgumentError("window width must be positive and window values finite");
}

uint8_t window_value(double hu, const Window& w) {
    const double v = std::clamp((hu - (w.center - w.width / 2.0)) / w.width, 0.0, 1.0) * 255.0;
    return static_cast<uint8_t>(std::floor(v + 0.5));
}

GraySlice extract_slice(const ScalarVolume& v, Axis axis, int index, const Window& window) {
    window.validate();
    const auto& d = v.dims();
    const int a = static_cast<int>(axis);
    if (index < 0 || index >= d[a])
        throw BoundsError("slice index " + std::to_string(index) + " outside [0, " + std::to_string(d[a]) + ")");
    GraySlice s;
    const int u = axis == Axis::Sagittal ? 1 : 0;
    const int w = axis == Axis::Axial ? 1 : 2;
    s.width = d[u];
    s.height = d[w];
    s.pixels.resize(static_cast<std::size_t>(s.width) * s.height);
    Index3 p{0, 0, 0};
    p[a] = index;
    for (int r = 0; r < s.height; ++r)
        for (int c = 0; c < s.width; ++c) {
            p[u] = c;
            p[w] = r;
            s.pixels[static_cast<std::size_t>(r) * s.width + c] = window_value(v(p[0], p[1], p[2]), window);
        }
    return s;
}

namespace {
void append(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), n);
}
void flush(png_structp) {}
}  // namespace

std::string encode_png(const GraySlice& s) {
    if (s.width <= 0 || s.height <= 0 || s.pixels.size() != static_cast<std::size_t>(s.width) * s.height)
        throw ArgumentError("slice buffer does not match its size");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("cannot create PNG writer");
    png_infop info = png_create_info_struct(png);
    std::string out;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw IoError("PNG encoding failed");
    }
    png_set_write_fn(png, &out, append, flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(s.width), static_cast<png_uint_32>(s.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < s.height; ++r)
        png_write_row(png, const_cast<png_bytep>(s.pixels.data() + static_cast<std::size_t>(r) * s.width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace tumorsynth
