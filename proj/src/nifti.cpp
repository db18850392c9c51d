#include "tumorsynth/nifti.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace tumorsynth::nifti {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

// Field offsets of the NIfTI-1 header.
constexpr int kOffDim = 40;
constexpr int kOffDatatype = 70;
constexpr int kOffBitpix = 72;
constexpr int kOffPixdim = 76;
constexpr int kOffVoxOffset = 108;
constexpr int kOffSclSlope = 112;
constexpr int kOffSclInter = 116;
constexpr int kOffXyztUnits = 123;
constexpr int kOffQformCode = 252;
constexpr int kOffSformCode = 254;
constexpr int kOffQuatern = 256;
constexpr int kOffQoffset = 268;
constexpr int kOffSrow = 280;
constexpr int kOffMagic = 344;

template <typename T>
T get(const std::vector<char>& buf, int off, bool swap) {
    T v;
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), buf.data() + off, sizeof(T));
    if (swap) std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
}

template <typename T>
void put(std::vector<char>& buf, int off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof(T));
}

std::vector<char> read_all(const std::filesystem::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<char> out;
    std::array<char, 1 << 16> chunk;
    for (;;) {
        const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            gzclose(f);
            throw FormatError("corrupt compressed stream in " + path.string());
        }
        if (n == 0) break;
        out.insert(out.end(), chunk.data(), chunk.data() + n);
    }
    gzclose(f);
    return out;
}

struct Parsed {
    Header header;
    bool swap = false;
    std::size_t vox_offset = kVoxOffset;
};

Parsed parse_header(const std::vector<char>& buf, const std::filesystem::path& path) {
    if (buf.size() < static_cast<std::size_t>(kHeaderSize))
        throw FormatError("truncated NIfTI header in " + path.string());
    Parsed p;
    int32_t sizeof_hdr = get<int32_t>(buf, 0, false);
    if (sizeof_hdr != kHeaderSize) {
        sizeof_hdr = get<int32_t>(buf, 0, true);
        if (sizeof_hdr != kHeaderSize) throw FormatError("bad sizeof_hdr in " + path.string());
        p.swap = true;
    }
    if (std::memcmp(buf.data() + kOffMagic, "n+1\0", 4) != 0)
        throw FormatError("missing n+1 magic in " + path.string() + " (only single-file NIfTI-1 is supported)");

    const bool s = p.swap;
    const auto ndim = get<int16_t>(buf, kOffDim, s);
    if (ndim < 1 || ndim > 7) throw FormatError("invalid dim[0] in " + path.string());
    Geometry& g = p.header.geometry;
    for (int a = 0; a < 3; ++a) {
        const int d = a < ndim ? get<int16_t>(buf, kOffDim + 2 * (a + 1), s) : 1;
        g.dims[a] = d;
        const float px = get<float>(buf, kOffPixdim + 4 * (a + 1), s);
        g.spacing[a] = px > 0.0f ? px : 1.0;
    }
    for (int a = 4; a <= ndim; ++a)
        if (get<int16_t>(buf, kOffDim + 2 * a, s) > 1)
            throw UnsupportedError("volumes with more than 3 dimensions are not supported: " + path.string());

    const auto dt = get<int16_t>(buf, kOffDatatype, s);
    if (dt != 2 && dt != 4 && dt != 16)
        throw UnsupportedError("unsupported NIfTI datatype " + std::to_string(dt) + " in " + path.string());
    p.header.datatype = static_cast<DataType>(dt);
    p.header.scl_slope = get<float>(buf, kOffSclSlope, s);
    p.header.scl_inter = get<float>(buf, kOffSclInter, s);
    const float vox = get<float>(buf, kOffVoxOffset, s);
    p.vox_offset = vox >= kVoxOffset ? static_cast<std::size_t>(vox) : kVoxOffset;

    Orientation& o = g.orientation;
    o.qfac = get<float>(buf, kOffPixdim, s);
    o.xyzt_units = static_cast<unsigned char>(buf[kOffXyztUnits]);
    o.qform_code = get<int16_t>(buf, kOffQformCode, s);
    o.sform_code = get<int16_t>(buf, kOffSformCode, s);
    for (int i = 0; i < 3; ++i) {
        o.quatern[i] = get<float>(buf, kOffQuatern + 4 * i, s);
        o.qoffset[i] = get<float>(buf, kOffQoffset + 4 * i, s);
        for (int j = 0; j < 4; ++j) o.srow[i][j] = get<float>(buf, kOffSrow + 16 * i + 4 * j, s);
    }
    for (int a = 0; a < 3; ++a) g.origin[a] = o.qoffset[a];
    try {
        g.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(std::string(e.what()) + " in " + path.string());
    }
    return p;
}

std::size_t bytes_per_voxel(DataType dt) {
    switch (dt) {
        case DataType::UInt8: return 1;
        case DataType::Int16: return 2;
        case DataType::Float32: return 4;
    }
    return 0;
}

std::vector<double> decode(const std::vector<char>& buf, const Parsed& p, const std::filesystem::path& path) {
    const std::size_t n = p.header.geometry.voxel_count();
    const std::size_t bpv = bytes_per_voxel(p.header.datatype);
    if (buf.size() < p.vox_offset + n * bpv) throw FormatError("truncated voxel data in " + path.string());
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int off = static_cast<int>(p.vox_offset + i * bpv);
        switch (p.header.datatype) {
            case DataType::UInt8: out[i] = static_cast<unsigned char>(buf[off]); break;
            case DataType::Int16: out[i] = get<int16_t>(buf, off, p.swap); break;
            case DataType::Float32: out[i] = get<float>(buf, off, p.swap); break;
        }
    }
    const double slope = p.header.scl_slope, inter = p.header.scl_inter;
    if (slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0))
        for (double& v : out) v = v * slope + inter;
    return out;
}

std::vector<char> make_header(const Geometry& g, DataType dt) {
    std::vector<char> h(kVoxOffset, 0);
    put<int32_t>(h, 0, kHeaderSize);
    put<int16_t>(h, kOffDim, 3);
    for (int a = 0; a < 3; ++a) put<int16_t>(h, kOffDim + 2 * (a + 1), static_cast<int16_t>(g.dims[a]));
    for (int a = 4; a < 8; ++a) put<int16_t>(h, kOffDim + 2 * a, 1);
    put<int16_t>(h, kOffDatatype, static_cast<int16_t>(dt));
    put<int16_t>(h, kOffBitpix, static_cast<int16_t>(8 * bytes_per_voxel(dt)));
    const Orientation& o = g.orientation;
    put<float>(h, kOffPixdim, o.qfac);
    for (int a = 0; a < 3; ++a) put<float>(h, kOffPixdim + 4 * (a + 1), static_cast<float>(g.spacing[a]));
    put<float>(h, kOffVoxOffset, static_cast<float>(kVoxOffset));
    put<float>(h, kOffSclSlope, 1.0f);
    put<float>(h, kOffSclInter, 0.0f);
    h[kOffXyztUnits] = static_cast<char>(o.xyzt_units);
    put<int16_t>(h, kOffQformCode, o.qform_code);
    put<int16_t>(h, kOffSformCode, o.sform_code);
    for (int i = 0; i < 3; ++i) {
        put<float>(h, kOffQuatern + 4 * i, o.quatern[i]);
        // The origin is the authoritative translation once a volume has been cropped.
        put<float>(h, kOffQoffset + 4 * i, static_cast<float>(g.origin[i]));
        for (int j = 0; j < 4; ++j) put<float>(h, kOffSrow + 16 * i + 4 * j, o.srow[i][j]);
    }
    std::memcpy(h.data() + kOffMagic, "n+1\0", 4);
    return h;
}

void write_all(const std::filesystem::path& path, const std::vector<char>& bytes) {
    if (is_gzip_path(path)) {
        gzFile f = gzopen(path.string().c_str(), "wb6");
        if (!f) throw IoError("cannot write " + path.string());
        const char* p = bytes.data();
        std::size_t left = bytes.size();
        while (left > 0) {
            const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 30));
            if (gzwrite(f, p, chunk) != static_cast<int>(chunk)) {
                gzclose(f);
                throw IoError("write failed for " + path.string());
            }
            p += chunk;
            left -= chunk;
        }
        if (gzclose(f) != Z_OK) throw IoError("write failed for " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

template <typename T, typename G>
void save_as(const G& grid, DataType dt, const std::filesystem::path& path) {
    std::vector<char> bytes = make_header(grid.geometry(), dt);
    const std::size_t head = bytes.size();
    bytes.resize(head + grid.size() * sizeof(T));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const T v = static_cast<T>(grid[i]);
        std::memcpy(bytes.data() + head + i * sizeof(T), &v, sizeof(T));
    }
    write_all(path, bytes);
}

}  // namespace

bool is_gzip_path(const std::filesystem::path& path) { return path.extension() == ".gz"; }

Header read_header(const std::filesystem::path& path) { return parse_header(read_all(path), path).header; }

std::variant<ScalarVolume, LabelVolume> load(const std::filesystem::path& path) {
    const auto buf = read_all(path);
    const Parsed p = parse_header(buf, path);
    if (p.header.datatype == DataType::UInt8 && (p.header.scl_slope == 0.0f || p.header.scl_slope == 1.0f) &&
        p.header.scl_inter == 0.0f) {
        const auto raw = decode(buf, p, path);
        std::vector<uint8_t> data(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) data[i] = static_cast<uint8_t>(raw[i]);
        return LabelVolume(p.header.geometry, std::move(data));
    }
    return load_scalar(path);
}

ScalarVolume load_scalar(const std::filesystem::path& path) {
    const auto buf = read_all(path);
    const Parsed p = parse_header(buf, path);
    const auto raw = decode(buf, p, path);
    std::vector<float> data(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        data[i] = static_cast<float>(raw[i]);
        if (!std::isfinite(data[i])) throw FormatError("non-finite voxel value in " + path.string());
    }
    return ScalarVolume(p.header.geometry, std::move(data));
}

LabelVolume load_labels(const std::filesystem::path& path) {
    const auto buf = read_all(path);
    const Parsed p = parse_header(buf, path);
    const auto raw = decode(buf, p, path);
    std::vector<uint8_t> data(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double r = std::round(raw[i]);
        if (!(r >= 0.0 && r <= 255.0)) throw FormatError("label value out of range in " + path.string());
        data[i] = static_cast<uint8_t>(r);
    }
    return LabelVolume(p.header.geometry, std::move(data));
}

void save(const ScalarVolume& volume, const std::filesystem::path& path) {
    require_finite(volume);
    save_as<float>(volume, DataType::Float32, path);
}

void save(const LabelVolume& labels, const std::filesystem::path& path) {
    save_as<uint8_t>(labels, DataType::UInt8, path);
}

void save(const VesselMask& mask, const std::filesystem::path& path) {
    save_as<uint8_t>(mask, DataType::UInt8, path);
}

}  // namespace tumorsynth::nifti
