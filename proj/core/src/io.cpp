#include "vesselq/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

namespace vesselq {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kHeaderSize = 348;
constexpr std::int32_t kDtUint8 = 2;
constexpr std::int32_t kDtInt16 = 4;
constexpr std::int32_t kDtFloat32 = 16;
constexpr std::int32_t kDtFloat64 = 64;

constexpr ByteOrder native_order() {
    return std::endian::native == std::endian::little ? ByteOrder::little : ByteOrder::big;
}

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

template <class T>
T load_scalar(const char* p, ByteOrder order) {
    std::array<char, sizeof(T)> buf;
    std::memcpy(buf.data(), p, sizeof(T));
    if (order != native_order()) std::reverse(buf.begin(), buf.end());
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

template <class T>
void store_scalar(char* p, T v, ByteOrder order) {
    std::array<char, sizeof(T)> buf;
    std::memcpy(buf.data(), &v, sizeof(T));
    if (order != native_order()) std::reverse(buf.begin(), buf.end());
    std::memcpy(p, buf.data(), sizeof(T));
}

template <class T>
std::vector<T> decode_payload(const char* p, std::size_t n, ByteOrder order) {
    std::vector<T> out(n);
    if (order == native_order()) {
        std::memcpy(out.data(), p, n * sizeof(T));
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = load_scalar<T>(p + i * sizeof(T), order);
    }
    return out;
}

VoxelVolume::Storage decode(DType dtype, const char* p, std::size_t n, ByteOrder order) {
    switch (dtype) {
        case DType::u8: return decode_payload<std::uint8_t>(p, n, order);
        case DType::i16: return decode_payload<std::int16_t>(p, n, order);
        case DType::f32: return decode_payload<float>(p, n, order);
        case DType::f64: return decode_payload<double>(p, n, order);
    }
    return {};
}

std::vector<char> encode(const VoxelVolume& vol, ByteOrder order) {
    std::vector<char> out(vol.size() * dtype_size(vol.dtype()));
    std::visit(
        [&](const auto& v) {
            using T = typename std::decay_t<decltype(v)>::value_type;
            for (std::size_t i = 0; i < v.size(); ++i) {
                store_scalar<T>(out.data() + i * sizeof(T), v[i], order);
            }
        },
        vol.storage());
    return out;
}

DType dtype_from_nifti(std::int16_t code) {
    switch (code) {
        case kDtUint8: return DType::u8;
        case kDtInt16: return DType::i16;
        case kDtFloat32: return DType::f32;
        case kDtFloat64: return DType::f64;
        default: break;
    }
    fail(ErrorKind::unsupported_dtype,
         "unsupported NIfTI datatype " + std::to_string(code) + " (supported: 2, 4, 16, 64)");
}

std::int16_t nifti_code(DType t) {
    switch (t) {
        case DType::u8: return kDtUint8;
        case DType::i16: return kDtInt16;
        case DType::f32: return kDtFloat32;
        case DType::f64: return kDtFloat64;
    }
    return 0;
}

// pixdim is float32 on disk. Widening through the shortest decimal that
// round-trips the float gives back 0.4 rather than 0.4000000059604645.
double widen_spacing(float f) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(f));
    double d = std::fabs(static_cast<double>(f));
    std::from_chars(buf.data(), res.ptr, d);
    return d;
}

[[noreturn]] void format_error(const std::string& field, const std::string& detail) {
    fail(ErrorKind::format, "NIfTI header field '" + field + "': " + detail);
}

NiftiHeader parse_header(const std::vector<char>& bytes, const fs::path& path) {
    if (bytes.size() < kHeaderSize) {
        fail(ErrorKind::truncation, "'" + path.string() + "' is " + std::to_string(bytes.size()) +
                                        " bytes, shorter than the 348-byte NIfTI-1 header");
    }
    const char* h = bytes.data();
    NiftiHeader hdr;
    if (load_scalar<std::int32_t>(h, ByteOrder::little) == 348) {
        hdr.byte_order = ByteOrder::little;
    } else if (load_scalar<std::int32_t>(h, ByteOrder::big) == 348) {
        hdr.byte_order = ByteOrder::big;
    } else {
        format_error("sizeof_hdr", "expected 348 in either byte order");
    }
    const auto order = hdr.byte_order;

    const std::string magic(h + 344, 4);
    if (magic == std::string("n+1\0", 4)) {
        hdr.single_file = true;
    } else if (magic == std::string("ni1\0", 4)) {
        hdr.single_file = false;
    } else {
        format_error("magic", "expected \"n+1\" or \"ni1\"");
    }

    for (int i = 0; i < 8; ++i) {
        hdr.dim[i] = load_scalar<std::int16_t>(h + 40 + 2 * i, order);
        hdr.pixdim[i] = load_scalar<float>(h + 76 + 4 * i, order);
    }
    hdr.datatype = load_scalar<std::int16_t>(h + 70, order);
    hdr.bitpix = load_scalar<std::int16_t>(h + 72, order);
    hdr.vox_offset = load_scalar<float>(h + 108, order);
    hdr.scl_slope = load_scalar<float>(h + 112, order);
    hdr.scl_inter = load_scalar<float>(h + 116, order);
    hdr.qform_code = load_scalar<std::int16_t>(h + 252, order);
    hdr.sform_code = load_scalar<std::int16_t>(h + 254, order);
    for (int i = 0; i < 3; ++i) {
        hdr.quatern[i] = load_scalar<float>(h + 256 + 4 * i, order);
        hdr.qoffset[i] = load_scalar<float>(h + 268 + 4 * i, order);
        for (int j = 0; j < 4; ++j) {
            hdr.srow[i][j] = load_scalar<float>(h + 280 + 16 * i + 4 * j, order);
        }
    }

    const auto ndim = hdr.dim[0];
    if (!(ndim == 3 || (ndim == 4 && hdr.dim[4] == 1))) {
        format_error("dim[0]", "expected 3 (or 4 with dim[4] = 1), got " + std::to_string(ndim));
    }
    for (int i = 1; i <= 3; ++i) {
        if (hdr.dim[i] <= 0) {
            format_error("dim[" + std::to_string(i) + "]",
                         "must be positive, got " + std::to_string(hdr.dim[i]));
        }
        const float s = std::fabs(hdr.pixdim[i]);
        if (!std::isfinite(s) || s <= 0.0f) {
            format_error("pixdim[" + std::to_string(i) + "]", "must be finite and non-zero");
        }
    }
    const DType dtype = dtype_from_nifti(hdr.datatype);
    if (hdr.bitpix != static_cast<std::int16_t>(8 * dtype_size(dtype))) {
        format_error("bitpix", std::to_string(hdr.bitpix) + " does not match datatype " +
                                   std::to_string(hdr.datatype));
    }
    if (!std::isfinite(hdr.vox_offset) || hdr.vox_offset < 0.0f ||
        (hdr.single_file && hdr.vox_offset < 348.0f)) {
        format_error("vox_offset", "invalid payload offset");
    }
    return hdr;
}

}  // namespace

NiftiHeader read_nifti_header(const fs::path& path) {
    return parse_header(read_file(path), path);
}

VoxelVolume load_nifti(const fs::path& path) {
    const auto bytes = read_file(path);
    const auto hdr = parse_header(bytes, path);

    std::vector<char> image_bytes;
    const std::vector<char>* payload = &bytes;
    if (!hdr.single_file) {
        auto img = path;
        img.replace_extension(".img");
        image_bytes = read_file(img);
        payload = &image_bytes;
    }

    const Dims dims{hdr.dim[1], hdr.dim[2], hdr.dim[3]};
    const Spacing spacing{widen_spacing(hdr.pixdim[1]), widen_spacing(hdr.pixdim[2]),
                          widen_spacing(hdr.pixdim[3])};
    const DType dtype = dtype_from_nifti(hdr.datatype);
    const auto offset = static_cast<std::size_t>(hdr.vox_offset);
    const std::size_t expected = dims.count() * dtype_size(dtype);
    const std::size_t available = payload->size() > offset ? payload->size() - offset : 0;
    if (available < expected) {
        fail(ErrorKind::truncation, "NIfTI payload truncated: expected " +
                                        std::to_string(expected) + " bytes, found " +
                                        std::to_string(available));
    }

    VoxelVolume vol(dims, spacing,
                    decode(dtype, payload->data() + offset, dims.count(), hdr.byte_order));

    const bool identity = hdr.scl_slope == 1.0f && hdr.scl_inter == 0.0f;
    if (hdr.scl_slope != 0.0f && std::isfinite(hdr.scl_slope) && !identity) {
        std::vector<double> scaled(vol.size());
        const double slope = hdr.scl_slope;
        const double inter = hdr.scl_inter;
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = slope * vol.value(i) + inter;
        return VoxelVolume(dims, spacing, std::move(scaled));
    }
    return vol;
}

void save_nifti(const VoxelVolume& vol, const fs::path& path, ByteOrder order) {
    validate_geometry(vol.dims(), vol.spacing());
    const Dims& d = vol.dims();
    constexpr std::int64_t kMaxDim = 32767;
    if (d.nx > kMaxDim || d.ny > kMaxDim || d.nz > kMaxDim) {
        fail(ErrorKind::validation, "dims exceed the NIfTI-1 16-bit limit");
    }

    std::vector<char> out(352, 0);
    char* h = out.data();
    store_scalar<std::int32_t>(h, 348, order);
    store_scalar<std::int16_t>(h + 40, 3, order);
    store_scalar<std::int16_t>(h + 42, static_cast<std::int16_t>(d.nx), order);
    store_scalar<std::int16_t>(h + 44, static_cast<std::int16_t>(d.ny), order);
    store_scalar<std::int16_t>(h + 46, static_cast<std::int16_t>(d.nz), order);
    for (int i = 4; i < 8; ++i) store_scalar<std::int16_t>(h + 40 + 2 * i, 1, order);
    store_scalar<std::int16_t>(h + 70, nifti_code(vol.dtype()), order);
    store_scalar<std::int16_t>(h + 72, static_cast<std::int16_t>(8 * dtype_size(vol.dtype())),
                               order);
    store_scalar<float>(h + 76, 1.0f, order);  // qfac
    store_scalar<float>(h + 80, static_cast<float>(vol.spacing().dx), order);
    store_scalar<float>(h + 84, static_cast<float>(vol.spacing().dy), order);
    store_scalar<float>(h + 88, static_cast<float>(vol.spacing().dz), order);
    store_scalar<float>(h + 108, 352.0f, order);
    store_scalar<float>(h + 112, 1.0f, order);  // scl_slope
    store_scalar<float>(h + 116, 0.0f, order);  // scl_inter
    h[123] = 2;                                 // xyzt_units: NIFTI_UNITS_MM
    std::memcpy(h + 344, "n+1\0", 4);

    const auto payload = encode(vol, order);
    out.insert(out.end(), payload.begin(), payload.end());
    write_file(path, out);
}

namespace {

const char* order_name(ByteOrder o) { return o == ByteOrder::little ? "little" : "big"; }

template <class T>
T sidecar_field(const nlohmann::json& doc, const char* key, const fs::path& path) {
    if (!doc.contains(key)) {
        fail(ErrorKind::validation, "raw sidecar '" + path.string() + "' is missing '" + key + "'");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::format, "raw sidecar field '" + std::string(key) + "' has the wrong type");
    }
}

}  // namespace

VoxelVolume load_raw(const fs::path& sidecar) {
    const auto text = read_file(sidecar);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::format, "raw sidecar '" + sidecar.string() + "' is not valid JSON: " +
                                    e.what());
    }
    const auto dims_v = sidecar_field<std::vector<std::int64_t>>(doc, "dims", sidecar);
    const auto spacing_v = sidecar_field<std::vector<double>>(doc, "spacing_mm", sidecar);
    const auto dtype_s = sidecar_field<std::string>(doc, "dtype", sidecar);
    const auto order_s = sidecar_field<std::string>(doc, "byte_order", sidecar);
    const auto data_file = sidecar_field<std::string>(doc, "data_file", sidecar);
    if (dims_v.size() != 3) fail(ErrorKind::validation, "raw sidecar 'dims' needs 3 entries");
    if (spacing_v.size() != 3) {
        fail(ErrorKind::validation, "raw sidecar 'spacing_mm' needs 3 entries");
    }
    ByteOrder order;
    if (order_s == "little") {
        order = ByteOrder::little;
    } else if (order_s == "big") {
        order = ByteOrder::big;
    } else {
        fail(ErrorKind::format, "raw sidecar 'byte_order' must be \"little\" or \"big\"");
    }
    const DType dtype = dtype_from_string(dtype_s);
    const Dims dims{dims_v[0], dims_v[1], dims_v[2]};
    const Spacing spacing{spacing_v[0], spacing_v[1], spacing_v[2]};
    validate_geometry(dims, spacing);

    const auto payload = read_file(sidecar.parent_path() / data_file);
    const std::size_t expected = dims.count() * dtype_size(dtype);
    if (payload.size() != expected) {
        fail(ErrorKind::truncation, "raw payload size mismatch: expected " +
                                        std::to_string(expected) + " bytes, found " +
                                        std::to_string(payload.size()));
    }
    return VoxelVolume(dims, spacing, decode(dtype, payload.data(), dims.count(), order));
}

void save_raw(const VoxelVolume& vol, const fs::path& sidecar, ByteOrder order) {
    validate_geometry(vol.dims(), vol.spacing());
    auto bin = sidecar;
    bin.replace_extension(".bin");
    const nlohmann::json doc = {
        {"dims", {vol.dims().nx, vol.dims().ny, vol.dims().nz}},
        {"spacing_mm", {vol.spacing().dx, vol.spacing().dy, vol.spacing().dz}},
        {"dtype", std::string(to_string(vol.dtype()))},
        {"byte_order", order_name(order)},
        {"data_file", bin.filename().string()},
    };
    write_file(bin, encode(vol, order));
    const auto text = doc.dump(2) + "\n";
    write_file(sidecar, std::vector<char>(text.begin(), text.end()));
}

VoxelVolume load_volume(const fs::path& path) {
    if (path.extension() == ".json") return load_raw(path);
    return load_nifti(path);
}

void save_volume(const VoxelVolume& vol, const fs::path& path) {
    if (path.extension() == ".json") {
        save_raw(vol, path);
    } else {
        save_nifti(vol, path);
    }
}

}  // namespace vesselq
