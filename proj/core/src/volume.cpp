#include "vesselq/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vesselq {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::io: return "io";
        case ErrorKind::format: return "format";
        case ErrorKind::unsupported_dtype: return "unsupported-dtype";
        case ErrorKind::truncation: return "truncation";
        case ErrorKind::validation: return "validation";
        case ErrorKind::dimension_mismatch: return "dimension-mismatch";
        case ErrorKind::degenerate: return "degenerate";
        case ErrorKind::undefined: return "undefined";
    }
    return "unknown";
}

double Spacing::max() const noexcept { return std::max({dx, dy, dz}); }

void validate_geometry(const Dims& dims, const Spacing& spacing) {
    if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
        fail(ErrorKind::validation, "dims must be positive, got (" + std::to_string(dims.nx) +
                                        ", " + std::to_string(dims.ny) + ", " +
                                        std::to_string(dims.nz) + ")");
    }
    for (double s : {spacing.dx, spacing.dy, spacing.dz}) {
        if (!std::isfinite(s) || s <= 0.0) {
            fail(ErrorKind::validation, "spacing components must be finite and > 0");
        }
    }
}

std::size_t count_foreground(const Mask& mask) noexcept {
    return static_cast<std::size_t>(
        std::count_if(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; }));
}

bool is_binary(const Mask& mask) noexcept {
    return std::all_of(mask.values().begin(), mask.values().end(),
                       [](auto v) { return v <= 1; });
}

bool is_probability(const RealVolume& vol) noexcept {
    return std::all_of(vol.values().begin(), vol.values().end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::string_view to_string(DType t) noexcept {
    switch (t) {
        case DType::u8: return "u8";
        case DType::i16: return "i16";
        case DType::f32: return "f32";
        case DType::f64: return "f64";
    }
    return "?";
}

DType dtype_from_string(std::string_view name) {
    if (name == "u8") return DType::u8;
    if (name == "i16") return DType::i16;
    if (name == "f32") return DType::f32;
    if (name == "f64") return DType::f64;
    fail(ErrorKind::unsupported_dtype, "unsupported dtype '" + std::string(name) + "'");
}

std::size_t dtype_size(DType t) noexcept {
    switch (t) {
        case DType::u8: return 1;
        case DType::i16: return 2;
        case DType::f32: return 4;
        case DType::f64: return 8;
    }
    return 0;
}

VoxelVolume::VoxelVolume(Dims dims, Spacing spacing, Storage data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    validate_geometry(dims_, spacing_);
    const auto n = std::visit([](const auto& v) { return v.size(); }, data_);
    if (n != dims_.count()) {
        fail(ErrorKind::validation, "volume data length " + std::to_string(n) +
                                        " does not match dims product " +
                                        std::to_string(dims_.count()));
    }
}

double VoxelVolume::value(std::size_t i) const noexcept {
    return std::visit([i](const auto& v) { return static_cast<double>(v[i]); }, data_);
}

VoxelVolume to_volume(const Mask& mask) {
    return VoxelVolume(mask.dims(), mask.spacing(), mask.storage());
}

VoxelVolume to_volume(const RealVolume& vol, DType dtype) {
    auto convert = [&]<class T>(std::vector<T> out) {
        std::transform(vol.values().begin(), vol.values().end(), out.begin(),
                       [](double v) { return static_cast<T>(v); });
        return VoxelVolume(vol.dims(), vol.spacing(), std::move(out));
    };
    const auto n = vol.size();
    switch (dtype) {
        case DType::u8: return convert(std::vector<std::uint8_t>(n));
        case DType::i16: return convert(std::vector<std::int16_t>(n));
        case DType::f32: return convert(std::vector<float>(n));
        case DType::f64: break;
    }
    return VoxelVolume(vol.dims(), vol.spacing(), vol.storage());
}

RealVolume to_real(const VoxelVolume& vol) {
    RealVolume out(vol.dims(), vol.spacing());
    std::visit(
        [&](const auto& v) {
            std::transform(v.begin(), v.end(), out.values().begin(),
                           [](auto x) { return static_cast<double>(x); });
        },
        vol.storage());
    return out;
}

Mask threshold(const VoxelVolume& vol, double t) {
    Mask out(vol.dims(), vol.spacing());
    std::visit(
        [&](const auto& v) {
            std::transform(v.begin(), v.end(), out.values().begin(), [t](auto x) {
                return static_cast<std::uint8_t>(static_cast<double>(x) > t ? 1 : 0);
            });
        },
        vol.storage());
    return out;
}

Mask threshold(const RealVolume& vol, double t) {
    Mask out(vol.dims(), vol.spacing());
    std::transform(vol.values().begin(), vol.values().end(), out.values().begin(),
                   [t](double x) { return static_cast<std::uint8_t>(x > t ? 1 : 0); });
    return out;
}

}  // namespace vesselq
