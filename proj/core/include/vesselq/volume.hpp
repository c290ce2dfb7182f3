#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "vesselq/error.hpp"

namespace vesselq {

/// Integer voxel coordinate. Ordering is lexicographic on (x, y, z); every
/// tie-break in the library that says "lexicographically smaller" uses it.
struct Voxel {
    int x = 0;
    int y = 0;
    int z = 0;

    auto operator<=>(const Voxel&) const = default;
};

struct Dims {
    std::int64_t nx = 0;
    std::int64_t ny = 0;
    std::int64_t nz = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(nx * ny * nz);
    }
    bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
    }
    bool contains(const Voxel& v) const noexcept { return contains(v.x, v.y, v.z); }

    /// Linear offset in x-fastest order.
    std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
        return static_cast<std::size_t>(x + nx * (y + ny * z));
    }
    std::size_t index(const Voxel& v) const noexcept { return index(v.x, v.y, v.z); }

    Voxel voxel(std::size_t i) const noexcept {
        const auto ii = static_cast<std::int64_t>(i);
        return {static_cast<int>(ii % nx), static_cast<int>((ii / nx) % ny),
                static_cast<int>(ii / (nx * ny))};
    }

    bool operator==(const Dims&) const = default;
};

/// Millimetres per voxel along x, y, z.
struct Spacing {
    double dx = 1.0;
    double dy = 1.0;
    double dz = 1.0;

    double operator[](int axis) const noexcept { return axis == 0 ? dx : axis == 1 ? dy : dz; }
    double max() const noexcept;
    bool operator==(const Spacing&) const = default;
};

/// Throws validation errors for zero/negative dims or non-finite, non-positive spacing.
void validate_geometry(const Dims& dims, const Spacing& spacing);

/// Dense 3D grid with physical spacing. x varies fastest.
template <class T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(Dims dims, Spacing spacing, T fill = T{})
        : dims_(dims), spacing_(spacing), data_(dims.count(), fill) {}
    Grid(Dims dims, Spacing spacing, std::vector<T> data)
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        if (data_.size() != dims_.count()) {
            fail(ErrorKind::validation, "grid data length does not match dims");
        }
    }

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    void set_spacing(Spacing s) noexcept { spacing_ = s; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }
    T& at(int x, int y, int z) noexcept { return data_[dims_.index(x, y, z)]; }
    const T& at(int x, int y, int z) const noexcept { return data_[dims_.index(x, y, z)]; }
    T& at(const Voxel& v) noexcept { return data_[dims_.index(v)]; }
    const T& at(const Voxel& v) const noexcept { return data_[dims_.index(v)]; }

    /// Out-of-bounds reads return `outside`.
    T get(std::int64_t x, std::int64_t y, std::int64_t z, T outside = T{}) const noexcept {
        return dims_.contains(x, y, z) ? data_[dims_.index(x, y, z)] : outside;
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    bool same_grid(const Grid& other) const noexcept {
        return dims_ == other.dims_;
    }

    bool operator==(const Grid&) const = default;

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<T> data_;
};

/// Binary mask: every voxel is 0 or 1.
using Mask = Grid<std::uint8_t>;
/// Real-valued field; probability volumes are RealVolumes with values in [0, 1].
using RealVolume = Grid<double>;
using LabelVolume = Grid<std::int32_t>;

std::size_t count_foreground(const Mask& mask) noexcept;
bool is_binary(const Mask& mask) noexcept;
bool is_probability(const RealVolume& vol) noexcept;

enum class DType { u8, i16, f32, f64 };

std::string_view to_string(DType t) noexcept;
DType dtype_from_string(std::string_view name);
std::size_t dtype_size(DType t) noexcept;

/// Typed voxel storage as read from or written to disk. Keeps the on-disk
/// element type so save/load round trips are bit-exact.
class VoxelVolume {
public:
    using Storage = std::variant<std::vector<std::uint8_t>, std::vector<std::int16_t>,
                                 std::vector<float>, std::vector<double>>;

    VoxelVolume() = default;
    VoxelVolume(Dims dims, Spacing spacing, Storage data);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    DType dtype() const noexcept { return static_cast<DType>(data_.index()); }
    std::size_t size() const noexcept { return dims_.count(); }
    const Storage& storage() const noexcept { return data_; }

    double value(std::size_t i) const noexcept;

    bool operator==(const VoxelVolume&) const = default;

private:
    Dims dims_{};
    Spacing spacing_{};
    Storage data_;
};

VoxelVolume to_volume(const Mask& mask);
VoxelVolume to_volume(const RealVolume& vol, DType dtype = DType::f64);
RealVolume to_real(const VoxelVolume& vol);

/// voxel = 1 iff value > t. NaN compares false and maps to 0.
Mask threshold(const VoxelVolume& vol, double t);
Mask threshold(const RealVolume& vol, double t);

}  // namespace vesselq
