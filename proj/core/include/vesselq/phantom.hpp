#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vesselq/cross_section.hpp"
#include "vesselq/stenosis.hpp"
#include "vesselq/volume.hpp"

namespace vesselq {

/// One piece of a tube axis in millimetres. Lines run from `from` to `to`;
/// arcs are center + radius * (cos(a) u + sin(a) v) for a in [from_deg, to_deg].
struct AxisPiece {
    enum class Kind { line, arc };
    Kind kind = Kind::line;
    Vec3 from{};
    Vec3 to{};
    Vec3 center{};
    Vec3 u{1, 0, 0};
    Vec3 v{0, 1, 0};
    double radius = 0.0;
    double from_deg = 0.0;
    double to_deg = 90.0;

    static AxisPiece line(Vec3 a, Vec3 b);
    static AxisPiece arc(Vec3 center, Vec3 u, Vec3 v, double radius, double from_deg, double to_deg);

    double length() const noexcept;
    Vec3 point(double s) const noexcept;    ///< point at arc length s from the start
    Vec3 tangent(double s) const noexcept;  ///< unit tangent at arc length s
};

/// Tube radius in mm as a function of arc length s (mm) along the whole axis.
struct RadiusProfile {
    enum class Kind { constant, taper, notch };
    Kind kind = Kind::constant;
    double r0 = 2.0;      ///< constant radius, taper start, notch reference
    double r1 = 2.0;      ///< taper end radius
    double depth = 0.0;   ///< notch radius reduction fraction in (0, 1)
    double center = 0.0;  ///< notch centre, mm of arc length
    double sigma = 1.0;   ///< notch Gaussian width, mm

    double at(double s, double total_length) const noexcept;
    double min_radius(double total_length) const noexcept;
    double max_radius(double total_length) const noexcept;
};

/// Area degree of a radius notch of fractional depth delta: 1 - (1 - delta)^2.
double notch_degree(double delta) noexcept;

struct Tube {
    std::vector<AxisPiece> axis;
    RadiusProfile radius;

    double length() const noexcept;
    Vec3 point(double s) const noexcept;
    Vec3 tangent(double s) const noexcept;
};

struct PhantomSpec {
    Dims dims{64, 64, 64};
    Spacing spacing{0.4, 0.4, 0.4};
    std::vector<Tube> tubes;
};

/// Trunk from trunk_start to the branch point plus two children leaving it.
PhantomSpec bifurcation(Dims dims, Spacing spacing, Vec3 branch_point_mm, Vec3 trunk_start_mm,
                        Vec3 child_a_end_mm, Vec3 child_b_end_mm, double radius_mm);

/// Margin of 2 voxels around every tube and r >= 1.5 * max spacing everywhere.
void validate(const PhantomSpec& spec);

struct TubeTruth {
    std::vector<Vec3> centerline_mm;  ///< samples at half the smallest spacing
    std::vector<double> arc_length_mm;
    std::vector<double> areas_mm2;    ///< pi r(s)^2
    std::vector<StenosisFinding> expected_findings;
};

struct Phantom {
    Mask mask;
    std::vector<TubeTruth> truth;
};

/// Voxel is foreground iff its centre lies within r(s*) of some tube axis,
/// s* the arc length of the nearest axis point.
Phantom rasterize(const PhantomSpec& spec);

/// Voxel centres within the analytic disk at arc length s of tube `tube`:
/// centres inside a slab of half-thickness auto_thrd around the normal plane
/// whose distance to the axis line is at most r(s).
std::size_t voxel_count_oracle(const PhantomSpec& spec, std::size_t tube, double s);

PhantomSpec phantom_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PhantomSpec& spec);

}  // namespace vesselq
