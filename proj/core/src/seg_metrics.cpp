#include "vesselq/seg_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vesselq/morphology.hpp"

namespace vesselq {
namespace {

void require_same_grid(const Mask& a, const Mask& b, const char* what) {
    if (a.dims() != b.dims()) fail(ErrorKind::dimension_mismatch, std::string(what) + ": dims differ");
}

template <class V>
void require_same_dims(const V& a, const Mask& b, const char* what) {
    if (a.dims() != b.dims()) fail(ErrorKind::dimension_mismatch, std::string(what) + ": dims differ");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on one line with
// sample step `step` mm. f and out have n entries spaced `stride` apart.
void distance_1d(double* f, std::size_t n, std::size_t stride, double step, std::vector<double>& buf,
                 std::vector<std::size_t>& v, std::vector<double>& z) {
    buf.resize(n);
    v.resize(n);
    z.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) buf[i] = f[i * stride];
    auto pos = [step](std::size_t i) { return static_cast<double>(i) * step; };
    long k = -1;
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::isfinite(buf[q])) continue;
        double s = -kInf;
        while (k >= 0) {
            const std::size_t r = v[k];
            s = ((buf[q] + pos(q) * pos(q)) - (buf[r] + pos(r) * pos(r))) / (2.0 * (pos(q) - pos(r)));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        if (k < 0) s = -kInf;
        ++k;
        v[k] = q;
        z[k] = s;
    }
    if (k < 0) return;
    z[k + 1] = kInf;
    long j = 0;
    for (std::size_t p = 0; p < n; ++p) {
        const double x = pos(p);
        while (j < k && z[j + 1] < x) ++j;
        const double d = x - pos(v[j]);
        f[p * stride] = d * d + buf[v[j]];
    }
}

}  // namespace

double compensated_sum(std::span<const double> values) noexcept {
    double sum = 0.0, c = 0.0;
    for (double x : values) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

OverlapMetrics overlap_metrics(const Mask& pred, const Mask& gt) {
    require_same_grid(pred, gt, "overlap metrics");
    std::size_t p = 0, g = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool a = pred[i] != 0, b = gt[i] != 0;
        p += a;
        g += b;
        both += a && b;
    }
    if (p == 0 && g == 0) return {1.0, 1.0, 1.0};
    OverlapMetrics m;
    m.dice = 2.0 * double(both) / double(p + g);
    m.precision = p == 0 ? 0.0 : double(both) / double(p);
    m.recall = g == 0 ? 0.0 : double(both) / double(g);
    return m;
}

Mask boundary(const Mask& mask) {
    Mask out(mask.dims(), mask.spacing());
    const Dims& d = mask.dims();
    const auto& faces = neighbor_offsets(Connectivity::face);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const Voxel v = d.voxel(i);
        for (const auto& o : faces) {
            if (!mask.get(v.x + o.x, v.y + o.y, v.z + o.z)) {
                out[i] = 1;
                break;
            }
        }
    }
    return out;
}

RealVolume squared_distance_transform(const Mask& sites) {
    const Dims& d = sites.dims();
    const Spacing& sp = sites.spacing();
    RealVolume dt(d, sp, kInf);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (sites[i]) dt[i] = 0.0;
    }
    std::vector<double> buf, z;
    std::vector<std::size_t> v;
    double* data = dt.storage().data();
    const auto nx = static_cast<std::size_t>(d.nx), ny = static_cast<std::size_t>(d.ny),
               nz = static_cast<std::size_t>(d.nz);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j) distance_1d(data + d.index(0, j, k), nx, 1, sp.dx, buf, v, z);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t i = 0; i < nx; ++i) distance_1d(data + d.index(i, 0, k), ny, nx, sp.dy, buf, v, z);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) distance_1d(data + d.index(i, j, 0), nz, nx * ny, sp.dz, buf, v, z);
    return dt;
}

std::vector<double> directed_boundary_distances(const Mask& from, const Mask& to) {
    require_same_grid(from, to, "boundary distances");
    const Mask bf = boundary(from);
    const RealVolume dt = squared_distance_transform(boundary(to));
    std::vector<double> out;
    for (std::size_t i = 0; i < bf.size(); ++i) {
        if (bf[i]) out.push_back(std::sqrt(dt[i]));
    }
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) fail(ErrorKind::undefined, "percentile of an empty set");
    if (!(q >= 0.0 && q <= 100.0)) fail(ErrorKind::validation, "percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

double hausdorff(const Mask& pred, const Mask& gt, double pct) {
    require_same_grid(pred, gt, "hausdorff");
    if (pred.spacing() != gt.spacing()) fail(ErrorKind::dimension_mismatch, "hausdorff: spacing differs");
    if (count_foreground(pred) == 0 || count_foreground(gt) == 0) {
        fail(ErrorKind::undefined, "Hausdorff distance is undefined for an empty mask");
    }
    const auto ab = directed_boundary_distances(pred, gt);
    const auto ba = directed_boundary_distances(gt, pred);
    if (pct >= 100.0) {
        return std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
    }
    return std::max(percentile(ab, pct), percentile(ba, pct));
}

SegMetricsReport segmentation_metrics(const Mask& pred, const Mask& gt) {
    const auto o = overlap_metrics(pred, gt);
    SegMetricsReport r;
    r.dice = o.dice;
    r.precision = o.precision;
    r.recall = o.recall;
    r.hd_mm = hausdorff(pred, gt, 100.0);
    r.hd95_mm = hausdorff(pred, gt, 95.0);
    return r;
}

double bce_loss(const RealVolume& pred, const Mask& gt, double eps) {
    require_same_dims(pred, gt, "bce loss");
    if (!(eps > 0.0 && eps < 0.5)) fail(ErrorKind::validation, "bce eps must lie in (0, 0.5)");
    if (pred.size() == 0) fail(ErrorKind::validation, "bce loss of an empty volume");
    std::vector<double> terms(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], eps, 1.0 - eps);
        terms[i] = gt[i] ? -std::log(p) : -std::log1p(-p);
    }
    return compensated_sum(terms) / static_cast<double>(terms.size());
}

double dice_loss(const RealVolume& pred, const Mask& gt, double eps) {
    require_same_dims(pred, gt, "dice loss");
    std::vector<double> inter(pred.size()), sp(pred.size()), sy(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double y = gt[i] ? 1.0 : 0.0;
        inter[i] = y * pred[i];
        sp[i] = pred[i];
        sy[i] = y;
    }
    const double denom = compensated_sum(sy) + compensated_sum(sp) + eps;
    if (denom == 0.0) fail(ErrorKind::undefined, "dice loss with empty prediction and ground truth and eps = 0");
    return 1.0 - (2.0 * compensated_sum(inter) + eps) / denom;
}

double combined_loss(const RealVolume& pred, const Mask& gt, double lambda, double bce_eps, double dice_eps) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::validation, "lambda must lie in [0, 1]");
    return lambda * dice_loss(pred, gt, dice_eps) + (1.0 - lambda) * bce_loss(pred, gt, bce_eps);
}

EnsembleSummary ensemble_aggregate(std::span<const RealVolume> preds) {
    if (preds.empty()) fail(ErrorKind::validation, "ensemble needs at least one prediction");
    const Dims& d = preds.front().dims();
    for (const auto& p : preds) {
        if (p.dims() != d) fail(ErrorKind::dimension_mismatch, "ensemble members differ in dims");
    }
    EnsembleSummary s;
    s.g = preds.size();
    s.mean = RealVolume(d, preds.front().spacing(), 0.0);
    s.variance = RealVolume(d, preds.front().spacing(), 0.0);
    std::vector<double> diff(s.g), sq(s.g);
    const double g = static_cast<double>(s.g);
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
        // Offsets from the first member are exactly zero for identical inputs.
        const double base = preds[0][i];
        for (std::size_t k = 0; k < s.g; ++k) diff[k] = preds[k][i] - base;
        const double shift = compensated_sum(diff) / g;
        for (std::size_t k = 0; k < s.g; ++k) sq[k] = (diff[k] - shift) * (diff[k] - shift);
        s.mean[i] = base + shift;
        s.variance[i] = compensated_sum(sq) / g;
    }
    return s;
}

RealVolume normalize_uncertainty(const RealVolume& variance) {
    RealVolume out(variance.dims(), variance.spacing(), 0.0);
    if (variance.size() == 0) return out;
    const auto [lo, hi] = std::minmax_element(variance.values().begin(), variance.values().end());
    const double span = *hi - *lo;
    if (!(span > 0.0)) return out;
    for (std::size_t i = 0; i < variance.size(); ++i) out[i] = (variance[i] - *lo) / span;
    return out;
}

}  // namespace vesselq
