#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vesselq/vesselq.hpp"

namespace vesselq::cli {
namespace fs = std::filesystem;

namespace {

/// Failure while reading inputs; maps to exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad parameter combination detected after parsing; maps to exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    int threads = 1;
    bool no_timestamp = false;
    bool deterministic = false;
    bool quiet = false;

    std::optional<std::string> timestamp() const {
        if (no_timestamp || deterministic) return std::nullopt;
        return utc_timestamp();
    }
    int thread_count() const { return deterministic ? 1 : threads; }
};

struct AnalyzeConfig {
    std::string input;
    std::string out_dir;
    double threshold = 0.5;
    std::string se_shape = "cross";
    int se_size = 3;
    std::string centerline = "thinned";
    bool no_bridge = false;
    bool no_collapse = false;
    double s = 20.0;
    std::string thrd = "auto";
    int offset = 10;
    int min_len = 20;
    double report_threshold = 0.1;
    bool no_smooth = false;
    bool faithful_area = false;
    bool faithful = false;
    std::vector<int> root;
};

struct SkeletonConfig {
    std::string input;
    std::string out_dir;
    double threshold = 0.5;
    std::string se_shape = "cross";
    int se_size = 3;
    std::string centerline = "thinned";
    bool no_bridge = false;
    bool no_collapse = false;
};

struct MyoConfig {
    std::string input;
    std::string output;
    double threshold = 0.5;
    int kernel_size = 51;
    int iterations = 1;
    int smooth_size = 5;
};

struct EvalSegConfig {
    std::string pred;
    std::string gt;
    std::vector<std::string> probs;
    std::string output;
    std::string mean_out;
    std::string uncertainty_out;
    double threshold = 0.5;
    double lambda = 0.5;
};

struct EvalStenosisConfig {
    std::string pred;
    std::string gt;
    std::string output;
    double radius = 20.0;
    std::string error_mode = "degree";
};

struct PhantomConfig {
    std::string spec;
    std::string out_prefix;
};

VoxelVolume read_volume(const std::string& path) {
    try {
        return load_volume(path);
    } catch (const Error& e) {
        throw InputError(e.what());
    }
}

Mask read_mask(const std::string& path, double threshold) {
    const VoxelVolume vol = read_volume(path);
    Mask m = vesselq::threshold(vol, threshold);
    bool binary = true;
    for (std::size_t i = 0; i < vol.size() && binary; ++i) {
        const double v = vol.value(i);
        binary = v == 0.0 || v == 1.0;
    }
    if (binary) {
        for (std::size_t i = 0; i < vol.size(); ++i) m[i] = vol.value(i) == 1.0 ? 1 : 0;
    }
    return m;
}

RealVolume read_probability(const std::string& path) {
    RealVolume r = to_real(read_volume(path));
    if (!is_probability(r)) throw InputError("'" + path + "' has values outside [0, 1]");
    return r;
}

nlohmann::json read_json_input(const std::string& path) {
    try {
        return read_json(path);
    } catch (const Error& e) {
        throw InputError(e.what());
    }
}

StructuringElement make_se(const std::string& shape, int size) {
    if (size < 1 || size % 2 == 0) throw UsageError("--se-size must be odd and >= 1");
    return StructuringElement(shape == "cube" ? SeShape::cube : SeShape::cross, size, SeDim::volumetric);
}

CenterlineOptions centerline_options(const std::string& se_shape, int se_size, const std::string& mode,
                                     bool no_bridge, bool no_collapse) {
    CenterlineOptions c;
    c.se = make_se(se_shape, se_size);
    c.mode = mode == "morphological" ? CenterlineMode::morphological : CenterlineMode::thinned;
    c.bridge_gaps = !no_bridge;
    c.collapse_clusters = !no_collapse;
    return c;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
}

int cmd_analyze(const AnalyzeConfig& c, const Globals& g, std::ostream& out, std::ostream& err) {
    StenosisParams p;
    const bool faithful = c.faithful;
    p.centerline = centerline_options(c.se_shape, c.se_size, faithful ? "morphological" : c.centerline,
                                      c.no_bridge || faithful, c.no_collapse);
    p.area.s = c.s;
    p.area.offset = c.offset;
    p.area.faithful = c.faithful_area || faithful;
    if (c.thrd != "auto") {
        try {
            p.area.thrd = std::stod(c.thrd);
        } catch (const std::exception&) {
            throw UsageError("--thrd must be 'auto' or a positive number");
        }
        if (!(*p.area.thrd > 0.0)) throw UsageError("--thrd must be > 0");
    }
    p.min_len = c.min_len;
    p.report_threshold = c.report_threshold;
    p.smooth = !(c.no_smooth || faithful);
    p.threads = g.thread_count();
    if (!c.root.empty()) {
        if (c.root.size() != 3) throw UsageError("--root takes three voxel coordinates");
        p.root = Voxel{c.root[0], c.root[1], c.root[2]};
    }

    const Mask mask = read_mask(c.input, c.threshold);
    const StenosisAnalysis a = analyze_stenoses(mask, p);

    std::vector<ArterySegment> segments;
    for (const auto& s : a.segments) segments.push_back(s.segment);
    nlohmann::json report = findings_to_json(a.findings, segments, mask.spacing(), g.timestamp());
    report["input"] = fs::path(c.input).filename().string();
    report["config"] = {{"se", c.se_shape},
                        {"se_size", c.se_size},
                        {"centerline", faithful ? "morphological" : c.centerline},
                        {"bridge_gaps", p.centerline.bridge_gaps},
                        {"collapse_clusters", p.centerline.collapse_clusters},
                        {"s", p.area.s},
                        {"thrd", c.thrd},
                        {"offset", p.area.offset},
                        {"faithful_area", p.area.faithful},
                        {"min_len", p.min_len},
                        {"report_threshold", p.report_threshold},
                        {"smooth", p.smooth}};
    const std::string centerline = centerline_csv(segments);
    const std::string areas = areas_csv(a.segments);

    ensure_dir(c.out_dir);
    write_json(fs::path(c.out_dir) / "findings.json", report);
    write_text(fs::path(c.out_dir) / "centerline.csv", centerline);
    write_text(fs::path(c.out_dir) / "areas.csv", areas);

    if (!g.quiet) {
        for (const auto& s : a.segments) {
            for (auto i : s.profile.substituted) {
                err << "warning: segment " << s.segment.id << " point " << i
                    << ": degenerate tangent, area copied from nearest valid point\n";
            }
        }
        out << a.segments.size() << " segment(s), " << a.findings.size() << " finding(s)\n";
        for (const auto& f : a.findings) {
            out << "  segment " << f.segment_id << " point " << f.index << " (" << f.position.x << ", "
                << f.position.y << ", " << f.position.z << ") degree " << f.degree << " " << to_string(f.grade)
                << "\n";
        }
    }
    return ok;
}

int cmd_skeleton(const SkeletonConfig& c, const Globals& g, std::ostream& out) {
    const CenterlineOptions opts =
        centerline_options(c.se_shape, c.se_size, c.centerline, c.no_bridge, c.no_collapse);
    const Mask mask = read_mask(c.input, c.threshold);
    const Centerline cl = extract_centerline(mask, opts);
    const auto segments = separate_segments(cl.graph);

    ensure_dir(c.out_dir);
    save_nifti(to_volume(cl.skeleton.skeleton), fs::path(c.out_dir) / "skeleton.nii");
    save_nifti(to_volume(cl.graph.skeleton), fs::path(c.out_dir) / "centerline.nii");
    write_json(fs::path(c.out_dir) / "graph.json", graph_to_json(cl.graph));
    write_text(fs::path(c.out_dir) / "centerline.csv", centerline_csv(segments));
    if (!g.quiet) {
        out << cl.graph.count(NodeKind::endpoint) << " endpoint(s), " << cl.graph.count(NodeKind::branch)
            << " branch node(s), " << cl.graph.edges.size() << " edge(s)\n";
    }
    return ok;
}

int cmd_myo_expand(const MyoConfig& c, const Globals& g, std::ostream& out) {
    if (c.kernel_size < 1 || c.kernel_size % 2 == 0) throw UsageError("--kernel-size must be odd and >= 1");
    if (c.smooth_size < 1 || c.smooth_size % 2 == 0) throw UsageError("--smooth-size must be odd and >= 1");
    if (c.iterations < 0) throw UsageError("--iterations must be >= 0");
    const Mask myo = read_mask(c.input, c.threshold);
    const Mask region = expand_myocardial_region(myo, {c.kernel_size, c.iterations, c.smooth_size});
    save_volume(to_volume(region), c.output);
    if (!g.quiet) out << count_foreground(region) << " voxel(s) in the expanded region\n";
    return ok;
}

int cmd_eval_seg(const EvalSegConfig& c, const Globals& g, std::ostream& out, std::ostream& err) {
    if (c.pred.empty() && c.probs.empty()) throw UsageError("eval-seg needs --pred or at least one --prob");
    if (c.lambda < 0.0 || c.lambda > 1.0) throw UsageError("--lambda must lie in [0, 1]");
    const Mask gt = read_mask(c.gt, c.threshold);

    std::optional<EnsembleSummary> ensemble;
    if (!c.probs.empty()) {
        std::vector<RealVolume> stack;
        for (const auto& p : c.probs) stack.push_back(read_probability(p));
        ensemble = ensemble_aggregate(stack);
    }
    const Mask pred = c.pred.empty() ? threshold(ensemble->mean, c.threshold) : read_mask(c.pred, c.threshold);

    SegMetricsReport r;
    const auto o = overlap_metrics(pred, gt);
    r.dice = o.dice;
    r.precision = o.precision;
    r.recall = o.recall;
    nlohmann::json j = seg_metrics_to_json(r, g.timestamp());
    if (count_foreground(pred) > 0 && count_foreground(gt) > 0) {
        j["hd_mm"] = hausdorff(pred, gt, 100.0);
        j["hd95_mm"] = hausdorff(pred, gt, 95.0);
    } else {
        j["hd_mm"] = nullptr;
        j["hd95_mm"] = nullptr;
        err << "warning: Hausdorff distance undefined for an empty mask\n";
    }

    std::optional<RealVolume> uncertainty;
    if (ensemble) {
        uncertainty = normalize_uncertainty(ensemble->variance);
        j["ensemble"] = {{"g", ensemble->g},
                         {"bce", bce_loss(ensemble->mean, gt)},
                         {"dice_loss", dice_loss(ensemble->mean, gt)},
                         {"combined_loss", combined_loss(ensemble->mean, gt, c.lambda)},
                         {"lambda", c.lambda},
                         {"max_variance", *std::max_element(ensemble->variance.values().begin(),
                                                            ensemble->variance.values().end())}};
    }

    write_json(c.output, j);
    if (ensemble && !c.mean_out.empty()) save_volume(to_volume(ensemble->mean), c.mean_out);
    if (ensemble && !c.uncertainty_out.empty()) save_volume(to_volume(*uncertainty), c.uncertainty_out);
    if (!g.quiet) out << j.dump(2) << "\n";
    return ok;
}

int cmd_eval_stenosis(const EvalStenosisConfig& c, const Globals& g, std::ostream& out, std::ostream& err) {
    if (!(c.radius > 0.0)) throw UsageError("--radius must be > 0");
    FindingSet pred, gt;
    try {
        pred = findings_from_json(read_json_input(c.pred));
        gt = findings_from_json(read_json_input(c.gt));
    } catch (const Error& e) {
        throw InputError(e.what());
    }
    const MatchResult m = match(pred, gt, c.radius);
    const StenosisEvalReport r =
        stratified_report(m, pred, gt, c.error_mode == "area" ? ErrorMode::area : ErrorMode::degree);
    if (!c.output.empty()) write_json(c.output, eval_report_to_json(r, m, g.timestamp()));
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    if (!g.quiet) out << eval_report_table(r);
    return ok;
}

int cmd_phantom(const PhantomConfig& c, const Globals& g, std::ostream& out) {
    PhantomSpec spec;
    try {
        spec = phantom_spec_from_json(read_json_input(c.spec));
    } catch (const Error& e) {
        throw InputError(e.what());
    }
    const Phantom ph = rasterize(spec);
    const VoxelVolume vol = to_volume(ph.mask);
    const fs::path prefix(c.out_prefix);
    if (prefix.has_parent_path()) ensure_dir(prefix.parent_path().string());
    save_nifti(vol, prefix.string() + ".nii");
    save_raw(vol, prefix.string() + ".json");
    write_json(prefix.string() + ".truth.json", phantom_truth_to_json(spec, ph));
    if (!g.quiet) {
        std::size_t expected = 0;
        for (const auto& t : ph.truth) expected += t.expected_findings.size();
        out << count_foreground(ph.mask) << " foreground voxel(s), " << expected << " expected finding(s)\n";
    }
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"vesselq: coronary centerline, cross-section and stenosis analysis"};
    app.name("vesselq");
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option defaults; flags take precedence");

    Globals g;
    app.add_option("--threads", g.threads, "Worker threads for per-segment work")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    app.add_flag("--no-timestamp", g.no_timestamp, "Omit the timestamp field from reports");
    app.add_flag("--deterministic", g.deterministic, "One thread and no timestamp");
    app.add_flag("-q,--quiet", g.quiet, "Suppress summaries on stdout");

    const auto shapes = CLI::IsMember({"cross", "cube"});
    const auto modes = CLI::IsMember({"thinned", "morphological"});

    AnalyzeConfig ac;
    auto* analyze = app.add_subcommand("analyze", "Detect and grade stenoses in a vessel mask");
    analyze->add_option("mask", ac.input, "Mask volume (.nii or raw .json sidecar)")->required();
    analyze->add_option("-o,--out-dir", ac.out_dir, "Directory for findings.json, centerline.csv, areas.csv")
        ->required();
    analyze->add_option("--threshold", ac.threshold, "Binarisation threshold for non-binary input")
        ->capture_default_str();
    analyze->add_option("--se", ac.se_shape, "Skeleton structuring element")->check(shapes)->capture_default_str();
    analyze->add_option("--se-size", ac.se_size, "Structuring element side")->capture_default_str();
    analyze->add_option("--centerline", ac.centerline, "Centerline mode")->check(modes)->capture_default_str();
    analyze->add_flag("--no-bridge", ac.no_bridge, "Do not bridge single-voxel skeleton gaps");
    analyze->add_flag("--no-collapse", ac.no_collapse, "Keep adjacent branch voxels as separate nodes");
    analyze->add_option("--s", ac.s, "Cross-section search radius, voxels")->capture_default_str();
    analyze->add_option("--thrd", ac.thrd, "Slab half-thickness in mm, or 'auto'")->capture_default_str();
    analyze->add_option("--offset", ac.offset, "Tangent half-window, centerline points")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    analyze->add_option("--min-len", ac.min_len, "Drop segments shorter than this many points")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    analyze->add_option("--report-threshold", ac.report_threshold, "Report findings with degree above this")
        ->capture_default_str();
    analyze->add_flag("--no-smooth", ac.no_smooth, "Find extrema on the raw area profile");
    analyze->add_flag("--faithful-area", ac.faithful_area, "Unnormalised tangent and basis vectors");
    analyze->add_flag("--faithful", ac.faithful,
                      "Morphological skeleton, no gap bridging, raw profile, unnormalised area vectors");
    analyze->add_option("--root", ac.root, "Proximal root voxel x y z")->expected(3);

    SkeletonConfig sc;
    auto* skeleton = app.add_subcommand("skeleton", "Extract the centerline skeleton and its graph");
    skeleton->add_option("mask", sc.input, "Mask volume")->required();
    skeleton->add_option("-o,--out-dir", sc.out_dir, "Output directory")->required();
    skeleton->add_option("--threshold", sc.threshold, "Binarisation threshold")->capture_default_str();
    skeleton->add_option("--se", sc.se_shape, "Structuring element")->check(shapes)->capture_default_str();
    skeleton->add_option("--se-size", sc.se_size, "Structuring element side")->capture_default_str();
    skeleton->add_option("--centerline", sc.centerline, "Centerline mode")->check(modes)->capture_default_str();
    skeleton->add_flag("--no-bridge", sc.no_bridge, "Do not bridge single-voxel gaps");
    skeleton->add_flag("--no-collapse", sc.no_collapse, "Keep adjacent branch voxels separate");

    MyoConfig mc;
    auto* myo = app.add_subcommand("myo-expand", "Expand a myocardium mask into the coronary search region");
    myo->add_option("mask", mc.input, "Myocardium mask")->required();
    myo->add_option("-o,--output", mc.output, "Output volume (.nii or .json)")->required();
    myo->add_option("--threshold", mc.threshold, "Binarisation threshold")->capture_default_str();
    myo->add_option("--kernel-size", mc.kernel_size, "Square dilation side (odd)")->capture_default_str();
    myo->add_option("--iterations", mc.iterations, "Dilation iterations")->capture_default_str();
    myo->add_option("--smooth-size", mc.smooth_size, "Square closing side (odd)")->capture_default_str();

    EvalSegConfig ec;
    auto* eval_seg = app.add_subcommand("eval-seg", "Score a segmentation against ground truth");
    eval_seg->add_option("--pred", ec.pred, "Predicted mask");
    eval_seg->add_option("--gt", ec.gt, "Ground-truth mask")->required();
    eval_seg->add_option("--prob", ec.probs, "Probability volume of one stochastic pass (repeatable)");
    eval_seg->add_option("-o,--output", ec.output, "Metrics report (.json)")->required();
    eval_seg->add_option("--mean-out", ec.mean_out, "Write the ensemble mean volume");
    eval_seg->add_option("--uncertainty-out", ec.uncertainty_out, "Write the normalised variance volume");
    eval_seg->add_option("--threshold", ec.threshold, "Binarisation threshold")->capture_default_str();
    eval_seg->add_option("--lambda", ec.lambda, "Dice weight in the combined loss")->capture_default_str();

    EvalStenosisConfig sc2;
    auto* eval_sten = app.add_subcommand("eval-stenosis", "Match predicted and reference stenosis findings");
    eval_sten->add_option("--pred", sc2.pred, "Predicted findings report")->required();
    eval_sten->add_option("--gt", sc2.gt, "Reference findings report")->required();
    eval_sten->add_option("-o,--output", sc2.output, "Evaluation report (.json)");
    eval_sten->add_option("--radius", sc2.radius, "Detection radius, voxels")->capture_default_str();
    eval_sten->add_option("--error-mode", sc2.error_mode, "Compare degrees or minimum areas")
        ->check(CLI::IsMember({"degree", "area"}))
        ->capture_default_str();

    PhantomConfig pc;
    auto* phantom = app.add_subcommand("phantom", "Rasterise a synthetic vessel phantom");
    phantom->add_option("spec", pc.spec, "Phantom spec (.json)")->required();
    phantom->add_option("-o,--out", pc.out_prefix, "Output prefix for .nii, .json/.bin and .truth.json")
        ->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(ac, g, out, err);
        if (skeleton->parsed()) return cmd_skeleton(sc, g, out);
        if (myo->parsed()) return cmd_myo_expand(mc, g, out);
        if (eval_seg->parsed()) return cmd_eval_seg(ec, g, out, err);
        if (eval_sten->parsed()) return cmd_eval_stenosis(sc2, g, out, err);
        if (phantom->parsed()) return cmd_phantom(pc, g, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return input;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return e.kind() == ErrorKind::io ? input : computation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return computation;
    }
    return usage;
}

}  // namespace vesselq::cli
