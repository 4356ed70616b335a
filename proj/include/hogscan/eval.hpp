#pragma once
// Annotation ingestion, detection-to-target matching under the strict
// half-coverage rule, metric aggregation, parameter sweeps and per-phase
// timing.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hogscan/detect.hpp"
#include "hogscan/error.hpp"
#include "hogscan/svm.hpp"

namespace hogscan {

struct Annotation {
    std::string image_path;
    std::vector<Box> targets;
};

// Line format: "<image_path> <n> <x y w h>...", one annotation per line.
// Blank lines and lines starting with '#' are ignored.
inline std::vector<Annotation> parse_annotations(std::string_view text) {
    std::vector<Annotation> out;
    std::size_t line_no = 0;
    while (!text.empty() || line_no == 0) {
        ++line_no;
        std::size_t nl = text.find('\n');
        std::string line(text.substr(0, nl));
        text = (nl == std::string_view::npos) ? std::string_view{} : text.substr(nl + 1);

        std::istringstream in(line);
        std::string path;
        if (!(in >> path)) continue;  // blank
        if (path[0] == '#') continue;

        auto fail = [&](const std::string& what) {
            throw ParseError("annotations line " + std::to_string(line_no) + ": " + what);
        };
        long n = 0;
        if (!(in >> n) || n < 0) fail("bad target count");
        Annotation ann{path, {}};
        for (long i = 0; i < n; ++i) {
            Box b;
            if (!(in >> b.x >> b.y >> b.width >> b.height))
                fail("expected " + std::to_string(n) + " boxes, got " + std::to_string(i));
            if (b.width < 1 || b.height < 1) fail("box width/height must be >= 1");
            ann.targets.push_back(b);
        }
        std::string extra;
        if (in >> extra) fail("trailing tokens after " + std::to_string(n) + " boxes");
        out.push_back(std::move(ann));
        if (text.empty()) break;
    }
    return out;
}

struct MatchResult {
    int matched_targets = 0;
    int false_detections = 0;
};

// A detection matches a target iff it covers strictly more than half of the
// target's area. Greedy by descending score; each target is consumed by at
// most one detection (ties broken by larger covered area, then target order).
inline MatchResult match_detections(const std::vector<Detection>& detections,
                                    const std::vector<Box>& targets) {
    std::vector<Detection> sorted = detections;
    std::sort(sorted.begin(), sorted.end(), detail::detection_before);

    std::vector<bool> consumed(targets.size(), false);
    MatchResult result;
    for (const auto& det : sorted) {
        int best = -1;
        std::int64_t best_inter = 0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (consumed[i]) continue;
            std::int64_t inter = intersection_area(det.box, targets[i]);
            if (2 * inter > targets[i].area() && inter > best_inter) {
                best = static_cast<int>(i);
                best_inter = inter;
            }
        }
        if (best >= 0) {
            consumed[best] = true;
            ++result.matched_targets;
        } else {
            ++result.false_detections;
        }
    }
    return result;
}

struct ImageError {
    std::string image;
    std::string message;
};

struct EvalReport {
    int images = 0;
    int targets = 0;
    int detected_targets = 0;
    int false_detections = 0;
    double detection_rate = 0.0;  // detected / targets
    double false_rate = 0.0;      // false detections / targets
    double mean_ms_per_image = 0.0;
    PhaseTimes mean_phase_ms;
    HogConfig config;
    DetectParams params;
    std::vector<ImageError> errors;
};

// Integer percent, rounded half up (4503/5209 -> 86).
inline int percent_round(double rate) { return round_half_up(rate * 100.0); }

struct ImageCounts {
    int targets = 0;
    int matched = 0;
    int falses = 0;
    PhaseTimes times;
};

inline EvalReport aggregate_counts(const std::vector<ImageCounts>& per_image,
                                   const HogConfig& config, const DetectParams& params) {
    EvalReport r;
    r.config = config;
    r.params = params;
    r.images = static_cast<int>(per_image.size());
    for (const auto& c : per_image) {
        r.targets += c.targets;
        r.detected_targets += c.matched;
        r.false_detections += c.falses;
        r.mean_ms_per_image += c.times.total_ms;
        r.mean_phase_ms.preprocess_ms += c.times.preprocess_ms;
        r.mean_phase_ms.pyramid_ms += c.times.pyramid_ms;
        r.mean_phase_ms.gradient_ms += c.times.gradient_ms;
        r.mean_phase_ms.scan_ms += c.times.scan_ms;
        r.mean_phase_ms.nms_ms += c.times.nms_ms;
        r.mean_phase_ms.total_ms += c.times.total_ms;
    }
    if (r.images > 0) {
        double n = r.images;
        r.mean_ms_per_image /= n;
        r.mean_phase_ms.preprocess_ms /= n;
        r.mean_phase_ms.pyramid_ms /= n;
        r.mean_phase_ms.gradient_ms /= n;
        r.mean_phase_ms.scan_ms /= n;
        r.mean_phase_ms.nms_ms /= n;
        r.mean_phase_ms.total_ms /= n;
    }
    if (r.targets > 0) {
        r.detection_rate = static_cast<double>(r.detected_targets) / r.targets;
        r.false_rate = static_cast<double>(r.false_detections) / r.targets;
    }
    return r;
}

inline std::optional<std::string> read_file(const std::filesystem::path& path,
                                            std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "cannot open " + path.string();
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return std::nullopt;
}

// Runs the detector over every annotated image and aggregates the counts.
// A missing or corrupt image is recorded and excluded from the denominators;
// the run continues.
inline EvalReport evaluate(const std::vector<Annotation>& dataset,
                           const std::filesystem::path& images_root,
                           const LinearModel& model, const DetectParams& params) {
    std::vector<ImageCounts> counts;
    std::vector<ImageError> errors;
    for (const auto& ann : dataset) {
        std::filesystem::path path = images_root / ann.image_path;
        std::string bytes;
        if (auto err = read_file(path, bytes)) {
            errors.push_back({ann.image_path, *err});
            continue;
        }
        GrayImage img;
        try {
            img = grayscale_of(decode_image(bytes));
        } catch (const DecodeError& e) {
            errors.push_back({ann.image_path, e.what()});
            continue;
        }
        ImageCounts c;
        c.targets = static_cast<int>(ann.targets.size());
        auto detections = detect_timed(img, model, params, c.times);
        MatchResult m = match_detections(detections, ann.targets);
        c.matched = m.matched_targets;
        c.falses = m.false_detections;
        counts.push_back(c);
    }
    EvalReport report = aggregate_counts(counts, model.config, params);
    report.errors = std::move(errors);
    return report;
}

enum class SweepAxis { Gamma, Filter, CellSize, BlockSize, Threshold };

inline std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::Filter: return "filter";
        case SweepAxis::CellSize: return "cell_size";
        case SweepAxis::BlockSize: return "block_size";
        case SweepAxis::Threshold: return "threshold";
    }
    return "?";
}

inline SweepAxis axis_from_name(std::string_view s) {
    if (s == "gamma") return SweepAxis::Gamma;
    if (s == "filter") return SweepAxis::Filter;
    if (s == "cell_size") return SweepAxis::CellSize;
    if (s == "block_size") return SweepAxis::BlockSize;
    if (s == "threshold") return SweepAxis::Threshold;
    throw ParseError("unknown sweep axis '" + std::string(s) +
                     "' (want gamma|filter|cell_size|block_size|threshold)");
}

struct SweepRow {
    std::string value;
    std::optional<EvalReport> report;
    std::string error;  // row-level failure; empty on success
};

using ModelProvider = std::function<LinearModel(const HogConfig&)>;

// One EvalReport row per axis value. The threshold axis reuses one model;
// every other axis retrains through `trainer` because the features (and for
// geometry axes the descriptor length) change. A value that violates the
// config invariants yields an error row and the sweep continues.
inline std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<std::string>& values,
                                   const HogConfig& base_config,
                                   const DetectParams& base_params,
                                   const std::vector<Annotation>& dataset,
                                   const std::filesystem::path& images_root,
                                   const ModelProvider& trainer) {
    std::vector<SweepRow> rows;
    std::optional<LinearModel> shared_model;
    if (axis == SweepAxis::Threshold) shared_model = trainer(base_config);

    for (const auto& value : values) {
        SweepRow row{value, std::nullopt, ""};
        try {
            HogConfig config = base_config;
            DetectParams params = base_params;
            switch (axis) {
                case SweepAxis::Gamma:
                    config.gamma = gamma_from_value(value);
                    break;
                case SweepAxis::Filter:
                    config.gradient_filter = filter_from_name(value);
                    break;
                case SweepAxis::CellSize:
                    config.cell_size = static_cast<int>(parse_int(value, "cell_size"));
                    break;
                case SweepAxis::BlockSize:
                    config.block_size = static_cast<int>(parse_int(value, "block_size"));
                    break;
                case SweepAxis::Threshold:
                    params.tau = parse_double(value, "threshold");
                    break;
            }
            validate(config);
            const LinearModel& model =
                (axis == SweepAxis::Threshold) ? *shared_model : trainer(config);
            row.report = evaluate(dataset, images_root, model, params);
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Wall-clock per phase, median over `repetitions` (at least 5) runs.
inline PhaseTimes time_phases(const GrayImage& img, const LinearModel& model,
                              const DetectParams& params, int repetitions = 5) {
    repetitions = std::max(repetitions, 5);
    std::vector<PhaseTimes> runs(repetitions);
    for (auto& t : runs) detect_timed(img, model, params, t);

    auto median = [&](auto member) {
        std::vector<double> v;
        v.reserve(runs.size());
        for (const auto& r : runs) v.push_back(r.*member);
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    PhaseTimes out;
    out.preprocess_ms = median(&PhaseTimes::preprocess_ms);
    out.pyramid_ms = median(&PhaseTimes::pyramid_ms);
    out.gradient_ms = median(&PhaseTimes::gradient_ms);
    out.scan_ms = median(&PhaseTimes::scan_ms);
    out.nms_ms = median(&PhaseTimes::nms_ms);
    out.total_ms = median(&PhaseTimes::total_ms);
    return out;
}

}  // namespace hogscan
