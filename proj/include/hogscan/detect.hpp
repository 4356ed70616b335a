#pragma once
// Multi-scale sliding-window detection: gamma preprocessing, image pyramid,
// per-window scoring against the global threshold, coordinate mapping back
// to the original frame, and greedy non-maximum suppression.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hogscan/error.hpp"
#include "hogscan/hog.hpp"
#include "hogscan/raster.hpp"
#include "hogscan/svm.hpp"

namespace hogscan {

struct Box {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    std::int64_t area() const {
        return static_cast<std::int64_t>(width) * height;
    }
    bool operator==(const Box&) const = default;
};

inline std::int64_t intersection_area(const Box& a, const Box& b) {
    std::int64_t x0 = std::max(a.x, b.x);
    std::int64_t y0 = std::max(a.y, b.y);
    std::int64_t x1 = std::min<std::int64_t>(a.x + a.width, b.x + b.width);
    std::int64_t y1 = std::min<std::int64_t>(a.y + a.height, b.y + b.height);
    if (x1 <= x0 || y1 <= y0) return 0;
    return (x1 - x0) * (y1 - y0);
}

inline double iou(const Box& a, const Box& b) {
    std::int64_t inter = intersection_area(a, b);
    std::int64_t uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct Detection {
    Box box;                // original-image pixel coordinates
    double score = 0.0;     // raw SVM score
    double scale = 1.0;     // pyramid scale factor of the hit
};

struct DetectParams {
    double tau = 1.05;         // global score threshold
    double scale_step = 1.05;  // > 1
    double nms_overlap = 0.5;  // IoU threshold in [0, 1]
    bool nms_enabled = true;
    int window_stride = 0;     // pixels; 0 means config.cell_size
};

inline void validate(const DetectParams& p) {
    if (!(p.scale_step > 1.0) || !std::isfinite(p.scale_step))
        throw ParamError("scale_step must be a finite real > 1");
    if (!(p.nms_overlap >= 0.0 && p.nms_overlap <= 1.0))
        throw ParamError("nms_overlap must be in [0, 1]");
    if (p.window_stride < 0)
        throw ParamError("window_stride must be >= 1, or 0 for cell_size");
}

struct PyramidLevel {
    double scale = 1.0;  // maps level coordinates back to the original frame
    GrayImage image;
};

// Level k is the image resized by 1/scale_step^k, for k = 0, 1, ... while
// both dimensions still hold one full detection window. An image smaller
// than the window yields an empty pyramid.
inline std::vector<PyramidLevel> build_pyramid(const GrayImage& img, const HogConfig& config,
                                               double scale_step) {
    if (!(scale_step > 1.0) || !std::isfinite(scale_step))
        throw ParamError("scale_step must be a finite real > 1");
    validate(config);

    std::vector<PyramidLevel> levels;
    for (int k = 0;; ++k) {
        double scale = std::pow(scale_step, k);
        int w = round_half_up(img.width / scale);
        int h = round_half_up(img.height / scale);
        if (w < config.window_width || h < config.window_height) break;
        levels.push_back({scale, k == 0 ? img : resize_bilinear(img, w, h)});
    }
    return levels;
}

struct WindowHit {
    int x = 0;
    int y = 0;
    double score = 0.0;
};

namespace detail {

inline std::vector<WindowHit> scan_level_naive(const GradientField& field,
                                               const LinearModel& model, int stride,
                                               double tau) {
    const HogConfig& c = model.config;
    std::vector<WindowHit> hits;
    for (int wy = 0; wy + c.window_height <= field.height; wy += stride) {
        for (int wx = 0; wx + c.window_width <= field.width; wx += stride) {
            double s = score(model, window_descriptor(field, wx, wy, c));
            if (s >= tau) hits.push_back({wx, wy, s});
        }
    }
    return hits;
}

// When the window stride and block stride are multiples of the cell size,
// every cell any window touches lies on the cell grid, so normalized block
// vectors can be computed once per level. Arithmetic and accumulation order
// match the naive path exactly.
inline std::vector<WindowHit> scan_level_cached(const GradientField& field,
                                                const LinearModel& model, int stride,
                                                double tau) {
    const HogConfig& c = model.config;
    const int cs = c.cell_size;
    const int cells_per_side = c.block_size / cs;
    const std::size_t per_block =
        static_cast<std::size_t>(cells_per_side) * cells_per_side * c.bin_count;

    // Normalized block vectors for every cell-aligned block origin.
    const int grid_x = (field.width - c.block_size) / cs + 1;
    const int grid_y = (field.height - c.block_size) / cs + 1;
    std::vector<double> blocks(static_cast<std::size_t>(grid_x) * grid_y * per_block);
    std::vector<double> raw(per_block);
    for (int gy = 0; gy < grid_y; ++gy) {
        for (int gx = 0; gx < grid_x; ++gx) {
            raw.clear();
            for (int cy = 0; cy < cells_per_side; ++cy) {
                for (int cx = 0; cx < cells_per_side; ++cx) {
                    auto bins = cell_histogram(field, gx * cs + cx * cs, gy * cs + cy * cs, c);
                    raw.insert(raw.end(), bins.begin(), bins.end());
                }
            }
            auto normalized = normalize_block(raw, c.epsilon);
            std::copy(normalized.begin(), normalized.end(),
                      blocks.begin() +
                          (static_cast<std::size_t>(gy) * grid_x + gx) * per_block);
        }
    }

    const int blocks_x = (c.window_width - c.block_size) / c.block_stride + 1;
    const int blocks_y = (c.window_height - c.block_size) / c.block_stride + 1;
    std::vector<WindowHit> hits;
    for (int wy = 0; wy + c.window_height <= field.height; wy += stride) {
        for (int wx = 0; wx + c.window_width <= field.width; wx += stride) {
            double dot = 0.0;
            const double* w = model.weights.data();
            for (int by = 0; by < blocks_y; ++by) {
                for (int bx = 0; bx < blocks_x; ++bx) {
                    int gx = (wx + bx * c.block_stride) / cs;
                    int gy = (wy + by * c.block_stride) / cs;
                    const double* v =
                        &blocks[(static_cast<std::size_t>(gy) * grid_x + gx) * per_block];
                    for (std::size_t i = 0; i < per_block; ++i) dot += w[i] * v[i];
                    w += per_block;
                }
            }
            double s = dot - model.rho;
            if (s >= tau) hits.push_back({wx, wy, s});
        }
    }
    return hits;
}

}  // namespace detail

// Scores every window origin on the stride grid and returns those with
// score >= tau, in row-major origin order.
inline std::vector<WindowHit> scan_level(const GradientField& field, const LinearModel& model,
                                         int window_stride, double tau) {
    const HogConfig& c = model.config;
    std::size_t dim = descriptor_len(c);
    if (model.weights.size() != dim)
        throw DimensionError("scan_level: model has " + std::to_string(model.weights.size()) +
                             " weights but config needs " + std::to_string(dim));
    int stride = window_stride > 0 ? window_stride : c.cell_size;
    if (field.width < c.window_width || field.height < c.window_height) return {};

    if (stride % c.cell_size == 0 && c.block_stride % c.cell_size == 0)
        return detail::scan_level_cached(field, model, stride, tau);
    return detail::scan_level_naive(field, model, stride, tau);
}

namespace detail {

// Deterministic ordering: score descending, then smallest scale, then
// top-to-bottom, left-to-right.
inline bool detection_before(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.scale != b.scale) return a.scale < b.scale;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    return false;
}

}  // namespace detail

// Greedy NMS: keep the highest-scoring remaining detection, discard others
// whose IoU with it exceeds the threshold. Output sorted by descending score.
inline std::vector<Detection> nms(std::vector<Detection> detections, double overlap_threshold) {
    if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0))
        throw ParamError("nms: overlap_threshold must be in [0, 1]");
    std::sort(detections.begin(), detections.end(), detail::detection_before);
    std::vector<Detection> kept;
    for (const auto& d : detections) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(d.box, k.box) > overlap_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

struct PhaseTimes {
    double preprocess_ms = 0.0;
    double pyramid_ms = 0.0;
    double gradient_ms = 0.0;
    double scan_ms = 0.0;  // descriptor assembly + scoring
    double nms_ms = 0.0;
    double total_ms = 0.0;

    double phase_sum() const {
        return preprocess_ms + pyramid_ms + gradient_ms + scan_ms + nms_ms;
    }
};

inline std::vector<Detection> detect_timed(const GrayImage& img, const LinearModel& model,
                                           const DetectParams& params, PhaseTimes& times) {
    validate(params);
    const HogConfig& c = model.config;
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    times = PhaseTimes{};
    auto start = clock::now();

    auto t0 = clock::now();
    GrayImage pre = preprocess(img, c);
    times.preprocess_ms = ms_since(t0);

    t0 = clock::now();
    auto pyramid = build_pyramid(pre, c, params.scale_step);
    times.pyramid_ms = ms_since(t0);

    std::vector<Detection> detections;
    for (const auto& level : pyramid) {
        t0 = clock::now();
        GradientField field = compute_gradient(level.image, c.gradient_filter);
        times.gradient_ms += ms_since(t0);

        t0 = clock::now();
        auto hits = scan_level(field, model, params.window_stride, params.tau);
        times.scan_ms += ms_since(t0);

        for (const auto& hit : hits) {
            Box box{round_half_up(hit.x * level.scale), round_half_up(hit.y * level.scale),
                    round_half_up(c.window_width * level.scale),
                    round_half_up(c.window_height * level.scale)};
            // Clip to the original frame; drop boxes that end up empty.
            int x0 = std::max(0, box.x);
            int y0 = std::max(0, box.y);
            int x1 = std::min(img.width, box.x + box.width);
            int y1 = std::min(img.height, box.y + box.height);
            if (x1 <= x0 || y1 <= y0) continue;
            detections.push_back({{x0, y0, x1 - x0, y1 - y0}, hit.score, level.scale});
        }
    }
    std::sort(detections.begin(), detections.end(), detail::detection_before);

    t0 = clock::now();
    if (params.nms_enabled) detections = nms(std::move(detections), params.nms_overlap);
    times.nms_ms = ms_since(t0);

    times.total_ms = ms_since(start);
    return detections;
}

inline std::vector<Detection> detect(const GrayImage& img, const LinearModel& model,
                                     const DetectParams& params) {
    PhaseTimes times;
    return detect_timed(img, model, params, times);
}

}  // namespace hogscan
