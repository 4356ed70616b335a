#pragma once
// Gradient fields, per-cell orientation histograms, L1 block normalization
// and per-window descriptor assembly.
//
// Geometry conventions, fixed for the life of a model file:
//   - blocks are enumerated row-major over the window at block_stride spacing,
//   - cells row-major within a block, bins in ascending angle order,
//   - each block is L1-normalized independently (v / (||v||_1 + epsilon)).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hogscan/error.hpp"
#include "hogscan/raster.hpp"

namespace hogscan {

enum class GradientFilter {
    OneDDerivative,  // centered [-1 0 1] masks
    Sobel,           // 3x3 Sobel kernels
};

struct HogConfig {
    int window_width = 64;
    int window_height = 128;
    int cell_size = 8;     // square cells
    int block_size = 32;   // square blocks, multiple of cell_size
    int block_stride = 8;
    int bin_count = 9;
    double epsilon = 1e-5;              // block normalization constant
    std::optional<double> gamma = 0.5;  // nullopt = no gamma correction
    GradientFilter gradient_filter = GradientFilter::OneDDerivative;

    double bin_width_degrees() const { return 180.0 / bin_count; }

    // Real-time operating point: 32x32 blocks of 8x8 cells, 9360 components
    // on the 64x128 window.
    static HogConfig block32_preset() { return HogConfig{}; }

    // Canonical 2x2-cell geometry: 16x16 blocks, 3780 components.
    static HogConfig block16_preset() {
        HogConfig c;
        c.block_size = 16;
        return c;
    }

    bool operator==(const HogConfig&) const = default;
};

inline void validate(const HogConfig& c) {
    if (c.window_width < 1 || c.window_height < 1)
        throw ConfigError("window dimensions must be >= 1");
    if (c.cell_size < 1) throw ConfigError("cell_size must be >= 1");
    if (c.block_size < 1) throw ConfigError("block_size must be >= 1");
    if (c.block_stride < 1) throw ConfigError("block_stride must be >= 1");
    if (c.block_size % c.cell_size != 0)
        throw ConfigError("block_size must be a multiple of cell_size");
    if (c.window_width < c.block_size || c.window_height < c.block_size)
        throw ConfigError("window must hold at least one block");
    if ((c.window_width - c.block_size) % c.block_stride != 0)
        throw ConfigError("(window_width - block_size) must be a multiple of block_stride");
    if ((c.window_height - c.block_size) % c.block_stride != 0)
        throw ConfigError("(window_height - block_size) must be a multiple of block_stride");
    if (c.bin_count < 1) throw ConfigError("bin_count must be >= 1");
    if (!(c.epsilon > 0) || !std::isfinite(c.epsilon))
        throw ConfigError("epsilon must be a positive finite real");
    if (c.gamma && (!(*c.gamma > 0) || !std::isfinite(*c.gamma)))
        throw ConfigError("gamma must be a positive finite real or disabled");
}

inline std::size_t descriptor_len(const HogConfig& c) {
    validate(c);
    std::size_t blocks_x = (c.window_width - c.block_size) / c.block_stride + 1;
    std::size_t blocks_y = (c.window_height - c.block_size) / c.block_stride + 1;
    std::size_t cells = static_cast<std::size_t>(c.block_size / c.cell_size) *
                        (c.block_size / c.cell_size);
    return blocks_x * blocks_y * cells * c.bin_count;
}

using Descriptor = std::vector<double>;

struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> magnitude;    // >= 0
    std::vector<double> orientation;  // degrees in [0, 180)

    double mag(int x, int y) const {
        return magnitude[static_cast<std::size_t>(y) * width + x];
    }
    double ori(int x, int y) const {
        return orientation[static_cast<std::size_t>(y) * width + x];
    }
};

namespace detail {

// Unsigned orientation: fold atan2 into [0, 180); 180 itself maps to 0.
inline double fold_orientation(double gx, double gy) {
    if (gx == 0.0 && gy == 0.0) return 0.0;
    double deg = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
    if (deg < 0.0) deg += 180.0;
    if (deg >= 180.0) deg -= 180.0;
    if (deg < 0.0) deg = 0.0;
    return deg;
}

}  // namespace detail

// Per-pixel gradient magnitude and unsigned orientation. Borders replicate
// the edge pixel, so the field has the same dimensions as the image.
inline GradientField compute_gradient(const GrayImage& img, GradientFilter filter) {
    if (img.width < 3 || img.height < 3)
        throw DimensionError("compute_gradient: image must be at least 3x3");

    GradientField field;
    field.width = img.width;
    field.height = img.height;
    field.magnitude.resize(img.pixels.size());
    field.orientation.resize(img.pixels.size());

    auto px = [&](int x, int y) -> double {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return img.at(x, y);
    };

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double gx, gy;
            if (filter == GradientFilter::OneDDerivative) {
                gx = px(x + 1, y) - px(x - 1, y);
                gy = px(x, y + 1) - px(x, y - 1);
            } else {
                gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
                gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            }
            std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            field.magnitude[i] = std::sqrt(gx * gx + gy * gy);
            field.orientation[i] = detail::fold_orientation(gx, gy);
        }
    }
    return field;
}

// Each pixel votes its full magnitude into the single bin floor(theta / bin
// width); no spatial or orientation interpolation.
inline std::vector<double> cell_histogram(const GradientField& field, int cell_x,
                                          int cell_y, const HogConfig& config) {
    if (cell_x < 0 || cell_y < 0 || cell_x + config.cell_size > field.width ||
        cell_y + config.cell_size > field.height)
        throw DimensionError("cell_histogram: cell out of bounds");

    std::vector<double> bins(config.bin_count, 0.0);
    const double bin_width = config.bin_width_degrees();
    for (int y = cell_y; y < cell_y + config.cell_size; ++y) {
        for (int x = cell_x; x < cell_x + config.cell_size; ++x) {
            int bin = static_cast<int>(field.ori(x, y) / bin_width);
            if (bin >= config.bin_count) bin = config.bin_count - 1;
            bins[bin] += field.mag(x, y);
        }
    }
    return bins;
}

// L1 normalization, out[i] = v[i] / (sum|v| + epsilon). The zero vector maps
// to zeros.
inline std::vector<double> normalize_block(const std::vector<double>& v, double epsilon) {
    double sum = 0.0;
    for (double x : v) sum += std::fabs(x);
    double denom = sum + epsilon;
    std::vector<double> out(v.size(), 0.0);
    if (denom <= 0.0) return out;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / denom;
    return out;
}

// Descriptor for the window whose top-left corner is (window_x, window_y).
inline Descriptor window_descriptor(const GradientField& field, int window_x,
                                    int window_y, const HogConfig& config) {
    std::size_t len = descriptor_len(config);
    if (window_x < 0 || window_y < 0 || window_x + config.window_width > field.width ||
        window_y + config.window_height > field.height)
        throw DimensionError("window_descriptor: window out of bounds");

    Descriptor out;
    out.reserve(len);
    const int cells_per_side = config.block_size / config.cell_size;
    std::vector<double> block;
    block.reserve(static_cast<std::size_t>(cells_per_side) * cells_per_side *
                  config.bin_count);

    for (int by = 0; by + config.block_size <= config.window_height; by += config.block_stride) {
        for (int bx = 0; bx + config.block_size <= config.window_width; bx += config.block_stride) {
            block.clear();
            for (int cy = 0; cy < cells_per_side; ++cy) {
                for (int cx = 0; cx < cells_per_side; ++cx) {
                    auto bins = cell_histogram(field,
                                               window_x + bx + cx * config.cell_size,
                                               window_y + by + cy * config.cell_size,
                                               config);
                    block.insert(block.end(), bins.begin(), bins.end());
                }
            }
            auto normalized = normalize_block(block, config.epsilon);
            out.insert(out.end(), normalized.begin(), normalized.end());
        }
    }
    return out;
}

// Gamma normalization step of the pipeline; identity when gamma is disabled.
inline GrayImage preprocess(const GrayImage& img, const HogConfig& config) {
    if (config.gamma) return gamma_correct(img, *config.gamma);
    return img;
}

// Descriptor of a standalone window-sized image (training crops). Applies the
// configured preprocessing, so it matches what detection computes.
inline Descriptor descriptor_for_window_image(const GrayImage& img, const HogConfig& config) {
    validate(config);
    if (img.width != config.window_width || img.height != config.window_height)
        throw DimensionError("descriptor_for_window_image: image is " +
                             std::to_string(img.width) + "x" + std::to_string(img.height) +
                             ", window is " + std::to_string(config.window_width) + "x" +
                             std::to_string(config.window_height));
    GradientField field = compute_gradient(preprocess(img, config), config.gradient_filter);
    return window_descriptor(field, 0, 0, config);
}

}  // namespace hogscan
