#pragma once
// 8-bit raster images: binary PGM/PPM codec, grayscale conversion,
// gamma normalization and bilinear resizing.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hogscan/error.hpp"

namespace hogscan {

// Rounding convention used everywhere intensities or box coordinates are
// produced: round half up, then clamp.
inline int round_half_up(double v) {
    return static_cast<int>(std::floor(v + 0.5));
}

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(round_half_up(v), 0, 255));
}

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, width*height

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    bool operator==(const GrayImage&) const = default;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved r,g,b

    RgbImage() = default;
    RgbImage(int w, int h)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    const std::uint8_t* at(int x, int y) const {
        return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    std::uint8_t* at(int x, int y) {
        return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    bool operator==(const RgbImage&) const = default;
};

using DecodedImage = std::variant<GrayImage, RgbImage>;

namespace detail {

inline bool pnm_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

// Next header token, skipping whitespace and '#' comment lines.
inline std::string_view pnm_token(std::string_view bytes, std::size_t& pos) {
    for (;;) {
        while (pos < bytes.size() && pnm_space(bytes[pos])) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::size_t start = pos;
    while (pos < bytes.size() && !pnm_space(bytes[pos]) && bytes[pos] != '#') ++pos;
    return bytes.substr(start, pos - start);
}

inline int pnm_int(std::string_view bytes, std::size_t& pos, const char* field) {
    std::string_view tok = pnm_token(bytes, pos);
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw DecodeError(std::string("pnm header: bad ") + field);
    return value;
}

}  // namespace detail

// Decodes a binary PGM ("P5") or PPM ("P6") stream with maxval 255.
// Comment lines are accepted between header tokens.
inline DecodedImage decode_image(std::string_view bytes) {
    std::size_t pos = 0;
    std::string_view magic = detail::pnm_token(bytes, pos);
    if (magic != "P5" && magic != "P6")
        throw DecodeError("pnm header: bad magic (want P5 or P6)");

    int w = detail::pnm_int(bytes, pos, "width");
    int h = detail::pnm_int(bytes, pos, "height");
    if (w < 1 || h < 1)
        throw DecodeError("pnm header: width and height must be >= 1");
    if (static_cast<long long>(w) * h > 100'000'000LL)
        throw DecodeError("pnm header: image too large");

    int maxval = detail::pnm_int(bytes, pos, "maxval");
    if (maxval != 255)
        throw DecodeError("pnm header: maxval must be 255, got " + std::to_string(maxval));

    // Exactly one whitespace byte separates the header from the payload.
    if (pos >= bytes.size() || !detail::pnm_space(bytes[pos]))
        throw DecodeError("pnm header: missing separator before pixel payload");
    ++pos;

    std::size_t channels = (magic == "P5") ? 1 : 3;
    std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (bytes.size() - pos < need)
        throw DecodeError("pnm payload: truncated (have " +
                          std::to_string(bytes.size() - pos) + " bytes, need " +
                          std::to_string(need) + ")");

    if (magic == "P5") {
        GrayImage img(w, h);
        std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data()) + pos, need,
                    img.pixels.begin());
        return img;
    }
    RgbImage img(w, h);
    std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data()) + pos, need,
                img.pixels.begin());
    return img;
}

inline std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

// Luma conversion with the standard 0.299/0.587/0.114 weights.
inline GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const std::uint8_t* p = img.pixels.data();
    for (std::size_t i = 0; i < out.pixels.size(); ++i, p += 3)
        out.pixels[i] = clamp_u8(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    return out;
}

// Returns the grayscale view of either decode_image result.
inline GrayImage grayscale_of(const DecodedImage& decoded) {
    if (const auto* g = std::get_if<GrayImage>(&decoded)) return *g;
    return to_grayscale(std::get<RgbImage>(decoded));
}

// out = round(255 * (in/255)^gamma); gamma = 1 is the identity.
inline GrayImage gamma_correct(const GrayImage& img, double gamma) {
    if (!(gamma > 0) || !std::isfinite(gamma))
        throw ParamError("gamma must be a positive finite real, got " + std::to_string(gamma));

    std::uint8_t lut[256];
    for (int v = 0; v < 256; ++v) {
        lut[v] = (gamma == 1.0) ? static_cast<std::uint8_t>(v)
                                : clamp_u8(255.0 * std::pow(v / 255.0, gamma));
    }
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = lut[img.pixels[i]];
    return out;
}

// Bilinear resize with half-pixel-center coordinate mapping.
inline GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1)
        throw ParamError("resize_bilinear: output dimensions must be >= 1");
    if (out_width == img.width && out_height == img.height) return img;

    GrayImage out(out_width, out_height);
    const double rx = static_cast<double>(img.width) / out_width;
    const double ry = static_cast<double>(img.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        double sy = std::clamp((y + 0.5) * ry - 0.5, 0.0, img.height - 1.0);
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, img.height - 1);
        double fy = sy - y0;
        for (int x = 0; x < out_width; ++x) {
            double sx = std::clamp((x + 0.5) * rx - 0.5, 0.0, img.width - 1.0);
            int x0 = static_cast<int>(sx);
            int x1 = std::min(x0 + 1, img.width - 1);
            double fx = sx - x0;
            double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
            double bot = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
            out.at(x, y) = clamp_u8((1.0 - fy) * top + fy * bot);
        }
    }
    return out;
}

}  // namespace hogscan
