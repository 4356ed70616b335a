#pragma once
// Flat "key = value" text blocks: the HogConfig serialization embedded in
// model files and emitted by the CLI, plus the generic parser behind them.

#include <charconv>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hogscan/error.hpp"
#include "hogscan/hog.hpp"

namespace hogscan {

// Shortest decimal that round-trips a 64-bit double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s, const std::string& field) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(field + ": not a number: '" + std::string(s) + "'");
    return v;
}

inline long parse_int(std::string_view s, const std::string& field) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(field + ": not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::string filter_name(GradientFilter f) {
    return f == GradientFilter::OneDDerivative ? "1d" : "sobel";
}

inline GradientFilter filter_from_name(std::string_view s) {
    if (s == "1d") return GradientFilter::OneDDerivative;
    if (s == "sobel") return GradientFilter::Sobel;
    throw ParseError("gradient_filter: unknown value '" + std::string(s) +
                     "' (want 1d or sobel)");
}

inline std::string gamma_value(const std::optional<double>& gamma) {
    return gamma ? format_double(*gamma) : "off";
}

inline std::optional<double> gamma_from_value(std::string_view s) {
    if (s == "off") return std::nullopt;
    return parse_double(s, "gamma");
}

// Fixed key order; part of the model file contract.
inline std::string config_to_kv(const HogConfig& c) {
    std::string out;
    auto emit = [&](const char* k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    emit("window_width", std::to_string(c.window_width));
    emit("window_height", std::to_string(c.window_height));
    emit("cell_size", std::to_string(c.cell_size));
    emit("block_size", std::to_string(c.block_size));
    emit("block_stride", std::to_string(c.block_stride));
    emit("bin_count", std::to_string(c.bin_count));
    emit("bin_width_degrees", format_double(c.bin_width_degrees()));
    emit("epsilon", format_double(c.epsilon));
    emit("gamma", gamma_value(c.gamma));
    emit("gradient_filter", filter_name(c.gradient_filter));
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace detail

// Splits "key = value". Returns nullopt for blank lines and '#' comments.
inline std::optional<std::pair<std::string, std::string>> parse_kv_line(
    std::string_view line, std::size_t line_no) {
    std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') return std::nullopt;
    std::size_t eq = t.find('=');
    if (eq == std::string_view::npos)
        throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key(detail::trim(t.substr(0, eq)));
    std::string value(detail::trim(t.substr(eq + 1)));
    if (key.empty())
        throw ParseError("line " + std::to_string(line_no) + ": empty key");
    return std::make_pair(std::move(key), std::move(value));
}

inline std::vector<std::pair<std::string, std::string>> parse_kv_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = (nl == std::string_view::npos) ? std::string_view{} : text.substr(nl + 1);
        if (auto kv = parse_kv_line(line, line_no)) out.push_back(std::move(*kv));
    }
    return out;
}

// Applies one key to a HogConfig. Returns false if the key is not a config
// key; bin_width_degrees is accepted and checked against bin_count later.
inline bool apply_config_key(HogConfig& c, const std::string& key, const std::string& value,
                             double* bin_width_seen = nullptr) {
    if (key == "window_width") c.window_width = static_cast<int>(parse_int(value, key));
    else if (key == "window_height") c.window_height = static_cast<int>(parse_int(value, key));
    else if (key == "cell_size") c.cell_size = static_cast<int>(parse_int(value, key));
    else if (key == "block_size") c.block_size = static_cast<int>(parse_int(value, key));
    else if (key == "block_stride") c.block_stride = static_cast<int>(parse_int(value, key));
    else if (key == "bin_count") c.bin_count = static_cast<int>(parse_int(value, key));
    else if (key == "bin_width_degrees") {
        double w = parse_double(value, key);
        if (bin_width_seen) *bin_width_seen = w;
    } else if (key == "epsilon") c.epsilon = parse_double(value, key);
    else if (key == "gamma") c.gamma = gamma_from_value(value);
    else if (key == "gradient_filter") c.gradient_filter = filter_from_name(value);
    else return false;
    return true;
}

}  // namespace hogscan
