#pragma once
// Linear-kernel SVM: seeded stochastic subgradient training on the
// regularized hinge loss, scoring, and the versioned text model format.
//
// Objective: ||w||^2 / (2C) + sum_i max(0, 1 - y_i (w.x_i - rho)).
// Identical samples, params and seed give a bit-identical model.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hogscan/config_io.hpp"
#include "hogscan/error.hpp"
#include "hogscan/hog.hpp"

namespace hogscan {

struct TrainParams {
    double C = 0.01;      // regularization; larger = softer
    int epochs = 50;
    double eta0 = 1.0;    // inverse-time schedule: eta_t = eta0 / (1 + eta0*lambda*t)
    std::uint64_t seed = 42;

    bool operator==(const TrainParams&) const = default;
};

struct TrainMeta {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    TrainParams params;

    bool operator==(const TrainMeta&) const = default;
};

struct LinearModel {
    std::vector<double> weights;  // length = descriptor_len(config)
    double rho = 0.0;
    HogConfig config;
    TrainMeta meta;
};

struct TrainSample {
    Descriptor descriptor;
    int label = 0;  // -1 or +1
};

inline double score(const LinearModel& model, const Descriptor& x) {
    if (x.size() != model.weights.size())
        throw DimensionError("score: descriptor length " + std::to_string(x.size()) +
                             " != model length " + std::to_string(model.weights.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += model.weights[i] * x[i];
    return dot - model.rho;
}

inline double hinge_loss(const LinearModel& model, const std::vector<TrainSample>& samples) {
    double total = 0.0;
    for (const auto& s : samples)
        total += std::max(0.0, 1.0 - s.label * score(model, s.descriptor));
    return total;
}

inline double objective(const LinearModel& model, const std::vector<TrainSample>& samples,
                        double C) {
    double w2 = 0.0;
    for (double w : model.weights) w2 += w * w;
    return w2 / (2.0 * C) + hinge_loss(model, samples);
}

inline LinearModel train(const std::vector<TrainSample>& samples, const TrainParams& params,
                         const HogConfig& config) {
    const std::size_t dim = descriptor_len(config);
    if (!(params.C > 0) || !std::isfinite(params.C))
        throw TrainError("C must be a positive finite real");
    if (params.epochs < 1) throw TrainError("epochs must be >= 1");
    if (!(params.eta0 > 0) || !std::isfinite(params.eta0))
        throw TrainError("eta0 must be a positive finite real");

    std::size_t pos = 0, neg = 0;
    for (const auto& s : samples) {
        if (s.label == 1) ++pos;
        else if (s.label == -1) ++neg;
        else throw TrainError("labels must be -1 or +1");
        if (s.descriptor.size() != dim)
            throw TrainError("descriptor length " + std::to_string(s.descriptor.size()) +
                             " != descriptor_len(config) = " + std::to_string(dim));
    }
    if (pos == 0) throw TrainError("training set has no positive samples");
    if (neg == 0) throw TrainError("training set has no negative samples");

    LinearModel model;
    model.weights.assign(dim, 0.0);
    model.rho = 0.0;
    model.config = config;
    model.meta = TrainMeta{pos, neg, params};

    const std::size_t n = samples.size();
    const double lambda = 1.0 / (params.C * static_cast<double>(n));
    std::mt19937_64 rng(params.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::uint64_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        // Fisher-Yates on raw engine output, so the permutation sequence is
        // pinned by this code alone.
        for (std::size_t i = n - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(order[i], order[j]);
        }
        for (std::size_t k = 0; k < n; ++k) {
            const TrainSample& s = samples[order[k]];
            ++t;
            const double eta = params.eta0 / (1.0 + params.eta0 * lambda * t);
            double margin = s.label * score(model, s.descriptor);
            const double shrink = 1.0 - eta * lambda;  // > 0 for this schedule
            if (margin < 1.0) {
                for (std::size_t i = 0; i < dim; ++i)
                    model.weights[i] = shrink * model.weights[i] +
                                       eta * s.label * s.descriptor[i];
                model.rho -= eta * s.label;
            } else {
                for (std::size_t i = 0; i < dim; ++i) model.weights[i] *= shrink;
            }
        }
    }
    return model;
}

inline constexpr std::string_view kModelMagic = "hogscan-model v1";

inline std::string save_model(const LinearModel& model) {
    std::string out(kModelMagic);
    out += '\n';
    out += config_to_kv(model.config);
    out += "train_positives = " + std::to_string(model.meta.positives) + "\n";
    out += "train_negatives = " + std::to_string(model.meta.negatives) + "\n";
    out += "train_c = " + format_double(model.meta.params.C) + "\n";
    out += "train_epochs = " + std::to_string(model.meta.params.epochs) + "\n";
    out += "train_eta0 = " + format_double(model.meta.params.eta0) + "\n";
    out += "train_seed = " + std::to_string(model.meta.params.seed) + "\n";
    out += "rho = " + format_double(model.rho) + "\n";
    out += "weights = " + std::to_string(model.weights.size()) + "\n";
    for (double w : model.weights) {
        out += format_double(w);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::string_view next_line(std::string_view& text) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = (nl == std::string_view::npos) ? std::string_view{} : text.substr(nl + 1);
    return line;
}

}  // namespace detail

inline LinearModel load_model(std::string_view bytes) {
    std::string_view rest = bytes;
    std::string_view magic = detail::trim(detail::next_line(rest));
    if (magic != kModelMagic)
        throw LoadError("version: expected '" + std::string(kModelMagic) + "', got '" +
                        std::string(magic) + "'");

    LinearModel model;
    bool have_rho = false;
    double bin_width_seen = -1.0;
    long weight_count = -1;
    std::size_t line_no = 1;

    while (!rest.empty()) {
        ++line_no;
        std::string_view line = detail::next_line(rest);
        std::optional<std::pair<std::string, std::string>> kv;
        try {
            kv = parse_kv_line(line, line_no);
        } catch (const ParseError& e) {
            throw LoadError(e.what());
        }
        if (!kv) continue;
        const auto& [key, value] = *kv;
        try {
            if (apply_config_key(model.config, key, value, &bin_width_seen)) continue;
            if (key == "train_positives") model.meta.positives = parse_int(value, key);
            else if (key == "train_negatives") model.meta.negatives = parse_int(value, key);
            else if (key == "train_c") model.meta.params.C = parse_double(value, key);
            else if (key == "train_epochs") model.meta.params.epochs =
                static_cast<int>(parse_int(value, key));
            else if (key == "train_eta0") model.meta.params.eta0 = parse_double(value, key);
            else if (key == "train_seed") model.meta.params.seed =
                static_cast<std::uint64_t>(parse_int(value, key));
            else if (key == "rho") {
                model.rho = parse_double(value, key);
                have_rho = true;
            } else if (key == "weights") {
                weight_count = parse_int(value, key);
                break;
            } else {
                throw LoadError("unknown key '" + key + "'");
            }
        } catch (const ParseError& e) {
            throw LoadError(e.what());
        }
    }

    if (weight_count < 0) throw LoadError("weights: count line missing");
    if (!have_rho) throw LoadError("rho: missing");
    if (!std::isfinite(model.rho)) throw LoadError("rho: not finite");

    std::size_t expected;
    try {
        expected = descriptor_len(model.config);
    } catch (const ConfigError& e) {
        throw LoadError(std::string("config: ") + e.what());
    }
    if (static_cast<std::size_t>(weight_count) != expected)
        throw LoadError("weights: count " + std::to_string(weight_count) +
                        " != descriptor_len(config) = " + std::to_string(expected));
    if (bin_width_seen >= 0.0 &&
        std::fabs(bin_width_seen * model.config.bin_count - 180.0) > 1e-9)
        throw LoadError("bin_width_degrees: inconsistent with bin_count");

    model.weights.reserve(expected);
    while (model.weights.size() < expected) {
        if (rest.empty()) throw LoadError("weights: truncated after " +
                                          std::to_string(model.weights.size()) + " values");
        ++line_no;
        std::string_view line = detail::trim(detail::next_line(rest));
        if (line.empty()) continue;
        double w;
        try {
            w = parse_double(line, "weights");
        } catch (const ParseError& e) {
            throw LoadError(e.what());
        }
        if (!std::isfinite(w)) throw LoadError("weights: value not finite");
        model.weights.push_back(w);
    }
    return model;
}

}  // namespace hogscan
