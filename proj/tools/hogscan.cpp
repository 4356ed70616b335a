// hogscan: train / detect / eval / sweep / describe front end.
//
// Exit codes: 0 success, 1 usage error (flags, config file), 2 data error
// (images, model files, annotations).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hogscan/config_io.hpp"
#include "hogscan/detect.hpp"
#include "hogscan/error.hpp"
#include "hogscan/eval.hpp"
#include "hogscan/hog.hpp"
#include "hogscan/raster.hpp"
#include "hogscan/report_io.hpp"
#include "hogscan/svm.hpp"

namespace fs = std::filesystem;
using namespace hogscan;

namespace {

// Bad flag or config-file value; anything wrong with the data itself stays a
// hogscan::Error and exits 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

struct Settings {
    HogConfig config;
    DetectParams params;
    TrainParams train;
    int neg_per_image = 10;
};

void apply_settings_key(Settings& s, const std::string& key, const std::string& value,
                        bool allow_geometry) {
    if (apply_config_key(s.config, key, value)) {
        if (!allow_geometry)
            throw ParseError("config key '" + key +
                             "': the model file fixes the feature geometry");
        return;
    }
    if (key == "tau") s.params.tau = parse_double(value, key);
    else if (key == "scale_step") s.params.scale_step = parse_double(value, key);
    else if (key == "nms_overlap") s.params.nms_overlap = parse_double(value, key);
    else if (key == "nms_enabled") {
        if (value == "true" || value == "1") s.params.nms_enabled = true;
        else if (value == "false" || value == "0") s.params.nms_enabled = false;
        else throw ParseError("nms_enabled: want true|false, got '" + value + "'");
    } else if (key == "window_stride") {
        s.params.window_stride = static_cast<int>(parse_int(value, key));
    } else if (key == "train_c") s.train.C = parse_double(value, key);
    else if (key == "train_epochs") s.train.epochs = static_cast<int>(parse_int(value, key));
    else if (key == "train_eta0") s.train.eta0 = parse_double(value, key);
    else if (key == "train_seed") {
        s.train.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "neg_per_image") {
        s.neg_per_image = static_cast<int>(parse_int(value, key));
    } else {
        throw ParseError("unknown config key '" + key + "'");
    }
}

// Settings = defaults, overridden by the config file. Every problem here is a
// usage error: the config file extends the command line.
Settings resolve_settings(const std::string& config_path, bool allow_geometry) {
    Settings s;
    if (config_path.empty()) return s;
    try {
        for (const auto& [key, value] : parse_kv_text(read_text(config_path)))
            apply_settings_key(s, key, value, allow_geometry);
    } catch (const Error& e) {
        throw UsageError(std::string(e.what()) + " (in " + config_path + ")");
    }
    return s;
}

void check_usage(const Settings& s, bool with_geometry) {
    try {
        if (with_geometry) validate(s.config);
        validate(s.params);
        if (!(s.train.C > 0)) throw ParamError("train_c must be > 0");
        if (s.train.epochs < 1) throw ParamError("train_epochs must be >= 1");
        if (!(s.train.eta0 > 0)) throw ParamError("train_eta0 must be > 0");
        if (s.neg_per_image < 1) throw ParamError("neg_per_image must be >= 1");
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

void echo_params(std::ostream& out, const DetectParams& p) {
    out << "tau = " << format_double(p.tau) << "\n"
        << "scale_step = " << format_double(p.scale_step) << "\n"
        << "nms_overlap = " << format_double(p.nms_overlap) << "\n"
        << "nms_enabled = " << (p.nms_enabled ? "true" : "false") << "\n"
        << "window_stride = " << p.window_stride << "\n";
}

void echo_train(std::ostream& out, const TrainParams& t, int neg_per_image) {
    out << "train_c = " << format_double(t.C) << "\n"
        << "train_epochs = " << t.epochs << "\n"
        << "train_eta0 = " << format_double(t.eta0) << "\n"
        << "train_seed = " << t.seed << "\n"
        << "neg_per_image = " << neg_per_image << "\n";
}

GrayImage crop(const GrayImage& img, int x, int y, int w, int h) {
    GrayImage out(w, h);
    for (int row = 0; row < h; ++row)
        std::copy_n(&img.pixels[static_cast<std::size_t>(y + row) * img.width + x], w,
                    &out.pixels[static_cast<std::size_t>(row) * w]);
    return out;
}

bool image_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e == ".pgm" || e == ".ppm";
}

// Sorted so runs are reproducible regardless of directory enumeration order.
std::vector<fs::path> list_images(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && image_ext(entry.path()))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

GrayImage load_gray(const fs::path& path) {
    try {
        return grayscale_of(decode_image(read_text(path)));
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    }
}

// Window-sized crops from one class directory. Window-sized images pass
// through; larger ones contribute neg_per_image seeded random windows when
// sampling is allowed; smaller ones are skipped with a warning.
std::vector<GrayImage> load_windows(const fs::path& dir, const HogConfig& config,
                                    bool sample_larger, int per_image, std::mt19937_64& rng,
                                    const char* class_name) {
    std::vector<GrayImage> windows;
    for (const auto& path : list_images(dir)) {
        GrayImage img = load_gray(path);
        if (img.width == config.window_width && img.height == config.window_height) {
            windows.push_back(std::move(img));
            continue;
        }
        if (!sample_larger)
            throw Error(path.string() + ": is " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + ", expected window-sized " +
                        std::to_string(config.window_width) + "x" +
                        std::to_string(config.window_height));
        if (img.width < config.window_width || img.height < config.window_height) {
            std::cerr << "warning: " << path.string() << ": smaller than the "
                      << config.window_width << "x" << config.window_height
                      << " window, skipped\n";
            continue;
        }
        std::cerr << class_name << ": " << path.filename().string() << ": sampling "
                  << per_image << " windows\n";
        for (int i = 0; i < per_image; ++i) {
            int x = static_cast<int>(rng() % (img.width - config.window_width + 1));
            int y = static_cast<int>(rng() % (img.height - config.window_height + 1));
            windows.push_back(crop(img, x, y, config.window_width, config.window_height));
        }
    }
    if (windows.empty())
        throw Error(std::string(class_name) + ": no usable training images in " +
                    dir.string());
    return windows;
}

std::vector<TrainSample> make_samples(const std::vector<GrayImage>& positives,
                                      const std::vector<GrayImage>& negatives,
                                      const HogConfig& config) {
    std::vector<TrainSample> samples;
    samples.reserve(positives.size() + negatives.size());
    for (const auto& img : positives)
        samples.push_back({descriptor_for_window_image(img, config), +1});
    for (const auto& img : negatives)
        samples.push_back({descriptor_for_window_image(img, config), -1});
    return samples;
}

LinearModel load_model_file(const fs::path& path) {
    try {
        return load_model(read_text(path));
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

int run_train(const std::string& pos_dir, const std::string& neg_dir,
              const std::string& out_path, const std::string& config_path) {
    Settings s = resolve_settings(config_path, true);
    check_usage(s, true);

    std::cerr << "# resolved configuration\n" << config_to_kv(s.config);
    echo_train(std::cerr, s.train, s.neg_per_image);

    std::mt19937_64 rng(s.train.seed);
    auto positives = load_windows(pos_dir, s.config, false, 0, rng, "positives");
    auto negatives =
        load_windows(neg_dir, s.config, true, s.neg_per_image, rng, "negatives");
    std::cerr << "training on " << positives.size() << " positives, " << negatives.size()
              << " negatives\n";

    LinearModel model = train(make_samples(positives, negatives, s.config), s.train, s.config);
    write_text(out_path, save_model(model));
    std::cerr << "wrote " << out_path << " (" << model.weights.size()
              << " weights, rho = " << format_double(model.rho) << ")\n";
    return 0;
}

int run_detect(const std::string& model_path, const std::string& image_path,
               const std::string& out_path, const std::string& config_path,
               const std::optional<double>& tau_flag, const std::string& format) {
    if (format != "jsonl" && format != "csv")
        throw UsageError("--format: want jsonl or csv, got '" + format + "'");
    Settings s = resolve_settings(config_path, false);
    if (tau_flag) s.params.tau = *tau_flag;
    check_usage(s, false);

    LinearModel model = load_model_file(model_path);
    std::cerr << "# resolved configuration\n" << config_to_kv(model.config);
    echo_params(std::cerr, s.params);

    GrayImage img = load_gray(image_path);
    auto detections = detect(img, model, s.params);
    std::cerr << detections.size() << " detections\n";

    std::ostringstream out;
    if (format == "csv") write_detections_csv(out, image_path, detections);
    else write_detections_jsonl(out, image_path, detections);
    if (out_path.empty()) std::cout << out.str();
    else write_text(out_path, out.str());
    return 0;
}

int run_eval(const std::string& model_path, const std::string& annotations_path,
             const std::string& images_root, const std::string& out_path,
             const std::string& csv_path, const std::string& config_path,
             const std::optional<double>& tau_flag) {
    Settings s = resolve_settings(config_path, false);
    if (tau_flag) s.params.tau = *tau_flag;
    check_usage(s, false);

    LinearModel model = load_model_file(model_path);
    std::cerr << "# resolved configuration\n" << config_to_kv(model.config);
    echo_params(std::cerr, s.params);

    auto dataset = parse_annotations(read_text(annotations_path));
    EvalReport report = evaluate(dataset, images_root, model, s.params);
    for (const auto& e : report.errors)
        std::cerr << "warning: " << e.image << ": " << e.message << "\n";

    std::string json = report_to_json(report);
    json += '\n';
    if (out_path.empty()) std::cout << json;
    else write_text(out_path, json);
    if (!csv_path.empty()) {
        std::ostringstream csv;
        write_report_csv(csv, report);
        write_text(csv_path, csv.str());
    }
    std::cerr << "detected " << report.detected_targets << "/" << report.targets << " ("
              << percent_round(report.detection_rate) << "%), " << report.false_detections
              << " false detections\n";
    return 0;
}

int run_sweep(const std::string& axis_str, const std::string& values_str,
              const std::string& annotations_path, const std::string& images_root,
              const std::string& pos_dir, const std::string& neg_dir,
              const std::string& out_path, const std::string& config_path) {
    SweepAxis axis;
    try {
        axis = axis_from_name(axis_str);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    std::vector<std::string> values;
    std::stringstream ss(values_str);
    for (std::string item; std::getline(ss, item, ',');) {
        std::string v(detail::trim(item));
        if (!v.empty()) values.push_back(v);
    }
    if (values.empty()) throw UsageError("--values: empty list");

    Settings s = resolve_settings(config_path, true);
    check_usage(s, true);
    std::cerr << "# resolved base configuration\n" << config_to_kv(s.config);
    echo_params(std::cerr, s.params);
    echo_train(std::cerr, s.train, s.neg_per_image);

    // Crops are loaded once; each row recomputes descriptors under its own
    // config, so geometry axes retrain from identical pixels.
    std::mt19937_64 rng(s.train.seed);
    auto positives = load_windows(pos_dir, s.config, false, 0, rng, "positives");
    auto negatives =
        load_windows(neg_dir, s.config, true, s.neg_per_image, rng, "negatives");
    auto dataset = parse_annotations(read_text(annotations_path));

    ModelProvider trainer = [&](const HogConfig& config) {
        return train(make_samples(positives, negatives, config), s.train, config);
    };
    auto rows = sweep(axis, values, s.config, s.params, dataset, images_root, trainer);

    std::ostringstream out;
    write_sweep_csv(out, axis, rows);
    if (out_path.empty()) std::cout << out.str();
    else write_text(out_path, out.str());
    for (const auto& row : rows)
        if (!row.error.empty())
            std::cerr << "warning: " << axis_str << " = " << row.value << ": " << row.error
                      << "\n";
    return 0;
}

int run_describe(const std::string& model_path) {
    LinearModel model = load_model_file(model_path);
    std::cout << config_to_kv(model.config);
    std::cout << "train_positives = " << model.meta.positives << "\n"
              << "train_negatives = " << model.meta.negatives << "\n";
    echo_train(std::cout, model.meta.params, 0);
    std::cout << "rho = " << format_double(model.rho) << "\n"
              << "weights = " << model.weights.size() << "\n"
              << "descriptor_len = " << descriptor_len(model.config) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-window human detection with HOG features and a linear SVM"};
    app.require_subcommand(1);

    std::string pos_dir, neg_dir, out_path, config_path;
    std::string model_path, image_path, annotations_path, images_root;
    std::string axis_str, values_str, csv_path;
    std::string format = "jsonl";
    double tau_value = 0.0;

    auto* train_cmd = app.add_subcommand("train", "Train a linear SVM on labeled crops");
    train_cmd->add_option("--pos", pos_dir, "Directory of window-sized positive crops")
        ->required();
    train_cmd->add_option("--neg", neg_dir, "Directory of negative crops or larger images")
        ->required();
    train_cmd->add_option("--out", out_path, "Model file to write")->required();
    train_cmd->add_option("--config", config_path, "key = value settings file");

    auto* detect_cmd = app.add_subcommand("detect", "Detect humans in one image");
    detect_cmd->add_option("--model", model_path, "Model file")->required();
    detect_cmd->add_option("--image", image_path, "PGM/PPM image")->required();
    auto* tau_opt = detect_cmd->add_option("--tau", tau_value, "Score threshold");
    detect_cmd->add_option("--out", out_path, "Detections file (default: stdout)");
    detect_cmd->add_option("--format", format, "jsonl|csv (default: jsonl)");
    detect_cmd->add_option("--config", config_path, "key = value settings file");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on an annotated dataset");
    eval_cmd->add_option("--model", model_path, "Model file")->required();
    eval_cmd->add_option("--annotations", annotations_path, "Annotations file")->required();
    eval_cmd->add_option("--images-root", images_root, "Directory annotation paths are relative to")
        ->required();
    eval_cmd->add_option("--out", out_path, "Report JSON file (default: stdout)");
    eval_cmd->add_option("--csv", csv_path, "Also write the report as CSV");
    auto* eval_tau_opt = eval_cmd->add_option("--tau", tau_value, "Score threshold");
    eval_cmd->add_option("--config", config_path, "key = value settings file");

    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate across one parameter axis");
    sweep_cmd->add_option("--axis", axis_str, "gamma|filter|cell_size|block_size|threshold")
        ->required();
    sweep_cmd->add_option("--values", values_str, "Comma-separated axis values")->required();
    sweep_cmd->add_option("--annotations", annotations_path, "Annotations file")->required();
    sweep_cmd->add_option("--images-root", images_root, "Directory annotation paths are relative to")
        ->required();
    sweep_cmd->add_option("--pos", pos_dir, "Directory of window-sized positive crops")
        ->required();
    sweep_cmd->add_option("--neg", neg_dir, "Directory of negative crops or larger images")
        ->required();
    sweep_cmd->add_option("--out", out_path, "Sweep CSV file (default: stdout)");
    sweep_cmd->add_option("--config", config_path, "key = value settings file");

    auto* describe_cmd = app.add_subcommand("describe", "Print a model's configuration");
    describe_cmd->add_option("--model", model_path, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(train_cmd))
            return run_train(pos_dir, neg_dir, out_path, config_path);
        if (app.got_subcommand(detect_cmd)) {
            std::optional<double> tau;
            if (tau_opt->count() > 0) tau = tau_value;
            return run_detect(model_path, image_path, out_path, config_path, tau, format);
        }
        if (app.got_subcommand(eval_cmd)) {
            std::optional<double> tau;
            if (eval_tau_opt->count() > 0) tau = tau_value;
            return run_eval(model_path, annotations_path, images_root, out_path, csv_path,
                            config_path, tau);
        }
        if (app.got_subcommand(sweep_cmd))
            return run_sweep(axis_str, values_str, annotations_path, images_root, pos_dir,
                             neg_dir, out_path, config_path);
        if (app.got_subcommand(describe_cmd)) return run_describe(model_path);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
