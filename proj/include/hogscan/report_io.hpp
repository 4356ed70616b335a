#pragma once
// Emitters for the structured outputs: detection records as JSON lines or
// CSV, EvalReports as JSON documents or CSV rows, sweep tables as CSV.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hogscan/config_io.hpp"
#include "hogscan/detect.hpp"
#include "hogscan/eval.hpp"

namespace hogscan {

inline nlohmann::ordered_json config_json(const HogConfig& c) {
    nlohmann::ordered_json j;
    j["window_width"] = c.window_width;
    j["window_height"] = c.window_height;
    j["cell_size"] = c.cell_size;
    j["block_size"] = c.block_size;
    j["block_stride"] = c.block_stride;
    j["bin_count"] = c.bin_count;
    j["bin_width_degrees"] = c.bin_width_degrees();
    j["epsilon"] = c.epsilon;
    if (c.gamma) j["gamma"] = *c.gamma;
    else j["gamma"] = "off";
    j["gradient_filter"] = filter_name(c.gradient_filter);
    return j;
}

inline nlohmann::ordered_json params_json(const DetectParams& p) {
    nlohmann::ordered_json j;
    j["tau"] = p.tau;
    j["scale_step"] = p.scale_step;
    j["nms_overlap"] = p.nms_overlap;
    j["nms_enabled"] = p.nms_enabled;
    j["window_stride"] = p.window_stride;
    return j;
}

// One JSON object per line: image, x, y, w, h, score, scale.
inline void write_detections_jsonl(std::ostream& out, std::string_view image_name,
                                   const std::vector<Detection>& detections) {
    for (const auto& d : detections) {
        nlohmann::ordered_json j;
        j["image"] = std::string(image_name);
        j["x"] = d.box.x;
        j["y"] = d.box.y;
        j["w"] = d.box.width;
        j["h"] = d.box.height;
        j["score"] = d.score;
        j["scale"] = d.scale;
        out << j.dump() << '\n';
    }
}

inline void write_detections_csv(std::ostream& out, std::string_view image_name,
                                 const std::vector<Detection>& detections,
                                 bool header = true) {
    if (header) out << "image,x,y,w,h,score,scale\n";
    for (const auto& d : detections)
        out << image_name << ',' << d.box.x << ',' << d.box.y << ',' << d.box.width << ','
            << d.box.height << ',' << format_double(d.score) << ','
            << format_double(d.scale) << '\n';
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["images"] = r.images;
    j["targets"] = r.targets;
    j["detected_targets"] = r.detected_targets;
    j["false_detections"] = r.false_detections;
    j["detection_rate"] = r.detection_rate;
    j["detection_rate_pct"] = percent_round(r.detection_rate);
    j["false_rate"] = r.false_rate;
    j["false_rate_pct"] = percent_round(r.false_rate);
    j["mean_ms_per_image"] = r.mean_ms_per_image;
    nlohmann::ordered_json phases;
    phases["preprocess_ms"] = r.mean_phase_ms.preprocess_ms;
    phases["pyramid_ms"] = r.mean_phase_ms.pyramid_ms;
    phases["gradient_ms"] = r.mean_phase_ms.gradient_ms;
    phases["scan_ms"] = r.mean_phase_ms.scan_ms;
    phases["nms_ms"] = r.mean_phase_ms.nms_ms;
    j["mean_phase_ms"] = phases;
    j["config"] = config_json(r.config);
    j["params"] = params_json(r.params);
    nlohmann::ordered_json errs = nlohmann::ordered_json::array();
    for (const auto& e : r.errors) {
        nlohmann::ordered_json je;
        je["image"] = e.image;
        je["error"] = e.message;
        errs.push_back(je);
    }
    j["errors"] = errs;
    return j;
}

inline std::string report_to_json(const EvalReport& r) { return report_json(r).dump(2); }

inline void write_report_csv(std::ostream& out, const EvalReport& r, bool header = true) {
    if (header)
        out << "images,targets,detected,detection_rate_pct,false_detections,"
               "false_rate_pct,mean_ms\n";
    out << r.images << ',' << r.targets << ',' << r.detected_targets << ','
        << percent_round(r.detection_rate) << ',' << r.false_detections << ','
        << percent_round(r.false_rate) << ',' << format_double(r.mean_ms_per_image) << '\n';
}

// Header row names the axis; rows that failed carry the error text.
inline void write_sweep_csv(std::ostream& out, SweepAxis axis,
                            const std::vector<SweepRow>& rows) {
    out << axis_name(axis)
        << ",detected,detection_rate_pct,false_positives,false_rate_pct,mean_ms,error\n";
    for (const auto& row : rows) {
        out << row.value << ',';
        if (row.report) {
            const EvalReport& r = *row.report;
            out << r.detected_targets << ',' << percent_round(r.detection_rate) << ','
                << r.false_detections << ',' << percent_round(r.false_rate) << ','
                << format_double(r.mean_ms_per_image) << ',';
        } else {
            out << ",,,,,";
        }
        // Error text goes in the last column; commas are scrubbed to keep rows flat.
        std::string err = row.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        out << err << '\n';
    }
}

}  // namespace hogscan
