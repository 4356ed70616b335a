#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "hogscan/hog.hpp"
#include "hogscan/raster.hpp"
#include "hogscan/svm.hpp"
#include "synthetic.hpp"

using namespace hogscan;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

fs::path fresh_dir(const char* tag) {
    static std::mt19937_64 rng(std::random_device{}());
    fs::path dir = fs::temp_directory_path() /
                   ("hogscan_cli_" + std::string(tag) + "_" + std::to_string(rng()));
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const fs::path& dir, const std::string& args) {
    fs::path out = dir / "_stdout.txt";
    fs::path err = dir / "_stderr.txt";
    std::string cmd = std::string(HOGSCAN_CLI_PATH) + " " + args + " > " + out.string() +
                      " 2> " + err.string();
    int rc = std::system(cmd.c_str());
    int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return {code, slurp(out), slurp(err)};
}

HogConfig tiny_config() {
    HogConfig c;
    c.window_width = 16;
    c.window_height = 16;
    c.block_size = 16;
    c.block_stride = 8;
    c.gamma = std::nullopt;
    return c;
}

const char* kTinyConfigText =
    "window_width = 16\n"
    "window_height = 16\n"
    "block_size = 16\n"
    "block_stride = 8\n"
    "gamma = off\n";

GrayImage edge_image(int shade_left, int shade_right) {
    GrayImage img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(x < 8 ? shade_left : shade_right);
    return img;
}

// Writes positive crops (strong vertical edge) and negative crops (flat-ish)
// plus the window-geometry config file. Returns the config file path.
fs::path make_corpus(const fs::path& dir) {
    fs::create_directories(dir / "pos");
    fs::create_directories(dir / "neg");
    std::mt19937_64 rng(7);
    for (int i = 0; i < 6; ++i) {
        synth::write_pgm(dir / "pos" / ("p" + std::to_string(i) + ".pgm"),
                         edge_image(20 + i, 220 - i));
        GrayImage flat(16, 16);
        for (auto& p : flat.pixels) p = static_cast<std::uint8_t>(120 + rng() % 8);
        synth::write_pgm(dir / "neg" / ("n" + std::to_string(i) + ".pgm"), flat);
    }
    fs::path cfg = dir / "tiny.cfg";
    spit(cfg, kTinyConfigText);
    return cfg;
}

void write_zero_model(const fs::path& path, const HogConfig& config, double rho) {
    LinearModel m;
    m.config = config;
    m.weights.assign(descriptor_len(config), 0.0);
    m.rho = rho;
    spit(path, save_model(m));
}

std::string q(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("cli usage errors exit 1") {
    fs::path dir = fresh_dir("usage");
    CHECK(run_cli(dir, "").code == 1);
    CHECK(run_cli(dir, "frobnicate").code == 1);
    CHECK(run_cli(dir, "describe").code == 1);            // missing --model
    CHECK(run_cli(dir, "detect --model x").code == 1);    // missing --image
    CHECK(run_cli(dir, "describe --model x --bogus").code == 1);
    fs::remove_all(dir);
}

TEST_CASE("cli describe") {
    fs::path dir = fresh_dir("describe");
    fs::path model = dir / "preset.model";
    write_zero_model(model, HogConfig::block16_preset(), 0.0);

    auto r = run_cli(dir, "describe --model " + q(model));
    CHECK(r.code == 0);
    CHECK(r.out.find("descriptor_len = 3780") != std::string::npos);
    CHECK(r.out.find("window_width = 64") != std::string::npos);
    CHECK(r.out.find("block_size = 16") != std::string::npos);
    CHECK(r.out.find("rho = 0") != std::string::npos);

    CHECK(run_cli(dir, "describe --model " + q(dir / "absent.model")).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli detect on a blank image writes an empty detections file") {
    fs::path dir = fresh_dir("blank");
    fs::path model = dir / "zero.model";
    write_zero_model(model, HogConfig(), 0.0);  // default 64x128 preset, score 0 everywhere
    fs::path image = dir / "blank.pgm";
    synth::write_pgm(image, GrayImage(320, 240, 128));
    fs::path out = dir / "detections.jsonl";

    auto r = run_cli(dir, "detect --model " + q(model) + " --image " + q(image) +
                              " --tau 1.05 --out " + q(out));
    CHECK(r.code == 0);
    CHECK(fs::exists(out));
    CHECK(slurp(out).empty());
    // the resolved configuration is echoed
    CHECK(r.err.find("window_width") != std::string::npos);
    CHECK(r.err.find("tau") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli detect output formats and tau override") {
    fs::path dir = fresh_dir("formats");
    fs::path model = dir / "m.model";
    write_zero_model(model, tiny_config(), -5.0);  // every window scores 5
    fs::path image = dir / "img.pgm";
    synth::write_pgm(image, GrayImage(16, 16, 100));

    SECTION("jsonl record content") {
        auto r = run_cli(dir, "detect --model " + q(model) + " --image " + q(image));
        REQUIRE(r.code == 0);
        std::istringstream lines(r.out);
        std::string line;
        REQUIRE(std::getline(lines, line));
        auto j = nlohmann::json::parse(line);
        CHECK(j["image"] == q(image));
        CHECK(j["x"] == 0);
        CHECK(j["y"] == 0);
        CHECK(j["w"] == 16);
        CHECK(j["h"] == 16);
        CHECK(j["score"] == 5.0);
        CHECK(j["scale"] == 1.0);
        CHECK_FALSE(std::getline(lines, line));  // single window, one record
    }

    SECTION("csv format has a header") {
        auto r = run_cli(dir, "detect --model " + q(model) + " --image " + q(image) +
                                  " --format csv");
        REQUIRE(r.code == 0);
        CHECK(r.out.rfind("image,x,y,w,h,score,scale\n", 0) == 0);
        CHECK(r.out.find("img.pgm,0,0,16,16,5,1") != std::string::npos);
    }

    SECTION("tau above the score suppresses the detection") {
        auto r = run_cli(dir, "detect --model " + q(model) + " --image " + q(image) +
                                  " --tau 10");
        CHECK(r.code == 0);
        CHECK(r.out.empty());
    }

    SECTION("bad format value") {
        auto r = run_cli(dir, "detect --model " + q(model) + " --image " + q(image) +
                                  " --format xml");
        CHECK(r.code == 1);
        CHECK(r.err.find("--format") != std::string::npos);
    }

    SECTION("missing image exits 2") {
        auto r = run_cli(dir, "detect --model " + q(model) + " --image " +
                                  q(dir / "nope.pgm"));
        CHECK(r.code == 2);
    }
    fs::remove_all(dir);
}

TEST_CASE("cli train, describe, and byte-identical reruns") {
    fs::path dir = fresh_dir("train");
    fs::path cfg = make_corpus(dir);

    std::string base = "train --pos " + q(dir / "pos") + " --neg " + q(dir / "neg") +
                       " --config " + q(cfg) + " --out ";
    auto r1 = run_cli(dir, base + q(dir / "a.model"));
    REQUIRE(r1.code == 0);
    CHECK(r1.err.find("window_width = 16") != std::string::npos);
    CHECK(r1.err.find("train_c") != std::string::npos);

    auto r2 = run_cli(dir, base + q(dir / "b.model"));
    REQUIRE(r2.code == 0);
    std::string a = slurp(dir / "a.model");
    std::string b = slurp(dir / "b.model");
    CHECK(!a.empty());
    CHECK(a == b);

    auto d = run_cli(dir, "describe --model " + q(dir / "a.model"));
    CHECK(d.code == 0);
    CHECK(d.out.find("descriptor_len = 36") != std::string::npos);
    CHECK(d.out.find("train_positives = 6") != std::string::npos);
    CHECK(d.out.find("train_negatives = 6") != std::string::npos);

    // the trained model runs end to end through detect
    fs::path out = dir / "hits.jsonl";
    auto rd = run_cli(dir, "detect --model " + q(dir / "a.model") + " --image " +
                               q(dir / "pos" / "p0.pgm") + " --tau -1000 --out " + q(out));
    CHECK(rd.code == 0);
    CHECK(!slurp(out).empty());
    fs::remove_all(dir);
}

TEST_CASE("cli train failure modes") {
    fs::path dir = fresh_dir("trainfail");
    fs::path cfg = make_corpus(dir);
    fs::create_directories(dir / "empty");

    SECTION("empty positives directory exits 2 and names the class") {
        auto r = run_cli(dir, "train --pos " + q(dir / "empty") + " --neg " + q(dir / "neg") +
                                  " --config " + q(cfg) + " --out " + q(dir / "m.model"));
        CHECK(r.code == 2);
        CHECK(r.err.find("positives") != std::string::npos);
    }

    SECTION("nonexistent negatives directory exits 2") {
        auto r = run_cli(dir, "train --pos " + q(dir / "pos") + " --neg " + q(dir / "nope") +
                                  " --config " + q(cfg) + " --out " + q(dir / "m.model"));
        CHECK(r.code == 2);
        CHECK(r.err.find("not a directory") != std::string::npos);
    }

    SECTION("wrong-size positive crop exits 2 and names the file") {
        synth::write_pgm(dir / "pos" / "wrong.pgm", GrayImage(20, 16, 50));
        auto r = run_cli(dir, "train --pos " + q(dir / "pos") + " --neg " + q(dir / "neg") +
                                  " --config " + q(cfg) + " --out " + q(dir / "m.model"));
        CHECK(r.code == 2);
        CHECK(r.err.find("wrong.pgm") != std::string::npos);
        CHECK(r.err.find("20x16") != std::string::npos);
    }

    SECTION("unknown config key exits 1") {
        spit(dir / "bad.cfg", "window_width = 16\nmystery = 1\n");
        auto r = run_cli(dir, "train --pos " + q(dir / "pos") + " --neg " + q(dir / "neg") +
                                  " --config " + q(dir / "bad.cfg") + " --out " +
                                  q(dir / "m.model"));
        CHECK(r.code == 1);
        CHECK(r.err.find("mystery") != std::string::npos);
        CHECK(r.err.find("bad.cfg") != std::string::npos);
    }

    SECTION("invalid geometry in config exits 1") {
        spit(dir / "bad.cfg", "window_width = 17\n");
        auto r = run_cli(dir, "train --pos " + q(dir / "pos") + " --neg " + q(dir / "neg") +
                                  " --config " + q(dir / "bad.cfg") + " --out " +
                                  q(dir / "m.model"));
        CHECK(r.code == 1);
    }
    fs::remove_all(dir);
}

TEST_CASE("cli detect rejects geometry keys in --config") {
    fs::path dir = fresh_dir("geom");
    fs::path model = dir / "m.model";
    write_zero_model(model, tiny_config(), 0.0);
    fs::path image = dir / "img.pgm";
    synth::write_pgm(image, GrayImage(16, 16, 100));
    spit(dir / "geom.cfg", "cell_size = 4\n");

    auto r = run_cli(dir, "detect --model " + q(model) + " --image " + q(image) +
                              " --config " + q(dir / "geom.cfg"));
    CHECK(r.code == 1);
    CHECK(r.err.find("fixes the feature geometry") != std::string::npos);

    spit(dir / "tau.cfg", "tau = 9.5\nnms_enabled = false\n");
    auto r2 = run_cli(dir, "detect --model " + q(model) + " --image " + q(image) +
                               " --config " + q(dir / "tau.cfg"));
    CHECK(r2.code == 0);
    CHECK(r2.err.find("tau = 9.5") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli eval") {
    fs::path dir = fresh_dir("eval");
    fs::path model = dir / "m.model";
    write_zero_model(model, tiny_config(), -2.0);  // every window scores 2
    synth::write_pgm(dir / "img1.pgm", GrayImage(16, 16, 90));
    synth::write_pgm(dir / "img2.pgm", GrayImage(16, 16, 150));
    spit(dir / "ann.txt",
         "img1.pgm 1 0 0 16 16\n"
         "img2.pgm 1 2 2 10 10\n"
         "missing.pgm 1 0 0 16 16\n");

    std::string base = "eval --model " + q(model) + " --annotations " + q(dir / "ann.txt") +
                       " --images-root " + q(dir);

    SECTION("json report") {
        auto r = run_cli(dir, base + " --out " + q(dir / "report.json") + " --csv " +
                                  q(dir / "report.csv"));
        REQUIRE(r.code == 0);
        auto j = nlohmann::json::parse(slurp(dir / "report.json"));
        CHECK(j["images"] == 2);
        CHECK(j["targets"] == 2);
        CHECK(j["detected_targets"] == 2);
        CHECK(j["false_detections"] == 0);
        CHECK(j["detection_rate_pct"] == 100);
        CHECK(j["config"]["window_width"] == 16);
        CHECK(j["params"]["tau"] == 1.05);
        REQUIRE(j["errors"].size() == 1);
        CHECK(j["errors"][0]["image"] == "missing.pgm");

        std::string csv = slurp(dir / "report.csv");
        CHECK(csv.rfind("images,targets,detected,detection_rate_pct,false_detections,"
                        "false_rate_pct,mean_ms\n",
                        0) == 0);
        CHECK(csv.find("\n2,2,2,100,0,0,") != std::string::npos);

        CHECK(r.err.find("missing.pgm") != std::string::npos);  // warning surfaced
        CHECK(r.err.find("detected 2/2") != std::string::npos);
    }

    SECTION("tau flag flows through") {
        auto r = run_cli(dir, base + " --tau 5 --out " + q(dir / "r.json"));
        REQUIRE(r.code == 0);
        auto j = nlohmann::json::parse(slurp(dir / "r.json"));
        CHECK(j["detected_targets"] == 0);
        CHECK(j["params"]["tau"] == 5.0);
    }

    SECTION("bad annotations exit 2") {
        spit(dir / "bad.txt", "img1.pgm -1\n");
        auto r = run_cli(dir, "eval --model " + q(model) + " --annotations " +
                                  q(dir / "bad.txt") + " --images-root " + q(dir));
        CHECK(r.code == 2);
        CHECK(r.err.find("line 1") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("cli sweep") {
    fs::path dir = fresh_dir("sweep");
    fs::path cfg = make_corpus(dir);
    synth::write_pgm(dir / "img1.pgm", edge_image(25, 210));
    spit(dir / "ann.txt", "img1.pgm 1 0 0 16 16\n");

    std::string base = "sweep --annotations " + q(dir / "ann.txt") + " --images-root " +
                       q(dir) + " --pos " + q(dir / "pos") + " --neg " + q(dir / "neg") +
                       " --config " + q(cfg) + " ";

    SECTION("threshold axis emits one csv row per value") {
        auto r = run_cli(dir, base + "--axis threshold --values 0.5,100");
        REQUIRE(r.code == 0);
        std::istringstream lines(r.out);
        std::string line;
        REQUIRE(std::getline(lines, line));
        CHECK(line ==
              "threshold,detected,detection_rate_pct,false_positives,false_rate_pct,"
              "mean_ms,error");
        REQUIRE(std::getline(lines, line));
        CHECK(line.rfind("0.5,", 0) == 0);
        CHECK(line.back() == ',');  // no error text
        REQUIRE(std::getline(lines, line));
        CHECK(line.rfind("100,", 0) == 0);
        CHECK(line.find(",0,0,") != std::string::npos);  // tau 100 detects nothing
        CHECK_FALSE(std::getline(lines, line));
    }

    SECTION("invalid axis value produces an error row, not an abort") {
        auto r = run_cli(dir, base + "--axis cell_size --values 7,8 --out " +
                                  q(dir / "sweep.csv"));
        REQUIRE(r.code == 0);
        std::string csv = slurp(dir / "sweep.csv");
        CHECK(csv.rfind("cell_size,", 0) == 0);
        CHECK(csv.find("7,,,,,,") != std::string::npos);
        CHECK(r.err.find("cell_size = 7") != std::string::npos);  // row failure warned
    }

    SECTION("unknown axis exits 1") {
        auto r = run_cli(dir, base + "--axis perimeter --values 1");
        CHECK(r.code == 1);
        CHECK(r.err.find("perimeter") != std::string::npos);
    }

    SECTION("empty values exit 1") {
        auto r = run_cli(dir, base + "--axis threshold --values ,");
        CHECK(r.code == 1);
    }
    fs::remove_all(dir);
}
