#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/phantom.hpp"
#include "support/tempdir.hpp"
#include "tumorsynth/cli.hpp"
#include "tumorsynth/nifti.hpp"
#include "tumorsynth/serialization.hpp"
#include "tumorsynth/server.hpp"

using namespace tumorsynth;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "tumorsynth");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

json last_json_line(const std::string& text) {
    std::istringstream in(text);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    return json::parse(last);
}

void write_phantom(const std::filesystem::path& dir, const std::string& id, uint64_t seed = 1) {
    phantom::Options o;
    o.dims = {48, 48, 40};
    o.seed = seed;
    auto ph = phantom::make(o);
    nifti::save(ph.ct, dir / (id + ".nii"));
    nifti::save(ph.liver, dir / (id + ".liver.nii"));
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("help exits zero for every command") {
        for (const auto& args : std::vector<std::vector<std::string>>{{"--help"},
                                                                      {"synth", "--help"},
                                                                      {"vessels", "--help"},
                                                                      {"grid", "--help"},
                                                                      {"grid", "build", "--help"},
                                                                      {"grid", "eval", "--help"},
                                                                      {"eval", "--help"},
                                                                      {"turing-export", "--help"},
                                                                      {"serve", "--help"}}) {
            const Run r = run(args);
            CHECK_MESSAGE(r.code == 0, args.front());
            CHECK(r.out.find("Usage") != std::string::npos);
        }
        CHECK(run({"synth", "--help"}).out.find("--out-label") != std::string::npos);
        CHECK(run({"grid", "build", "--help"}).out.find("--levels") != std::string::npos);
    }

    TEST_CASE("usage errors exit two with a JSON line") {
        for (const auto& args : std::vector<std::vector<std::string>>{
                 {},
                 {"frobnicate"},
                 {"synth", "--ct", "a.nii"},
                 {"vessels", "--ct", "a", "--liver", "b"},
                 {"eval", "--gt", "a", "--pred", "b", "--bogus"},
                 {"synth", "--ct", "a", "--liver", "b", "--out-ct", "c", "--out-label", "d", "--seed", "x"},
                 {"grid"}}) {
            const Run r = run(args);
            CHECK(r.code == 2);
            const json e = last_json_line(r.err);
            CHECK(e["error"] == "usage");
            CHECK(e["message"].is_string());
        }
    }

    TEST_CASE("missing inputs exit one naming the path") {
        TempDir dir;
        const std::string ghost = (dir / "ghost-scan.nii.gz").string();
        write_phantom(dir.path, "p");
        Run r = run({"synth", "--ct", ghost, "--liver", (dir / "p.liver.nii").string(), "--out-ct",
                     (dir / "o.nii").string(), "--out-label", (dir / "l.nii").string()});
        CHECK(r.code == 1);
        json e = last_json_line(r.err);
        CHECK(e["error"] == "io");
        CHECK(e["message"].get<std::string>().find(ghost) != std::string::npos);

        r = run({"vessels", "--ct", (dir / "p.nii").string(), "--liver", ghost, "--out", (dir / "v.nii").string()});
        CHECK(r.code == 1);
        CHECK(last_json_line(r.err)["message"].get<std::string>().find(ghost) != std::string::npos);

        r = run({"eval", "--gt", ghost, "--pred", ghost});
        CHECK(r.code == 1);
        r = run({"synth", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(), "--out-ct",
                 (dir / "o.nii").string(), "--out-label", (dir / "l.nii").string(), "--preset", "huge"});
        CHECK(r.code == 1);
        CHECK(last_json_line(r.err)["error"] == "argument");
    }

    TEST_CASE("synth is reproducible and matches the recorded checksum") {
        TempDir dir;
        write_phantom(dir.path, "p");
        auto synth = [&](const std::string& tag) {
            return run({"synth", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(),
                        "--preset", "small", "--seed", "42", "--out-ct", (dir / (tag + "_ct.nii")).string(),
                        "--out-label", (dir / (tag + "_label.nii")).string(), "--provenance",
                        (dir / (tag + ".json")).string()});
        };
        const Run a = synth("a");
        REQUIRE_MESSAGE(a.code == 0, a.err);
        const Run b = synth("b");
        REQUIRE(b.code == 0);
        const std::string ct = slurp(dir / "a_ct.nii"), label = slurp(dir / "a_label.nii");
        CHECK(ct == slurp(dir / "b_ct.nii"));
        CHECK(label == slurp(dir / "b_label.nii"));
        CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
        const auto labels = nifti::load_labels(dir / "a_label.nii");
        CHECK(std::count(labels.data().begin(), labels.data().end(), uint8_t{kTumor}) > 0);
        CHECK(json::parse(a.out)["placed"].get<int>() >= 3);
        // Recorded on the first verified run.
        CHECK(fnv1a(ct) == 0x6c5b718498801e1full);
        CHECK(fnv1a(label) == 0xb3fdf4a3c0664718ull);

        const json announced = json::parse(a.err.substr(0, a.err.find('\n')));
        CHECK(announced["seed"] == 42);
        CHECK(announced["config"] == json(GenConfig{}));
        CHECK(json::parse(a.out)["seed"] == 42);

        const Run rep = run({"synth", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(),
                             "--replay", (dir / "a.json").string(), "--out-ct", (dir / "r_ct.nii").string(),
                             "--out-label", (dir / "r_label.nii").string()});
        REQUIRE_MESSAGE(rep.code == 0, rep.err);
        CHECK(slurp(dir / "r_ct.nii") == ct);
        CHECK(slurp(dir / "r_label.nii") == label);
    }

    TEST_CASE("training flag and config from the environment") {
        TempDir dir;
        write_phantom(dir.path, "p");
        GenConfig cfg;
        cfg.b = 25.0;
        save_json(json(cfg), dir / "cfg.json");
        setenv("TUMORSYNTH_CONFIG", (dir / "cfg.json").c_str(), 1);
        const Run r = run({"synth", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(),
                           "--preset", "small", "--seed", "3", "--training", "--out-ct", (dir / "o.nii").string(),
                           "--out-label", (dir / "l.nii").string(), "--provenance", (dir / "prov.json").string()});
        unsetenv("TUMORSYNTH_CONFIG");
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const json announced = json::parse(r.err.substr(0, r.err.find('\n')));
        CHECK(announced["config"]["b"] == 25.0);
        CHECK(announced["config"]["mass_effect"] == false);
        CHECK(announced["config"]["capsule"] == false);
        const auto prov = load_json(dir / "prov.json").get<ProvenanceRecord>();
        for (const auto& t : prov.tumors) {
            CHECK_FALSE(t.mass_effect);
            CHECK_FALSE(t.capsule);
        }
    }

    TEST_CASE("vessels and eval") {
        TempDir dir;
        write_phantom(dir.path, "p");
        Run r = run({"vessels", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(), "--out",
                     (dir / "v.nii.gz").string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        CHECK(json::parse(r.out)["vessel_voxels"].get<int>() > 0);
        CHECK(std::filesystem::exists(dir / "v.nii.gz"));

        std::filesystem::create_directories(dir / "gt");
        std::filesystem::create_directories(dir / "pred");
        for (uint64_t seed : {1, 2}) {
            const std::string id = "case" + std::to_string(seed);
            r = run({"synth", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(), "--preset",
                     "small", "--seed", std::to_string(seed), "--out-ct", (dir / "ct.nii").string(), "--out-label",
                     (dir / "gt" / (id + ".nii.gz")).string()});
            REQUIRE(r.code == 0);
            std::filesystem::copy_file(dir / "gt" / (id + ".nii.gz"), dir / "pred" / (id + ".nii.gz"));
        }
        r = run({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string(), "--report",
                 (dir / "rep.jsonl").string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        CHECK(r.out.find("case1") != std::string::npos);
        CHECK(r.out.find("100.00") != std::string::npos);
        std::ifstream rep(dir / "rep.jsonl");
        std::vector<json> lines;
        for (std::string line; std::getline(rep, line);) lines.push_back(json::parse(line));
        REQUIRE(lines.size() == 3);
        CHECK(lines[0]["dsc"] == 1.0);
        CHECK(lines[0]["nsd"] == 1.0);
        CHECK(lines[2]["summary"] == true);
        CHECK(lines[2]["mean_dsc"] == 1.0);

        std::filesystem::remove(dir / "pred" / "case2.nii.gz");
        r = run({"eval", "--gt", (dir / "gt").string(), "--pred", (dir / "pred").string()});
        CHECK(r.code == 1);
        const json e = last_json_line(r.err);
        CHECK(e["error"] == "evaluation");
        CHECK(e["missing"] == json::array({"case2"}));
    }

    TEST_CASE("grid build and eval") {
        TempDir dir;
        write_phantom(dir.path, "p");
        const Run b = run({"grid", "build", "--ct", (dir / "p.nii").string(), "--liver",
                           (dir / "p.liver.nii").string(), "--out-dir", (dir / "grid").string(), "--seed", "4",
                           "--levels", "-1,0,1", "--dimensions", "size,texture", "--draws", "40", "--jobs", "2"});
        REQUIRE_MESSAGE(b.code == 0, b.err);
        CHECK(json::parse(b.out)["variants"] == 6);
        const json manifest = load_json(dir / "grid" / "manifest.json");
        std::filesystem::create_directories(dir / "pred");
        for (const auto& v : manifest["variants"])
            std::filesystem::copy_file(dir / "grid" / v["label_path"].get<std::string>(),
                                       dir / "pred" / (v["id"].get<std::string>() + ".nii.gz"));
        const Run e = run({"grid", "eval", "--manifest", (dir / "grid" / "manifest.json").string(), "--pred-dir",
                           (dir / "pred").string(), "--report", (dir / "cells.json").string()});
        REQUIRE_MESSAGE(e.code == 0, e.err);
        CHECK(e.out.find("100.0") != std::string::npos);
        for (const auto& c : load_json(dir / "cells.json")["cells"]) CHECK(c["mean_dsc"] == 100.0);

        CHECK(run({"grid", "build", "--ct", (dir / "p.nii").string(), "--liver", (dir / "p.liver.nii").string(),
                   "--out-dir", (dir / "g2").string(), "--levels", "a,b"})
                  .code == 2);
    }

    TEST_CASE("turing export produces a blinded server data directory") {
        TempDir dir;
        write_phantom(dir.path, "h1", 1);
        write_phantom(dir.path, "h2", 2);
        const json manifest = {{"seed", 11},
                               {"real", {{{"ct", "h1.nii"}}, {{"ct", "h2.nii"}}}},
                               {"synthetic",
                                {{{"ct", "h1.nii"}, {"liver", "h1.liver.nii"}, {"preset", "small"}, {"seed", 1}},
                                 {{"ct", "h2.nii"}, {"liver", "h2.liver.nii"}, {"preset", "tiny"}, {"seed", 2}}}}};
        save_json(manifest, dir / "export.json");
        const Run r = run({"turing-export", "--manifest", (dir / "export.json").string(), "--out-dir",
                           (dir / "study").string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const json key = load_json(dir / "study" / "answer_key.json");
        REQUIRE(key["cases"].size() == 4);
        int real = 0;
        for (const auto& c : key["cases"]) {
            real += c["truth"] == "real";
            CHECK(std::filesystem::exists(dir / "study" / "scans" / (c["id"].get<std::string>() + ".nii.gz")));
            if (c["truth"] == "synthetic") CHECK(c["source"].contains("provenance"));
        }
        CHECK(real == 2);

        const Run again = run({"turing-export", "--manifest", (dir / "export.json").string(), "--out-dir",
                               (dir / "study2").string()});
        REQUIRE(again.code == 0);
        CHECK(load_json(dir / "study2" / "answer_key.json") == key);
        for (const auto& c : key["cases"]) {
            const std::string f = "scans/" + c["id"].get<std::string>() + ".nii.gz";
            CHECK(slurp(dir / "study" / f) == slurp(dir / "study2" / f));
        }

        ApiServer server(dir / "study", GenConfig{});
        CHECK(std::filesystem::is_directory(dir / "study" / "sessions"));
    }
}
