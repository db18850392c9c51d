#include <doctest.h>

#include <fstream>

#include "support/tempdir.hpp"
#include "tumorsynth/serialization.hpp"

using namespace tumorsynth;

TEST_SUITE("config") {
    TEST_CASE("defaults hold the published hyper-parameters") {
        GenConfig c;
        CHECK(c.b == 15.0);
        CHECK(c.sigma_b == 0.6);
        CHECK(c.sigma_d == 0.8);
        CHECK(c.d == 120.0);
        CHECK(c.intensity == 30.0);
        CHECK(c.lb == 0.4);
        CHECK(c.ub == 0.7);
        CHECK(c.gamma_max_factor == 1.3);
        CHECK(c.eta == Range{1.1, 1.5});
        CHECK(c.sigma_c == Range{0.6, 1.2});
        CHECK(c.half_axis_factor == Range{0.75, 1.25});
        CHECK(c.max_attempts == 200);
        CHECK(c.label_threshold == 0.5);
        CHECK_NOTHROW(c.validate());

        const auto& p = default_size_presets();
        REQUIRE(p.size() == 4);
        CHECK(p[0] == SizePreset{"tiny", 4.0, {0.5, 1.0}, 3, 10});
        CHECK(p[1] == SizePreset{"small", 8.0, {1.0, 2.0}, 3, 10});
        CHECK(p[2] == SizePreset{"medium", 16.0, {3.0, 6.0}, 2, 5});
        CHECK(p[3] == SizePreset{"large", 32.0, {5.0, 10.0}, 1, 3});
        CHECK(is_preset_name("mix", c));
        CHECK_FALSE(is_preset_name("huge", c));
        CHECK_THROWS_AS(c.preset("mix"), ArgumentError);
    }

    TEST_CASE("json round trip and partial override") {
        GenConfig c;
        c.intensity = 0;
        c.eta = {1.0, 2.0};
        const GenConfig back = nlohmann::json(c).get<GenConfig>();
        CHECK(back.intensity == 0);
        CHECK(back.eta == Range{1.0, 2.0});
        CHECK(back.presets == c.presets);

        GenConfig partial = nlohmann::json::parse(R"({"b": 20, "capsule": false})").get<GenConfig>();
        CHECK(partial.b == 20);
        CHECK_FALSE(partial.capsule);
        CHECK(partial.sigma_d == 0.8);
    }

    TEST_CASE("unknown keys and invalid values are rejected") {
        CHECK_THROWS_AS(nlohmann::json::parse(R"({"bee": 1})").get<GenConfig>(), ArgumentError);
        TempDir tmp;
        std::ofstream(tmp / "bad.json") << R"({"lb": 0.9, "ub": 0.1})";
        CHECK_THROWS_AS(load_config(tmp / "bad.json"), ArgumentError);
        std::ofstream(tmp / "broken.json") << "{ not json";
        CHECK_THROWS_AS(load_config(tmp / "broken.json"), FormatError);
        CHECK_THROWS_AS(load_config(tmp / "absent.json"), IoError);
        GenConfig c;
        c.intensity = 120;
        CHECK_THROWS_AS(c.validate(), ArgumentError);
    }

    TEST_CASE("tumor specs: defaults, validation and warnings") {
        const auto s = nlohmann::json::parse(R"({"radius_mm": 5, "center": [1, 2, 3]})").get<TumorSpec>();
        CHECK(s.half_axes_mm == Vec3{5, 5, 5});
        CHECK(s.center == Index3{1, 2, 3});
        CHECK_THROWS_AS(nlohmann::json::parse(R"({"radius": 5})").get<TumorSpec>(), ArgumentError);
        TumorSpec bad;
        bad.eta = 0.5;
        CHECK_THROWS_AS(bad.validate(), ArgumentError);

        TumorSpec hot;
        hot.mu_t = 150;
        CHECK(hot.range_warnings(GenConfig{}, 100.0).size() == 1);
        const TumorSpec round = nlohmann::json(hot).get<TumorSpec>();
        CHECK(round == hot);
    }

    TEST_CASE("provenance round trip") {
        ProvenanceRecord p;
        p.scan_id = "s1";
        p.seed = 0xFFFFFFFFFFFFFFFFull;
        p.preset = "mix";
        p.resolved_preset = "small";
        TumorSpec t;
        t.center = Index3{3, 4, 5};
        p.tumors = {t, t};
        p.skipped = {{2, 200}};
        p.warnings = {"w"};
        CHECK(nlohmann::json(p).get<ProvenanceRecord>() == p);
    }
}
