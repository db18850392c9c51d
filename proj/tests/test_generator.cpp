#include <doctest.h>

#include <cmath>
#include <map>

#include "support/phantom.hpp"
#include "tumorsynth/components.hpp"
#include "tumorsynth/generator.hpp"
#include "tumorsynth/placement.hpp"
#include "tumorsynth/serialization.hpp"

using namespace tumorsynth;

namespace {

const PreparedScan& small_scan() {
    static const PreparedScan scan = [] {
        phantom::Options o;
        o.dims = {80, 80, 64};
        o.spacing = {1.0, 1.0, 1.5};
        auto ph = phantom::make(o);
        return prepare_scan(std::move(ph.ct), std::move(ph.liver), GenConfig{}, "phantom80");
    }();
    return scan;
}

}  // namespace

TEST_SUITE("generator") {
    TEST_CASE("spec sampling follows the preset table") {
        GenConfig cfg;
        const auto& scan = small_scan();
        for (const auto& row : cfg.presets)
            for (uint64_t seed = 0; seed < 50; ++seed) {
                const auto specs = sample_tumor_specs(row.name, seed, scan.stats, cfg);
                CHECK(static_cast<int>(specs.size()) >= row.count_min);
                CHECK(static_cast<int>(specs.size()) <= row.count_max);
                for (const auto& s : specs) {
                    CHECK(s.radius_mm == row.radius_mm);
                    CHECK(s.sigma_e >= row.sigma_e.lo);
                    CHECK(s.sigma_e <= row.sigma_e.hi);
                    CHECK(s.mu_t >= cfg.mu_t_min);
                    CHECK(s.mu_t <= scan.stats.mu_p - cfg.mu_t_margin);
                    CHECK(s.mu_t == specs.front().mu_t);
                    for (double a : s.half_axes_mm) {
                        CHECK(a >= 0.75 * row.radius_mm);
                        CHECK(a <= 1.25 * row.radius_mm);
                    }
                }
            }
        CHECK_THROWS_AS(sample_tumor_specs("huge", 1, scan.stats, cfg), ArgumentError);
    }

    TEST_CASE("mix resolves to each sized preset") {
        GenConfig cfg;
        std::map<std::string, int> seen;
        for (uint64_t seed = 0; seed < 400; ++seed) {
            std::string resolved;
            sample_tumor_specs("mix", seed, small_scan().stats, cfg, &resolved);
            ++seen[resolved];
        }
        CHECK(seen.size() == 4);
        for (const auto& [name, n] : seen) CHECK(n > 60);
    }

    TEST_CASE("tiny preset: 3 to 10 components, each smaller than 8 mm") {
        GenConfig cfg;
        for (uint64_t seed : {1u, 2u, 3u}) {
            const auto r = synthesize(small_scan(), "tiny", seed, cfg);
            const auto cs = connected_components(r.labels, kTumor, Connectivity::TwentySix);
            CHECK(cs.count >= 3);
            CHECK(cs.count <= 10);
            for (double rad : cs.radii_mm) CHECK(rad < 8.0);
        }
    }

    TEST_CASE("outputs are deterministic, labelled 0..2 and local to the tumors") {
        GenConfig cfg;
        const auto& scan = small_scan();
        const auto a = synthesize(scan, "small", 42, cfg);
        const auto b = synthesize(scan, "small", 42, cfg);
        CHECK(a.ct == b.ct);
        CHECK(a.labels == b.labels);
        CHECK(a.provenance == b.provenance);
        const auto c = synthesize(scan, "small", 43, cfg);
        CHECK_FALSE(a.ct == c.ct);

        CHECK_NOTHROW(require_label_range(a.labels));
        // Each tumor only touches its shape box (half-axis + deformation + soft-edge
        // + capsule margins) and its mass-effect ball box.
        const auto& g = scan.ct.geometry();
        std::vector<Box> boxes;
        for (const auto& t : a.provenance.tumors) {
            const Index3 c = *t.center;
            Box shape, ball;
            for (int k = 0; k < 3; ++k) {
                const int m = static_cast<int>(std::ceil(t.half_axes_mm[k] / g.spacing[k])) +
                              static_cast<int>(std::ceil(2.5 * t.sigma_e)) + 1 +
                              static_cast<int>(std::ceil(4 * t.sigma_c)) + 1 + static_cast<int>(std::ceil(4 * cfg.sigma_d));
                shape.lo[k] = c[k] - m;
                shape.hi[k] = c[k] + m + 1;
                const int b = static_cast<int>(std::ceil(cfg.gamma_max_factor * t.radius_mm / g.spacing[k])) + 1;
                ball.lo[k] = c[k] - b;
                ball.hi[k] = c[k] + b + 1;
            }
            boxes.push_back(shape);
            boxes.push_back(ball);
        }
        std::size_t tumor = 0, outside = 0;
        for (std::size_t i = 0; i < a.ct.size(); ++i) {
            const Index3 p = a.ct.coords(i);
            const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(p[0], p[1], p[2]); });
            if (!inside) {
                ++outside;
                CHECK(a.ct[i] == scan.ct[i]);
                CHECK(a.labels[i] == scan.liver[i]);
            }
            if (a.labels[i] == kTumor) {
                ++tumor;
                CHECK(scan.liver[i] != kBackground);
            }
        }
        CHECK(outside > 0);
        CHECK(tumor > 0);
    }

    TEST_CASE("replay reproduces the output bit-exactly") {
        GenConfig cfg;
        const auto& scan = small_scan();
        for (const char* preset : {"tiny", "small", "medium"}) {
            const auto a = synthesize(scan, preset, 7, cfg);
            const ProvenanceRecord rec = nlohmann::json(a.provenance).get<ProvenanceRecord>();
            const auto b = replay(scan, rec, cfg);
            CHECK(a.ct == b.ct);
            CHECK(a.labels == b.labels);
        }
    }

    TEST_CASE("pinned spec implants exactly one tumor at the center") {
        GenConfig cfg;
        const auto& scan = small_scan();
        const LocationSampler sampler(scan.liver, scan.vessels);
        Index3 center{40, 40, 32};
        for (int dx = 0; !sampler.collision_free(center, 6.0); ++dx) center = {30 + dx % 20, 30 + dx / 20, 32};
        TumorSpec s;
        s.center = center;
        s.radius_mm = 6;
        s.half_axes_mm = {6, 6, 6};
        s.mu_t = 50;
        const auto r = synthesize_with_spec(scan, {s}, 1, cfg);
        REQUIRE(r.provenance.tumors.size() == 1);
        CHECK(r.labels(center[0], center[1], center[2]) == kTumor);
        CHECK(connected_components(r.labels, kTumor, Connectivity::TwentySix).count == 1);
        CHECK(r.provenance.warnings.empty());

        s.mu_t = scan.stats.mu_p + 20;
        const auto w = synthesize_with_spec(scan, {s}, 1, cfg);
        CHECK(w.provenance.warnings.size() == 1);
    }

    TEST_CASE("pinned center on a vessel is a collision naming the tumor") {
        GenConfig cfg;
        const auto& scan = small_scan();
        Index3 on_vessel{-1, -1, -1};
        for (std::size_t i = 0; i < scan.vessels.size(); ++i)
            if (scan.vessels[i]) {
                on_vessel = scan.vessels.coords(i);
                break;
            }
        REQUIRE(on_vessel[0] >= 0);
        TumorSpec ok;
        ok.radius_mm = 3;
        ok.half_axes_mm = {3, 3, 3};
        TumorSpec bad = ok;
        bad.center = on_vessel;
        try {
            synthesize_with_spec(scan, {ok, bad}, 3, cfg);
            FAIL("expected a collision");
        } catch (const CollisionError& e) {
            CHECK(e.tumor_index() == 1);
        }
        bad.center = Index3{500, 0, 0};
        CHECK_THROWS_AS(synthesize_with_spec(scan, {bad}, 3, cfg), ArgumentError);
    }

    TEST_CASE("liver covered by vessels fails synthesis") {
        ScalarVolume ct(make_geometry({24, 24, 24}), 40.0f);
        LabelVolume liver = LabelVolume::like(ct, 0);
        for (int z = 6; z < 18; ++z)
            for (int y = 6; y < 18; ++y)
                for (int x = 6; x < 18; ++x) {
                    liver(x, y, z) = 1;
                    ct(x, y, z) = (x + y + z) % 2 ? 100.0f : 300.0f;
                }
        GenConfig cfg;
        auto scan = prepare_scan(ct, liver, cfg);
        scan.vessels = VesselMask::like(liver, 0);
        for (std::size_t i = 0; i < liver.size(); ++i) scan.vessels[i] = liver[i];
        CHECK_THROWS_AS(synthesize(scan, "tiny", 1, cfg), SynthesisFailed);
    }

    TEST_CASE("post-processing flags") {
        GenConfig cfg;
        cfg.mass_effect = false;
        cfg.capsule = false;
        const auto& scan = small_scan();
        const auto plain = synthesize(scan, "medium", 5, cfg);
        GenConfig full;
        const auto fancy = synthesize(scan, "medium", 5, full);
        CHECK_FALSE(plain.ct == fancy.ct);
        auto brightened = [&](const SynthesisResult& r) {
            std::size_t n = 0;
            for (std::size_t i = 0; i < r.ct.size(); ++i) n += r.ct[i] - scan.ct[i] > 40.0f;
            return n;
        };
        // The capsule is the only step that brightens tissue substantially.
        CHECK(brightened(fancy) > 10 * brightened(plain) + 100);
    }

    TEST_CASE("a tumor clipped below the label threshold is reported") {
        // One-voxel liver slab: after the soft edge no voxel reaches 0.5.
        const auto g = make_geometry({24, 24, 9});
        ScalarVolume ct(g, 100.0f);
        LabelVolume liver(g, 0);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) liver(x, y, 4) = kLiver;
        TumorSpec s;
        s.center = Index3{12, 12, 4};
        s.radius_mm = 4.0;
        s.half_axes_mm = {4.0, 4.0, 4.0};
        s.sigma_e = 0.0;
        s.sigma_c = 1.2;
        s.mu_t = 40.0;
        GenConfig cfg;
        const auto r = synthesize_with_spec(ct, liver, {s}, 1, cfg);
        CHECK(r.provenance.tumors.size() == 1);
        CHECK(std::count(r.labels.data().begin(), r.labels.data().end(), uint8_t{kTumor}) == 0);
        bool warned = false;
        for (const auto& w : r.provenance.warnings) warned = warned || w.starts_with("tumor 0: no voxel reached");
        CHECK(warned);
        CHECK(r.ct != ct);  // still blended in below the threshold
    }
}
