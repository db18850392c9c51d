#include <doctest.h>

#include "support/phantom.hpp"
#include "tumorsynth/config.hpp"
#include "tumorsynth/placement.hpp"
#include "tumorsynth/vessels.hpp"

using namespace tumorsynth;

TEST_SUITE("vessels") {
    TEST_CASE("smoothing sigma follows the parenchyma noise") {
        CHECK(vessel_smoothing_sigma(0.0) == doctest::Approx(0.5));
        CHECK(vessel_smoothing_sigma(20.0) == doctest::Approx(1.0));
    }

    TEST_CASE("phantom vessels are found and stats exclude them") {
        phantom::Options o;
        o.dims = {48, 48, 48};
        const auto ph = phantom::make(o);
        GenConfig cfg;
        const auto stats = estimate_parenchyma_stats(ph.ct, ph.liver, cfg);
        CHECK(stats.mu_p == doctest::Approx(o.liver_hu).epsilon(0.01));
        CHECK(stats.sigma_p == doctest::Approx(o.noise_hu).epsilon(0.08));
        CHECK(stats.liver_mean > stats.mu_p);
        const auto v = segment_vessels(ph.ct, ph.liver, stats, cfg);

        // Recall on clearly interior vessel voxels, no flags outside the liver.
        std::size_t bright = 0, found = 0, false_pos = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] && ph.liver[i] != kLiver) FAIL("vessel voxel outside the liver");
            if (ph.liver[i] != kLiver) continue;
            if (ph.ct[i] > 150.0f) {
                ++bright;
                found += v[i];
            } else if (ph.ct[i] < 110.0f && v[i]) {
                ++false_pos;
            }
        }
        REQUIRE(bright > 100);
        CHECK(static_cast<double>(found) / static_cast<double>(bright) > 0.9);
        CHECK(static_cast<double>(false_pos) < 0.02 * static_cast<double>(stats.voxel_count));
    }

    TEST_CASE("uniform liver has no vessels") {
        ScalarVolume ct(make_geometry({16, 16, 16}), 100.0f);
        LabelVolume liver = LabelVolume::like(ct, 1);
        GenConfig cfg;
        const auto stats = estimate_parenchyma_stats(ct, liver, cfg);
        CHECK(stats.sigma_p == 0.0);
        const auto v = segment_vessels(ct, liver, stats, cfg);
        for (auto x : v.data()) CHECK(x == 0);
    }

    TEST_CASE("empty liver is an argument error") {
        ScalarVolume ct(make_geometry({8, 8, 8}), 100.0f);
        LabelVolume liver = LabelVolume::like(ct, 0);
        CHECK_THROWS_AS(estimate_parenchyma_stats(ct, liver, GenConfig{}), ArgumentError);
    }
}

TEST_SUITE("placement") {
    TEST_CASE("voxel radii round up per axis") {
        CHECK(voxel_radii(4.0, {1.0, 1.0, 1.0}) == Index3{4, 4, 4});
        CHECK(voxel_radii(4.0, {0.7, 0.8, 2.5}) == Index3{6, 5, 2});
    }

    TEST_CASE("summed-volume index agrees with brute force") {
        Rng rng(42);
        for (int trial = 0; trial < 20; ++trial) {
            VesselMask v(make_geometry({14, 12, 10}));
            for (auto& x : v.data()) x = rng.uniform() < 0.01 ? 1 : 0;
            const CollisionIndex index(v);
            for (int q = 0; q < 200; ++q) {
                const Index3 c{static_cast<int>(rng.uniform_int(0, 13)), static_cast<int>(rng.uniform_int(0, 11)),
                               static_cast<int>(rng.uniform_int(0, 9))};
                const Index3 r{static_cast<int>(rng.uniform_int(0, 5)), static_cast<int>(rng.uniform_int(0, 5)),
                               static_cast<int>(rng.uniform_int(0, 5))};
                CHECK(index.collision_free(c, r) == collision_free(v, c, r));
            }
        }
    }

    TEST_CASE("sampled centers are liver voxels with a clear box") {
        const auto ph = phantom::make();
        GenConfig cfg;
        const auto stats = estimate_parenchyma_stats(ph.ct, ph.liver, cfg);
        const auto v = segment_vessels(ph.ct, ph.liver, stats, cfg);
        const LocationSampler sampler(ph.liver, v);
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            const auto p = sampler.sample({4.0, 200}, rng);
            CHECK(ph.liver(p.center[0], p.center[1], p.center[2]) == kLiver);
            CHECK(collision_free(v, p.center, voxel_radii(4.0, ph.liver.spacing())));
            CHECK(p.attempts >= 1);
        }
    }

    TEST_CASE("exhaustion reports the attempt budget") {
        LabelVolume liver(make_geometry({10, 10, 10}), 1);
        VesselMask v = VesselMask::like(liver, 1);
        Rng rng(1);
        try {
            sample_location(liver, v, {2.0, 17}, rng);
            FAIL("expected exhaustion");
        } catch (const PlacementExhausted& e) {
            CHECK(e.attempts() == 17);
            CHECK(e.kind() == "placement-exhausted");
        }
    }

    TEST_CASE("same seed gives the same placement") {
        const auto ph = phantom::make();
        const VesselMask none = VesselMask::like(ph.liver, 0);
        Rng a(99), b(99);
        const auto pa = sample_location(ph.liver, none, {8.0, 200}, a);
        const auto pb = sample_location(ph.liver, none, {8.0, 200}, b);
        CHECK(pa.center == pb.center);
    }
}
