#include <doctest.h>

#include <cmath>

#include "tumorsynth/composite.hpp"
#include "tumorsynth/filters.hpp"
#include "tumorsynth/rng.hpp"

using namespace tumorsynth;

namespace {

struct Fields {
    ScalarVolume ct, texture;
    LabelVolume labels;
    SoftMask t;
};

Fields random_fields(Index3 dims, uint64_t seed) {
    const auto g = make_geometry(dims);
    Fields f{ScalarVolume(g), ScalarVolume(g), LabelVolume(g), SoftMask(g)};
    Rng rng(seed);
    for (std::size_t i = 0; i < f.ct.size(); ++i) {
        f.ct[i] = static_cast<float>(rng.uniform(-100, 250));
        f.texture[i] = static_cast<float>(rng.uniform(0, 120));
        f.labels[i] = static_cast<uint8_t>(rng.uniform_int(0, 2));
        const double u = rng.uniform();
        f.t[i] = u < 0.2 ? 0.0f : (u < 0.3 ? 1.0f : static_cast<float>(rng.uniform()));
    }
    return f;
}

}  // namespace

TEST_SUITE("composite") {
    TEST_CASE("blend follows the convex combination and the label rule") {
        const auto f = random_fields({20, 20, 20}, 17);
        const auto [ct, labels] = blend_tumor(f.ct, f.labels, f.t, f.texture, 0.5);
        for (std::size_t i = 0; i < ct.size(); ++i) {
            const double w = f.t[i];
            CHECK(std::abs(ct[i] - ((1 - w) * f.ct[i] + w * f.texture[i])) < 1e-5);
            const uint8_t expect = (w >= 0.5 && f.labels[i] == 1) ? 2 : f.labels[i];
            CHECK(labels[i] == expect);
        }
    }

    TEST_CASE("blend rejects mismatched lattices") {
        const auto f = random_fields({4, 4, 4}, 1);
        const auto g = random_fields({4, 4, 5}, 1);
        CHECK_THROWS_AS(blend_tumor(f.ct, f.labels, g.t, f.texture), ArgumentError);
    }

    TEST_CASE("radial scaling law") {
        const double gmax = 13.0;
        CHECK(mass_effect_source_distance(gmax / 2, gmax, 30.0) == doctest::Approx(0.925 * gmax / 2).epsilon(1e-15));
        CHECK(mass_effect_source_distance(0.0, gmax, 30.0) == 0.0);
        CHECK(mass_effect_source_distance(gmax, gmax, 30.0) == gmax);
        CHECK(mass_effect_source_distance(20.0, gmax, 30.0) == 20.0);
        for (double g = 0.1; g < gmax; g += 0.37) {
            CHECK(mass_effect_source_distance(g, gmax, 0.0) == g);
            CHECK(mass_effect_source_distance(g, gmax, 30.0) < g);
            // The mapping stays monotone, so the warp does not fold.
            CHECK(mass_effect_source_distance(g + 0.01, gmax, 30.0) > mass_effect_source_distance(g, gmax, 30.0));
        }
    }

    TEST_CASE("warp leaves voxels beyond gamma_max untouched and is identity at I=0") {
        const auto f = random_fields({24, 24, 24}, 5);
        MassEffectParams p;
        p.center = {12.0, 11.5, 12.0};
        p.gamma_max_mm = 6.0;
        p.intensity = 30.0;
        const auto [ct, labels] = mass_effect_warp(f.ct, f.labels, p);
        std::size_t changed = 0;
        for (int z = 0; z < 24; ++z)
            for (int y = 0; y < 24; ++y)
                for (int x = 0; x < 24; ++x) {
                    const double r = std::hypot(x - 12.0, y - 11.5, z - 12.0);
                    if (r >= 6.0) {
                        CHECK(ct(x, y, z) == f.ct(x, y, z));
                        CHECK(labels(x, y, z) == f.labels(x, y, z));
                    } else {
                        changed += ct(x, y, z) != f.ct(x, y, z);
                    }
                }
        CHECK(changed > 0);

        p.intensity = 0.0;
        const auto [same_ct, same_labels] = mass_effect_warp(f.ct, f.labels, p);
        CHECK(same_ct == f.ct);
        CHECK(same_labels == f.labels);
    }

    TEST_CASE("warp pulls interior content outward") {
        // A bright central voxel spreads to its neighbors.
        ScalarVolume ct(make_geometry({21, 21, 21}), 0.0f);
        LabelVolume l = LabelVolume::like(ct, 1);
        ct(10, 10, 10) = 100.0f;
        MassEffectParams p;
        p.center = {10, 10, 10};
        p.gamma_max_mm = 8.0;
        p.intensity = 100.0;
        const auto [w, wl] = mass_effect_warp(ct, l, p);
        CHECK(w(11, 10, 10) > 0.0f);
        CHECK(w(10, 10, 10) == 100.0f);
    }

    TEST_CASE("parameter validation") {
        MassEffectParams p;
        p.intensity = 101;
        CHECK_THROWS_AS(p.validate(), ArgumentError);
        p.intensity = 30;
        p.gamma_max_mm = 0;
        CHECK_THROWS_AS(p.validate(), ArgumentError);
        CapsuleParams c;
        c.lb = 0.8;
        CHECK_THROWS_AS(c.validate(), ArgumentError);
    }

    TEST_CASE("capsule adds d times the blurred edge band") {
        const auto f = random_fields({16, 16, 16}, 3);
        CapsuleParams c;
        const auto out = apply_capsule(f.ct, f.t, c);
        SoftMask e = SoftMask::like(f.t, 0.0f);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = (f.t[i] >= 0.4f && f.t[i] <= 0.7f) ? 1.0f : 0.0f;
        const auto eb = gaussian_blur(e, 0.8);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(f.ct[i] + 120.0 * eb[i]).epsilon(1e-6));

        c.d = 0;
        CHECK(apply_capsule(f.ct, f.t, c) == f.ct);
    }
}
