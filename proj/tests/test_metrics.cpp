#include <doctest.h>

#include "support/oracles.hpp"
#include "tumorsynth/metrics.hpp"
#include "tumorsynth/rng.hpp"

using namespace tumorsynth;

namespace {

BinaryMask box_mask(Index3 dims, Box b, Vec3 spacing = {1, 1, 1}) {
    BinaryMask m{make_geometry(dims, spacing), std::vector<bool>(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])};
    for (int z = b.lo[2]; z < b.hi[2]; ++z)
        for (int y = b.lo[1]; y < b.hi[1]; ++y)
            for (int x = b.lo[0]; x < b.hi[0]; ++x) m.voxels[x + dims[0] * (y + dims[1] * z)] = true;
    return m;
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("dsc on hand-computed cases") {
        const auto a = box_mask({10, 10, 10}, {{0, 0, 0}, {4, 4, 4}});
        const auto b = box_mask({10, 10, 10}, {{2, 0, 0}, {6, 4, 4}});
        CHECK(dsc(a, a) == 1.0);
        CHECK(dsc(a, b) == doctest::Approx(2.0 * 32 / 128));
        const auto e = box_mask({10, 10, 10}, {{0, 0, 0}, {0, 0, 0}});
        CHECK(dsc(e, e) == 1.0);
        CHECK(dsc(a, e) == 0.0);
        CHECK_THROWS_AS(dsc(a, box_mask({10, 10, 9}, {})), ArgumentError);
    }

    TEST_CASE("surface voxels of a solid box") {
        const auto a = box_mask({6, 6, 6}, {{1, 1, 1}, {5, 5, 5}});
        const auto s = surface_voxels(a);
        CHECK(std::count(s.begin(), s.end(), true) == 64 - 8);
        const auto full = box_mask({3, 3, 3}, {{0, 0, 0}, {3, 3, 3}});
        const auto fs = surface_voxels(full);
        CHECK(std::count(fs.begin(), fs.end(), true) == 26);
    }

    TEST_CASE("nsd on shifted boxes and edge cases") {
        const auto a = box_mask({12, 12, 12}, {{2, 2, 2}, {8, 8, 8}});
        const auto b = box_mask({12, 12, 12}, {{3, 2, 2}, {9, 8, 8}});
        CHECK(nsd(a, a, 0.0) == 1.0);
        CHECK(nsd(a, b, 1.0) == 1.0);
        CHECK(nsd(a, b, 0.5) < 1.0);
        CHECK(nsd(a, b, 0.5) == doctest::Approx(oracle::brute_nsd(a.voxels, b.voxels, a.geometry, 0.5)));
        const auto e = box_mask({12, 12, 12}, {});
        CHECK(nsd(e, e) == 1.0);
        CHECK(nsd(a, e) == 0.0);
        CHECK_THROWS_AS(nsd(a, b, -1.0), ArgumentError);
    }

    TEST_CASE("parallel plates") {
        const auto a = box_mask({10, 10, 12}, {{0, 0, 2}, {10, 10, 3}});
        const auto near = box_mask({10, 10, 12}, {{0, 0, 3}, {10, 10, 4}});
        const auto far = box_mask({10, 10, 12}, {{0, 0, 7}, {10, 10, 8}});
        CHECK(nsd(a, near, 2.0) == 1.0);
        CHECK(nsd(a, far, 2.0) == 0.0);
        CHECK(dsc(a, near) == 0.0);
    }

    TEST_CASE("tolerance boundary is inclusive with anisotropic spacing") {
        // Faces 2 voxels apart along an axis with 1.0 mm spacing: exactly 2.0 mm.
        const auto a = box_mask({12, 4, 4}, {{0, 0, 0}, {4, 4, 4}}, {1.0, 0.7, 0.7});
        const auto b = box_mask({12, 4, 4}, {{0, 0, 0}, {6, 4, 4}}, {1.0, 0.7, 0.7});
        CHECK(nsd(a, b, 2.0) == doctest::Approx(oracle::brute_nsd(a.voxels, b.voxels, a.geometry, 2.0)).epsilon(1e-12));
    }

    TEST_CASE("randomized agreement with brute force") {
        Rng rng(2024);
        for (int t = 0; t < 30; ++t) {
            const Index3 d{static_cast<int>(rng.uniform_int(1, 10)), static_cast<int>(rng.uniform_int(1, 10)),
                           static_cast<int>(rng.uniform_int(1, 10))};
            const auto g = make_geometry(d, {rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 3)});
            BinaryMask a{g, std::vector<bool>(g.voxel_count())}, b{g, std::vector<bool>(g.voxel_count())};
            for (std::size_t i = 0; i < a.voxels.size(); ++i) {
                a.voxels[i] = rng.uniform() < 0.3;
                b.voxels[i] = rng.uniform() < 0.3;
            }
            CHECK(dsc(a, b) == oracle::brute_dsc(a.voxels, b.voxels));
            const double tau = rng.uniform(0.0, 3.0);
            CHECK(std::abs(nsd(a, b, tau) - oracle::brute_nsd(a.voxels, b.voxels, g, tau)) <= 1e-9);
        }
    }

    TEST_CASE("detection per tumor, buckets and false positives") {
        LabelVolume gt(make_geometry({30, 30, 30}), 1);
        LabelVolume pred = LabelVolume::like(gt, 0);
        // Tumor A: 3x3x3 (radius ~1.86 mm), fully predicted.
        for (int z = 2; z < 5; ++z)
            for (int y = 2; y < 5; ++y)
                for (int x = 2; x < 5; ++x) gt(x, y, z) = pred(x, y, z) = 2;
        // Tumor B: 8x8x8 (radius ~4.96 mm), 5% predicted.
        for (int z = 10; z < 18; ++z)
            for (int y = 10; y < 18; ++y)
                for (int x = 10; x < 18; ++x) gt(x, y, z) = 2;
        for (int i = 0; i < 26; ++i) pred(10 + i % 8, 10 + i / 8, 10) = 2;
        // A false positive far away.
        pred(27, 27, 27) = 2;

        const auto r = detect(gt, pred);
        REQUIRE(r.tumors.size() == 2);
        CHECK(r.tumors[0].detected);
        CHECK_FALSE(r.tumors[1].detected);
        CHECK(r.tumors[1].overlap_voxels == 26);
        CHECK(r.false_positives == 1);
        CHECK(r.predicted_components == 3);
        CHECK(*r.sensitivity() == 0.5);
        CHECK(r.coarse[0].total == 2);
        CHECK(r.coarse[0].detected == 1);
        CHECK(r.fine[0].total == 1);
        CHECK(r.fine[1].total == 1);
        CHECK_FALSE(r.fine[4].sensitivity().has_value());
    }

    TEST_CASE("healthy-scan specificity") {
        LabelVolume clean(make_geometry({4, 4, 4}), 1);
        LabelVolume flagged = clean;
        flagged[5] = 2;
        CHECK(*healthy_scan_specificity({clean, clean, flagged, clean}) == 0.75);
        CHECK_FALSE(healthy_scan_specificity({}).has_value());
    }

    TEST_CASE("turing metrics count definite answers only") {
        TuringCounts c;
        c.real_as_real = 3;
        c.real_as_synthetic = 1;
        c.real_unsure = 5;
        c.synthetic_as_synthetic = 2;
        c.synthetic_as_real = 2;
        const auto t = turing_metrics(c);
        CHECK(t.total == 13);
        CHECK(t.definite == 8);
        CHECK(t.accuracy == 5.0 / 8.0);
        CHECK(*t.sensitivity == 0.5);
        CHECK(*t.specificity == 0.75);

        TuringCounts only_real;
        only_real.real_as_real = 2;
        const auto r = turing_metrics(only_real);
        CHECK_FALSE(r.sensitivity.has_value());
        CHECK(*r.specificity == 1.0);

        TuringCounts unsure;
        unsure.real_unsure = 4;
        CHECK_THROWS_AS(turing_metrics(unsure), UndefinedMetrics);
    }
}
