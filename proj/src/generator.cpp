#include "tumorsynth/generator.hpp"

#include <cmath>
#include <optional>

#include "tumorsynth/composite.hpp"
#include "tumorsynth/placement.hpp"
#include "tumorsynth/rng.hpp"
#include "tumorsynth/shape.hpp"
#include "tumorsynth/texture.hpp"

namespace tumorsynth {

PreparedScan prepare_scan(ScalarVolume ct, LabelVolume liver, const GenConfig& cfg, std::string scan_id) {
    cfg.validate();
    if (!ct.geometry().same_lattice(liver.geometry())) throw ArgumentError("scan and liver mask geometries differ");
    require_finite(ct);
    require_label_range(liver);
    PreparedScan s;
    s.scan_id = std::move(scan_id);
    s.stats = estimate_parenchyma_stats(ct, liver, cfg);
    s.vessels = segment_vessels(ct, liver, s.stats, cfg);
    s.ct = std::move(ct);
    s.liver = std::move(liver);
    return s;
}

std::vector<TumorSpec> sample_tumor_specs(const std::string& preset, uint64_t seed, const ParenchymaStats& stats,
                                          const GenConfig& cfg, std::string* resolved) {
    cfg.validate();
    if (!is_preset_name(preset, cfg)) throw ArgumentError("unknown size preset '" + preset + "'");
    Rng scan_rng(seed, 0, Stream::Preset);
    const bool mix = preset == "mix";
    const SizePreset& row =
        mix ? cfg.presets[static_cast<std::size_t>(scan_rng.uniform_int(0, static_cast<int64_t>(cfg.presets.size()) - 1))]
            : cfg.preset(preset);
    if (resolved) *resolved = row.name;
    const int count = static_cast<int>(scan_rng.uniform_int(row.count_min, row.count_max));

    const double mu_lo = cfg.mu_t_min;
    const double mu_hi = std::max(mu_lo, stats.mu_p - cfg.mu_t_margin);
    const bool shared = cfg.shared_mu_t && !mix;
    const double shared_mu_t = scan_rng.uniform(mu_lo, mu_hi);

    std::vector<TumorSpec> specs;
    specs.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(seed, static_cast<uint64_t>(i), Stream::Parameters);
        TumorSpec s;
        s.stream_index = static_cast<uint64_t>(i);
        s.preset = row.name;
        s.radius_mm = row.radius_mm;
        for (double& a : s.half_axes_mm)
            a = rng.uniform(cfg.half_axis_factor.lo * row.radius_mm, cfg.half_axis_factor.hi * row.radius_mm);
        s.sigma_e = rng.uniform(row.sigma_e.lo, row.sigma_e.hi);
        s.sigma_c = rng.uniform(cfg.sigma_c.lo, cfg.sigma_c.hi);
        s.eta = rng.uniform(cfg.eta.lo, cfg.eta.hi);
        const double own_mu_t = rng.uniform(mu_lo, mu_hi);
        s.mu_t = shared ? shared_mu_t : own_mu_t;
        s.intensity = cfg.intensity;
        s.capsule_d = cfg.d;
        s.lb = cfg.lb;
        s.ub = cfg.ub;
        s.mass_effect = cfg.mass_effect;
        s.capsule = cfg.capsule;
        specs.push_back(s);
    }
    return specs;
}

namespace {

// Evolving state of one synthesis call.
class Implanter {
public:
    Implanter(const PreparedScan& scan, uint64_t seed, const GenConfig& cfg)
        : scan_(scan), seed_(seed), cfg_(cfg), ct_(scan.ct), labels_(scan.liver), blocked_(scan.vessels) {
        rebuild_sampler();
    }

    // Returns false when an unpinned tumor could not be placed.
    bool implant(TumorSpec spec, std::size_t position, ProvenanceRecord& prov) {
        spec.validate();
        for (auto& w : spec.range_warnings(cfg_, scan_.stats.mu_p))
            prov.warnings.push_back("tumor " + std::to_string(position) + ": " + w);

        const Geometry& geo = ct_.geometry();
        if (spec.center) {
            const Index3& c = *spec.center;
            if (!geo.contains(c[0], c[1], c[2]))
                throw ArgumentError("pinned center of tumor " + std::to_string(position) + " lies outside the volume");
            if (!sampler_->collision_free(c, spec.radius_mm)) throw CollisionError(position);
        } else {
            Rng rng(seed_, spec.stream_index, Stream::Placement);
            try {
                const Placement p = sampler_->sample({spec.radius_mm, cfg_.max_attempts}, rng);
                spec.center = p.center;
                spec.attempts = p.attempts;
            } catch (const PlacementExhausted& e) {
                prov.skipped.push_back({spec.stream_index, e.attempts()});
                return false;
            }
        }
        if (spec.render && paint(spec) == 0)
            prov.warnings.push_back("tumor " + std::to_string(position) +
                                    ": no voxel reached the label threshold inside the liver");
        prov.tumors.push_back(spec);
        return true;
    }

    ScalarVolume take_ct() { return std::move(ct_); }
    LabelVolume take_labels() { return std::move(labels_); }

private:
    void rebuild_sampler() { sampler_.emplace(labels_, blocked_); }

    // Returns the number of voxels labeled tumor by the blend.
    std::size_t paint(const TumorSpec& spec) {
        const Geometry& geo = ct_.geometry();
        const Index3 c = *spec.center;
        const double alpha = cfg_.elastic_alpha0 * spec.sigma_e;
        const int deform_margin = spec.sigma_e > 0.0 ? static_cast<int>(std::ceil(2.5 * alpha)) + 1 : 0;
        const int blur_margin = static_cast<int>(std::ceil(4.0 * spec.sigma_c)) + 1;
        Box shape_box;
        for (int a = 0; a < 3; ++a) {
            const int r = static_cast<int>(std::ceil(spec.half_axes_mm[a] / geo.spacing[a])) + deform_margin + blur_margin;
            shape_box.lo[a] = c[a] - r;
            shape_box.hi[a] = c[a] + r + 1;
        }
        shape_box = shape_box.clipped_to(geo.dims);

        // Shape: ellipsoid -> elastic deformation -> restricted to liver tissue -> soft edge.
        const Geometry sg = sub_geometry(geo, shape_box);
        ShapeParams sp;
        sp.center = {static_cast<double>(c[0] - shape_box.lo[0]), static_cast<double>(c[1] - shape_box.lo[1]),
                     static_cast<double>(c[2] - shape_box.lo[2])};
        sp.radius_mm = spec.radius_mm;
        sp.half_axes_mm = spec.half_axes_mm;
        sp.sigma_e = spec.sigma_e;
        sp.sigma_c = spec.sigma_c;
        Rng shape_rng(seed_, spec.stream_index, Stream::Shape);
        ElasticOptions eo;
        eo.alpha0 = cfg_.elastic_alpha0;
        eo.min_smoothing = cfg_.elastic_min_smoothing;
        SoftMask shape = elastic_deform(ellipsoid_mask(sp, sg), spec.sigma_e, shape_rng, eo);
        const LabelVolume local_labels = crop(labels_, shape_box);
        for (std::size_t i = 0; i < shape.size(); ++i)
            if (local_labels[i] == kBackground) shape[i] = 0.0f;
        const SoftMask soft = soft_edge(shape, spec.sigma_c);

        Box tight = bounding_box(soft, [](float v) { return v > 0.0f; });
        if (tight.empty()) return 0;
        const SoftMask t2 = crop(soft, tight);
        for (int a = 0; a < 3; ++a) {
            tight.lo[a] += shape_box.lo[a];
            tight.hi[a] += shape_box.lo[a];
        }

        // Texture over the tight box plus a blur margin, then cropped back.
        const int tex_margin = static_cast<int>(std::ceil(4.0 * cfg_.sigma_b));
        Geometry tg = t2.geometry();
        for (int a = 0; a < 3; ++a) tg.dims[a] += 2 * tex_margin;
        TextureParams tp{spec.mu_t, scan_.stats.sigma_p * spec.sigma_p_scale, spec.eta, cfg_.sigma_b};
        Rng tex_rng(seed_, spec.stream_index, Stream::Texture);
        const ScalarVolume tex_full = generate_texture(tg, tp, tex_rng);
        const Index3 ts = t2.dims();
        const ScalarVolume tex_cropped =
            crop(tex_full, Box{{tex_margin, tex_margin, tex_margin},
                               {tex_margin + ts[0], tex_margin + ts[1], tex_margin + ts[2]}});
        const ScalarVolume texture(t2.geometry(), std::vector<float>(tex_cropped.values()));

        std::size_t labeled = 0;
        {
            auto [f1, l1] = blend_tumor(crop(ct_, tight), crop(labels_, tight), t2, texture, cfg_.label_threshold);
            for (std::size_t i = 0; i < l1.size(); ++i) labeled += l1[i] == kTumor && t2[i] >= cfg_.label_threshold;
            paste(ct_, f1, tight.lo);
            paste(labels_, l1, tight.lo);
        }

        if (cfg_.mass_effect && spec.mass_effect && spec.intensity > 0.0) {
            const double gamma_max = cfg_.gamma_max_factor * spec.radius_mm;
            Box ball;
            for (int a = 0; a < 3; ++a) {
                const int r = static_cast<int>(std::ceil(gamma_max / geo.spacing[a])) + 1;
                ball.lo[a] = c[a] - r;
                ball.hi[a] = c[a] + r + 1;
            }
            ball = ball.clipped_to(geo.dims);
            MassEffectParams mp;
            mp.center = {static_cast<double>(c[0] - ball.lo[0]), static_cast<double>(c[1] - ball.lo[1]),
                         static_cast<double>(c[2] - ball.lo[2])};
            mp.gamma_max_mm = gamma_max;
            mp.intensity = spec.intensity;
            auto [f2, l2] = mass_effect_warp(crop(ct_, ball), crop(labels_, ball), mp);
            paste(ct_, f2, ball.lo);
            paste(labels_, l2, ball.lo);
        }

        if (cfg_.capsule && spec.capsule && spec.capsule_d > 0.0) {
            const int r = static_cast<int>(std::ceil(4.0 * cfg_.sigma_d));
            const Box cap = tight.grown({r, r, r}).clipped_to(geo.dims);
            SoftMask t_cap(sub_geometry(geo, cap), 0.0f);
            paste(t_cap, t2, {tight.lo[0] - cap.lo[0], tight.lo[1] - cap.lo[1], tight.lo[2] - cap.lo[2]});
            CapsuleParams cp{spec.lb, spec.ub, cfg_.sigma_d, spec.capsule_d};
            paste(ct_, apply_capsule(crop(ct_, cap), t_cap, cp), cap.lo);
        }

        // Later tumors must not overlap this one's core.
        const auto& td = t2.dims();
        for (int z = 0; z < td[2]; ++z)
            for (int y = 0; y < td[1]; ++y)
                for (int x = 0; x < td[0]; ++x)
                    if (t2(x, y, z) >= cfg_.label_threshold)
                        blocked_(x + tight.lo[0], y + tight.lo[1], z + tight.lo[2]) = 1;
        rebuild_sampler();
        return labeled;
    }

    const PreparedScan& scan_;
    uint64_t seed_;
    const GenConfig& cfg_;
    ScalarVolume ct_;
    LabelVolume labels_;
    VesselMask blocked_;
    std::optional<LocationSampler> sampler_;
};

ProvenanceRecord base_record(const PreparedScan& scan, uint64_t seed) {
    ProvenanceRecord p;
    p.scan_id = scan.scan_id;
    p.seed = seed;
    p.mu_p = scan.stats.mu_p;
    p.sigma_p = scan.stats.sigma_p;
    p.liver_mean = scan.stats.liver_mean;
    return p;
}

SynthesisResult run(const PreparedScan& scan, const std::vector<TumorSpec>& specs, uint64_t seed,
                    const GenConfig& cfg, ProvenanceRecord prov) {
    cfg.validate();
    Implanter imp(scan, seed, cfg);
    for (std::size_t i = 0; i < specs.size(); ++i) imp.implant(specs[i], i, prov);
    if (prov.tumors.empty())
        throw SynthesisFailed("no tumor could be placed (" + std::to_string(prov.skipped.size()) +
                              " placement(s) exhausted)");
    return SynthesisResult{imp.take_ct(), imp.take_labels(), std::move(prov)};
}

}  // namespace

SynthesisResult synthesize(const PreparedScan& scan, const std::string& preset, uint64_t seed, const GenConfig& cfg) {
    ProvenanceRecord prov = base_record(scan, seed);
    prov.preset = preset;
    const auto specs = sample_tumor_specs(preset, seed, scan.stats, cfg, &prov.resolved_preset);
    return run(scan, specs, seed, cfg, std::move(prov));
}

SynthesisResult synthesize(const ScalarVolume& ct, const LabelVolume& liver, const std::string& preset,
                           uint64_t seed, const GenConfig& cfg) {
    return synthesize(prepare_scan(ct, liver, cfg), preset, seed, cfg);
}

SynthesisResult synthesize_with_spec(const PreparedScan& scan, const std::vector<TumorSpec>& specs, uint64_t seed,
                                     const GenConfig& cfg) {
    return run(scan, specs, seed, cfg, base_record(scan, seed));
}

SynthesisResult synthesize_with_spec(const ScalarVolume& ct, const LabelVolume& liver,
                                     const std::vector<TumorSpec>& specs, uint64_t seed, const GenConfig& cfg) {
    return synthesize_with_spec(prepare_scan(ct, liver, cfg), specs, seed, cfg);
}

SynthesisResult replay(const PreparedScan& scan, const ProvenanceRecord& record, const GenConfig& cfg) {
    for (const auto& t : record.tumors)
        if (!t.center) throw ArgumentError("provenance tumor without a recorded center cannot be replayed");
    ProvenanceRecord prov = base_record(scan, record.seed);
    prov.preset = record.preset;
    prov.resolved_preset = record.resolved_preset;
    return run(scan, record.tumors, record.seed, cfg, std::move(prov));
}

}  // namespace tumorsynth
