#include "tumorsynth/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tumorsynth/benchgrid.hpp"
#include "tumorsynth/generator.hpp"
#include "tumorsynth/metrics.hpp"
#include "tumorsynth/nifti.hpp"
#include "tumorsynth/rng.hpp"
#include "tumorsynth/serialization.hpp"
#include "tumorsynth/server.hpp"

namespace tumorsynth {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error("usage", m) {}
};

std::string scan_id_of(const fs::path& p) {
    std::string n = p.filename().string();
    for (const char* ext : {".nii.gz", ".nii"})
        if (n.ends_with(ext)) return n.substr(0, n.size() - std::string(ext).size());
    return n;
}

GenConfig resolve_config(const std::string& path) {
    if (!path.empty()) return load_config(path);
    if (const char* env = std::getenv("TUMORSYNTH_CONFIG"); env && *env) return load_config(env);
    GenConfig cfg;
    cfg.validate();
    return cfg;
}

void announce(std::ostream& err, const GenConfig& cfg, std::optional<uint64_t> seed) {
    json j = {{"config", cfg}};
    if (seed) j["seed"] = *seed;
    err << j.dump() << '\n';
}

std::vector<double> parse_levels(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::logic_error&) {
            throw UsageError("--levels expects comma-separated numbers, got '" + s + "'");
        }
    }
    if (out.empty()) throw UsageError("--levels is empty");
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

// ------------------------------------------------------------- commands

struct SynthArgs {
    std::string ct, liver, preset = "mix", out_ct, out_label, provenance, spec, replay;
    uint64_t seed = 0;
    bool training = false;
};

int cmd_synth(const SynthArgs& a, const std::string& config, std::ostream& out, std::ostream& err) {
    GenConfig cfg = resolve_config(config);
    if (a.training) {
        cfg.mass_effect = false;
        cfg.capsule = false;
    }
    if (!a.spec.empty() && !a.replay.empty()) throw UsageError("--spec and --replay are mutually exclusive");
    if (!is_preset_name(a.preset, cfg)) throw ArgumentError("unknown preset '" + a.preset + "'");
    announce(err, cfg, a.seed);

    PreparedScan scan = prepare_scan(nifti::load_scalar(a.ct), nifti::load_labels(a.liver), cfg, scan_id_of(a.ct));
    SynthesisResult r;
    if (!a.replay.empty()) {
        r = replay(scan, load_json(a.replay).get<ProvenanceRecord>(), cfg);
    } else if (!a.spec.empty()) {
        const json j = load_json(a.spec);
        std::vector<TumorSpec> specs;
        if (j.is_array())
            specs = j.get<std::vector<TumorSpec>>();
        else
            specs.push_back(j.get<TumorSpec>());
        r = synthesize_with_spec(scan, specs, a.seed, cfg);
    } else {
        r = synthesize(scan, a.preset, a.seed, cfg);
    }
    nifti::save(r.ct, a.out_ct);
    nifti::save(r.labels, a.out_label);
    if (!a.provenance.empty()) save_json(json(r.provenance), a.provenance);
    out << json({{"placed", r.provenance.tumors.size()},
                 {"skipped", r.provenance.skipped.size()},
                 {"preset", r.provenance.resolved_preset},
                 {"seed", r.provenance.seed}})
               .dump()
        << '\n';
    return 0;
}

int cmd_vessels(const std::string& ct_path, const std::string& liver_path, const std::string& out_path,
                const std::string& config, std::ostream& out, std::ostream& err) {
    const GenConfig cfg = resolve_config(config);
    announce(err, cfg, std::nullopt);
    const ScalarVolume ct = nifti::load_scalar(ct_path);
    const LabelVolume liver = nifti::load_labels(liver_path);
    if (!ct.geometry().same_lattice(liver.geometry())) throw ArgumentError("CT and liver mask lattices differ");
    const ParenchymaStats stats = estimate_parenchyma_stats(ct, liver, cfg);
    const VesselMask v = segment_vessels(ct, liver, stats, cfg);
    nifti::save(v, out_path);
    std::size_t count = 0;
    for (uint8_t x : v.data()) count += x != 0;
    out << json({{"vessel_voxels", count},
                 {"liver_mean", stats.liver_mean},
                 {"mu_p", stats.mu_p},
                 {"sigma_p", stats.sigma_p},
                 {"sigma_a", vessel_smoothing_sigma(stats.sigma_p)}})
               .dump()
        << '\n';
    return 0;
}

struct GridBuildArgs {
    std::vector<std::string> cts, livers;
    std::string out_dir, levels, dimensions;
    uint64_t seed = 0;
    unsigned jobs = 1;
    std::size_t draws = 1000;
};

int cmd_grid_build(const GridBuildArgs& a, const std::string& config, std::ostream& out, std::ostream& err) {
    const GenConfig cfg = resolve_config(config);
    if (a.cts.size() != a.livers.size()) throw UsageError("--ct and --liver must be given the same number of times");
    GridOptions opt;
    opt.seed = a.seed;
    opt.out_dir = a.out_dir;
    opt.jobs = std::max(1u, a.jobs);
    opt.in_distribution_draws = a.draws;
    if (!a.levels.empty()) opt.levels = parse_levels(a.levels);
    if (!a.dimensions.empty()) opt.dimensions = split_csv(a.dimensions);
    announce(err, cfg, a.seed);

    std::vector<PreparedScan> scans;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a.cts.size(); ++i) {
        const std::string id = scan_id_of(a.cts[i]);
        if (!ids.insert(id).second) throw ArgumentError("duplicate scan id '" + id + "'");
        scans.push_back(prepare_scan(nifti::load_scalar(a.cts[i]), nifti::load_labels(a.livers[i]), cfg, id));
    }
    const GridManifest m = build_grid(scans, cfg, opt);
    std::size_t clamped = 0;
    for (const auto& v : m.variants) clamped += !v.annotations.empty();
    out << json({{"manifest", (fs::path(a.out_dir) / "manifest.json").string()},
                 {"variants", m.variants.size()},
                 {"clamped", clamped}})
               .dump()
        << '\n';
    return 0;
}

int cmd_grid_eval(const std::string& manifest_path, const std::string& pred_dir, const std::string& report,
                  std::ostream& out) {
    const GridManifest m = load_json(manifest_path).get<GridManifest>();
    const GridEvaluation e = evaluate_grid(m, fs::path(manifest_path).parent_path(), pred_dir);
    out << format_grid_table(e);
    if (!report.empty()) {
        json cells = json::array();
        for (const auto& c : e.cells)
            cells.push_back({{"dimension", c.dimension},
                             {"level_index", c.level_index},
                             {"level", c.level},
                             {"mean_dsc", c.mean_dsc},
                             {"count", c.count}});
        save_json({{"cells", cells}, {"variant_dsc", e.variant_dsc}}, report);
    }
    return 0;
}

std::optional<fs::path> find_prediction(const fs::path& dir, const std::string& id) {
    for (const char* ext : {".nii.gz", ".nii"}) {
        const fs::path p = dir / (id + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

json bucket_json(const std::vector<RadiusBucket>& buckets) {
    json out = json::array();
    for (const auto& b : buckets) {
        const auto s = b.sensitivity();
        out.push_back({{"bucket", b.name},
                       {"total", b.total},
                       {"detected", b.detected},
                       {"sensitivity", s ? json(*s) : json(nullptr)}});
    }
    return out;
}

int cmd_eval(const std::string& gt, const std::string& pred, const std::string& report, double tolerance,
             double min_overlap, std::ostream& out) {
    if (tolerance < 0.0) throw ArgumentError("--tolerance must be non-negative");
    if (!(min_overlap > 0.0 && min_overlap <= 1.0)) throw ArgumentError("--min-overlap must be in (0, 1]");
    std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> cases;
    if (fs::is_directory(gt)) {
        if (!fs::is_directory(pred)) throw IoError("prediction directory not found: " + pred);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(gt))
            if (e.is_regular_file() && scan_id_of(e.path()) != e.path().filename().string()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::vector<std::string> missing;
        for (const auto& f : files) {
            const std::string id = scan_id_of(f);
            if (auto p = find_prediction(pred, id))
                cases.push_back({id, {f, *p}});
            else
                missing.push_back(id);
        }
        if (!missing.empty()) {
            std::string m = "missing predictions for";
            for (const auto& id : missing) m += " " + id;
            throw EvaluationError(m, missing);
        }
        if (cases.empty()) throw IoError("no NIfTI files in " + gt);
    } else {
        cases.push_back({scan_id_of(gt), {gt, pred}});
    }

    std::ofstream rep;
    if (!report.empty()) {
        rep.open(report);
        if (!rep) throw IoError("cannot write report " + report);
    }
    std::vector<RadiusBucket> coarse, fine;
    std::vector<LabelVolume> healthy;
    double dsc_sum = 0.0, nsd_sum = 0.0;
    std::size_t scored = 0, fps = 0;
    out << std::left << std::setw(24) << "case" << std::right << std::setw(9) << "DSC" << std::setw(9) << "NSD"
        << std::setw(12) << "detected" << std::setw(6) << "FP" << '\n';
    for (const auto& [id, paths] : cases) {
        const LabelVolume g = nifti::load_labels(paths.first);
        const LabelVolume p = nifti::load_labels(paths.second);
        if (!g.geometry().same_lattice(p.geometry()))
            throw ArgumentError("lattice mismatch between " + paths.first.string() + " and " + paths.second.string());
        const BinaryMask gm = BinaryMask::from_labels(g, kTumor), pm = BinaryMask::from_labels(p, kTumor);
        const SegScores s = score_segmentation(gm, pm, tolerance);
        const DetectionReport d = detect(g, p, min_overlap);
        if (gm.count() == 0) healthy.push_back(p);
        if (coarse.empty()) {
            coarse = d.coarse;
            fine = d.fine;
            for (auto& b : coarse) b.total = b.detected = 0;
            for (auto& b : fine) b.total = b.detected = 0;
        }
        std::size_t det = 0;
        for (const auto& t : d.tumors) det += t.detected;
        for (std::size_t i = 0; i < coarse.size(); ++i) {
            coarse[i].total += d.coarse[i].total;
            coarse[i].detected += d.coarse[i].detected;
        }
        for (std::size_t i = 0; i < fine.size(); ++i) {
            fine[i].total += d.fine[i].total;
            fine[i].detected += d.fine[i].detected;
        }
        dsc_sum += s.dsc;
        nsd_sum += s.nsd;
        fps += d.false_positives;
        ++scored;
        std::ostringstream detected;
        detected << det << '/' << d.tumors.size();
        out << std::left << std::setw(24) << id << std::right << std::fixed << std::setprecision(2) << std::setw(9)
            << s.dsc * 100.0 << std::setw(9) << s.nsd * 100.0 << std::setw(12) << detected.str() << std::setw(6)
            << d.false_positives << '\n';
        if (rep) {
            json t = json::array();
            for (const auto& x : d.tumors)
                t.push_back({{"radius_mm", x.radius_mm}, {"voxels", x.voxels}, {"overlap_voxels", x.overlap_voxels},
                             {"detected", x.detected}});
            rep << json({{"case", id},
                         {"dsc", s.dsc},
                         {"nsd", s.nsd},
                         {"tolerance_mm", tolerance},
                         {"tumors", t},
                         {"false_positives", d.false_positives},
                         {"coarse", bucket_json(d.coarse)},
                         {"fine", bucket_json(d.fine)}})
                       .dump()
                << '\n';
        }
    }
    const auto spec = healthy_scan_specificity(healthy);
    json summary = {{"summary", true},
                    {"cases", scored},
                    {"mean_dsc", dsc_sum / scored},
                    {"mean_nsd", nsd_sum / scored},
                    {"false_positives", fps},
                    {"healthy_scans", healthy.size()},
                    {"healthy_specificity", spec ? json(*spec) : json(nullptr)},
                    {"coarse", bucket_json(coarse)},
                    {"fine", bucket_json(fine)}};
    out << std::left << std::setw(24) << "mean" << std::right << std::setw(9) << dsc_sum / scored * 100.0
        << std::setw(9) << nsd_sum / scored * 100.0 << '\n';
    for (const auto& b : coarse) {
        const auto s = b.sensitivity();
        out << "sensitivity " << b.name << ": " << b.detected << '/' << b.total;
        if (s) out << " (" << *s * 100.0 << "%)";
        out << '\n';
    }
    if (rep) rep << summary.dump() << '\n';
    return 0;
}

int cmd_turing_export(const std::string& manifest_path, const std::string& out_dir, const std::string& config,
                      std::ostream& out, std::ostream& err) {
    const json m = load_json(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    const uint64_t seed = m.value("seed", uint64_t{0});
    GenConfig cfg = resolve_config(config);
    announce(err, cfg, seed);

    struct Source {
        std::string truth;
        json entry;
    };
    std::vector<Source> sources;
    for (const auto& e : m.value("real", json::array())) sources.push_back({"real", e});
    for (const auto& e : m.value("synthetic", json::array())) sources.push_back({"synthetic", e});
    if (sources.empty()) throw ArgumentError("export manifest lists no scans");

    Rng rng(derive_seed(seed, 0, 8));
    for (std::size_t i = sources.size() - 1; i > 0; --i)
        std::swap(sources[i], sources[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int64_t>(i)))]);

    fs::create_directories(fs::path(out_dir) / "scans");
    json cases = json::array();
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto& s = sources[i];
        std::ostringstream id;
        id << "case-" << std::setw(3) << std::setfill('0') << i + 1;
        ScalarVolume ct = nifti::load_scalar(resolve(s.entry.at("ct").get<std::string>()));
        json origin = s.entry;
        if (s.truth == "synthetic" && s.entry.contains("liver")) {
            const std::string preset = s.entry.value("preset", std::string("mix"));
            const uint64_t sseed = s.entry.value("seed", uint64_t{0});
            const std::string sid = scan_id_of(s.entry.at("ct").get<std::string>());
            PreparedScan scan =
                prepare_scan(std::move(ct), nifti::load_labels(resolve(s.entry.at("liver").get<std::string>())), cfg, sid);
            SynthesisResult r = synthesize(scan, preset, sseed, cfg);
            ct = std::move(r.ct);
            origin["provenance"] = r.provenance;
        }
        nifti::save(ct, fs::path(out_dir) / "scans" / (id.str() + ".nii.gz"));
        cases.push_back({{"id", id.str()}, {"truth", s.truth}, {"source", origin}});
    }
    save_json({{"seed", seed}, {"cases", cases}}, fs::path(out_dir) / "answer_key.json");
    out << json({{"cases", cases.size()}, {"out_dir", out_dir}}).dump() << '\n';
    return 0;
}

int cmd_serve(const std::string& data_dir, const std::string& host, int port, std::size_t cache_mb, int workers,
              const std::string& config, std::ostream& out, std::ostream& err) {
    std::string cfg_path = config;
    if (cfg_path.empty() && fs::exists(fs::path(data_dir) / "config.json"))
        cfg_path = (fs::path(data_dir) / "config.json").string();
    const GenConfig cfg = resolve_config(cfg_path);
    announce(err, cfg, std::nullopt);
    ServerOptions opt;
    opt.preview_cache_bytes = cache_mb << 20;
    opt.preview_workers = workers;
    ApiServer server(data_dir, cfg, opt);
    const int bound = server.bind(host, port);
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    out << json({{"listening", host + ":" + std::to_string(bound)}}).dump() << std::endl;
    server.listen_after_bind();
    return 0;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message, json extra = json::object()) {
    extra["error"] = kind;
    extra["message"] = message;
    err << extra.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Procedural liver tumor synthesis", "tumorsynth"};
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "Generator configuration JSON (default: $TUMORSYNTH_CONFIG)");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Implant synthetic tumors into a CT volume");
    synth->add_option("--ct", sa.ct, "CT volume (.nii/.nii.gz)")->required();
    synth->add_option("--liver", sa.liver, "Liver mask")->required();
    synth->add_option("--preset", sa.preset, "tiny, small, medium, large or mix")->capture_default_str();
    synth->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    synth->add_option("--out-ct", sa.out_ct, "Output CT volume")->required();
    synth->add_option("--out-label", sa.out_label, "Output label volume")->required();
    synth->add_option("--provenance", sa.provenance, "Write the provenance record here");
    synth->add_option("--spec", sa.spec, "Explicit tumor spec JSON (object or array)");
    synth->add_option("--replay", sa.replay, "Re-run a provenance record");
    synth->add_flag("--training", sa.training, "Disable mass effect and capsule");

    std::string v_ct, v_liver, v_out;
    auto* vessels = app.add_subcommand("vessels", "Segment vessels inside the liver mask");
    vessels->add_option("--ct", v_ct, "CT volume")->required();
    vessels->add_option("--liver", v_liver, "Liver mask")->required();
    vessels->add_option("--out", v_out, "Output vessel mask")->required();

    auto* grid = app.add_subcommand("grid", "Out-of-distribution benchmark grid");
    grid->require_subcommand(1);
    GridBuildArgs ga;
    auto* gbuild = grid->add_subcommand("build", "Synthesize the grid variants and manifest");
    gbuild->add_option("--ct", ga.cts, "CT volume (repeatable)")->required();
    gbuild->add_option("--liver", ga.livers, "Liver mask, one per --ct")->required();
    gbuild->add_option("--out-dir", ga.out_dir, "Output directory")->required();
    gbuild->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
    gbuild->add_option("--levels", ga.levels, "Comma-separated offsets in standard deviations (default -2,-1,0,1,2)");
    gbuild->add_option("--dimensions", ga.dimensions, "Comma-separated subset of shape,size,texture,intensity,location");
    gbuild->add_option("--jobs", ga.jobs, "Worker threads")->capture_default_str();
    gbuild->add_option("--draws", ga.draws, "Preset draws used to measure the in-distribution statistics")
        ->capture_default_str();
    std::string ge_manifest, ge_pred, ge_report;
    auto* geval = grid->add_subcommand("eval", "Score predictions on a grid");
    geval->add_option("--manifest", ge_manifest, "Grid manifest.json")->required();
    geval->add_option("--pred-dir", ge_pred, "Directory of <variant id>.nii[.gz] predictions")->required();
    geval->add_option("--report", ge_report, "Write per-cell JSON here");

    std::string e_gt, e_pred, e_report;
    double tolerance = 2.0, min_overlap = 0.1;
    auto* eval = app.add_subcommand("eval", "Segmentation and detection metrics");
    eval->add_option("--gt", e_gt, "Ground-truth labels (file or directory)")->required();
    eval->add_option("--pred", e_pred, "Predicted labels (file or directory)")->required();
    eval->add_option("--report", e_report, "Per-case JSONL report");
    eval->add_option("--tolerance", tolerance, "NSD tolerance in mm")->capture_default_str();
    eval->add_option("--min-overlap", min_overlap, "Detection overlap fraction")->capture_default_str();

    std::string t_manifest, t_out;
    auto* texport = app.add_subcommand("turing-export", "Prepare a blinded reader-study data directory");
    texport->add_option("--manifest", t_manifest, "Export manifest JSON")->required();
    texport->add_option("--out-dir", t_out, "Server data directory to create")->required();

    std::string s_dir, s_host = "127.0.0.1";
    int s_port = 8080, s_workers = 2;
    std::size_t s_cache = 512;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--data-dir", s_dir, "Data directory")->required();
    serve->add_option("--host", s_host, "Bind address")->capture_default_str();
    serve->add_option("--port", s_port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--cache-mb", s_cache, "Preview cache budget in MiB")->capture_default_str();
    serve->add_option("--workers", s_workers, "Concurrent preview syntheses")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (auto* sub = target->get_subcommands().empty() ? nullptr : target->get_subcommands().front(); sub;
             sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front())
            target = sub;
        out << target->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << "tumorsynth\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, "usage", e.what());
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(sa, config, out, err);
        if (vessels->parsed()) return cmd_vessels(v_ct, v_liver, v_out, config, out, err);
        if (gbuild->parsed()) return cmd_grid_build(ga, config, out, err);
        if (geval->parsed()) return cmd_grid_eval(ge_manifest, ge_pred, ge_report, out);
        if (eval->parsed()) return cmd_eval(e_gt, e_pred, e_report, tolerance, min_overlap, out);
        if (texport->parsed()) return cmd_turing_export(t_manifest, t_out, config, out, err);
        if (serve->parsed()) return cmd_serve(s_dir, s_host, s_port, s_cache, s_workers, config, out, err);
    } catch (const UsageError& e) {
        print_error(err, e.kind(), e.what());
        return 2;
    } catch (const CollisionError& e) {
        print_error(err, e.kind(), e.what(), {{"tumor_index", e.tumor_index()}});
        return 1;
    } catch (const EvaluationError& e) {
        print_error(err, e.kind(), e.what(), {{"missing", e.missing()}});
        return 1;
    } catch (const Error& e) {
        print_error(err, e.kind(), e.what());
        return 1;
    } catch (const json::exception& e) {
        print_error(err, "format", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error(err, "internal", e.what());
        return 1;
    }
    print_error(err, "usage", "no command given");
    return 2;
}

}  // namespace tumorsynth
