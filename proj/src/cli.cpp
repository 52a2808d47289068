#include "tcr/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "tcr/error.hpp"
#include "tcr/keyvalue.hpp"
#include "tcr/metrics.hpp"
#include "tcr/pipeline.hpp"

namespace tcr {

namespace fs = std::filesystem;

namespace {

// Minimal option table: every option is `--name value` or `--name=value`
// (booleans also bare `--name`), mirrored one-to-one by the key=value
// config file and the frozen snapshot, so a snapshot re-parses as a config.
class OptionSet {
  public:
    void add_int(const std::string& name, long long* target, const std::string& help) {
        entries_.push_back({name, Kind::integer, target, help});
    }
    void add_uint(const std::string& name, std::uint64_t* target, const std::string& help) {
        entries_.push_back({name, Kind::unsigned_integer, target, help});
    }
    void add_double(const std::string& name, double* target, const std::string& help) {
        entries_.push_back({name, Kind::floating, target, help});
    }
    void add_string(const std::string& name, std::string* target, const std::string& help) {
        entries_.push_back({name, Kind::text, target, help});
    }
    void add_bool(const std::string& name, bool* target, const std::string& help) {
        entries_.push_back({name, Kind::boolean, target, help});
    }

    void apply(const std::string& key, const std::string& value) {
        seen_.push_back(key);
        for (Entry& e : entries_)
            if (e.name == key) {
                switch (e.kind) {
                    case Kind::integer: *static_cast<long long*>(e.target) = std::stoll(value); break;
                    case Kind::unsigned_integer:
                        *static_cast<std::uint64_t*>(e.target) = std::stoull(value);
                        break;
                    case Kind::floating: *static_cast<double*>(e.target) = std::stod(value); break;
                    case Kind::text: *static_cast<std::string*>(e.target) = value; break;
                    case Kind::boolean:
                        *static_cast<bool*>(e.target) = (value == "1" || value == "true");
                        break;
                }
                return;
            }
        throw ConfigError("unknown option: " + key);
    }

    bool is_bool(const std::string& key) const {
        for (const Entry& e : entries_)
            if (e.name == key) return e.kind == Kind::boolean;
        return false;
    }

    // Config file first (lowest precedence above defaults), then flags.
    void parse(const std::vector<std::string>& args) {
        std::string config_path;
        for (std::size_t i = 0; i < args.size(); ++i)
            if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
        if (!config_path.empty()) {
            KeyValueFile kv = KeyValueFile::load(config_path);
            for (const auto& [k, v] : kv.entries())
                if (k != "command") apply(k, v);
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string arg = args[i];
            if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument: " + arg);
            arg = arg.substr(2);
            std::string key = arg, value;
            auto eq = arg.find('=');
            if (eq != std::string::npos) {
                key = arg.substr(0, eq);
                value = arg.substr(eq + 1);
            } else if (is_bool(key)) {
                value = "true";
            } else {
                if (i + 1 >= args.size()) throw ConfigError("option --" + key + " needs a value");
                value = args[++i];
            }
            if (key == "config") continue;
            apply(key, value);
        }
    }

    KeyValueFile snapshot(const std::string& command) const {
        KeyValueFile kv;
        kv.set("command", command);
        for (const Entry& e : entries_) {
            if (e.name == "out") continue; // output location, not run config
            switch (e.kind) {
                case Kind::integer:
                    kv.set_int(e.name, *static_cast<const long long*>(e.target));
                    break;
                case Kind::unsigned_integer:
                    kv.set_int(e.name,
                               static_cast<long long>(*static_cast<const std::uint64_t*>(e.target)));
                    break;
                case Kind::floating:
                    kv.set_double(e.name, *static_cast<const double*>(e.target));
                    break;
                case Kind::text: kv.set(e.name, *static_cast<const std::string*>(e.target)); break;
                case Kind::boolean:
                    kv.set(e.name, *static_cast<const bool*>(e.target) ? "true" : "false");
                    break;
            }
        }
        return kv;
    }

    void print_help(const std::string& command) const {
        std::printf("usage: tcrecon %s [--config FILE] [options]\n", command.c_str());
        for (const Entry& e : entries_) std::printf("  --%-18s %s\n", e.name.c_str(), e.help.c_str());
    }

    bool was_set(const std::string& key) const {
        for (const std::string& k : seen_)
            if (k == key) return true;
        return false;
    }

  private:
    enum class Kind { integer, unsigned_integer, floating, text, boolean };
    struct Entry {
        std::string name;
        Kind kind;
        void* target;
        std::string help;
    };
    std::vector<Entry> entries_;
    std::vector<std::string> seen_;
};

std::string default_out(const std::string& command) {
    const char* root = std::getenv("TCRECON_OUT");
    return (root ? std::string(root) : std::string(".")) + "/" + command + "_out";
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open for writing: " + path);
    std::fprintf(f, "%s\n", header.c_str());
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            std::fprintf(f, i ? ",%.17g" : "%.17g", row[i]);
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

struct GenerateOptions {
    long long frames = 30;
    std::uint64_t seed = 1;
    double amplitude = 0.35;
    long long image_size = 256;
    long long voxel_res = 64;
    long long mesh_res = 96;
    double orbit_radius = 3.0;
    double orbit_step = 0.12;
    std::string palette = "seeded"; // seeded | two-tone
    std::string out;

    OptionSet options() {
        OptionSet o;
        o.add_int("frames", &frames, "frames per sequence");
        o.add_uint("seed", &seed, "subject seed");
        o.add_double("amplitude", &amplitude, "joint motion amplitude (radians)");
        o.add_int("image-size", &image_size, "rendered image size");
        o.add_int("voxel-res", &voxel_res, "ground-truth voxel resolution");
        o.add_int("mesh-res", &mesh_res, "body surface extraction resolution");
        o.add_double("orbit-radius", &orbit_radius, "camera orbit radius (m)");
        o.add_double("orbit-step", &orbit_step, "camera orbit step per frame (radians)");
        o.add_string("palette", &palette, "seeded | two-tone");
        o.add_string("out", &out, "output dataset directory");
        return o;
    }
};

int cmd_generate(const std::vector<std::string>& args) {
    GenerateOptions g;
    OptionSet opts = g.options();
    opts.parse(args);
    if (g.out.empty()) g.out = default_out("generate");

    SequenceSpec spec;
    spec.frame_count = static_cast<int>(g.frames);
    spec.seed = g.seed;
    spec.motion_amplitude = g.amplitude;
    spec.image_size = static_cast<int>(g.image_size);
    spec.voxel_resolution = static_cast<int>(g.voxel_res);
    spec.mesh_resolution = static_cast<int>(g.mesh_res);
    spec.orbit_radius = g.orbit_radius;
    spec.orbit_step = g.orbit_step;
    if (g.palette == "two-tone")
        spec.region_colors = two_tone_palette({0.82, 0.13, 0.12}, {0.12, 0.25, 0.85});
    else if (g.palette != "seeded")
        throw ConfigError("palette must be 'seeded' or 'two-tone'");

    Sequence seq = generate_sequence(spec);
    export_dataset(seq, g.out);
    opts.snapshot("generate").save((fs::path(g.out) / "config.snapshot").string());
    std::printf("generated %d frames -> %s\n", seq.frame_count(), g.out.c_str());
    return 0;
}

struct TrainOptions {
    std::string stage = "all"; // voxel | implicit | color | all
    std::string data;
    std::string checkpoints; // source for staged runs; defaults to out
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    long long clip_frames = 3;
    double gamma = 0.7, lambda = 0.5, mu = 0.5;
    double lr = 0.05; // voxel-stage Adam rate
    double implicit_lr = 1e-3, color_lr = 1e-3;
    long long voxel_steps = 400, implicit_steps = 2500, color_steps = 1500;
    long long n_points = 10000, m_points = 4000;
    long long batch_size = 512;
    double sigma_factor = 0.05, uniform_fraction = 0.1;
    long long levels = 2, image_levels = 2;
    std::string hidden = "128,64,32", color_hidden = "128,64,32";
    long long decay_interval = 0;
    double decay_factor = 0.1;
    bool teacher_force = false;
    bool tc_occupied_only = false;

    OptionSet options() {
        OptionSet o;
        o.add_string("stage", &stage, "voxel | implicit | color | all");
        o.add_string("data", &data, "dataset directory");
        o.add_string("checkpoints", &checkpoints, "directory with prerequisite checkpoints");
        o.add_string("out", &out, "checkpoint output directory");
        o.add_uint("seed", &seed, "training seed (required)");
        o.add_int("clip-frames", &clip_frames, "frames per training clip (N)");
        o.add_double("gamma", &gamma, "occupied/unoccupied BCE balance");
        o.add_double("lambda", &lambda, "temporal voxel weight");
        o.add_double("mu", &mu, "temporal color weight");
        o.add_double("lr", &lr, "voxel-stage Adam learning rate");
        o.add_double("implicit-lr", &implicit_lr, "implicit-stage RMSprop rate");
        o.add_double("color-lr", &color_lr, "color-stage RMSprop rate");
        o.add_int("voxel-steps", &voxel_steps, "voxel-stage steps");
        o.add_int("implicit-steps", &implicit_steps, "implicit-stage steps");
        o.add_int("color-steps", &color_steps, "color-stage steps");
        o.add_int("n-points", &n_points, "occupancy samples per frame");
        o.add_int("m-points", &m_points, "color samples");
        o.add_int("batch-size", &batch_size, "minibatch size");
        o.add_double("sigma-factor", &sigma_factor, "sample noise as fraction of bbox diagonal");
        o.add_double("uniform-fraction", &uniform_fraction, "far-field uniform sample share");
        o.add_int("levels", &levels, "shape pyramid levels (L)");
        o.add_int("image-levels", &image_levels, "image pyramid levels (K)");
        o.add_string("hidden", &hidden, "occupancy decoder hidden sizes, comma separated");
        o.add_string("color-hidden", &color_hidden, "color decoder hidden sizes");
        o.add_int("decay-interval", &decay_interval, "lr decay interval in steps (0 = off)");
        o.add_double("decay-factor", &decay_factor, "lr decay factor");
        o.add_bool("teacher-force", &teacher_force, "use GT voxel grids for features");
        o.add_bool("tc-occupied-only", &tc_occupied_only,
                   "restrict temporal voxel loss to occupied source voxels");
        return o;
    }

    TrainConfig to_config() const {
        TrainConfig cfg;
        cfg.clip_frames = static_cast<int>(clip_frames);
        cfg.seed = seed;
        cfg.weights.gamma = gamma;
        cfg.weights.lambda = lambda;
        cfg.weights.mu = mu;
        cfg.encoder.levels = static_cast<int>(levels);
        cfg.encoder.image_levels = static_cast<int>(image_levels);
        cfg.voxel_steps = static_cast<int>(voxel_steps);
        cfg.voxel_lr = lr;
        cfg.n_points = static_cast<std::size_t>(n_points);
        cfg.sigma_factor = sigma_factor;
        cfg.uniform_fraction = uniform_fraction;
        cfg.implicit_steps = static_cast<int>(implicit_steps);
        cfg.batch_size = static_cast<int>(batch_size);
        cfg.implicit_lr = implicit_lr;
        cfg.hidden = parse_sizes(hidden);
        cfg.m_points = static_cast<std::size_t>(m_points);
        cfg.color_steps = static_cast<int>(color_steps);
        cfg.color_lr = color_lr;
        cfg.color_hidden = parse_sizes(color_hidden);
        cfg.decay_interval = decay_interval;
        cfg.decay_factor = decay_factor;
        cfg.teacher_force_gt = teacher_force;
        cfg.tc_occupied_only = tc_occupied_only;
        return cfg;
    }

    static std::vector<std::size_t> parse_sizes(const std::string& csv) {
        std::vector<std::size_t> sizes;
        std::istringstream is(csv);
        std::string tok;
        while (std::getline(is, tok, ','))
            if (!tok.empty()) sizes.push_back(std::stoull(tok));
        if (sizes.empty()) throw ConfigError("empty layer size list");
        return sizes;
    }
};

std::string frame_grid_name(int f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "voxel_%04d.grid", f);
    return buf;
}

void save_predictor(const VoxelPredictor& p, const std::string& dir) {
    for (int f = 0; f < p.frames(); ++f) {
        VoxelGrid g = p.layout;
        g.value_type = GridValueType::logits;
        g.values = p.logits[f].data;
        save_grid(g, (fs::path(dir) / frame_grid_name(f)).string(), /*f64=*/true);
    }
}

VoxelPredictor load_predictor(const std::string& dir, const VoxelGrid& expected_layout) {
    VoxelPredictor p;
    for (int f = 0;; ++f) {
        fs::path path = fs::path(dir) / frame_grid_name(f);
        if (!fs::exists(path)) break;
        VoxelGrid g = load_grid(path.string());
        if (f == 0) p.layout = g;
        if (!g.same_layout(expected_layout))
            throw ShapeError("checkpoint grid " + frame_grid_name(f) + " layout " +
                             std::to_string(g.res[0]) + "^3 does not match the dataset grid " +
                             std::to_string(expected_layout.res[0]) + "^3");
        p.logits.push_back(Tensor({g.count()}, g.values));
    }
    if (p.logits.empty()) throw IoError("no voxel checkpoints found in " + dir);
    return p;
}

int cmd_train(const std::vector<std::string>& args) {
    TrainOptions t;
    OptionSet opts = t.options();
    opts.parse(args);
    if (!opts.was_set("seed")) throw ConfigError("--seed is required for train commands");
    if (t.data.empty()) throw ConfigError("--data is required");
    if (!fs::exists(fs::path(t.data) / "manifest.txt"))
        throw ConfigError("dataset not found: " + t.data);
    if (t.stage != "voxel" && t.stage != "implicit" && t.stage != "color" && t.stage != "all")
        throw ConfigError("unknown stage: " + t.stage);
    if (t.out.empty()) t.out = default_out("train");
    fs::create_directories(t.out);
    std::string source = t.checkpoints.empty() ? t.out : t.checkpoints;

    Sequence seq = load_dataset(t.data);
    TrainConfig cfg = t.to_config();
    cfg.validate(seq.frame_count());

    opts.snapshot("train").save((fs::path(t.out) / "config.snapshot").string());
    KeyValueFile run;
    run.set("version", kToolVersion);
    run.set("command", "train");
    run.set("stage", t.stage);
    run.set("data", t.data);
    run.set_int("seed", static_cast<long long>(t.seed));

    bool do_voxel = t.stage == "voxel" || t.stage == "all";
    bool do_implicit = t.stage == "implicit" || t.stage == "all";
    bool do_color = t.stage == "color" || t.stage == "all";

    if (do_voxel) {
        VoxelFitResult fit = fit_voxel_stage(seq, cfg);
        save_predictor(fit.predictor, t.out);
        std::vector<std::vector<double>> rows;
        for (std::size_t s = 0; s < fit.total_history.size(); ++s)
            rows.push_back({static_cast<double>(s), fit.bce_history[s], fit.tc_history[s],
                            fit.total_history[s]});
        write_csv((fs::path(t.out) / "voxel_loss.csv").string(), "step,bce,temporal,total", rows);
        run.set("voxel_stage", "done");
        std::printf("voxel stage: %zu steps, final loss %.6g\n", fit.total_history.size(),
                    fit.total_history.back());
    }
    if (do_implicit) {
        VoxelPredictor pred = load_predictor(do_voxel ? t.out : source,
                                             seq.frames[0].gt_voxels);
        ImplicitTrainResult res = train_implicit_stage(seq, pred, cfg);
        save_mlp(res.decoder, (fs::path(t.out) / "occupancy.mlp").string());
        std::vector<std::vector<double>> rows;
        for (std::size_t s = 0; s < res.loss_history.size(); ++s)
            rows.push_back({static_cast<double>(s), res.loss_history[s]});
        write_csv((fs::path(t.out) / "implicit_loss.csv").string(), "step,mse", rows);
        run.set("implicit_stage", "done");
        run.set_double("holdout_accuracy", res.holdout_accuracy);
        std::printf("implicit stage: holdout accuracy %.4f\n", res.holdout_accuracy);
    }
    if (do_color) {
        VoxelPredictor pred = load_predictor(do_voxel ? t.out : source,
                                             seq.frames[0].gt_voxels);
        MlpParams occ_dec =
            load_mlp(((do_implicit ? fs::path(t.out) : fs::path(source)) / "occupancy.mlp")
                         .string());
        ColorTrainResult res = train_color_stage(seq, pred, occ_dec, cfg);
        save_mlp(res.decoder, (fs::path(t.out) / "color.mlp").string());
        std::vector<std::vector<double>> rows;
        for (std::size_t s = 0; s < res.total_history.size(); ++s)
            rows.push_back({static_cast<double>(s), res.hybrid_history[s],
                            res.temporal_history[s], res.total_history[s]});
        write_csv((fs::path(t.out) / "color_loss.csv").string(), "step,hybrid,temporal,total",
                  rows);
        run.set("color_stage", "done");
        std::printf("color stage: final loss %.6g\n", res.total_history.back());
    }
    run.save((fs::path(t.out) / "run.txt").string());
    return 0;
}

struct EvalOptions {
    std::string data, checkpoints, out;
    long long frame = -1; // -1 = all clip frames
    long long eval_res = 0;
    long long clip_frames = 0; // 0 = number of voxel checkpoints
    long long levels = 2, image_levels = 2;
    bool self_check = false;
    bool teacher_force = false;

    OptionSet options() {
        OptionSet o;
        o.add_string("data", &data, "dataset directory");
        o.add_string("checkpoints", &checkpoints, "trained checkpoint directory");
        o.add_string("out", &out, "output directory");
        o.add_int("frame", &frame, "frame to reconstruct (-1 = all)");
        o.add_int("eval-res", &eval_res, "evaluation grid resolution (0 = 2x dataset)");
        o.add_int("clip-frames", &clip_frames, "clip frames (0 = all checkpoints)");
        o.add_int("levels", &levels, "shape pyramid levels (L)");
        o.add_int("image-levels", &image_levels, "image pyramid levels (K)");
        o.add_bool("self-check", &self_check, "evaluate ground truth against itself");
        o.add_bool("teacher-force", &teacher_force, "use GT voxel grids for features");
        return o;
    }
};

int cmd_recon_eval(const std::vector<std::string>& args, bool evaluate_mode) {
    EvalOptions e;
    OptionSet opts = e.options();
    opts.parse(args);
    const char* command = evaluate_mode ? "evaluate" : "reconstruct";
    if (e.data.empty()) throw ConfigError("--data is required");
    if (!fs::exists(fs::path(e.data) / "manifest.txt"))
        throw ConfigError("dataset not found: " + e.data);
    if (e.out.empty()) e.out = default_out(command);
    fs::create_directories(e.out);
    opts.snapshot(command).save((fs::path(e.out) / "config.snapshot").string());

    Sequence seq = load_dataset(e.data);

    std::vector<std::vector<double>> rows;
    if (e.self_check) {
        // Plumbing check: the ground truth compared with itself.
        int n = seq.frame_count();
        for (int f = 0; f < n; ++f) {
            CounterRng rng(1234567ull + static_cast<std::uint64_t>(f));
            std::vector<SurfaceSample> s = sample_surface(seq.frames[f].gt_mesh, 10000,
                                                          rng.stream(0));
            std::vector<Vec3> pts;
            for (const auto& x : s) pts.push_back(x.position);
            double chamfer_cm = 100.0 * chamfer_distance(pts, pts);
            double iou = voxel_iou(seq.frames[f].gt_voxels, seq.frames[f].gt_voxels);
            rows.push_back({static_cast<double>(f), chamfer_cm, iou, 0.0, 0.0});
        }
    } else {
        if (e.checkpoints.empty()) throw ConfigError("--checkpoints is required");
        VoxelPredictor pred = load_predictor(e.checkpoints, seq.frames[0].gt_voxels);
        MlpParams occ_dec = load_mlp((fs::path(e.checkpoints) / "occupancy.mlp").string());
        MlpParams color_dec;
        bool has_color = fs::exists(fs::path(e.checkpoints) / "color.mlp");
        if (has_color) color_dec = load_mlp((fs::path(e.checkpoints) / "color.mlp").string());

        TrainConfig cfg;
        cfg.clip_frames = e.clip_frames > 0 ? static_cast<int>(e.clip_frames) : pred.frames();
        cfg.encoder.levels = static_cast<int>(e.levels);
        cfg.encoder.image_levels = static_cast<int>(e.image_levels);
        cfg.eval_resolution = static_cast<int>(e.eval_res);
        cfg.teacher_force_gt = e.teacher_force;

        int first = e.frame >= 0 ? static_cast<int>(e.frame) : 0;
        int last = e.frame >= 0 ? static_cast<int>(e.frame) : cfg.clip_frames - 1;
        if (last >= seq.frame_count()) throw ConfigError("frame index beyond the dataset");

        FlickerScore flicker;
        if (evaluate_mode && cfg.clip_frames >= 2)
            flicker = flicker_probe(seq, pred, &occ_dec, has_color ? &color_dec : nullptr, cfg,
                                    2000, 424243);

        for (int f = first; f <= last; ++f) {
            ReconResult rec = reconstruct(seq, f, pred, occ_dec,
                                          has_color ? &color_dec : nullptr, cfg);
            char name[32];
            std::snprintf(name, sizeof name, "recon_%04d.obj", f);
            if (!rec.empty_surface) save_obj(rec.mesh, (fs::path(e.out) / name).string());
            else std::printf("frame %d: empty surface (untrained or degenerate decoder)\n", f);
            rows.push_back({static_cast<double>(f), rec.chamfer_cm, rec.iou, flicker.occupancy,
                            flicker.color});
        }
    }

    write_csv((fs::path(e.out) / "metrics.csv").string(),
              "frame,chamfer_cm,iou,flicker_occ,flicker_color", rows);
    if (evaluate_mode) {
        std::printf("frame  chamfer_cm       iou    flicker_occ  flicker_color\n");
        double sum_c = 0, sum_i = 0;
        for (const auto& r : rows) {
            std::printf("%5d  %10.4f  %8.4f  %12.6g  %12.6g\n", static_cast<int>(r[0]), r[1],
                        r[2], r[3], r[4]);
            sum_c += r[1];
            sum_i += r[2];
        }
        std::printf("mean   %10.4f  %8.4f\n", sum_c / rows.size(), sum_i / rows.size());
    }
    return 0;
}

void print_usage() {
    std::printf("%s\n", kToolVersion);
    std::printf("usage: tcrecon <generate|train|reconstruct|evaluate> [options]\n");
    std::printf("       tcrecon <command> --help\n");
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        if (args.empty()) {
            print_usage();
            return 2;
        }
        std::string command = args[0];
        std::vector<std::string> rest(args.begin() + 1, args.end());
        bool help = false;
        for (const std::string& a : rest)
            if (a == "--help" || a == "-h") help = true;

        if (command == "generate") {
            if (help) {
                GenerateOptions{}.options().print_help("generate");
                return 0;
            }
            return cmd_generate(rest);
        }
        if (command == "train") {
            if (help) {
                TrainOptions{}.options().print_help("train");
                return 0;
            }
            return cmd_train(rest);
        }
        if (command == "reconstruct" || command == "evaluate") {
            if (help) {
                EvalOptions{}.options().print_help(command);
                return 0;
            }
            return cmd_recon_eval(rest, command == "evaluate");
        }
        if (command == "--help" || command == "-h" || command == "--version") {
            print_usage();
            return 0;
        }
        std::fprintf(stderr, "unknown command: %s\n", command.c_str());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

} // namespace tcr
