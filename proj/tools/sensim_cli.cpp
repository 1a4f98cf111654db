// Command-line front end for the differentiable sensor simulator.
//
// Subcommands: simulate, gradcheck, backwarp, train, eval, layout-svg,
// replay. Every run writes a manifest JSON with the fully resolved
// configuration; `replay <manifest>` reproduces the run byte-identically.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sensim/grad.hpp"
#include "sensim/image.hpp"
#include "sensim/layout.hpp"
#include "sensim/mnist.hpp"
#include "sensim/radiance.hpp"
#include "sensim/resample.hpp"
#include "sensim/sensor.hpp"
#include "sensim/svg.hpp"
#include "sensim/train.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace sensim;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitTolerance = 4;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options common to the geometry-facing subcommands.
struct CommonOpts {
    std::string grid = "4x4";
    std::string kind = "curv";
    std::string theta;      // "a,b" constrained, validated to (-1,1)
    std::string theta_raw;  // "a,b" unconstrained; wins if both given
    std::uint64_t seed = 0;
    int strata = 8;
    int boundary_samples = 32;
    int jitter = 1;
    unsigned threads = 1;
    std::string out = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--grid", o.grid, "Sensor resolution R1xR2")->capture_default_str();
    cmd->add_option("--kind", o.kind, "Layout kind: identity|curv|rect")->capture_default_str();
    cmd->add_option("--theta", o.theta, "theta as 'a,b', each in (-1,1)");
    cmd->add_option("--theta-raw", o.theta_raw, "unconstrained theta_raw as 'a,b'");
    cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--strata", o.strata, "interior strata per axis")->capture_default_str();
    cmd->add_option("--boundary-samples", o.boundary_samples, "samples per pixel edge")
        ->capture_default_str();
    cmd->add_option("--jitter", o.jitter, "1: stratified jitter, 0: midpoint quadrature")
        ->capture_default_str();
    cmd->add_option("--threads", o.threads, "worker threads (0 = auto)")->capture_default_str();
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

Vec2 parse_pair(const std::string& s, const char* what) {
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw CLI::ValidationError(std::string(what) + " must be 'a,b'");
    try {
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError(std::string(what) + " must be 'a,b'");
    }
}

SensorGrid parse_grid(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--grid must be 'R1xR2'");
    try {
        return SensorGrid(std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1)));
    } catch (const std::invalid_argument&) {
        throw CLI::ValidationError("--grid must be 'R1xR2' with positive integers");
    }
}

LayoutParams parse_layout(const CommonOpts& o) {
    const LayoutKind kind = layout_kind_from_string(o.kind);
    if (!o.theta_raw.empty())
        return LayoutParams(kind, parse_pair(o.theta_raw, "--theta-raw"));
    if (!o.theta.empty()) {
        const Vec2 th = parse_pair(o.theta, "--theta");
        if (std::abs(th.x) >= 1.0 || std::abs(th.y) >= 1.0)
            throw CLI::ValidationError(
                "--theta components must lie in (-1,1); use --theta-raw for "
                "unconstrained values");
        return LayoutParams::from_theta(kind, th);
    }
    return LayoutParams(kind, {0.0, 0.0});
}

SamplingConfig parse_sampling(const CommonOpts& o) {
    SamplingConfig cfg;
    cfg.interior_strata = o.strata;
    cfg.boundary_samples = o.boundary_samples;
    cfg.rng_seed = o.seed;
    cfg.jitter = o.jitter != 0;
    cfg.validate();
    return cfg;
}

// Round-trip formatting so replaying a manifest reproduces theta exactly.
std::string format_pair(Vec2 v) {
    std::ostringstream os;
    os.precision(17);
    os << v.x << ',' << v.y;
    return os.str();
}

json common_manifest(const CommonOpts& o, const LayoutParams& params) {
    return json{{"grid", o.grid},
                {"kind", to_string(params.kind())},
                {"theta-raw", format_pair(params.theta_raw())},
                {"seed", o.seed},
                {"strata", o.strata},
                {"boundary-samples", o.boundary_samples},
                {"jitter", o.jitter},
                {"threads", o.threads},
                {"out", o.out}};
}

void write_manifest(const std::string& subcommand, json args, const fs::path& out_dir) {
    json manifest{{"subcommand", subcommand}, {"args", std::move(args)}};
    std::ofstream f(out_dir / "manifest.json", std::ios::binary);
    if (!f) throw IoError("cannot write manifest");
    f << manifest.dump(2) << "\n";
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + out);
    return dir;
}

std::unique_ptr<RadianceField> make_field(const std::string& spec, const std::string& image_path) {
    if (!image_path.empty()) {
        try {
            return std::make_unique<ImageField>(load_image(image_path));
        } catch (const std::runtime_error& e) {
            throw IoError(e.what());
        }
    }
    if (spec == "constant") return std::make_unique<ConstantField>(Vec3{0.25, 0.5, 0.75});
    if (spec == "ramp") return std::make_unique<LinearRampField>();
    if (spec == "blob") return std::make_unique<GaussianBlobField>();
    if (spec == "checker") return std::make_unique<CheckerboardField>();
    throw CLI::ValidationError("unknown field '" + spec +
                               "' (expected constant|ramp|blob|checker or --image)");
}

json theta_json(const LayoutParams& params) {
    return json{{"kind", to_string(params.kind())},
                {"theta", {params.theta().x, params.theta().y}},
                {"theta_raw", {params.theta_raw().x, params.theta_raw().y}}};
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    CommonOpts common;
    std::string image;
    std::string field = "blob";
};

int run_simulate(const SimulateOpts& o) {
    const SensorGrid grid = parse_grid(o.common.grid);
    const LayoutParams params = parse_layout(o.common);
    const SamplingConfig cfg = parse_sampling(o.common);
    const auto field = make_field(o.field, o.image);
    const SensorImage image = simulate(*field, grid, params, cfg, nullptr, o.common.threads);

    const fs::path out_dir = ensure_out_dir(o.common.out);
    SourceImage dump(grid.r1, grid.r2, 3);
    for (int k2 = 0; k2 < grid.r2; ++k2)
        for (int k1 = 0; k1 < grid.r1; ++k1)
            for (int c = 0; c < 3; ++c) dump.at(k1, k2, c) = image.pixel(k1, k2)[c];
    write_pnm(dump, (out_dir / "sensor.ppm").string());

    const double volumes_sum =
        std::accumulate(image.volumes.begin(), image.volumes.end(), 0.0);
    json meta = theta_json(params);
    meta["volumes_sum"] = volumes_sum;
    meta["seed"] = o.common.seed;
    std::ofstream mf(out_dir / "meta.json", std::ios::binary);
    mf << meta.dump(2) << "\n";

    json args = common_manifest(o.common, params);
    args["image"] = o.image;
    args["field"] = o.field;
    write_manifest("simulate", args, out_dir);
    return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckOpts {
    CommonOpts common;
    std::string image;
    std::string field = "blob";
    double fd_step = 1e-4;
    double tol = 1e-2;
};

int run_gradcheck(const GradcheckOpts& o) {
    const SensorGrid grid = parse_grid(o.common.grid);
    const LayoutParams params = parse_layout(o.common);
    SamplingConfig cfg = parse_sampling(o.common);
    const auto field = make_field(o.field, o.image);

    // Scalar objective: <1, I(theta)> summed over pixels and channels.
    const std::vector<Vec3> upstream(grid.pixel_count(), Vec3{1.0, 1.0, 1.0});
    auto objective = [&](const LayoutParams& p) {
        const SensorImage img = simulate(*field, grid, p, cfg, nullptr, o.common.threads);
        double s = 0.0;
        for (const Vec3& px : img.pixels) s += px.r + px.g + px.b;
        return s;
    };

    ForwardCache cache;
    const SensorImage image = simulate(*field, grid, params, cfg, &cache, o.common.threads);
    const GradientRecord rec =
        backward(image, upstream, *field, params, cfg, cache, o.common.threads);

    // Central differences in theta_raw space with common random numbers.
    Vec2 fd;
    for (int j = 0; j < 2; ++j) {
        Vec2 hi = params.theta_raw(), lo = params.theta_raw();
        hi[j] += o.fd_step;
        lo[j] -= o.fd_step;
        fd[j] = (objective(params.with_theta_raw(hi)) - objective(params.with_theta_raw(lo))) /
                (2.0 * o.fd_step);
    }

    bool ok = true;
    json components = json::array();
    for (int j = 0; j < 2; ++j) {
        const double a = rec.dloss_dtheta_raw[j];
        const double scale = std::max({std::abs(a), std::abs(fd[j]), 1e-6});
        const double rel = std::abs(a - fd[j]) / scale;
        ok = ok && rel <= o.tol;
        components.push_back({{"analytic", a},
                              {"finite_difference", fd[j]},
                              {"relative_error", rel}});
    }

    const fs::path out_dir = ensure_out_dir(o.common.out);
    json report = theta_json(params);
    report["fd_step"] = o.fd_step;
    report["tolerance"] = o.tol;
    report["components"] = components;
    report["pass"] = ok;
    std::ofstream rf(out_dir / "gradcheck.json", std::ios::binary);
    rf << report.dump(2) << "\n";

    json args = common_manifest(o.common, params);
    args["image"] = o.image;
    args["field"] = o.field;
    args["fd-step"] = o.fd_step;
    args["tol"] = o.tol;
    write_manifest("gradcheck", args, out_dir);

    std::cout << report.dump(2) << "\n";
    return ok ? 0 : kExitTolerance;
}

// ---------------------------------------------------------------- backwarp

struct BackwarpOpts {
    CommonOpts common;
    std::string input;
    int target_w = 64;
    int target_h = 64;
};

int run_backwarp(const BackwarpOpts& o) {
    const LayoutParams params = parse_layout(o.common);
    SourceImage in;
    try {
        in = load_image(o.input);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
    const SensorGrid grid(in.width, in.height);

    // Copy whole texels (RGB or gray) through the nearest-neighbor warp.
    std::vector<std::vector<double>> values(grid.pixel_count());
    for (int k2 = 0; k2 < grid.r2; ++k2)
        for (int k1 = 0; k1 < grid.r1; ++k1) {
            std::vector<double> v(in.channels);
            for (int c = 0; c < in.channels; ++c) v[c] = in.at(k1, k2, c);
            values[grid.flat(k1, k2)] = std::move(v);
        }
    const auto warped =
        backwarp(values, grid, params, o.target_w, o.target_h, o.common.threads);

    SourceImage out_img(o.target_w, o.target_h, in.channels);
    for (int y = 0; y < o.target_h; ++y)
        for (int x = 0; x < o.target_w; ++x)
            for (int c = 0; c < in.channels; ++c)
                out_img.at(x, y, c) = warped[static_cast<std::size_t>(y) * o.target_w + x][c];

    const fs::path out_dir = ensure_out_dir(o.common.out);
    const std::string name = in.channels == 3 ? "backwarp.ppm" : "backwarp.pgm";
    write_pnm(out_img, (out_dir / name).string());

    json args = common_manifest(o.common, params);
    args["input"] = o.input;
    args["target-w"] = o.target_w;
    args["target-h"] = o.target_h;
    write_manifest("backwarp", args, out_dir);
    return 0;
}

// ---------------------------------------------------------------- layout-svg

int run_layout_svg(const CommonOpts& o) {
    const SensorGrid grid = parse_grid(o.grid);
    const LayoutParams params = parse_layout(o);
    const fs::path out_dir = ensure_out_dir(o.out);
    write_layout_svg(grid, params, (out_dir / "layout.svg").string());
    json meta = theta_json(params);
    meta["r1"] = grid.r1;
    meta["r2"] = grid.r2;
    std::ofstream jf(out_dir / "layout.json", std::ios::binary);
    jf << meta.dump(2) << "\n";
    write_manifest("layout-svg", common_manifest(o, params), out_dir);
    return 0;
}

// ---------------------------------------------------------------- train/eval

struct TrainOpts {
    CommonOpts common;
    std::string train_images, train_labels, test_images, test_labels;
    int train_limit = 0;  // 0 = all
    int test_limit = 0;
    int epochs = 14;
    double lr = 0.01;
    int batch_size = 64;
    int freeze_layout_epochs = 0;
    int channels = 3;
};

Dataset load_split(const std::string& images, const std::string& labels, int limit) {
    try {
        Dataset ds = load_mnist(images, labels);
        return limit > 0 ? dataset_head(ds, limit) : ds;
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError(e.what());
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
}

int run_train(const TrainOpts& o) {
    const SensorGrid grid = parse_grid(o.common.grid);
    const LayoutKind kind = layout_kind_from_string(o.common.kind);
    const SamplingConfig scfg = parse_sampling(o.common);

    TrainConfig tcfg;
    tcfg.epochs = o.epochs;
    tcfg.learning_rate = o.lr;
    tcfg.batch_size = o.batch_size;
    tcfg.layout_freeze_epochs = o.freeze_layout_epochs;
    tcfg.channels = o.channels;
    tcfg.shuffle_seed = Rng::mix(o.common.seed, 1);
    tcfg.init_seed = Rng::mix(o.common.seed, 2);
    tcfg.sensor_seed = Rng::mix(o.common.seed, 3);
    tcfg.validate();

    const Dataset train_ds = load_split(o.train_images, o.train_labels, o.train_limit);
    const Dataset test_ds = load_split(o.test_images, o.test_labels, o.test_limit);

    const TrainResult result =
        train_joint(train_ds, test_ds, grid, kind, tcfg, scfg, o.common.threads);

    const fs::path out_dir = ensure_out_dir(o.common.out);
    json metrics;
    metrics["epoch_loss"] = result.epoch_loss;
    metrics["test_accuracy"] = result.test_accuracy;
    metrics["final"] = theta_json(result.params);
    std::ofstream mf(out_dir / "metrics.json", std::ios::binary);
    mf << metrics.dump(2) << "\n";

    json ckpt = theta_json(result.params);
    ckpt["version"] = 1;
    ckpt["grid"] = o.common.grid;
    ckpt["channels"] = o.channels;
    ckpt["weights"] = result.mlp.weights();
    std::ofstream cf(out_dir / "checkpoint.json", std::ios::binary);
    cf << ckpt.dump() << "\n";

    write_layout_svg(grid, result.params, (out_dir / "layout.svg").string());

    json args = common_manifest(o.common, LayoutParams(kind, {0.0, 0.0}));
    args.erase("theta-raw");  // training starts from zero by contract
    args["train-images"] = o.train_images;
    args["train-labels"] = o.train_labels;
    args["test-images"] = o.test_images;
    args["test-labels"] = o.test_labels;
    args["train-limit"] = o.train_limit;
    args["test-limit"] = o.test_limit;
    args["epochs"] = o.epochs;
    args["lr"] = o.lr;
    args["batch-size"] = o.batch_size;
    args["freeze-layout-epochs"] = o.freeze_layout_epochs;
    args["channels"] = o.channels;
    write_manifest("train", args, out_dir);
    return 0;
}

struct EvalOpts {
    CommonOpts common;
    std::string checkpoint;
    std::string test_images, test_labels;
    int test_limit = 0;
};

int run_eval(const EvalOpts& o) {
    json ckpt;
    {
        std::ifstream cf(o.checkpoint, std::ios::binary);
        if (!cf) throw IoError("cannot open checkpoint " + o.checkpoint);
        try {
            cf >> ckpt;
        } catch (const json::exception& e) {
            throw IoError(std::string("malformed checkpoint: ") + e.what());
        }
    }
    const SensorGrid grid = parse_grid(ckpt.at("grid").get<std::string>());
    const LayoutParams params(
        layout_kind_from_string(ckpt.at("kind").get<std::string>()),
        {ckpt.at("theta_raw")[0].get<double>(), ckpt.at("theta_raw")[1].get<double>()});
    TrainConfig tcfg;
    tcfg.channels = ckpt.at("channels").get<int>();
    Mlp mlp(tcfg.input_dim(grid));
    mlp.weights() = ckpt.at("weights").get<std::vector<double>>();

    const Dataset test_ds = load_split(o.test_images, o.test_labels, o.test_limit);
    const SamplingConfig scfg = parse_sampling(o.common);
    const double acc = evaluate(test_ds, grid, params, mlp, tcfg, scfg, o.common.threads);

    const fs::path out_dir = ensure_out_dir(o.common.out);
    json report{{"accuracy", acc}, {"count", test_ds.count}};
    std::ofstream rf(out_dir / "eval.json", std::ios::binary);
    rf << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";

    json args = common_manifest(o.common, params);
    args["checkpoint"] = o.checkpoint;
    args["test-images"] = o.test_images;
    args["test-labels"] = o.test_labels;
    args["test-limit"] = o.test_limit;
    write_manifest("eval", args, out_dir);
    return 0;
}

// ---------------------------------------------------------------- replay

std::vector<std::string> manifest_to_argv(const json& manifest) {
    std::vector<std::string> argv;
    argv.push_back(manifest.at("subcommand").get<std::string>());
    for (const auto& [key, value] : manifest.at("args").items()) {
        std::string v;
        if (value.is_string())
            v = value.get<std::string>();
        else
            v = value.dump();
        if (v.empty()) continue;
        argv.push_back("--" + key + "=" + v);
    }
    return argv;
}

int dispatch(std::vector<std::string> args);

int run_replay(const std::string& manifest_path, const std::string& out_override) {
    json manifest;
    std::ifstream mf(manifest_path, std::ios::binary);
    if (!mf) throw IoError("cannot open manifest " + manifest_path);
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
    if (!out_override.empty()) manifest["args"]["out"] = out_override;
    return dispatch(manifest_to_argv(manifest));
}

// ---------------------------------------------------------------- main

int dispatch(std::vector<std::string> args) {
    CLI::App app{"Differentiable sensor-layout simulator"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Forward sensor simulation to PPM + JSON");
    add_common(sim_cmd, sim.common);
    sim_cmd->add_option("--image", sim.image, "radiance source image (PNG/PPM/PGM)");
    sim_cmd->add_option("--field", sim.field, "analytic field: constant|ramp|blob|checker")
        ->capture_default_str();

    GradcheckOpts gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Analytic vs finite-difference layout gradient");
    add_common(gc_cmd, gc.common);
    gc_cmd->add_option("--image", gc.image, "radiance source image");
    gc_cmd->add_option("--field", gc.field, "analytic field")->capture_default_str();
    gc_cmd->add_option("--fd-step", gc.fd_step, "central-difference step in theta_raw")
        ->capture_default_str();
    gc_cmd->add_option("--tol", gc.tol, "relative-error tolerance")->capture_default_str();

    BackwarpOpts bw;
    auto* bw_cmd = app.add_subcommand("backwarp", "Resample a deformed output to a uniform grid");
    add_common(bw_cmd, bw.common);
    bw_cmd->add_option("--input", bw.input, "deformed image (PPM/PGM)")->required();
    bw_cmd->add_option("--target-w", bw.target_w, "target width")->capture_default_str();
    bw_cmd->add_option("--target-h", bw.target_h, "target height")->capture_default_str();

    CommonOpts svg;
    auto* svg_cmd = app.add_subcommand("layout-svg", "Export the deformed grid as SVG + JSON");
    add_common(svg_cmd, svg);

    TrainOpts tr;
    auto* tr_cmd = app.add_subcommand("train", "Joint layout + classifier training on MNIST");
    add_common(tr_cmd, tr.common);
    tr_cmd->add_option("--train-images", tr.train_images, "IDX train images")->required();
    tr_cmd->add_option("--train-labels", tr.train_labels, "IDX train labels")->required();
    tr_cmd->add_option("--test-images", tr.test_images, "IDX test images")->required();
    tr_cmd->add_option("--test-labels", tr.test_labels, "IDX test labels")->required();
    tr_cmd->add_option("--train-limit", tr.train_limit, "use first N train samples (0 = all)")
        ->capture_default_str();
    tr_cmd->add_option("--test-limit", tr.test_limit, "use first N test samples (0 = all)")
        ->capture_default_str();
    tr_cmd->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
    tr_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    tr_cmd->add_option("--batch-size", tr.batch_size, "mini-batch size")->capture_default_str();
    tr_cmd->add_option("--freeze-layout-epochs", tr.freeze_layout_epochs,
                       "freeze theta for the first N epochs")->capture_default_str();
    tr_cmd->add_option("--channels", tr.channels, "classifier input channels (1 or 3)")
        ->capture_default_str();

    EvalOpts ev;
    auto* ev_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test split");
    add_common(ev_cmd, ev.common);
    ev_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint.json from train")->required();
    ev_cmd->add_option("--test-images", ev.test_images, "IDX test images")->required();
    ev_cmd->add_option("--test-labels", ev.test_labels, "IDX test labels")->required();
    ev_cmd->add_option("--test-limit", ev.test_limit, "use first N test samples (0 = all)")
        ->capture_default_str();

    std::string replay_manifest, replay_out;
    auto* rp_cmd = app.add_subcommand("replay", "Re-run a previous manifest");
    rp_cmd->add_option("manifest", replay_manifest, "manifest.json path")->required();
    rp_cmd->add_option("--out", replay_out, "override output directory");

    // CLI11 expects argv-style reversed input.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitValidation;
    }

    if (*sim_cmd) return run_simulate(sim);
    if (*gc_cmd) return run_gradcheck(gc);
    if (*bw_cmd) return run_backwarp(bw);
    if (*svg_cmd) return run_layout_svg(svg);
    if (*tr_cmd) return run_train(tr);
    if (*ev_cmd) return run_eval(ev);
    if (*rp_cmd) return run_replay(replay_manifest, replay_out);
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return dispatch(std::move(args));
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
