// finray_sim: data generation, training, evaluation, the three simulated studies and
// single-frame rendering.

#include "finray/config.hpp"
#include "finray/experiments.hpp"
#include "finray/learner/model_io.hpp"
#include "finray/learner/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace finray;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned jobs = 1;
    std::optional<int> resolution;
};

struct Options {
    Common common;
    std::optional<std::size_t> n;
    std::optional<int> epochs;
    std::string dataset;
    std::string model;
    std::string split = "val";
    bool perfect = false;
    double depth = 0.0;
    double location = 30.0;
    std::string image;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "master seed (falls back to FINRAY_SIM_SEED, then the config)");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--jobs", c.jobs, "worker threads (1 = bit-exact sequential mode)")->check(CLI::Range(1u, 256u));
    cmd->add_option("--resolution", c.resolution, "camera resolution")->check(CLI::IsMember({64, 128}));
}

RunConfig resolve_config(const Common& c)
{
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
    if (c.seed) {
        cfg.seed = *c.seed;
    } else if (const char* env = std::getenv("FINRAY_SIM_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(env, &used);
            if (used != std::string(env).size())
                throw std::invalid_argument(env);
        } catch (const std::exception&) {
            throw Error(ErrorKind::Config, std::string("FINRAY_SIM_SEED is not an unsigned integer: ") + env);
        }
    }
    if (c.out)
        cfg.output_dir = *c.out;
    if (c.resolution)
        cfg.camera.resolution_px = *c.resolution;
    cfg.validate();
    return cfg;
}

fs::path prepare_output(const RunConfig& cfg, const std::string& command)
{
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
    Json echo = to_json(cfg);
    echo["command"] = command;
    io::write_text((dir / (command + ".config.json")).string(), echo.dump(2) + "\n");
    return dir;
}

void write_json(const fs::path& path, const Json& j) { io::write_text(path.string(), j.dump(2) + "\n"); }

std::uint64_t data_seed(const RunConfig& c) { return mix_seed(c.seed, 1); }
std::uint64_t split_seed(const RunConfig& c) { return mix_seed(c.seed, 2); }
std::uint64_t init_seed(const RunConfig& c) { return mix_seed(c.seed, 3); }
std::uint64_t shuffle_seed(const RunConfig& c) { return mix_seed(c.seed, 4); }

int cmd_gen_data(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    if (o.n)
        cfg.dataset.n = *o.n;
    cfg.validate();
    const fs::path dir = prepare_output(cfg, "gen-data");
    auto ds = datagen::split_dataset(
        datagen::generate_dataset(cfg.finger, cfg.camera, cfg.ranges, cfg.dataset.n, data_seed(cfg), o.common.jobs),
        cfg.dataset.split_ratio, split_seed(cfg));
    const fs::path path = dir / "dataset.tfrd";
    datagen::write_dataset(ds, path.string());
    write_json(dir / "dataset.json", datagen::sidecar_json(ds, cfg.finger, cfg.camera));
    std::printf("wrote %s: %zu samples (%zu train / %zu val) at %dx%d\n", path.c_str(), ds.size(),
                ds.indices(datagen::SplitTag::Train).size(), ds.indices(datagen::SplitTag::Val).size(), ds.resolution,
                ds.resolution);
    return 0;
}

int cmd_train(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    if (o.epochs)
        cfg.train.epochs = *o.epochs;
    cfg.validate();
    const auto ds = datagen::read_dataset(o.dataset);
    if (o.common.resolution && *o.common.resolution != ds.resolution)
        throw Error(ErrorKind::Config, "requested model resolution " + std::to_string(*o.common.resolution) +
                                           " does not match dataset resolution " + std::to_string(ds.resolution));
    const fs::path dir = prepare_output(cfg, "train");

    learner::ModelConfig mc;
    mc.input_resolution = ds.resolution;
    mc.normalization = learner::normalization_for(ds.ranges);
    auto model = learner::build_model<float>(mc, init_seed(cfg));
    learner::TrainConfig tc = cfg.train;
    tc.seed = shuffle_seed(cfg);

    std::ostringstream loss;
    loss.precision(17);
    loss << "epoch,train_mse,val_mse\n";
    model = learner::train(std::move(model), ds, tc, [&](int epoch, const learner::EpochLog& e) {
        loss << epoch << ',' << e.train_mse << ',' << e.val_mse << '\n';
        std::fprintf(stderr, "epoch %d/%d train_mse %.6f val_mse %.6f\n", epoch, tc.epochs, e.train_mse, e.val_mse);
    });
    learner::write_model(model, (dir / "model.tfrm").string());
    io::write_text((dir / "loss.csv").string(), loss.str());

    Json summary = {{"dataset", o.dataset}, {"epochs", tc.epochs}, {"parameters", model.parameter_count()}};
    if (!ds.indices(datagen::SplitTag::Val).empty()) {
        const auto r = learner::evaluate(model, ds, datagen::SplitTag::Val);
        summary["mae_depth_mm"] = r.mae_depth_mm;
        summary["mae_location_mm"] = r.mae_location_mm;
        std::printf("val mae_depth_mm %.4f mae_location_mm %.4f\n", r.mae_depth_mm, r.mae_location_mm);
    }
    write_json(dir / "train.json", summary);
    return 0;
}

int cmd_eval(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    const auto ds = datagen::read_dataset(o.dataset);
    auto model = learner::read_model<float>(o.model);
    if (model.config.input_resolution != ds.resolution)
        throw Error(ErrorKind::Config, "model resolution " + std::to_string(model.config.input_resolution) +
                                           " does not match dataset resolution " + std::to_string(ds.resolution));
    const fs::path dir = prepare_output(cfg, "eval");
    std::vector<std::size_t> idx;
    if (o.split == "all") {
        idx.resize(ds.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    } else {
        idx = ds.indices(o.split == "train" ? datagen::SplitTag::Train : datagen::SplitTag::Val);
    }
    const auto r = learner::evaluate_with(experiments::model_predictor(model), ds, idx);
    std::ostringstream csv;
    csv.precision(17);
    csv << "index,true_depth_mm,pred_depth_mm,true_location_mm,pred_location_mm\n";
    for (const auto& e : r.residuals)
        csv << e.index << ',' << e.true_depth_mm << ',' << e.pred_depth_mm << ',' << e.true_location_mm << ','
            << e.pred_location_mm << '\n';
    io::write_text((dir / "residuals.csv").string(), csv.str());
    write_json(dir / "eval.json", {{"split", o.split},
                                   {"n", idx.size()},
                                   {"mae_depth_mm", r.mae_depth_mm},
                                   {"mae_location_mm", r.mae_location_mm}});
    std::printf("%s mae_depth_mm %.4f mae_location_mm %.4f (n=%zu)\n", o.split.c_str(), r.mae_depth_mm,
                r.mae_location_mm, idx.size());
    return 0;
}

int cmd_sweep(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    auto sc = cfg.experiment.sweep;
    sc.train = cfg.train;
    sc.seed = cfg.seed;
    if (o.n)
        sc.n_per_variant = *o.n;
    if (o.common.resolution)
        sc.resolution = *o.common.resolution;
    if (o.epochs)
        sc.train.epochs = *o.epochs;
    cfg.experiment.sweep = sc;
    const fs::path dir = prepare_output(cfg, "sweep");
    const auto rows = experiments::design_sweep(cfg.finger, cfg.camera, cfg.ranges, experiments::full_factorial(), sc,
                                                o.common.jobs);
    io::write_text((dir / "sweep.csv").string(), experiments::sweep_csv(rows));
    io::write_text((dir / "sweep_residuals.csv").string(), experiments::residuals_csv(rows));
    Json summary = Json::array();
    std::size_t ok = 0;
    for (const auto& r : rows) {
        summary.push_back({{"variant", r.variant.name()},
                           {"ok", r.ok},
                           {"mae_depth_mm", r.mae_depth_mm},
                           {"mae_location_mm", r.mae_location_mm},
                           {"error", r.error}});
        ok += r.ok ? 1 : 0;
        if (r.ok)
            std::printf("%-28s mae_depth_mm %.4f mae_location_mm %.4f\n", r.variant.name().c_str(), r.mae_depth_mm,
                        r.mae_location_mm);
        else
            std::printf("%-28s FAILED: %s\n", r.variant.name().c_str(), r.error.c_str());
    }
    write_json(dir / "sweep.json", summary);
    if (ok == 0) {
        std::fprintf(stderr, "error: every sweep variant failed\n");
        return 2;
    }
    return 0;
}

int cmd_indenter_test(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    auto model = learner::read_model<float>(o.model);
    cfg.camera.resolution_px = model.config.input_resolution;
    auto rc = cfg.experiment.robustness;
    rc.seed = cfg.seed;
    const fs::path dir = prepare_output(cfg, "indenter-test");
    const auto report = experiments::indenter_robustness(experiments::model_predictor(model), cfg.finger, cfg.camera,
                                                         experiments::all_indenter_ids(), rc);
    io::write_text((dir / "robustness.csv").string(), experiments::robustness_csv(report));
    io::write_text((dir / "hsd.csv").string(), experiments::hsd_csv(report));

    Json summary = {{"trials", rc.trials}, {"alpha", rc.alpha}};
    for (const auto& i : report.indenters) {
        summary["indenters"].push_back({{"name", i.name},
                                        {"depth_mean_mm", i.mean_depth()},
                                        {"depth_sd_mm", i.sd_depth()},
                                        {"location_mean_mm", i.mean_location()},
                                        {"location_sd_mm", i.sd_location()}});
        std::printf("%-12s depth %.3f +- %.3f mm  location %.3f +- %.3f mm\n", i.name.c_str(), i.mean_depth(),
                    i.sd_depth(), i.mean_location(), i.sd_location());
    }
    std::size_t sig = 0;
    for (const auto* t : {&report.hsd_depth, &report.hsd_location})
        for (const auto& p : t->pairs)
            sig += p.significant ? 1 : 0;
    summary["significant_pairs"] = sig;
    std::printf("significant pairs at alpha=%.2f: %zu\n", rc.alpha, sig);

    if (!o.dataset.empty()) {
        const auto ds = datagen::read_dataset(o.dataset);
        const auto val = learner::evaluate(model, ds, datagen::SplitTag::Val);
        std::vector<double> vd, vl;
        for (const auto& e : val.residuals) {
            vd.push_back(std::abs(e.pred_depth_mm - e.true_depth_mm));
            vl.push_back(std::abs(e.pred_location_mm - e.true_location_mm));
        }
        const auto& train_indenter = report.indenters.front();
        const auto td = stats::welch_t_test(train_indenter.depth_errors, vd);
        const auto tl = stats::welch_t_test(train_indenter.location_errors, vl);
        summary["training_indenter_vs_validation"] = {{"depth_p", td.p_value}, {"location_p", tl.p_value}};
        std::printf("%s vs validation (Welch): depth p=%.3f location p=%.3f\n", train_indenter.name.c_str(),
                    td.p_value, tl.p_value);
    }
    write_json(dir / "robustness.json", summary);
    return 0;
}

int cmd_pick_place(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    auto pc = cfg.experiment.pick_place;
    pc.seed = cfg.seed;
    std::optional<learner::Model<float>> model;
    if (!o.perfect) {
        if (o.model.empty())
            throw Error(ErrorKind::Config, "pick-place needs --model unless --perfect is given");
        model = learner::read_model<float>(o.model);
        cfg.camera.resolution_px = model->config.input_resolution;
    }
    const fs::path dir = prepare_output(cfg, "pick-place");
    std::vector<experiments::PlacementTrial> all;
    Json summary = {{"trials_per_condition", pc.trials}, {"perfect", o.perfect}};
    for (auto c : experiments::all_conditions()) {
        const auto trials = o.perfect ? experiments::pick_place_perfect(cfg.finger, c, pc)
                                      : experiments::pick_place_sim(experiments::model_predictor(*model), cfg.finger,
                                                                    cfg.camera, c, pc);
        const double m = experiments::mean_error(trials);
        summary["mean_error_mm"][experiments::to_string(c)] = m;
        std::printf("%-14s mean placement error %.3f mm\n", experiments::to_string(c).c_str(), m);
        all.insert(all.end(), trials.begin(), trials.end());
    }
    io::write_text((dir / "placement.csv").string(), experiments::placement_csv(all));
    write_json(dir / "placement.json", summary);
    return 0;
}

int cmd_render(const Options& o)
{
    RunConfig cfg = resolve_config(o.common);
    const fs::path dir = prepare_output(cfg, "render");
    const datagen::ContactTarget t{o.depth, o.location};
    if (!cfg.ranges.contains(o.depth, o.location))
        std::fprintf(stderr, "warning: contact (depth %.3f mm, location %.3f mm) is outside the configured ranges; "
                             "rendering extrapolated\n",
                     o.depth, o.location);
    const auto s = datagen::synth_sample(cfg.finger, cfg.camera, t, 0, &cfg.ranges);
    const fs::path path = o.image.empty() ? dir / "frame.pbm" : fs::path(o.image);
    sensor::write_netpbm(s.frame, path.string());
    std::printf("wrote %s (%d lit pixels%s)\n", path.c_str(), static_cast<int>(s.frame.count()),
                s.extrapolated ? ", extrapolated" : "");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    learner::retain_freed_memory();
    CLI::App app{"Hinged Fin-Ray tactile finger simulator and contact regressor"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen, o.common);
    gen->add_option("--n", o.n, "number of samples")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "train the regressor on a dataset");
    add_common(train, o.common);
    train->add_option("--dataset", o.dataset, "TFRD dataset")->required();
    train->add_option("--epochs", o.epochs, "override train.epochs")->check(CLI::NonNegativeNumber);

    auto* eval = app.add_subcommand("eval", "evaluate a model on a dataset split");
    add_common(eval, o.common);
    eval->add_option("--dataset", o.dataset, "TFRD dataset")->required();
    eval->add_option("--model", o.model, "TFRM model")->required();
    eval->add_option("--split", o.split, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}));

    auto* sweep = app.add_subcommand("sweep", "pin length x base pins x hinge orientation sweep");
    add_common(sweep, o.common);
    sweep->add_option("--n", o.n, "samples per variant")->check(CLI::PositiveNumber);
    sweep->add_option("--epochs", o.epochs, "override train.epochs")->check(CLI::NonNegativeNumber);

    auto* ind = app.add_subcommand("indenter-test", "robustness across indenter shapes");
    add_common(ind, o.common);
    ind->add_option("--model", o.model, "TFRM model")->required();
    ind->add_option("--dataset", o.dataset, "optional dataset for the validation comparison");

    auto* pick = app.add_subcommand("pick-place", "placement error under four sensing conditions");
    add_common(pick, o.common);
    pick->add_option("--model", o.model, "TFRM model");
    pick->add_flag("--perfect", o.perfect, "use ground-truth sensing instead of a model");

    auto* render = app.add_subcommand("render", "render one tactile frame");
    add_common(render, o.common);
    render->add_option("--depth", o.depth, "indentation depth (mm)")->check(CLI::NonNegativeNumber);
    render->add_option("--location", o.location, "contact location from the fingertip (mm)");
    render->add_option("--image", o.image, "output .pbm path (default <out>/frame.pbm)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen)
            return cmd_gen_data(o);
        if (*train)
            return cmd_train(o);
        if (*eval)
            return cmd_eval(o);
        if (*sweep)
            return cmd_sweep(o);
        if (*ind)
            return cmd_indenter_test(o);
        if (*pick)
            return cmd_pick_place(o);
        if (*render)
            return cmd_render(o);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
