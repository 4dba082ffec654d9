// Acceptance runner: one PASS/FAIL line per criterion. Exits nonzero if any fails.
//
// usage: acceptance [work_dir] [--only N[,N...]]

#include "finray/experiments.hpp"
#include "finray/learner/grad_check.hpp"
#include "finray/learner/model_io.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace finray;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string(FINRAY_SIM_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

mechanics::FingerDesign literal_design()
{
    mechanics::FingerDesign d;
    d.beam_moment_arm_mm.reset();
    return d;
}

// 1. Analytic deflection against a shooting-method BVP solve.
Outcome mechanics_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto d = literal_design();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> us(0.0, d.beam_length_mm), uy(0.0, d.finger_length_mm), uf(0.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const mechanics::Contact c{0.0, uy(rng), uf(rng)};
        const double s = us(rng);
        const double w = mechanics::deflection(d, s, c);
        const double ref = oracle::beam_bvp(d, mechanics::bending_moment(c), {s}).front();
        worst = std::max(worst, std::abs(w - ref) / std::max(std::abs(ref), 1e-12));
    }
    const mechanics::Contact c{0.0, 42.0, 2.5};
    const bool boundary =
        mechanics::deflection(d, 0.0, c) == 0.0 && mechanics::deflection(d, d.beam_length_mm, c) == 0.0;
    const double t = seconds_since(t0);
    return {worst < 1e-6 && boundary && t < 5.0,
            fmt("max rel err %.2e (tol 1e-6), boundary exact %s, %.2f s (limit 5 s)", worst, boundary ? "yes" : "no",
                t)};
}

// 2. Overall deformation = deflection at the shifted coordinate; rigid-hinge limit.
Outcome composition()
{
    const auto d = literal_design();
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> us(0.0, d.beam_length_mm), uy(0.0, d.finger_length_mm), uf(0.0, 3.0);
    double worst = 0.0, worst_limit = 0.0;
    auto rigid = d;
    rigid.torsional_stiffness_nmm_per_rad = 1e300;
    for (int i = 0; i < 100; ++i) {
        const mechanics::Contact c{0.0, uy(rng), uf(rng)};
        const double s = us(rng);
        const double dx = mechanics::hinge_shift(d, c).shift_mm;
        const double composed = mechanics::detail::deflection_for_moment(d, mechanics::shifted_coordinate(s, dx),
                                                                         mechanics::bending_moment(c));
        worst = std::max(worst, std::abs(mechanics::overall_deformation(d, s, c) - composed));
        worst_limit = std::max(worst_limit, std::abs(mechanics::overall_deformation(rigid, s, c) -
                                                     mechanics::deflection(rigid, s, c)));
    }
    return {worst <= 1e-12 && worst_limit <= 1e-9,
            fmt("composition max abs err %.2e (tol 1e-12), k->inf limit %.2e (tol 1e-9)", worst, worst_limit)};
}

// 3. Finite-difference gradient checks.
Outcome gradients()
{
    using namespace learner;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(303);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto random = [&](int n, Shape s) {
        Tensor<double> t(n, s);
        for (auto& v : t.data)
            v = nd(rng);
        return t;
    };
    auto randomize = [&](Layer<double>& l) {
        for (auto* p : l.params())
            for (auto& v : p->value)
                v = nd(rng);
    };

    auto model = build_model<double>(reduced_model_config(), 7);
    auto x = random(3, {1, 16, 16});
    for (auto& v : x.data)
        v = v > 0.5 ? 1.0 : 0.0;
    const auto whole = grad_check(model, x, random(3, {2, 1, 1}));

    Conv2d<double> conv(2, 3, 5, true, "conv");
    randomize(conv);
    BatchNorm2d<double> bn(3, "bn");
    randomize(bn);
    MaxPool2d<double> pool;
    Linear<double> fc(12, 5, "fc");
    randomize(fc);
    const double e_conv = layer_grad_check(conv, random(2, {2, 8, 8}), Mode::Train).max_rel_error;
    const double e_bn = layer_grad_check(bn, random(4, {3, 4, 4}), Mode::Train).max_rel_error;
    const double e_pool = layer_grad_check(pool, random(2, {3, 4, 6}), Mode::Train).max_rel_error;
    const double e_fc = layer_grad_check(fc, random(3, {12, 1, 1}), Mode::Train).max_rel_error;
    const double worst = std::max({whole.max_rel_error, e_conv, e_bn, e_pool, e_fc});
    const double t = seconds_since(t0);
    return {worst < 1e-4 && t < 60.0,
            fmt("model %.1e over %zu params; conv %.1e bn %.1e pool %.1e linear %.1e (tol 1e-4); %.1f s (limit 60 s)",
                whole.max_rel_error, whole.entries, e_conv, e_bn, e_pool, e_fc, t)};
}

// 4. 128 x 128 input reaches an 8 x 8 x 32 feature map.
Outcome architecture()
{
    using namespace learner;
    ModelConfig cfg;
    auto model = build_model<float>(cfg, 1);
    const auto shapes = model.net.shapes();
    std::optional<Shape> pre_flatten;
    for (std::size_t i = 0; i + 1 < shapes.size(); ++i)
        if (shapes[i + 1].c == static_cast<int>(shapes[i].size()) && shapes[i + 1].h == 1 && shapes[i].h > 1)
            pre_flatten = shapes[i];
    Tensor<float> x(1, {1, 128, 128});
    const auto y = model.forward_normalized(x, Mode::Infer);
    const bool ok = pre_flatten && *pre_flatten == Shape{32, 8, 8} && y.shape == Shape{2, 1, 1};
    return {ok, "pre-flatten " + (pre_flatten ? pre_flatten->str() : std::string("?")) + ", output " +
                    std::to_string(y.shape.c) + " values"};
}

// 5. End-to-end sensing through the CLI at 64 x 64.
Outcome end_to_end(const fs::path& work, std::optional<fs::path>& model_path)
{
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = work / "e2e";
    fs::remove_all(dir);
    const std::string common = " --resolution 64 --seed 2024 --out " + dir.string();
    if (int rc = cli("gen-data" + common, work / "e2e_gen.log"); rc != 0)
        return {false, fmt("gen-data exited %d", rc)};
    if (int rc = cli("train --dataset " + (dir / "dataset.tfrd").string() + common, work / "e2e_train.log"); rc != 0)
        return {false, fmt("train exited %d (see %s)", rc, (work / "e2e_train.log").c_str())};
    const double t = seconds_since(t0);
    model_path = dir / "model.tfrm";

    const auto ds = datagen::read_dataset((dir / "dataset.tfrd").string());
    auto model = learner::read_model<float>(model_path->string());
    const auto r = learner::evaluate(model, ds, datagen::SplitTag::Val);
    const double depth_limit = 0.05 * (ds.ranges.depth_max_mm - ds.ranges.depth_min_mm);
    const double loc_limit = 0.08 * (ds.ranges.location_max_mm - ds.ranges.location_min_mm);
    const bool ok = ds.size() == 4000 && ds.indices(datagen::SplitTag::Val).size() == 800 &&
                    r.mae_depth_mm <= depth_limit && r.mae_location_mm <= loc_limit && t <= 1800.0;
    return {ok, fmt("n=%zu val=%zu; MAE depth %.4f mm (limit %.3f), location %.4f mm (limit %.2f); %.0f s (limit 1800 s)",
                    ds.size(), ds.indices(datagen::SplitTag::Val).size(), r.mae_depth_mm, depth_limit,
                    r.mae_location_mm, loc_limit, t)};
}

// 6. Marker-pattern signatures of depth and location.
Outcome signatures()
{
    const mechanics::FingerDesign d;
    const sensor::CameraConfig cam;
    auto project = [&](double depth, double loc_tip) {
        return sensor::project_markers(d, mechanics::beam_state(d, depth, datagen::to_hinge_height(d, loc_tip)), cam);
    };
    int spread_violations = 0, mean_violations = 0, checked_d = 0, checked_y = 0;
    for (int yi = 0; yi <= 8; ++yi) {
        const double y = 10.0 + 5.0 * yi;
        double prev = -1.0;
        bool ok = true;
        for (int di = 0; di <= 9; ++di) {
            const double s = sensor::long_row_spread(project(1.0 + 0.5 * di, y));
            ok = ok && !(di > 0 && s < prev);
            prev = s;
        }
        spread_violations += ok ? 0 : 1;
        ++checked_d;
    }
    for (int di = 0; di <= 9; ++di) {
        const double depth = 1.0 + 0.5 * di;
        std::vector<double> u;
        for (int yi = 0; yi <= 8; ++yi)
            u.push_back(sensor::long_row_mean_u(project(depth, 10.0 + 5.0 * yi)));
        bool inc = true, dec = true;
        for (std::size_t i = 1; i < u.size(); ++i) {
            inc = inc && u[i] > u[i - 1];
            dec = dec && u[i] < u[i - 1];
        }
        mean_violations += (inc || dec) ? 0 : 1;
        ++checked_y;
    }
    return {spread_violations == 0 && mean_violations == 0,
            fmt("spread nondecreasing in depth for %d/%d locations; mean u strictly monotone in location for %d/%d "
                "depths",
                checked_d - spread_violations, checked_d, checked_y - mean_violations, checked_y)};
}

// 7. Pin length and hinge orientation act through the expected mechanisms.
Outcome mechanism_checks()
{
    mechanics::FingerDesign long_pins;
    mechanics::FingerDesign short_pins;
    short_pins.long_pin_length_mm = 3.0;
    mechanics::FingerDesign opp;
    mechanics::FingerDesign con;
    con.hinge_orientation = mechanics::HingeOrientation::Concordant;
    const sensor::CameraConfig cam;
    const std::size_t n_long = sensor::pin_layout(long_pins).n_long;
    int states = 0, pin_fail = 0, hinge_fail = 0;
    for (double depth : {1.0, 2.5, 4.0, 5.5})
        for (double y : {10.0, 25.0, 40.0, 50.0}) {
            ++states;
            const auto st = mechanics::beam_state(long_pins, depth, y);
            const auto a = experiments::pin_lever_displacement(short_pins, st, cam);
            const auto b = experiments::pin_lever_displacement(long_pins, st, cam);
            for (std::size_t i = 0; i < n_long; ++i)
                if (!(b[i] > a[i])) {
                    ++pin_fail;
                    break;
                }
            const auto so = mechanics::beam_state(opp, depth, y);
            const auto sc = mechanics::beam_state(con, depth, y);
            if (!(std::abs(sc.shift_mm) > std::abs(so.shift_mm) && sc.max_abs_deflection() < so.max_abs_deflection()))
                ++hinge_fail;
        }
    return {pin_fail == 0 && hinge_fail == 0,
            fmt("5.5 mm > 3.0 mm pin displacement on every long-row marker in %d/%d states; concordant larger |dx| "
                "and smaller max|w| in %d/%d contacts",
                states - pin_fail, states, states - hinge_fail, states)};
}

// 8. Tukey HSD fixtures.
Outcome tukey()
{
    const auto ref = stats::tukey_hsd({{1, 2, 3}, {2, 3, 4}, {10, 11, 12}});
    bool only_third = true;
    for (const auto& p : ref.pairs)
        only_third = only_third && (p.significant == (p.b == 2));
    const auto same = stats::tukey_hsd({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    bool none = true;
    for (const auto& p : same.pairs)
        none = none && !p.significant;
    const std::vector<double> a{1.0, 2.5, 3.1, 4.0}, b{2.2, 3.9, 4.4, 5.8, 6.0};
    const auto two = stats::tukey_hsd({a, b});
    const double identity = std::abs(two.pairs[0].q - std::sqrt(2.0) * std::abs(stats::pooled_t_test(a, b).t));
    const double qc = ref.q_critical;
    const double rel = std::abs(qc - 4.339) / 4.339;
    return {only_third && none && identity <= 1e-10 && rel <= 0.005,
            fmt("reference flags only group-3 pairs: %s; identical groups flag none: %s; |q - sqrt2 t| = %.1e; "
                "q(3, 6, 0.05) = %.6f (%.3f%% from 4.339)",
                only_third ? "yes" : "no", none ? "yes" : "no", identity, qc, 100.0 * rel)};
}

// 9. Pick and place with the criterion-5 model.
Outcome pick_place(const std::optional<fs::path>& model_path)
{
    if (!model_path || !fs::exists(*model_path))
        return {false, "no trained model available (criterion 5 did not produce one)"};
    const auto t0 = std::chrono::steady_clock::now();
    auto model = learner::read_model<float>(model_path->string());
    const mechanics::FingerDesign design;
    sensor::CameraConfig cam;
    cam.resolution_px = model.config.input_resolution;
    experiments::PickPlaceConfig cfg;
    cfg.seed = 2024;
    const auto predict = experiments::model_predictor(model);
    std::map<experiments::Condition, double> m;
    for (auto c : experiments::all_conditions())
        m[c] = experiments::mean_error(experiments::pick_place_sim(predict, design, cam, c, cfg));
    double perfect_max = 0.0;
    for (const auto& t : experiments::pick_place_perfect(design, experiments::Condition::Both, cfg))
        perfect_max = std::max(perfect_max, t.error_mm);
    const double t = seconds_since(t0);
    using experiments::Condition;
    const bool order = m[Condition::NoSensing] > m[Condition::DepthOnly] &&
                       m[Condition::NoSensing] > m[Condition::LocationOnly] &&
                       m[Condition::Both] < m[Condition::DepthOnly] && m[Condition::Both] < m[Condition::LocationOnly];
    const bool half = m[Condition::Both] <= 0.5 * m[Condition::NoSensing];
    return {order && half && perfect_max == 0.0 && t < 300.0,
            fmt("mean error (mm, %d trials): none %.3f, depth %.3f, location %.3f, both %.3f; both/none %.3f (limit "
                "0.5); perfect max %.1g; %.1f s (limit 300 s)",
                cfg.trials, m[Condition::NoSensing], m[Condition::DepthOnly], m[Condition::LocationOnly],
                m[Condition::Both], m[Condition::Both] / m[Condition::NoSensing], perfect_max, t)};
}

// 10. Two sequential CLI runs produce identical dataset and model bytes.
Outcome reproducibility(const fs::path& work)
{
    std::string files[2][3];
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = work / ("repro" + std::to_string(run));
        fs::remove_all(dir);
        const std::string common = " --resolution 64 --seed 77 --jobs 1 --out " + dir.string();
        if (int rc = cli("gen-data --n 200" + common, work / "repro.log"); rc != 0)
            return {false, fmt("gen-data exited %d", rc)};
        if (int rc = cli("train --epochs 2 --dataset " + (dir / "dataset.tfrd").string() + common, work / "repro.log");
            rc != 0)
            return {false, fmt("train exited %d", rc)};
        files[run][0] = slurp(dir / "dataset.tfrd");
        files[run][1] = slurp(dir / "model.tfrm");
        files[run][2] = slurp(dir / "loss.csv");
    }
    const bool ds = !files[0][0].empty() && files[0][0] == files[1][0];
    const bool model = !files[0][1].empty() && files[0][1] == files[1][1];
    const bool loss = files[0][2] == files[1][2];
    return {ds && model && loss, fmt("dataset %zu bytes identical: %s; model %zu bytes identical: %s; loss CSV: %s",
                                     files[0][0].size(), ds ? "yes" : "no", files[0][1].size(), model ? "yes" : "no",
                                     loss ? "identical" : "differs")};
}

} // namespace

int main(int argc, char** argv)
{
    fs::path work = fs::temp_directory_path() / "finray_acceptance";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string tok; std::getline(ss, tok, ',');)
                only.insert(std::stoi(tok));
        } else {
            work = a;
        }
    }
    fs::create_directories(work);
    learner::retain_freed_memory();

    std::optional<fs::path> model_path;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"mechanics oracle", mechanics_oracle},
        {"deformation composition", composition},
        {"gradient checks", gradients},
        {"architecture shape", architecture},
        {"end-to-end sensing", [&] { return end_to_end(work, model_path); }},
        {"marker signatures", signatures},
        {"sweep mechanisms", mechanism_checks},
        {"Tukey HSD", tukey},
        {"pick and place", [&] { return pick_place(model_path); }},
        {"reproducibility", [&] { return reproducibility(work); }},
    };

    if (only.count(9) && !only.count(5) && fs::exists(work / "e2e" / "model.tfrm"))
        model_path = work / "e2e" / "model.tfrm";

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id))
            continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s  %2d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
