#pragma once

// Simulated studies: the pin/hinge design sweep, indenter robustness with pairwise
// Tukey comparisons, and pick-and-place correction under four sensing conditions.

#include "finray/datagen.hpp"
#include "finray/hash.hpp"
#include "finray/learner/train.hpp"
#include "finray/parallel.hpp"
#include "finray/stats.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace finray::experiments {

using datagen::ContactRanges;
using learner::Prediction;
using mechanics::FingerDesign;
using sensor::CameraConfig;
using sensor::MarkerFrame;
using finray::to_string;

using Predictor = std::function<std::vector<Prediction>(std::span<const MarkerFrame>)>;

inline Predictor model_predictor(learner::Model<float>& model)
{
    return [&model](std::span<const MarkerFrame> frames) { return model.predict(frames); };
}

// ---------------------------------------------------------------------------------
// Design sweep

struct SweepVariant {
    double long_pin_mm = 5.5;
    bool base_pins = true;
    mechanics::HingeOrientation hinge = mechanics::HingeOrientation::Opposing;

    std::string name() const
    {
        std::ostringstream os;
        os << "pin" << long_pin_mm << (base_pins ? "_base" : "_nobase") << "_" << to_string(hinge);
        return os.str();
    }

    FingerDesign apply(FingerDesign d) const
    {
        d.long_pin_length_mm = long_pin_mm;
        d.base_pins_present = base_pins;
        d.hinge_orientation = hinge;
        return d;
    }
};

inline std::vector<SweepVariant> full_factorial()
{
    std::vector<SweepVariant> out;
    for (double pin : {3.0, 5.5})
        for (bool base : {false, true})
            for (auto h : {mechanics::HingeOrientation::Opposing, mechanics::HingeOrientation::Concordant})
                out.push_back({pin, base, h});
    return out;
}

struct SweepConfig {
    std::size_t n_per_variant = 1500;
    int resolution = 64;
    double split_ratio = 0.8;
    learner::TrainConfig train;
    std::uint64_t seed = 0;
};

struct SweepRow {
    SweepVariant variant;
    bool ok = false;
    std::string error;
    double mae_depth_mm = 0.0;
    double mae_location_mm = 0.0;
    std::vector<learner::Residual> residuals;
};

// Every variant sees the same contact draws, split, initialization and shuffle seeds
// (a paired comparison); seeds depend only on the master seed, never on scheduling.
struct SweepSeeds {
    std::uint64_t data, split, init, shuffle;
};

inline SweepSeeds sweep_seeds(std::uint64_t master)
{
    return {mix_seed(master, 1), mix_seed(master, 2), mix_seed(master, 3), mix_seed(master, 4)};
}

inline SweepRow run_variant(const FingerDesign& base, const CameraConfig& camera_in, const ContactRanges& ranges,
                            const SweepVariant& v, const SweepConfig& cfg)
{
    SweepRow row;
    row.variant = v;
    try {
        const FingerDesign design = v.apply(base);
        CameraConfig camera = camera_in;
        camera.resolution_px = cfg.resolution;
        const auto seeds = sweep_seeds(cfg.seed);
        auto ds = datagen::split_dataset(
            datagen::generate_dataset(design, camera, ranges, cfg.n_per_variant, seeds.data), cfg.split_ratio,
            seeds.split);
        learner::ModelConfig mc;
        mc.input_resolution = cfg.resolution;
        mc.normalization = learner::normalization_for(ranges);
        auto model = learner::build_model<float>(mc, seeds.init);
        learner::TrainConfig tc = cfg.train;
        tc.seed = seeds.shuffle;
        model = learner::train(std::move(model), ds, tc);
        auto report = learner::evaluate(model, ds, datagen::SplitTag::Val);
        row.mae_depth_mm = report.mae_depth_mm;
        row.mae_location_mm = report.mae_location_mm;
        row.residuals = std::move(report.residuals);
        row.ok = true;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

// Failures are recorded per variant; the sweep itself never aborts.
inline std::vector<SweepRow> design_sweep(const FingerDesign& base, const CameraConfig& camera,
                                          const ContactRanges& ranges, const std::vector<SweepVariant>& variants,
                                          const SweepConfig& cfg, unsigned jobs = 1)
{
    std::vector<SweepRow> rows(variants.size());
    parallel_for(variants.size(), jobs,
                 [&](std::size_t i) { rows[i] = run_variant(base, camera, ranges, variants[i], cfg); });
    return rows;
}

// Image displacement (px) of each marker relative to the projection of its own pin
// root. The rigid crossbeam shift moves root and tip alike, so this is the part the
// pin lever contributes: g * p * (slope, w / p_ref).
inline std::vector<double> pin_lever_displacement(const FingerDesign& design, const mechanics::BeamState& state,
                                                  const CameraConfig& camera)
{
    const auto proj = sensor::project_markers(design, state, camera);
    const auto layout = sensor::pin_layout(design);
    const double g = camera.pixels_per_mm;
    const double u0 = camera.axis_px() - g * 0.5 * design.beam_length_mm;
    const double v_long = camera.axis_px() - 0.5 * g * camera.row_gap_mm;
    const double v_base = camera.axis_px() + 0.5 * g * camera.row_gap_mm;
    std::vector<double> out;
    out.reserve(proj.markers.size());
    for (std::size_t i = 0; i < proj.markers.size(); ++i) {
        const auto& m = proj.markers[i];
        const double root_u = g * (layout.pins[i].attach_s_mm + state.shift_mm) + u0;
        const double root_v = m.row == sensor::PinRow::Long ? v_long : v_base;
        out.push_back(std::hypot(m.u_px - root_u, m.v_px - root_v));
    }
    return out;
}

// Total image displacement (px) of each marker from its rest position.
inline std::vector<double> marker_displacement(const FingerDesign& design, const mechanics::BeamState& state,
                                               const CameraConfig& camera)
{
    const auto rest = sensor::project_markers(design, mechanics::zero_beam_state(design), camera);
    const auto proj = sensor::project_markers(design, state, camera);
    std::vector<double> out;
    for (std::size_t i = 0; i < proj.markers.size(); ++i)
        out.push_back(std::hypot(proj.markers[i].u_px - rest.markers[i].u_px,
                                 proj.markers[i].v_px - rest.markers[i].v_px));
    return out;
}

// ---------------------------------------------------------------------------------
// Indenter robustness

struct RobustnessConfig {
    int trials = 30;
    // Commanded contacts are drawn on a 1 mm grid over these closed ranges.
    double depth_min_mm = 1.0;
    double depth_max_mm = 5.0;
    double location_min_mm = 5.0;
    double location_max_mm = 55.0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

struct IndenterResult {
    std::uint8_t indenter_id = 0;
    std::string name;
    std::vector<double> depth_errors;    // |predicted - commanded|, mm
    std::vector<double> location_errors; // mm
    std::vector<datagen::ContactTarget> targets;
    std::vector<Prediction> predictions;

    double mean_depth() const { return stats::mean(depth_errors); }
    double sd_depth() const { return stats::stddev(depth_errors); }
    double mean_location() const { return stats::mean(location_errors); }
    double sd_location() const { return stats::stddev(location_errors); }
};

struct RobustnessReport {
    std::vector<IndenterResult> indenters;
    stats::HsdTable hsd_depth;
    stats::HsdTable hsd_location;
};

inline std::vector<datagen::ContactTarget> grid_contacts(const RobustnessConfig& cfg, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> depth(static_cast<int>(std::ceil(cfg.depth_min_mm)),
                                             static_cast<int>(std::floor(cfg.depth_max_mm)));
    std::uniform_int_distribution<int> loc(static_cast<int>(std::ceil(cfg.location_min_mm)),
                                           static_cast<int>(std::floor(cfg.location_max_mm)));
    std::vector<datagen::ContactTarget> out;
    for (int t = 0; t < cfg.trials; ++t) {
        const double d = depth(rng);
        const double l = loc(rng);
        out.push_back({d, l});
    }
    return out;
}

inline RobustnessReport indenter_robustness(const Predictor& predict, const FingerDesign& design,
                                            const CameraConfig& camera, const std::vector<std::uint8_t>& indenter_ids,
                                            const RobustnessConfig& cfg)
{
    require(cfg.trials >= 2, "indenter test needs at least two trials per indenter");
    require(indenter_ids.size() >= 2, "indenter test needs at least two indenters");
    RobustnessReport report;
    std::vector<std::vector<double>> depth_groups, loc_groups;
    for (auto id : indenter_ids) {
        IndenterResult r;
        r.indenter_id = id;
        r.name = datagen::indenter_by_id(id).name();
        r.targets = grid_contacts(cfg, mix_seed(cfg.seed, id));
        std::vector<MarkerFrame> frames;
        for (const auto& t : r.targets)
            frames.push_back(datagen::synth_sample(design, camera, t, id).frame);
        r.predictions = predict(frames);
        require(r.predictions.size() == frames.size(), "predictor returned the wrong number of rows");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            r.depth_errors.push_back(std::abs(r.predictions[i].depth_mm - r.targets[i].depth_mm));
            r.location_errors.push_back(
                std::abs(r.predictions[i].location_from_tip_mm - r.targets[i].location_from_tip_mm));
        }
        depth_groups.push_back(r.depth_errors);
        loc_groups.push_back(r.location_errors);
        report.indenters.push_back(std::move(r));
    }
    report.hsd_depth = stats::tukey_hsd(depth_groups, cfg.alpha);
    report.hsd_location = stats::tukey_hsd(loc_groups, cfg.alpha);
    return report;
}

inline std::vector<std::uint8_t> all_indenter_ids()
{
    std::vector<std::uint8_t> ids;
    for (std::size_t i = 0; i < datagen::standard_indenters().size(); ++i)
        ids.push_back(static_cast<std::uint8_t>(i));
    return ids;
}

// ---------------------------------------------------------------------------------
// Pick and place

enum class Condition { NoSensing, DepthOnly, LocationOnly, Both };

inline std::string to_string(Condition c)
{
    switch (c) {
    case Condition::NoSensing:
        return "no_sensing";
    case Condition::DepthOnly:
        return "depth_only";
    case Condition::LocationOnly:
        return "location_only";
    case Condition::Both:
        return "both";
    }
    return "?";
}

inline const std::vector<Condition>& all_conditions()
{
    static const std::vector<Condition> kAll = {Condition::NoSensing, Condition::DepthOnly, Condition::LocationOnly,
                                                Condition::Both};
    return kAll;
}

// A centred grasp touches the finger at `nominal_location_mm` from the tip with
// `nominal_depth_mm` of indentation. An object offset a_f along the finger axis moves
// the contact by a_f; an offset a_c along the closing axis changes the indentation by
// depth_per_closing_mm * a_c.
struct PickPlaceConfig {
    int trials = 20;
    double finger_axis_noise_mm = 10.0;
    double closing_axis_noise_mm = 4.0;
    double nominal_depth_mm = 3.25;
    double nominal_location_mm = 30.0;
    double depth_per_closing_mm = 0.5;
    std::uint8_t indenter_id = 6; // the 30 mm cylinder
    std::uint64_t seed = 0;

    void validate(const FingerDesign& design) const
    {
        require(trials >= 1, "pick-and-place needs at least one trial");
        require(finger_axis_noise_mm >= 0.0 && closing_axis_noise_mm >= 0.0, "pick noise must be non-negative");
        require(depth_per_closing_mm > 0.0, "depth_per_closing_mm must be positive");
        require(nominal_depth_mm - depth_per_closing_mm * closing_axis_noise_mm >= 0.0,
                "closing-axis noise would pull the object off the finger");
        require(nominal_location_mm - finger_axis_noise_mm >= 0.0 &&
                    nominal_location_mm + finger_axis_noise_mm <= design.finger_length_mm,
                "finger-axis noise would move the contact off the finger");
    }
};

struct PlacementTrial {
    Condition condition = Condition::NoSensing;
    int trial = 0;
    double true_finger_mm = 0.0;
    double true_closing_mm = 0.0;
    double pred_finger_mm = 0.0;
    double pred_closing_mm = 0.0;
    double error_mm = 0.0;
};

struct PickOffset {
    double finger_mm;
    double closing_mm;
};

// Offsets depend only on the seed, so every condition sees the same objects.
inline std::vector<PickOffset> pick_offsets(const PickPlaceConfig& cfg)
{
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> f(-cfg.finger_axis_noise_mm, cfg.finger_axis_noise_mm);
    std::uniform_real_distribution<double> c(-cfg.closing_axis_noise_mm, cfg.closing_axis_noise_mm);
    std::vector<PickOffset> out;
    for (int t = 0; t < cfg.trials; ++t) {
        const double a_f = f(rng);
        const double a_c = c(rng);
        out.push_back({a_f, a_c});
    }
    return out;
}

// Sensing estimates for each offset: predicted contact mapped back to object offsets.
inline std::vector<PickOffset> sense_offsets(const Predictor& predict, const FingerDesign& design,
                                             const CameraConfig& camera, const PickPlaceConfig& cfg,
                                             const std::vector<PickOffset>& offsets)
{
    std::vector<MarkerFrame> frames;
    for (const auto& o : offsets) {
        const datagen::ContactTarget t{cfg.nominal_depth_mm + cfg.depth_per_closing_mm * o.closing_mm,
                                       cfg.nominal_location_mm + o.finger_mm};
        frames.push_back(datagen::synth_sample(design, camera, t, cfg.indenter_id).frame);
    }
    const auto pred = predict(frames);
    require(pred.size() == frames.size(), "predictor returned the wrong number of rows");
    std::vector<PickOffset> out;
    for (const auto& p : pred)
        out.push_back({p.location_from_tip_mm - cfg.nominal_location_mm,
                       (p.depth_mm - cfg.nominal_depth_mm) / cfg.depth_per_closing_mm});
    return out;
}

inline PlacementTrial place(Condition c, int trial, const PickOffset& truth, const PickOffset& sensed)
{
    PlacementTrial t;
    t.condition = c;
    t.trial = trial;
    t.true_finger_mm = truth.finger_mm;
    t.true_closing_mm = truth.closing_mm;
    const bool use_depth = c == Condition::DepthOnly || c == Condition::Both;
    const bool use_location = c == Condition::LocationOnly || c == Condition::Both;
    t.pred_finger_mm = use_location ? sensed.finger_mm : 0.0;
    t.pred_closing_mm = use_depth ? sensed.closing_mm : 0.0;
    t.error_mm = std::hypot(t.true_finger_mm - t.pred_finger_mm, t.true_closing_mm - t.pred_closing_mm);
    return t;
}

inline std::vector<PlacementTrial> pick_place_sim(const Predictor& predict, const FingerDesign& design,
                                                  const CameraConfig& camera, Condition condition,
                                                  const PickPlaceConfig& cfg)
{
    cfg.validate(design);
    const auto offsets = pick_offsets(cfg);
    std::vector<PickOffset> sensed(offsets.size(), PickOffset{0.0, 0.0});
    if (condition != Condition::NoSensing)
        sensed = sense_offsets(predict, design, camera, cfg, offsets);
    std::vector<PlacementTrial> out;
    for (std::size_t i = 0; i < offsets.size(); ++i)
        out.push_back(place(condition, static_cast<int>(i), offsets[i], sensed[i]));
    return out;
}

// Oracle sensing: returns the commanded contact of each rendered frame.
inline std::vector<PlacementTrial> pick_place_perfect(const FingerDesign& design, Condition condition,
                                                      const PickPlaceConfig& cfg)
{
    cfg.validate(design);
    const auto offsets = pick_offsets(cfg);
    std::vector<PlacementTrial> out;
    for (std::size_t i = 0; i < offsets.size(); ++i)
        out.push_back(place(condition, static_cast<int>(i), offsets[i], offsets[i]));
    return out;
}

inline double mean_error(const std::vector<PlacementTrial>& trials)
{
    require(!trials.empty(), "no placement trials");
    double s = 0.0;
    for (const auto& t : trials)
        s += t.error_mm;
    return s / static_cast<double>(trials.size());
}

// ---------------------------------------------------------------------------------
// CSV output

inline std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os.precision(17);
    os << "variant,long_pin_mm,base_pins,hinge,ok,mae_depth_mm,mae_location_mm,error\n";
    for (const auto& r : rows)
        os << r.variant.name() << ',' << r.variant.long_pin_mm << ',' << (r.variant.base_pins ? 1 : 0) << ','
           << to_string(r.variant.hinge) << ',' << (r.ok ? 1 : 0) << ',' << r.mae_depth_mm << ','
           << r.mae_location_mm << ",\"" << r.error << "\"\n";
    return os.str();
}

inline std::string residuals_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os.precision(17);
    os << "variant,index,true_depth_mm,pred_depth_mm,true_location_mm,pred_location_mm\n";
    for (const auto& r : rows)
        for (const auto& e : r.residuals)
            os << r.variant.name() << ',' << e.index << ',' << e.true_depth_mm << ',' << e.pred_depth_mm << ','
               << e.true_location_mm << ',' << e.pred_location_mm << '\n';
    return os.str();
}

inline std::string robustness_csv(const RobustnessReport& r)
{
    std::ostringstream os;
    os.precision(17);
    os << "indenter,trials,depth_mean_mm,depth_sd_mm,location_mean_mm,location_sd_mm\n";
    for (const auto& i : r.indenters)
        os << i.name << ',' << i.depth_errors.size() << ',' << i.mean_depth() << ',' << i.sd_depth() << ','
           << i.mean_location() << ',' << i.sd_location() << '\n';
    return os.str();
}

inline std::string hsd_csv(const RobustnessReport& r)
{
    std::ostringstream os;
    os.precision(17);
    os << "metric,group_a,group_b,mean_diff_mm,q,p_value,ci_low_mm,ci_high_mm,significant\n";
    auto emit = [&](const std::string& metric, const stats::HsdTable& t) {
        for (const auto& p : t.pairs)
            os << metric << ',' << r.indenters[p.a].name << ',' << r.indenters[p.b].name << ',' << p.mean_diff << ','
               << (t.degenerate ? std::string("degenerate") : std::to_string(p.q)) << ',' << p.p_value << ','
               << p.ci_low << ',' << p.ci_high << ',' << (p.significant ? 1 : 0) << '\n';
    };
    emit("depth", r.hsd_depth);
    emit("location", r.hsd_location);
    return os.str();
}

inline std::string placement_csv(const std::vector<PlacementTrial>& trials)
{
    std::ostringstream os;
    os.precision(17);
    os << "condition,trial,true_finger_mm,true_closing_mm,pred_finger_mm,pred_closing_mm,error_mm\n";
    for (const auto& t : trials)
        os << to_string(t.condition) << ',' << t.trial << ',' << t.true_finger_mm << ',' << t.true_closing_mm << ','
           << t.pred_finger_mm << ',' << t.pred_closing_mm << ',' << t.error_mm << '\n';
    return os.str();
}

} // namespace finray::experiments
