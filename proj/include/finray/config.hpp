#pragma once

// Top-level run configuration read by the command-line tool. Every block is optional;
// unknown keys anywhere are rejected.

#include "finray/datagen.hpp"
#include "finray/experiments.hpp"
#include "finray/json_util.hpp"
#include "finray/learner/train.hpp"
#include "finray/schema.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace finray {

struct DatasetConfig {
    std::size_t n = 4000;
    double split_ratio = 0.8;
};

struct ExperimentConfig {
    experiments::SweepConfig sweep;
    experiments::RobustnessConfig robustness;
    experiments::PickPlaceConfig pick_place;
};

struct RunConfig {
    mechanics::FingerDesign finger;
    sensor::CameraConfig camera;
    datagen::ContactRanges ranges;
    DatasetConfig dataset;
    learner::TrainConfig train;
    ExperimentConfig experiment;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    void validate() const
    {
        try {
            finger.validate();
            camera.validate();
            ranges.validate(finger);
            finger.validate_depth_budget(ranges.depth_max_mm);
            require(dataset.n >= 1, "dataset.n must be at least 1");
            require(dataset.split_ratio > 0.0 && dataset.split_ratio < 1.0, "dataset.split_ratio must lie in (0, 1)");
            train.validate();
            experiment.pick_place.validate(finger);
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, e.what());
        }
    }
};

inline Json to_json(const DatasetConfig& d) { return {{"n", d.n}, {"split_ratio", d.split_ratio}}; }

inline Json to_json(const ExperimentConfig& e)
{
    const auto& s = e.sweep;
    const auto& r = e.robustness;
    const auto& p = e.pick_place;
    return {{"sweep", {{"n_per_variant", s.n_per_variant}, {"resolution", s.resolution}, {"split_ratio", s.split_ratio}}},
            {"robustness",
             {{"trials", r.trials},
              {"depth_min_mm", r.depth_min_mm},
              {"depth_max_mm", r.depth_max_mm},
              {"location_min_mm", r.location_min_mm},
              {"location_max_mm", r.location_max_mm},
              {"alpha", r.alpha}}},
            {"pick_place",
             {{"trials", p.trials},
              {"finger_axis_noise_mm", p.finger_axis_noise_mm},
              {"closing_axis_noise_mm", p.closing_axis_noise_mm},
              {"nominal_depth_mm", p.nominal_depth_mm},
              {"nominal_location_mm", p.nominal_location_mm},
              {"depth_per_closing_mm", p.depth_per_closing_mm},
              {"indenter_id", p.indenter_id}}}};
}

inline Json to_json(const RunConfig& c)
{
    return {{"finger", to_json(c.finger)},
            {"camera", to_json(c.camera)},
            {"ranges", datagen::to_json(c.ranges)},
            {"dataset", to_json(c.dataset)},
            {"train", learner::to_json(c.train)},
            {"experiment", to_json(c.experiment)},
            {"output_dir", c.output_dir},
            {"seed", c.seed}};
}

inline ExperimentConfig experiment_from_json(const Json& j, const std::string& ctx)
{
    ExperimentConfig e;
    ObjectReader(j, ctx)
        .nested("sweep",
                [&](const Json& s, const std::string& c) {
                    ObjectReader(s, c)
                        .get("n_per_variant", e.sweep.n_per_variant)
                        .get("resolution", e.sweep.resolution)
                        .get("split_ratio", e.sweep.split_ratio)
                        .finish();
                })
        .nested("robustness",
                [&](const Json& s, const std::string& c) {
                    ObjectReader(s, c)
                        .get("trials", e.robustness.trials)
                        .get("depth_min_mm", e.robustness.depth_min_mm)
                        .get("depth_max_mm", e.robustness.depth_max_mm)
                        .get("location_min_mm", e.robustness.location_min_mm)
                        .get("location_max_mm", e.robustness.location_max_mm)
                        .get("alpha", e.robustness.alpha)
                        .finish();
                })
        .nested("pick_place",
                [&](const Json& s, const std::string& c) {
                    ObjectReader(s, c)
                        .get("trials", e.pick_place.trials)
                        .get("finger_axis_noise_mm", e.pick_place.finger_axis_noise_mm)
                        .get("closing_axis_noise_mm", e.pick_place.closing_axis_noise_mm)
                        .get("nominal_depth_mm", e.pick_place.nominal_depth_mm)
                        .get("nominal_location_mm", e.pick_place.nominal_location_mm)
                        .get("depth_per_closing_mm", e.pick_place.depth_per_closing_mm)
                        .get("indenter_id", e.pick_place.indenter_id)
                        .finish();
                })
        .finish();
    const auto& r = e.robustness;
    if (r.trials < 2 || r.depth_min_mm > r.depth_max_mm || r.location_min_mm > r.location_max_mm || r.alpha <= 0.0 ||
        r.alpha >= 1.0)
        throw Error(ErrorKind::Config, ctx + ".robustness: invalid trials, ranges or alpha");
    if (e.sweep.n_per_variant < 2 || e.sweep.split_ratio <= 0.0 || e.sweep.split_ratio >= 1.0)
        throw Error(ErrorKind::Config, ctx + ".sweep: invalid n_per_variant or split_ratio");
    if (e.sweep.resolution != 64 && e.sweep.resolution != 128)
        throw Error(ErrorKind::Config, ctx + ".sweep.resolution: expected 64 or 128");
    return e;
}

inline RunConfig run_config_from_json(const Json& j)
{
    RunConfig c;
    ObjectReader(j, "config")
        .nested("finger", [&](const Json& s, const std::string& ctx) { c.finger = design_from_json(s, ctx); })
        .nested("camera", [&](const Json& s, const std::string& ctx) { c.camera = camera_from_json(s, ctx); })
        .nested("ranges", [&](const Json& s, const std::string& ctx) { c.ranges = datagen::ranges_from_json(s, ctx); })
        .nested("dataset",
                [&](const Json& s, const std::string& ctx) {
                    ObjectReader(s, ctx).get("n", c.dataset.n).get("split_ratio", c.dataset.split_ratio).finish();
                })
        .nested("train", [&](const Json& s, const std::string& ctx) { c.train = learner::train_config_from_json(s, ctx); })
        .nested("experiment", [&](const Json& s, const std::string& ctx) { c.experiment = experiment_from_json(s, ctx); })
        .get("output_dir", c.output_dir)
        .get("seed", c.seed)
        .finish();
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::Config, "cannot open config file " + path);
    Json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, path + ": " + e.what());
    }
    return run_config_from_json(j);
}

} // namespace finray
