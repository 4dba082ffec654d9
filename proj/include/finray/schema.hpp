#pragma once

// JSON schema for the finger design and camera blocks. Unknown keys are rejected.

#include "finray/hash.hpp"
#include "finray/json_util.hpp"
#include "finray/mechanics.hpp"
#include "finray/sensor.hpp"

#include <string>

namespace finray {

inline std::string to_string(mechanics::HingeOrientation h)
{
    return h == mechanics::HingeOrientation::Opposing ? "opposing" : "concordant";
}

inline std::string to_string(mechanics::CouplingMode m)
{
    return m == mechanics::CouplingMode::PaperPure ? "paper_pure" : "coupled";
}

inline Json to_json(const mechanics::FingerDesign& d)
{
    Json j;
    j["finger_length_mm"] = d.finger_length_mm;
    j["beam_length_mm"] = d.beam_length_mm;
    j["flexural_rigidity_nmm2"] = d.flexural_rigidity_nmm2;
    j["torsional_stiffness_nmm_per_rad"] = d.torsional_stiffness_nmm_per_rad;
    j["force_per_depth_n_per_mm"] = d.force_per_depth_n_per_mm;
    j["hinge_orientation"] = to_string(d.hinge_orientation);
    j["concordant_stiffness_ratio"] = d.concordant_stiffness_ratio;
    j["long_pin_length_mm"] = d.long_pin_length_mm;
    j["base_pins_present"] = d.base_pins_present;
    j["base_pin_length_mm"] = d.base_pin_length_mm;
    j["pin_spacing_mm"] = d.pin_spacing_mm;
    j["pin_diameter_mm"] = d.pin_diameter_mm;
    j["coupling_mode"] = to_string(d.coupling_mode);
    j["beam_moment_arm_mm"] = d.beam_moment_arm_mm ? Json(*d.beam_moment_arm_mm) : Json(nullptr);
    return j;
}

inline mechanics::FingerDesign design_from_json(const Json& j, const std::string& ctx = "finger")
{
    mechanics::FingerDesign d;
    std::string hinge = to_string(d.hinge_orientation);
    std::string coupling = to_string(d.coupling_mode);
    ObjectReader r(j, ctx);
    r.get("finger_length_mm", d.finger_length_mm)
        .get("beam_length_mm", d.beam_length_mm)
        .get("flexural_rigidity_nmm2", d.flexural_rigidity_nmm2)
        .get("torsional_stiffness_nmm_per_rad", d.torsional_stiffness_nmm_per_rad)
        .get("force_per_depth_n_per_mm", d.force_per_depth_n_per_mm)
        .get("hinge_orientation", hinge)
        .get("concordant_stiffness_ratio", d.concordant_stiffness_ratio)
        .get("long_pin_length_mm", d.long_pin_length_mm)
        .get("base_pins_present", d.base_pins_present)
        .get("base_pin_length_mm", d.base_pin_length_mm)
        .get("pin_spacing_mm", d.pin_spacing_mm)
        .get("pin_diameter_mm", d.pin_diameter_mm)
        .get("coupling_mode", coupling)
        .get("beam_moment_arm_mm", d.beam_moment_arm_mm)
        .finish();

    if (hinge == "opposing")
        d.hinge_orientation = mechanics::HingeOrientation::Opposing;
    else if (hinge == "concordant")
        d.hinge_orientation = mechanics::HingeOrientation::Concordant;
    else
        throw Error(ErrorKind::Config, ctx + ".hinge_orientation: expected 'opposing' or 'concordant'");

    if (coupling == "paper_pure")
        d.coupling_mode = mechanics::CouplingMode::PaperPure;
    else if (coupling == "coupled")
        d.coupling_mode = mechanics::CouplingMode::Coupled;
    else
        throw Error(ErrorKind::Config, ctx + ".coupling_mode: expected 'paper_pure' or 'coupled'");

    try {
        d.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, ctx + ": " + e.what());
    }
    return d;
}

inline Json to_json(const sensor::CameraConfig& c)
{
    Json j;
    j["resolution_px"] = c.resolution_px;
    j["pixels_per_mm"] = c.pixels_per_mm;
    j["marker_radius_px"] = c.marker_radius_px;
    j["row_gap_mm"] = c.row_gap_mm;
    // JSON has no infinity; null means an unbounded visibility window.
    j["visibility_halfwidth_mm"] =
        std::isfinite(c.visibility_halfwidth_mm) ? Json(c.visibility_halfwidth_mm) : Json(nullptr);
    j["reference_pin_length_mm"] = c.reference_pin_length_mm;
    return j;
}

inline sensor::CameraConfig camera_from_json(const Json& j, const std::string& ctx = "camera")
{
    sensor::CameraConfig c;
    std::optional<double> halfwidth = c.visibility_halfwidth_mm;
    ObjectReader(j, ctx)
        .get("resolution_px", c.resolution_px)
        .get("pixels_per_mm", c.pixels_per_mm)
        .get("marker_radius_px", c.marker_radius_px)
        .get("row_gap_mm", c.row_gap_mm)
        .get("visibility_halfwidth_mm", halfwidth)
        .get("reference_pin_length_mm", c.reference_pin_length_mm)
        .finish();
    c.visibility_halfwidth_mm = halfwidth.value_or(std::numeric_limits<double>::infinity());
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, ctx + ": " + e.what());
    }
    return c;
}

// Identifies everything that determines a rendered frame apart from the contact.
inline Digest design_hash(const mechanics::FingerDesign& design, const sensor::CameraConfig& camera)
{
    Json j;
    j["finger"] = to_json(design);
    j["camera"] = to_json(camera);
    return sha256(j.dump());
}

} // namespace finray
