#pragma once

// Hinged Fin-Ray finger mechanics.
//
// Coordinates: s runs along the bottom crossbeam away from the hinge, s in [0, L_b].
// A contact presses the finger pad with force F at height y above the hinge base.
// The hinge pair rotates the finger by theta = -F*y/k, which (small angle) shows up
// as a rigid horizontal shift dx = -L*F*y/k of the crossbeam. The crossbeam itself
// bends as a beam with w(0) = w(L_b) = 0 under the bending moment M:
//
//     EI w'' = M       =>      w(s) = M s (s - L_b) / (2 EI)
//
// Positive F, y gives dx < 0 and w <= 0 on the span.

#include "finray/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace finray::mechanics {

enum class HingeOrientation { Opposing, Concordant };

// PaperPure: F = c*d.  Coupled: the hinge shift relieves part of the indentation,
// F = c*(d - |dx(F)|), which solves to F = c*d / (1 + c*L*y/k).
enum class CouplingMode { PaperPure, Coupled };

inline constexpr double kSmallAngleLimitRad = 0.25;
inline constexpr double kMaxContactForceN = 3.0;

struct FingerDesign {
    double finger_length_mm = 60.0;
    double beam_length_mm = 30.0;
    double flexural_rigidity_nmm2 = 10000.0;
    double torsional_stiffness_nmm_per_rad = 5000.0;
    double force_per_depth_n_per_mm = 0.5;
    HingeOrientation hinge_orientation = HingeOrientation::Opposing;
    // Concordant hinges use k / ratio.
    double concordant_stiffness_ratio = 4.0;
    double long_pin_length_mm = 5.5;
    bool base_pins_present = true;
    double base_pin_length_mm = 2.0;
    double pin_spacing_mm = 1.7;
    double pin_diameter_mm = 0.9;
    CouplingMode coupling_mode = CouplingMode::Coupled;
    // Lever of the contact force about the crossbeam. Unset: the hinge moment F*y
    // bends the beam directly. Set: the beam sees F * arm, so bending tracks the
    // indentation force while the hinge shift tracks the moment F*y.
    std::optional<double> beam_moment_arm_mm = 50.0;

    double effective_torsional_stiffness() const
    {
        return hinge_orientation == HingeOrientation::Concordant
                   ? torsional_stiffness_nmm_per_rad / concordant_stiffness_ratio
                   : torsional_stiffness_nmm_per_rad;
    }

    void validate() const
    {
        require(finger_length_mm > 0 && beam_length_mm > 0, "finger and beam lengths must be positive");
        require(beam_length_mm <= finger_length_mm, "beam_length_mm must not exceed finger_length_mm");
        require(flexural_rigidity_nmm2 > 0, "flexural_rigidity_nmm2 must be positive");
        require(torsional_stiffness_nmm_per_rad > 0, "torsional_stiffness_nmm_per_rad must be positive");
        require(force_per_depth_n_per_mm > 0, "force_per_depth_n_per_mm must be positive");
        require(concordant_stiffness_ratio >= 1.0, "concordant_stiffness_ratio must be >= 1");
        require(long_pin_length_mm > 0 && base_pin_length_mm > 0, "pin lengths must be positive");
        require(pin_diameter_mm > 0, "pin_diameter_mm must be positive");
        require(pin_spacing_mm > pin_diameter_mm, "pin_spacing_mm must exceed pin_diameter_mm");
        require(!beam_moment_arm_mm || *beam_moment_arm_mm > 0, "beam_moment_arm_mm must be positive");
    }

    // c * d_max must stay under the 3 N soft-contact budget.
    void validate_depth_budget(double max_depth_mm) const
    {
        require(force_per_depth_n_per_mm * max_depth_mm <= kMaxContactForceN + 1e-12,
                "force_per_depth * max depth exceeds the 3 N contact budget");
    }
};

struct Contact {
    double depth_mm = 0.0;
    double location_mm = 0.0; // height above the hinge base (moment arm)
    double force_n = 0.0;
};

inline void check_contact(const FingerDesign& design, const Contact& contact)
{
    require(contact.depth_mm >= 0.0, "contact depth must be non-negative");
    require(contact.location_mm >= 0.0 && contact.location_mm <= design.finger_length_mm,
            "contact location must lie in [0, L]");
}

inline double coupled_contact_force(const FingerDesign& design, double depth_mm, double location_mm)
{
    require(depth_mm >= 0.0, "contact depth must be non-negative");
    require(location_mm >= 0.0 && location_mm <= design.finger_length_mm, "contact location must lie in [0, L]");
    const double c = design.force_per_depth_n_per_mm;
    if (design.coupling_mode == CouplingMode::PaperPure)
        return c * depth_mm;
    return c * depth_mm /
           (1.0 + c * design.finger_length_mm * location_mm / design.effective_torsional_stiffness());
}

inline Contact make_contact(const FingerDesign& design, double depth_mm, double location_mm)
{
    return {depth_mm, location_mm, coupled_contact_force(design, depth_mm, location_mm)};
}

inline double hinge_rotation(const FingerDesign& design, const Contact& contact)
{
    return -contact.force_n * contact.location_mm / design.effective_torsional_stiffness();
}

struct HingeShift {
    double shift_mm = 0.0;
    bool small_angle_exceeded = false;
};

inline HingeShift hinge_shift(const FingerDesign& design, const Contact& contact)
{
    const double theta = hinge_rotation(design, contact);
    return {design.finger_length_mm * theta, std::abs(theta) > kSmallAngleLimitRad};
}

inline double shifted_coordinate(double s_mm, double shift_mm) { return s_mm - shift_mm; }

inline double bending_moment(const Contact& contact) { return contact.force_n * contact.location_mm; }

namespace detail {

inline void check_span(const FingerDesign& design, double s_mm)
{
    require(s_mm >= 0.0 && s_mm <= design.beam_length_mm, "beam coordinate s must lie in [0, L_b]");
}

inline double deflection_for_moment(const FingerDesign& d, double s, double moment)
{
    return moment * s * (s - d.beam_length_mm) / (2.0 * d.flexural_rigidity_nmm2);
}

inline double slope_for_moment(const FingerDesign& d, double s, double moment)
{
    return moment * (2.0 * s - d.beam_length_mm) / (2.0 * d.flexural_rigidity_nmm2);
}

} // namespace detail

inline double deflection(const FingerDesign& design, double s_mm, const Contact& contact)
{
    detail::check_span(design, s_mm);
    return detail::deflection_for_moment(design, s_mm, bending_moment(contact));
}

inline double deflection_slope(const FingerDesign& design, double s_mm, const Contact& contact)
{
    detail::check_span(design, s_mm);
    return detail::slope_for_moment(design, s_mm, bending_moment(contact));
}

// Deflection profile seen at the shifted coordinate s' = s - dx.
inline double overall_deformation(const FingerDesign& design, double s_mm, const Contact& contact)
{
    detail::check_span(design, s_mm);
    const double fy = bending_moment(contact);
    const double sp = s_mm + design.finger_length_mm * fy / design.effective_torsional_stiffness();
    return fy / (2.0 * design.flexural_rigidity_nmm2) * sp * (sp - design.beam_length_mm);
}

// Pin attachment coordinates along the crossbeam. The long row keeps one pin pitch of
// clearance at both ends and is centred; the base row sits half a pitch to the right
// of each long pin except the last, so it interleaves the long row.
struct AttachmentPoints {
    std::vector<double> long_row;
    std::vector<double> base_row;
};

inline AttachmentPoints attachment_points(const FingerDesign& design)
{
    const double pitch = design.pin_spacing_mm;
    const double margin = pitch;
    const double usable = design.beam_length_mm - 2.0 * margin;
    require(usable > 0.0, "pin rows exceed the crossbeam extent");
    const auto n_long = static_cast<std::size_t>(std::floor(usable / pitch + 1e-9));
    require(n_long >= 1, "pin rows exceed the crossbeam extent");

    AttachmentPoints pts;
    const double first = 0.5 * (design.beam_length_mm - static_cast<double>(n_long - 1) * pitch);
    for (std::size_t i = 0; i < n_long; ++i)
        pts.long_row.push_back(first + static_cast<double>(i) * pitch);
    if (design.base_pins_present)
        for (std::size_t i = 0; i + 1 < n_long; ++i)
            pts.base_row.push_back(pts.long_row[i] + 0.5 * pitch);
    return pts;
}

// Sample coordinates used by BeamState: 0, long row, base row, L_b.
inline std::vector<double> beam_sample_points(const FingerDesign& design)
{
    const auto pts = attachment_points(design);
    std::vector<double> s;
    s.reserve(pts.long_row.size() + pts.base_row.size() + 2);
    s.push_back(0.0);
    s.insert(s.end(), pts.long_row.begin(), pts.long_row.end());
    s.insert(s.end(), pts.base_row.begin(), pts.base_row.end());
    s.push_back(design.beam_length_mm);
    return s;
}

struct BeamState {
    double shift_mm = 0.0;
    double rotation_rad = 0.0;
    double beam_moment_nmm = 0.0;
    std::vector<double> s_mm;
    std::vector<double> deflection_mm;
    std::vector<double> slope_rad;
    bool small_angle_exceeded = false;
    bool extrapolated = false;

    // Linear superposition of two loadings sampled at the same points.
    BeamState& operator+=(const BeamState& other)
    {
        require(s_mm == other.s_mm, "superposed beam states must share sample points");
        shift_mm += other.shift_mm;
        rotation_rad += other.rotation_rad;
        beam_moment_nmm += other.beam_moment_nmm;
        for (std::size_t i = 0; i < s_mm.size(); ++i) {
            deflection_mm[i] += other.deflection_mm[i];
            slope_rad[i] += other.slope_rad[i];
        }
        small_angle_exceeded = small_angle_exceeded || std::abs(rotation_rad) > kSmallAngleLimitRad;
        extrapolated = extrapolated || other.extrapolated;
        return *this;
    }

    double max_abs_deflection() const
    {
        double m = 0.0;
        for (double w : deflection_mm)
            m = std::max(m, std::abs(w));
        return m;
    }
};

inline BeamState zero_beam_state(const FingerDesign& design)
{
    BeamState st;
    st.s_mm = beam_sample_points(design);
    st.deflection_mm.assign(st.s_mm.size(), 0.0);
    st.slope_rad.assign(st.s_mm.size(), 0.0);
    return st;
}

// Beam state for an already-resolved force F acting at height y.
inline BeamState beam_state_for_force(const FingerDesign& design, double force_n, double location_mm)
{
    require(location_mm >= 0.0 && location_mm <= design.finger_length_mm, "contact location must lie in [0, L]");
    const Contact contact{0.0, location_mm, force_n};
    BeamState st = zero_beam_state(design);
    const auto hs = hinge_shift(design, contact);
    st.shift_mm = hs.shift_mm;
    st.small_angle_exceeded = hs.small_angle_exceeded;
    st.rotation_rad = hinge_rotation(design, contact);
    st.beam_moment_nmm = force_n * design.beam_moment_arm_mm.value_or(location_mm);
    for (std::size_t i = 0; i < st.s_mm.size(); ++i) {
        st.deflection_mm[i] = detail::deflection_for_moment(design, st.s_mm[i], st.beam_moment_nmm);
        st.slope_rad[i] = detail::slope_for_moment(design, st.s_mm[i], st.beam_moment_nmm);
    }
    return st;
}

inline BeamState beam_state(const FingerDesign& design, double depth_mm, double location_mm)
{
    return beam_state_for_force(design, coupled_contact_force(design, depth_mm, location_mm), location_mm);
}

} // namespace finray::mechanics
