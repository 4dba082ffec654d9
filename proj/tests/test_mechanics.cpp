#include "finray/mechanics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace finray;
using namespace finray::mechanics;

namespace {

FingerDesign literal_design()
{
    FingerDesign d;
    d.beam_moment_arm_mm.reset();
    return d;
}

} // namespace

TEST(Mechanics, CoupledForceMatchesHandValues)
{
    const FingerDesign d;
    EXPECT_NEAR(coupled_contact_force(d, 3.0, 30.0), 1.2711864406779663, 1e-15);
    FingerDesign c = d;
    c.hinge_orientation = HingeOrientation::Concordant;
    EXPECT_NEAR(coupled_contact_force(c, 3.0, 30.0), 0.872093023255814, 1e-15);
    FingerDesign pure = d;
    pure.coupling_mode = CouplingMode::PaperPure;
    EXPECT_DOUBLE_EQ(coupled_contact_force(pure, 3.0, 30.0), 1.5);
}

TEST(Mechanics, HingeRotationAndShift)
{
    const FingerDesign d;
    const auto contact = make_contact(d, 3.0, 30.0);
    EXPECT_NEAR(hinge_rotation(d, contact), -0.007627118644067798, 1e-16);
    const auto hs = hinge_shift(d, contact);
    EXPECT_NEAR(hs.shift_mm, -0.4576271186440679, 1e-15);
    EXPECT_FALSE(hs.small_angle_exceeded);

    FingerDesign c = d;
    c.hinge_orientation = HingeOrientation::Concordant;
    EXPECT_NEAR(hinge_shift(c, make_contact(c, 3.0, 30.0)).shift_mm, -1.2558139534883719, 1e-14);
}

TEST(Mechanics, SmallAngleFlag)
{
    FingerDesign d;
    d.torsional_stiffness_nmm_per_rad = 100.0;
    d.coupling_mode = CouplingMode::PaperPure;
    EXPECT_TRUE(hinge_shift(d, make_contact(d, 5.0, 50.0)).small_angle_exceeded);
}

TEST(Mechanics, ZeroLoadIsRest)
{
    const FingerDesign d;
    const auto st = beam_state(d, 0.0, 30.0);
    EXPECT_EQ(st.shift_mm, 0.0);
    EXPECT_EQ(st.max_abs_deflection(), 0.0);
}

TEST(Mechanics, SignConventions)
{
    const FingerDesign d;
    const auto st = beam_state(d, 3.0, 30.0);
    EXPECT_LT(st.shift_mm, 0.0);
    for (std::size_t i = 0; i < st.s_mm.size(); ++i)
        EXPECT_LE(st.deflection_mm[i], 0.0);
}

TEST(Mechanics, BeamMomentUsesLeverArm)
{
    const FingerDesign d;
    const auto st = beam_state(d, 3.0, 30.0);
    EXPECT_NEAR(st.beam_moment_nmm, 1.2711864406779663 * 50.0, 1e-12);
    EXPECT_NEAR(detail::deflection_for_moment(d, 15.0, st.beam_moment_nmm), -0.715042372881356, 1e-14);

    const auto lit = beam_state(literal_design(), 3.0, 30.0);
    EXPECT_NEAR(lit.beam_moment_nmm, 1.2711864406779663 * 30.0, 1e-12);
}

TEST(Mechanics, DeflectionMatchesBvpOracle)
{
    const FingerDesign d = literal_design();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> us(0.0, d.beam_length_mm), uy(0.0, d.finger_length_mm), uf(0.0, 3.0);
    for (int i = 0; i < 20; ++i) {
        const Contact c{0.0, uy(rng), uf(rng)};
        const double s = us(rng);
        const double w = deflection(d, s, c);
        const double ref = oracle::beam_bvp(d, bending_moment(c), {s}).front();
        EXPECT_NEAR(w, ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Mechanics, BoundaryValuesExactlyZero)
{
    const FingerDesign d;
    const Contact c{0.0, 37.0, 2.1};
    EXPECT_EQ(deflection(d, 0.0, c), 0.0);
    EXPECT_EQ(deflection(d, d.beam_length_mm, c), 0.0);
}

TEST(Mechanics, SlopeIsDerivativeOfDeflection)
{
    const FingerDesign d;
    const Contact c{0.0, 25.0, 1.0};
    const double h = 1e-5;
    for (double s : {1.0, 7.5, 15.0, 22.0, 29.0})
        EXPECT_NEAR(deflection_slope(d, s, c), (deflection(d, s + h, c) - deflection(d, s - h, c)) / (2 * h), 1e-8);
}

TEST(Mechanics, SpanIsChecked)
{
    const FingerDesign d;
    EXPECT_THROW(deflection(d, -0.1, Contact{0, 10, 1}), Error);
    EXPECT_THROW(deflection(d, 30.1, Contact{0, 10, 1}), Error);
    EXPECT_THROW(make_contact(d, -1.0, 10.0), Error);
    EXPECT_THROW(make_contact(d, 1.0, 61.0), Error);
}

TEST(Mechanics, OverallDeformationComposesShift)
{
    const FingerDesign d = literal_design();
    const Contact c{0.0, 40.0, 1.5};
    const double dx = hinge_shift(d, c).shift_mm;
    for (double s : {0.0, 4.0, 15.0, 26.0})
        EXPECT_NEAR(overall_deformation(d, s, c),
                    detail::deflection_for_moment(d, shifted_coordinate(s, dx), bending_moment(c)), 1e-13);
}

TEST(Mechanics, AttachmentLayout)
{
    FingerDesign d;
    auto pts = attachment_points(d);
    ASSERT_EQ(pts.long_row.size(), 15u);
    ASSERT_EQ(pts.base_row.size(), 14u);
    EXPECT_NEAR(pts.long_row.front() + pts.long_row.back(), d.beam_length_mm, 1e-12);
    for (std::size_t i = 0; i < pts.base_row.size(); ++i) {
        EXPECT_GT(pts.base_row[i], pts.long_row[i]);
        EXPECT_LT(pts.base_row[i], pts.long_row[i + 1]);
    }
    d.base_pins_present = false;
    EXPECT_TRUE(attachment_points(d).base_row.empty());
    d.beam_length_mm = 3.0;
    EXPECT_THROW(attachment_points(d), Error);
}

TEST(Mechanics, SuperpositionIsLinear)
{
    const FingerDesign d;
    auto a = beam_state_for_force(d, 0.4, 20.0);
    const auto b = beam_state_for_force(d, 0.6, 20.0);
    const auto sum = beam_state_for_force(d, 1.0, 20.0);
    a += b;
    EXPECT_NEAR(a.shift_mm, sum.shift_mm, 1e-15);
    for (std::size_t i = 0; i < a.s_mm.size(); ++i)
        EXPECT_NEAR(a.deflection_mm[i], sum.deflection_mm[i], 1e-15);
}

TEST(Mechanics, ValidationRejectsBadDesigns)
{
    FingerDesign d;
    d.beam_length_mm = 70.0;
    EXPECT_THROW(d.validate(), Error);
    d = FingerDesign{};
    d.pin_spacing_mm = 0.5;
    EXPECT_THROW(d.validate(), Error);
    d = FingerDesign{};
    EXPECT_NO_THROW(d.validate_depth_budget(5.5));
    EXPECT_THROW(d.validate_depth_budget(6.5), Error);
}
