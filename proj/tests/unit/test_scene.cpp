#include "isac/scene.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

namespace isac {
namespace {

TEST(Steering, MatchesElementwiseFormula) {
    const ArrayGeometry g{4, 3};
    const double theta = 0.7, phi = -0.4;
    const CVector a = steering_vector(g, theta, phi);
    ASSERT_EQ(a.size(), 12);
    for (int h = 0; h < 4; ++h)
        for (int v = 0; v < 3; ++v) {
            const double arg = kPi * (h * std::sin(theta) * std::sin(phi) + v * std::cos(phi));
            const cd expected = std::polar(1.0 / std::sqrt(12.0), arg);
            EXPECT_NEAR(std::abs(a(h * 3 + v) - expected), 0.0, 1e-14);
        }
}

TEST(Steering, UnitNorm) {
    for (double theta : {-3.0, -1.0, 0.0, 0.5, 2.9})
        for (double phi : {-1.5, -0.3, 0.0, 1.2})
            EXPECT_NEAR(steering_vector({5, 4}, theta, phi).norm(), 1.0, 1e-14);
}

TEST(Steering, DerivativesMatchFiniteDifferences) {
    const ArrayGeometry g{4, 4};
    const double h = 1e-6;
    for (double theta : {-2.0, 0.3, 1.4})
        for (double phi : {-1.1, 0.2, 0.9}) {
            const auto d = steering_derivatives(g, theta, phi);
            const CVector fd_theta =
                (steering_vector(g, theta + h, phi) - steering_vector(g, theta - h, phi)) / (2 * h);
            const CVector fd_phi = (steering_vector(g, theta, phi + h) - steering_vector(g, theta, phi - h)) / (2 * h);
            EXPECT_LT((d.dtheta - fd_theta).norm(), 1e-8);
            EXPECT_LT((d.dphi - fd_phi).norm(), 1e-8);
        }
}

TEST(Steering, RejectsOutOfDomainAngles) {
    EXPECT_THROW(steering_vector({2, 2}, 4.0, 0.0), std::invalid_argument);
    EXPECT_THROW(steering_vector({2, 2}, 0.0, 1.6), std::invalid_argument);
    EXPECT_THROW(steering_vector({0, 2}, 0.0, 0.0), std::invalid_argument);
}

TEST(ArrayGeometry, ClosestSquare) {
    EXPECT_EQ(ArrayGeometry::closest_square(20), (ArrayGeometry{5, 4}));
    EXPECT_EQ(ArrayGeometry::closest_square(16), (ArrayGeometry{4, 4}));
    EXPECT_EQ(ArrayGeometry::closest_square(8), (ArrayGeometry{4, 2}));
    EXPECT_EQ(ArrayGeometry::closest_square(7), (ArrayGeometry{7, 1}));
    EXPECT_EQ(ArrayGeometry::closest_square(1), (ArrayGeometry{1, 1}));
    EXPECT_THROW(ArrayGeometry::closest_square(0), std::invalid_argument);
}

TEST(SampleScene, DefaultDimensionsAndPowers) {
    const Scene s = sample_scene(3, SceneDims{}, ScenePowers{});
    EXPECT_EQ(s.num_tx(), 16);
    EXPECT_EQ(s.num_rx(), 20);
    EXPECT_EQ(s.num_users(), 4);
    EXPECT_EQ(s.num_targets(), 2);
    EXPECT_EQ(s.slots, 64);
    EXPECT_NEAR(s.power_budget, 10.0, 1e-12);
    EXPECT_NEAR(s.noise_radar, 1.0, 1e-12);
    for (const auto& t : s.targets) {
        EXPECT_LE(std::abs(t.azimuth), kPi);
        EXPECT_LE(std::abs(t.elevation), kPi / 2);
    }
    EXPECT_NO_THROW(s.validate());
}

TEST(SampleScene, DeterministicPerSeed) {
    const Scene a = sample_scene(11, SceneDims{}, ScenePowers{});
    const Scene b = sample_scene(11, SceneDims{}, ScenePowers{});
    const Scene c = sample_scene(12, SceneDims{}, ScenePowers{});
    EXPECT_EQ(a.channels, b.channels);
    EXPECT_EQ(a.targets, b.targets);
    EXPECT_NE(a.channels, c.channels);
}

TEST(SampleScene, TargetsIndependentOfUserCount) {
    SceneDims more;
    more.users = 6;
    const Scene a = sample_scene(5, SceneDims{}, ScenePowers{});
    const Scene b = sample_scene(5, more, ScenePowers{});
    EXPECT_EQ(a.targets, b.targets);
    EXPECT_EQ(a.channels, b.channels.leftCols(4));
}

TEST(SampleScene, ChannelPowerIsUnitOnAverage) {
    SceneDims dims;
    dims.users = 400;
    const Scene s = sample_scene(8, dims, ScenePowers{});
    const double mean = s.channels.squaredNorm() / static_cast<double>(s.channels.size());
    EXPECT_NEAR(mean, 1.0, 0.05);
}

TEST(SampleScene, DbmConversion) {
    EXPECT_NEAR(dbm_to_linear(10.0), 10.0, 1e-12);
    EXPECT_NEAR(dbm_to_linear(0.0), 1.0, 1e-12);
    EXPECT_NEAR(dbm_to_linear(-30.0), 1e-3, 1e-15);
}

TEST(SteeringSet, ColumnsMatchTargets) {
    const Scene s = testing::small_scene(4, 2, 2);
    const SteeringSet st = build_steering_set(s);
    ASSERT_EQ(st.num_targets(), 2);
    for (int m = 0; m < 2; ++m) {
        const auto& t = s.targets[m];
        EXPECT_EQ(st.tx.col(m), steering_vector(s.tx_geometry, t.azimuth, t.elevation));
        EXPECT_EQ(st.rx.col(m), steering_vector(s.rx_geometry, t.azimuth, t.elevation));
        EXPECT_EQ(st.rcs(m), t.rcs);
    }
}

}  // namespace
}  // namespace isac
