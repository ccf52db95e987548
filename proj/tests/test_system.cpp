#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "auxid/experiments.hpp"
#include "auxid/system.hpp"

using auxid::MatrixXd;
using auxid::NoiseConfig;
using auxid::SystemModel;
using auxid::VectorXd;

namespace {

NoiseConfig noiseless() {
    NoiseConfig n{0.0, 0.0, 0.0, true};
    return n;
}

} // namespace

TEST(Rng, DeriveSeedIsAPureFunctionOfItsKeys) {
    EXPECT_EQ(auxid::derive_seed(42, {3, 1}), auxid::derive_seed(42, {3, 1}));
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 3; ++b) seen.insert(auxid::derive_seed(42, {a, b}));
    EXPECT_EQ(seen.size(), 60u);
    EXPECT_NE(auxid::derive_seed(42, {1, 0}), auxid::derive_seed(42, {0, 1}));
    EXPECT_NE(auxid::derive_seed(41, {0}), auxid::derive_seed(42, {0}));
}

TEST(SystemModel, ValidatesShapes) {
    EXPECT_THROW(SystemModel<double>(MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 1)), auxid::DimensionError);
    EXPECT_THROW(SystemModel<double>(MatrixXd::Zero(2, 2), MatrixXd::Zero(3, 1)), auxid::DimensionError);
    MatrixXd bad = MatrixXd::Zero(2, 2);
    bad(0, 1) = INFINITY;
    EXPECT_THROW(SystemModel<double>(bad, MatrixXd::Zero(2, 1)), auxid::InvalidInput);
    const SystemModel<double> ok(MatrixXd::Identity(2, 2), MatrixXd::Ones(2, 1));
    EXPECT_EQ(ok.theta().cols(), 3);
}

TEST(ModelDifference, ReferenceSystemsDifferInTwoEntries) {
    const auto truth = auxid::reference_true_system();
    const auto aux = auxid::reference_aux_system();
    const MatrixXd dt = auxid::model_difference(truth.model, aux.model);
    EXPECT_EQ((dt.array().abs() > 0).count(), 2);
    EXPECT_NEAR(dt(0, 0), 0.1, 1e-15);
    EXPECT_NEAR(dt(0, 3), 0.1, 1e-15);
    EXPECT_NEAR(auxid::spectral_norm(dt), 0.1414, 1e-4);
}

TEST(NoiseConfig, ZeroDeviationsNeedTheOverride) {
    NoiseConfig n{0.0, 0.0, 0.0, false};
    EXPECT_THROW(n.validate(), auxid::InvalidInput);
    n.noiseless_override = true;
    EXPECT_NO_THROW(n.validate());
    NoiseConfig neg{1.0, -1.0, 1.0, false};
    EXPECT_THROW(neg.validate(), auxid::InvalidInput);
}

TEST(Simulate, NoiselessOverrideGivesZeroStates) {
    const SystemModel<double> m(MatrixXd::Identity(2, 2) * 0.9, MatrixXd::Ones(2, 1));
    const auto rs = auxid::simulate_rollouts(m, noiseless(), 2, 4, 1);
    for (const auto& r : rs.rollouts) {
        EXPECT_EQ(r.states.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Simulate, GeometricDecayFromPinnedState) {
    const SystemModel<double> m(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Zero(1, 1));
    auxid::SimulationOptions<double> opts;
    opts.initial_state = VectorXd::Ones(1);
    const auto rs = auxid::simulate_rollouts(m, noiseless(), 1, 10, 3, opts);
    for (int t = 0; t <= 10; ++t) {
        EXPECT_DOUBLE_EQ(rs.rollouts[0].states(0, t), std::pow(0.5, t));
    }
}

TEST(Simulate, PinnedStateRequiresOverride) {
    const SystemModel<double> m(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Ones(1, 1));
    auxid::SimulationOptions<double> opts;
    opts.initial_state = VectorXd::Ones(1);
    EXPECT_THROW(auxid::simulate_rollouts(m, NoiseConfig{}, 1, 3, 1, opts), auxid::InvalidInput);
}

TEST(Simulate, Dimensions) {
    const SystemModel<double> m(MatrixXd::Identity(2, 2) * 0.5, MatrixXd::Ones(2, 1));
    const auto rs = auxid::simulate_rollouts(m, NoiseConfig{}, 3, 5, 9);
    ASSERT_EQ(rs.num_rollouts(), 3);
    for (const auto& r : rs.rollouts) {
        EXPECT_EQ(r.states.cols(), 6);
        EXPECT_EQ(r.inputs.cols(), 5);
        EXPECT_EQ(r.noise.cols(), 5);
    }
    EXPECT_THROW(auxid::simulate_rollouts(m, NoiseConfig{}, 0, 5, 9), auxid::InvalidInput);
}

TEST(Simulate, StatesFollowTheDynamics) {
    const auto sys = auxid::reference_true_system();
    const auto rs = auxid::simulate_rollouts(sys.model, sys.noise, 2, 20, 5);
    for (const auto& r : rs.rollouts) {
        for (int t = 0; t < 20; ++t) {
            const VectorXd next = sys.model.A() * r.states.col(t) + sys.model.B() * r.inputs.col(t) + r.noise.col(t);
            EXPECT_LE((next - r.states.col(t + 1)).norm(), 1e-14);
        }
    }
}

TEST(Simulate, DeterministicAndPrefixStable) {
    const auto sys = auxid::reference_true_system();
    const auto a = auxid::simulate_rollouts(sys.model, sys.noise, 2, 30, 77);
    const auto b = auxid::simulate_rollouts(sys.model, sys.noise, 2, 30, 77);
    const auto longer = auxid::simulate_rollouts(sys.model, sys.noise, 3, 50, 77);
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(a.rollouts[i].states, b.rollouts[i].states);
        EXPECT_EQ(a.rollouts[i].states, longer.rollouts[i].states.leftCols(31));
        EXPECT_EQ(a.rollouts[i].inputs, longer.rollouts[i].inputs.leftCols(30));
    }
    const auto other = auxid::simulate_rollouts(sys.model, sys.noise, 2, 30, 78);
    EXPECT_NE(a.rollouts[0].states, other.rollouts[0].states);
}

TEST(MomentCheck, NoiseStdWithinCltTolerance) {
    const SystemModel<double> m(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Ones(1, 1));
    NoiseConfig n;
    n.sigma_u = 2.0;
    const auto rs = auxid::simulate_rollouts(m, n, 10, 10000, 123);
    const auto rep = auxid::empirical_moment_check(rs);
    ASSERT_EQ(rep.step_samples, 100000u);
    EXPECT_NEAR(rep.noise_std(0), 1.0, 0.02);
    EXPECT_NEAR(rep.input_std(0), 2.0, 0.04);
}

TEST(MomentCheck, NoiselessDataHasZeroStd) {
    const SystemModel<double> m(MatrixXd::Identity(2, 2) * 0.5, MatrixXd::Ones(2, 1));
    const auto rep = auxid::empirical_moment_check(auxid::simulate_rollouts(m, noiseless(), 3, 50, 1));
    EXPECT_EQ(rep.noise_std.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(rep.input_std.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(rep.initial_state_std.cwiseAbs().maxCoeff(), 0.0);
}
