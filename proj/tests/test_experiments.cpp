#include <gtest/gtest.h>

#include <cmath>

#include "auxid/experiments.hpp"

using auxid::QPolicy;
using auxid::ScenarioConfig;
using auxid::SchedulePoint;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig cfg;
    cfg.scenario = "t";
    cfg.schedule = {{1, 20, 1, 40}, {1, 40, 1, 40}};
    cfg.q_policies = {QPolicy::fixed(0), QPolicy::fixed(1), QPolicy::inverse_sqrt_tr()};
    cfg.num_trials = 4;
    return cfg;
}

} // namespace

TEST(QPolicy, ValuesAndLabels) {
    EXPECT_DOUBLE_EQ(QPolicy::inverse_sqrt_tr().at({1, 400, 1, 1}), 0.05);
    EXPECT_DOUBLE_EQ(QPolicy::fixed(0.3).at({1, 400, 1, 1}), 0.3);
    EXPECT_EQ(QPolicy::fixed(0.3).label(), "0.3");
    EXPECT_EQ(QPolicy::fixed(1e10).label(), "1e+10");
    EXPECT_EQ(QPolicy::inverse_sqrt_tr().label(), "1/sqrt(T_r)");
    EXPECT_EQ(QPolicy::inverse_sqrt_tr(0.5).label(), "0.5/sqrt(T_r)");
}

TEST(QPolicy, Parse) {
    EXPECT_EQ(auxid::parse_q_policy("1e10").value, 1e10);
    const auto p = auxid::parse_q_policy("2/sqrt(T_r)");
    EXPECT_EQ(p.kind, QPolicy::Kind::InverseSqrtTr);
    EXPECT_EQ(p.value, 2.0);
    EXPECT_THROW(auxid::parse_q_policy("abc"), auxid::InvalidInput);
    EXPECT_THROW(auxid::parse_q_policy("-1"), auxid::InvalidInput);
    EXPECT_THROW(auxid::parse_q_policy("1x"), auxid::InvalidInput);
}

TEST(Scenario, SingleRecordCardinality) {
    ScenarioConfig cfg;
    cfg.schedule = {{1, 30, 1, 30}};
    cfg.q_policies = {QPolicy::fixed(0)};
    cfg.num_trials = 1;
    const auto r = auxid::run_scenario(cfg);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_GT(r.records[0].error, 0.0);
    EXPECT_EQ(r.mean(0, 0), r.records[0].error);
}

TEST(Scenario, RecordLayoutAndMeans) {
    const auto r = auxid::run_scenario(small_scenario());
    ASSERT_EQ(r.records.size(), 2u * 3u * 4u);
    std::size_t i = 0;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t k = 0; k < 3; ++k) {
            double sum = 0;
            for (int t = 0; t < 4; ++t, ++i) {
                EXPECT_EQ(r.records[i].schedule_idx, s);
                EXPECT_EQ(r.records[i].policy_idx, k);
                EXPECT_EQ(r.records[i].trial, t);
                sum += r.records[i].error;
            }
            EXPECT_NEAR(r.mean(s, k), sum / 4, 1e-15);
        }
}

TEST(Scenario, ThreadCountDoesNotChangeResults) {
    auto cfg = small_scenario();
    const auto serial = auxid::run_scenario(cfg);
    cfg.jobs = 3;
    const auto parallel = auxid::run_scenario(cfg);
    ASSERT_EQ(serial.records.size(), parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        EXPECT_EQ(serial.records[i].error, parallel.records[i].error);
    }
}

TEST(Scenario, Validation) {
    auto cfg = small_scenario();
    cfg.num_trials = 0;
    EXPECT_THROW(auxid::run_scenario(cfg), auxid::InvalidInput);
    cfg = small_scenario();
    cfg.schedule.push_back({1, 10, 0, 5});
    EXPECT_THROW(auxid::run_scenario(cfg), auxid::InvalidInput);
    EXPECT_THROW(auxid::preset_scenario("4"), auxid::InvalidInput);
}

TEST(TrialData, PairedAndPrefixStable) {
    const auto t = auxid::reference_true_system();
    const auto a = auxid::reference_aux_system();
    const auto short_run = auxid::make_trial_data(t, a, {1, 25, 1, 75}, 42, 3);
    const auto long_run = auxid::make_trial_data(t, a, {1, 50, 1, 150}, 42, 3);
    EXPECT_EQ(short_run.true_data.rollouts[0].states, long_run.true_data.rollouts[0].states.leftCols(26));
    EXPECT_EQ(short_run.aux_data.rollouts[0].inputs, long_run.aux_data.rollouts[0].inputs.leftCols(75));

    const auto again = auxid::make_trial_data(t, a, {1, 25, 1, 75}, 42, 3);
    EXPECT_EQ(auxid::dataset_hash(auxid::assemble_batch(short_run.true_data, short_run.aux_data)),
              auxid::dataset_hash(auxid::assemble_batch(again.true_data, again.aux_data)));
    const auto other = auxid::make_trial_data(t, a, {1, 25, 1, 75}, 42, 4);
    EXPECT_NE(auxid::dataset_hash(auxid::assemble_batch(short_run.true_data, short_run.aux_data)),
              auxid::dataset_hash(auxid::assemble_batch(other.true_data, other.aux_data)));
}

TEST(TrialData, NoAuxiliaryData) {
    const auto t = auxid::reference_true_system();
    const auto d = auxid::make_trial_data(t, auxid::reference_aux_system(), {2, 10, 0, 0}, 1, 0);
    EXPECT_TRUE(d.aux_data.empty());
    EXPECT_EQ(d.true_data.num_rollouts(), 2);
}

TEST(QSweepExperiment, AggregatesTrialMeans) {
    auto cfg = auxid::preset_qsweep(1);
    cfg.grid = {0.0, 1.0, 0.5, {1.0}};
    cfg.num_trials = 3;
    const auto r = auxid::run_qsweep_experiment(cfg);
    ASSERT_EQ(r.aggregate.points.size(), 3u);
    ASSERT_EQ(r.chosen_q_per_trial.size(), 3u);

    double mean_total = 0;
    for (int k = 0; k < 3; ++k) {
        const auto td = auxid::make_trial_data(cfg.true_system, cfg.aux_system, cfg.point, cfg.master_seed, k);
        const auto s = auxid::sweep(auxid::assemble_batch(td.true_data, td.aux_data), cfg.grid, cfg.priors());
        mean_total += s.points[1].bound.total / 3;
    }
    EXPECT_NEAR(r.aggregate.points[1].bound.total, mean_total, 1e-12 * mean_total);
    EXPECT_EQ(r.argmin_bound_q, r.aggregate.chosen_q());
}

TEST(QSweepExperiment, PresetPriorsAreExact) {
    const auto cfg = auxid::preset_qsweep(1);
    EXPECT_NEAR(cfg.priors().delta_theta_norm, 0.1414, 1e-4);
    EXPECT_THROW(auxid::preset_qsweep(7), auxid::InvalidInput);
    const auto noisy = auxid::preset_qsweep(4);
    EXPECT_EQ(noisy.aux_system.noise.sigma_w, 5.0);
    EXPECT_EQ(auxid::preset_qsweep(6).point.Nr, 1200);
}

TEST(Validity, ReportFields) {
    const auto params = auxid::default_validity_params(auxid::ValidityKind::DependentBound);
    const auto r = auxid::run_mc_validity(auxid::ValidityKind::DependentBound, 20, params, 7);
    EXPECT_EQ(r.trials, 20);
    EXPECT_DOUBLE_EQ(r.frequency, r.successes / 20.0);
    EXPECT_NEAR(r.std_error, std::sqrt(r.frequency * (1 - r.frequency) / 20), 1e-15);
    EXPECT_THROW(auxid::run_mc_validity(auxid::ValidityKind::DependentBound, 0, params, 7), auxid::InvalidInput);
}

TEST(Validity, KindNames) {
    EXPECT_EQ(auxid::parse_validity_kind("excitation"), auxid::ValidityKind::Excitation);
    EXPECT_EQ(auxid::to_string(auxid::ValidityKind::DependentBound), "dependent-bound");
    EXPECT_THROW(auxid::parse_validity_kind("other"), auxid::InvalidInput);
}

TEST(Validity, ExcitationDefaultsMeetTheSampleSizeHypothesis) {
    const auto p = auxid::default_validity_params(auxid::ValidityKind::Excitation);
    const double need = std::max(41.0, 200.0 * 2 * std::log(12.0 / p.delta));
    EXPECT_GE(static_cast<double>(p.point.Nr * p.point.Tr), need);
    EXPECT_GE(static_cast<double>(p.point.Np * p.point.Tp), need);
}
