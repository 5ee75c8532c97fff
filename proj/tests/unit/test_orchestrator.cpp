#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

using namespace rbaird;

namespace {

/// Drives the state machine by hand with the simulated oracle, one submission at a time.
ExperimentState step_by_hand(const ExperimentConfig& c) {
    auto s = start_experiment(c);
    while (s.status != ExperimentStatus::Done) {
        if (s.status == ExperimentStatus::Running) {
            step_experiment(s);
            continue;
        }
        for (const auto& a : oracle_answers(s)) submit_answer(s, a, "t");
        step_experiment(s);
    }
    return s;
}

void check_same_records(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b) {
    REQUIRE(a.size() == b.size());
    CHECK(metrics_csv(a) == metrics_csv(b));
}

}  // namespace

TEST_CASE("presets mirror the documented batch arithmetic") {
    const std::vector<std::tuple<std::string, int, int, int>> expected{
        {"basic", 4, 5, 5}, {"big_batches", 4, 3, 10}, {"many_batches", 11, 1, 5}, {"new_features", 6, 2, 5},
        {"aird_baseline", 1, 100, 1}};
    for (const auto& [name, b, q, e] : expected) {
        const auto c = preset(name);
        CHECK(c.batches == b);
        CHECK(c.queries_per_batch == q);
        CHECK(c.envs_per_batch == e);
        CHECK(c.space_size == 100);
        CHECK(c.feature_dim == 10);
        CHECK(c.rationality == 10.0);
        CHECK(c.oracle_rationality == 10.0);
        CHECK_NOTHROW(validate(c));
    }
    CHECK(preset("new_features").feature_schedule == FeatureSchedule{2, 2});
    CHECK_FALSE(preset("basic").feature_schedule.has_value());
    CHECK_THROWS_AS(preset("huge"), ConfigError);
    CHECK(preset_names().size() == 5);
}

TEST_CASE("feature activation schedule") {
    const FeatureSchedule s{2, 2};
    CHECK(feature_activation(0, s, 10) == 2);
    CHECK(feature_activation(4, s, 10) == 10);
    CHECK(feature_activation(5, s, 10) == 10);
    CHECK(feature_activation(3, std::nullopt, 10) == 10);
    CHECK_THROWS(feature_activation(-1, s, 10));
}

TEST_CASE("validation rejects broken configurations") {
    const auto bad = [](auto mutate) {
        auto c = fixtures::tiny_config();
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.batches = 0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.envs_per_batch = 0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.query_size = 1; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.space_size = 1; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.discount = 0.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.temperature = 0.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.rationality = -1.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.risk_method = WorstCase{0}; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.feature_schedule = FeatureSchedule{4, 1}; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](auto& c) { c.wall_density = 0.5; })), ConfigError);
    CHECK_NOTHROW(validate(bad([](auto& c) { c.queries_per_batch = 0; })));
}

TEST_CASE("config JSON round-trips and rejects unknown fields") {
    auto c = preset("new_features");
    c.risk_method = WorstCase{100};
    c.seeds = {1, 2, 3, 4, 5};
    c.gain_strategy = GainStrategy::MostProbableAnswer;
    c.oracle_mode = OracleMode::Interactive;
    c.feature_density = 0.5;
    const auto text = to_json(c).dump();
    CHECK(config_from_json(Json::parse(text)) == c);

    auto j = Json::parse(R"({"batches": 2, "risk_method": "variance:100", "seeds": 9})");
    const auto partial = config_from_json(j);
    CHECK(partial.batches == 2);
    CHECK(partial.risk_method == RiskMethod{VariancePenalty{100.0}});
    CHECK(partial.seeds == ExperimentSeeds::all(9));
    CHECK(partial.queries_per_batch == ExperimentConfig{}.queries_per_batch);

    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"batchez": 2})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"batches": "two"})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"batches": 0})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"oracle_mode": "human"})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("inference count equals batches x queries x envs") {
    auto c = fixtures::tiny_config(3);
    c.batches = 3;
    c.queries_per_batch = 2;
    c.envs_per_batch = 2;
    const auto s = run_experiment(c);
    CHECK(s.status == ExperimentStatus::Done);
    CHECK(s.inference_count == 12);
    REQUIRE(s.metrics_log.size() == 7);
    CHECK(s.metrics_log.front().inference_count == 0);
    CHECK(s.metrics_log.back().inference_count == 12);
    CHECK(s.metrics_log.back().batch_index == 2);
    CHECK(s.metrics_log.back().query_index == 2);
    CHECK(s.belief_log.size() == s.metrics_log.size());
    CHECK(s.answer_log.size() == 12);
}

TEST_CASE("no queries leave the belief uniform and the metrics at the prior") {
    auto c = fixtures::tiny_config(4);
    c.batches = 1;
    c.queries_per_batch = 0;
    const auto s = run_experiment(c);
    CHECK(s.inference_count == 0);
    CHECK(s.belief.probs() == uniform_belief(s.space).probs());
    REQUIRE(s.metrics_log.size() == 1);
    const auto prior = start_experiment(c).metrics_log.front();
    CHECK(metrics_csv(s.metrics_log) == metrics_csv(std::vector<MetricsRecord>{prior}));
}

TEST_CASE("step contract: publish, then apply with one inference per environment") {
    auto s = start_experiment(fixtures::tiny_config(5));
    CHECK(s.status == ExperimentStatus::Running);
    step_experiment(s);
    CHECK(s.status == ExperimentStatus::AwaitingAnswers);
    REQUIRE(s.round.has_value());
    CHECK(s.round->round_id == 0);
    CHECK(s.round->query.size() == 3);
    CHECK(s.round->per_env_fes.size() == 2);
    const auto answers = oracle_answers(s);
    CHECK(answers.size() == 2);
    step_experiment(s, answers);
    CHECK(s.status == ExperimentStatus::Running);
    CHECK(s.inference_count == 2);
    CHECK(s.metrics_log.size() == 2);
    CHECK_FALSE(s.round.has_value());
}

TEST_CASE("answer submission errors leave the state unchanged") {
    auto s = start_experiment(fixtures::tiny_config(6));
    CHECK_THROWS_AS(submit_answer(s, {0, 0}), AnswerError);
    step_experiment(s);
    const auto check_kind = [&](auto fn, AnswerError::Kind kind) {
        try {
            fn();
            FAIL("expected AnswerError");
        } catch (const AnswerError& e) {
            CHECK(e.kind() == kind);
        }
    };
    check_kind([&] { submit_answer(s, {2, 0}); }, AnswerError::Kind::OutOfRange);
    check_kind([&] { submit_answer(s, {0, 3}); }, AnswerError::Kind::OutOfRange);
    CHECK_FALSE(submit_answer(s, {0, 1}));
    const auto log_size = s.answer_log.size();
    check_kind([&] { submit_answer(s, {0, 2}); }, AnswerError::Kind::Duplicate);
    CHECK(s.answer_log.size() == log_size);
    CHECK(*s.round->answers[0] == 1);
    check_kind([&] { step_experiment(s); }, AnswerError::Kind::Incomplete);
    check_kind([&] { step_experiment(s, std::vector<QueryAnswer>{{0, 0}, {1, 0}}); }, AnswerError::Kind::Duplicate);
    CHECK(s.status == ExperimentStatus::AwaitingAnswers);
    CHECK(s.inference_count == 0);
    CHECK(submit_answer(s, {1, 2}));
    step_experiment(s);
    CHECK(s.inference_count == 2);
    check_kind([&] { step_experiment(s, std::vector<QueryAnswer>{{0, 0}}); }, AnswerError::Kind::NotAwaited);
}

TEST_CASE("stepping by hand equals run_experiment bit for bit") {
    for (std::uint64_t seed : {1, 2}) {
        const auto c = fixtures::tiny_config(seed);
        const auto a = run_experiment(c);
        const auto b = step_by_hand(c);
        check_same_records(a.metrics_log, b.metrics_log);
        CHECK(a.belief.probs() == b.belief.probs());
        CHECK(a.inference_count == b.inference_count);
    }
}

TEST_CASE("runs are deterministic and seeds matter") {
    const auto a = run_experiment(fixtures::tiny_config(7));
    const auto b = run_experiment(fixtures::tiny_config(7));
    CHECK(metrics_csv(a.metrics_log) == metrics_csv(b.metrics_log));
    CHECK(a.belief.probs() == b.belief.probs());
    const auto c = run_experiment(fixtures::tiny_config(8));
    CHECK(a.belief.probs() != c.belief.probs());
}

TEST_CASE("replaying the answer log reproduces the final belief exactly") {
    const auto c = fixtures::tiny_config(9);
    const auto run = run_experiment(c);
    const auto replay = replay_answers(c, run.answer_log);
    CHECK(replay.status == ExperimentStatus::Done);
    CHECK(replay.belief.probs() == run.belief.probs());
    check_same_records(replay.metrics_log, run.metrics_log);

    // Partial logs stop at the first unanswered round.
    std::vector<AnswerLogEntry> partial(run.answer_log.begin(), run.answer_log.begin() + 3);
    const auto half = replay_answers(c, partial);
    CHECK(half.status == ExperimentStatus::AwaitingAnswers);
    CHECK(half.inference_count == 2);
    CHECK(half.round->round_id == 1);
    CHECK(half.round->unanswered() == std::vector<std::size_t>{1});

    auto wrong_round = run.answer_log;
    wrong_round[0].round_id = 5;
    CHECK_THROWS_AS(replay_answers(c, wrong_round), std::invalid_argument);
    auto extra = run.answer_log;
    extra.push_back(extra.back());
    CHECK_THROWS_AS(replay_answers(c, extra), std::invalid_argument);
}

TEST_CASE("answer log entries round-trip through JSON") {
    const AnswerLogEntry e{3, 1, 4, "2026-01-01T00:00:00Z"};
    const auto back = answer_entry_from_json(Json::parse(to_json(e).dump()));
    CHECK(back.round_id == 3);
    CHECK(back.env_index == 1);
    CHECK(back.choice_index == 4);
    CHECK(back.timestamp == e.timestamp);
    CHECK_THROWS(answer_entry_from_json(Json::parse(R"({"round_id": 1})")));
}

TEST_CASE("members that differ only on inactive features keep their shared probability within a batch") {
    auto c = fixtures::tiny_config(10);
    c.feature_schedule = FeatureSchedule{2, 1};
    c.batches = 2;
    // Pairs (0,1), (2,3), (4,5) agree on features 0 and 1 and differ on feature 2.
    const auto space = fixtures::explicit_space({{0.6, 0.0, 0.8},
                                                 {0.6, 0.0, -0.8},
                                                 {-0.48, 0.6, 0.64},
                                                 {-0.48, 0.6, -0.64},
                                                 {0.0, -0.6, 0.8},
                                                 {0.0, -0.6, -0.8}},
                                                0);
    const auto s = run_experiment(c, space);
    std::size_t checked = 0;
    bool moved_later = false;
    for (std::size_t k = 0; k < s.metrics_log.size(); ++k) {
        const auto& b = s.belief_log[k];
        if (s.metrics_log[k].batch_index == 0) {
            for (std::size_t i = 0; i < 6; i += 2) CHECK(b[i] == b[i + 1]);
            ++checked;
        } else if (b[0] != b[1]) {
            moved_later = true;
        }
    }
    CHECK(checked == 3);
    CHECK(moved_later);
    for (const auto& env : s.test_envs) {
        bool third = false;
        for (std::size_t i = 0; i < env.cell_count(); ++i) third = third || env.features_at(i)[2] != 0.0;
        CHECK(third);
    }
}

TEST_CASE("batch environments honour the feature schedule") {
    auto c = fixtures::tiny_config(11);
    c.feature_schedule = FeatureSchedule{1, 1};
    auto s = start_experiment(c);
    for (const auto& env : s.batch_envs)
        for (std::size_t i = 0; i < env.cell_count(); ++i) {
            CHECK(env.features_at(i)[1] == 0.0);
            CHECK(env.features_at(i)[2] == 0.0);
        }
}

TEST_CASE("entropy at batch boundaries does not increase in at least 95% of seeded runs") {
    int monotone = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        // Preset dimensions (N = 100, d = 10, K = 5) on smaller grids.
        auto c = fixtures::tiny_config(100 + seed);
        c.batches = 3;
        c.feature_dim = 10;
        c.space_size = 100;
        c.query_size = 5;
        c.grid_width = c.grid_height = 8;
        c.horizon = 30;
        const auto s = run_experiment(c);
        double prev = INFINITY;
        bool ok = true;
        for (const auto& r : s.metrics_log) {
            if (r.query_index != static_cast<std::size_t>(c.queries_per_batch) && r.inference_count != 0) continue;
            ok = ok && r.posterior_entropy <= prev + 1e-12;
            prev = r.posterior_entropy;
        }
        monotone += ok;
    }
    CHECK(monotone >= 19);
}

TEST_CASE("supplied reward spaces must match the feature dimension and designate a truth") {
    const auto c = fixtures::tiny_config(12);
    CHECK_THROWS_AS(start_experiment(c, fixtures::explicit_space({{1.0, 0.0}, {0.0, 1.0}})), ConfigError);
    auto no_truth = fixtures::explicit_space({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
    no_truth.true_index.reset();
    CHECK_THROWS_AS(start_experiment(c, no_truth), ConfigError);
    auto interactive = c;
    interactive.oracle_mode = OracleMode::Interactive;
    CHECK_THROWS_AS(run_experiment(interactive), ConfigError);
}

TEST_CASE("round document lists candidates, per-environment trajectories and answer status") {
    auto s = start_experiment(fixtures::tiny_config(13));
    CHECK_THROWS_AS(round_document(s), AnswerError);
    step_experiment(s);
    submit_answer(s, {1, 0});
    const auto doc = round_document(s);
    CHECK(doc["round_id"] == 0);
    CHECK(doc["candidates"].size() == 3);
    REQUIRE(doc["envs"].size() == 2);
    for (const auto& env : doc["envs"]) {
        CHECK(env["trajectories"].size() == 3);
        CHECK(env["values"].size() == 3);
        CHECK(env.contains("heatmap"));
        CHECK(env.contains("environment"));
    }
    CHECK(doc["answered"].size() == 1);
    CHECK(doc["answered"][0]["env_index"] == 1);
    CHECK(doc["unanswered"] == Json::array({0}));
    CHECK(round_document(s).dump() == doc.dump());
}
