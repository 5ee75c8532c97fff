#include "rbaird/orchestrator.hpp"

#include <algorithm>
#include <set>

#include "rbaird/random.hpp"

namespace rbaird {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr std::uint64_t kTestStream = 0x74657374ULL;

void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError("invalid experiment config: " + what);
}

EvaluationParams evaluation_params(const ExperimentConfig& c) {
    EvaluationParams p;
    p.sample_count = static_cast<std::size_t>(c.sample_count);
    p.variance_samples = static_cast<std::size_t>(c.variance_samples);
    p.horizon = c.horizon;
    p.seed = c.seeds.sampling;
    return p;
}

AnswerModel answer_model(const ExperimentConfig& c) { return {c.rationality, c.temperature, c.horizon}; }

GridEnvironment make_environment(const ExperimentConfig& c, std::uint64_t seed, int active, int present,
                                 std::string id) {
    GenerationParams p;
    p.seed = seed;
    p.width = c.grid_width;
    p.height = c.grid_height;
    p.feature_dim = c.feature_dim;
    p.active_feature_count = active;
    p.wall_density = c.wall_density;
    p.feature_density = c.feature_density;
    p.features_per_env = present;
    p.living_reward = c.living_reward;
    p.discount = c.discount;
    p.id = std::move(id);
    return generate_environment(p);
}

std::vector<GridEnvironment> make_batch(const ExperimentConfig& c, int batch) {
    const int active = feature_activation(batch, c.feature_schedule, c.feature_dim);
    std::vector<GridEnvironment> envs;
    envs.reserve(static_cast<std::size_t>(c.envs_per_batch));
    for (int e = 0; e < c.envs_per_batch; ++e)
        envs.push_back(make_environment(
            c,
            derive_seed(c.seeds.envs, {kTrainStream, static_cast<std::uint64_t>(batch), static_cast<std::uint64_t>(e)}),
            active, c.features_per_env, "train-b" + std::to_string(batch) + "-e" + std::to_string(e)));
    return envs;
}

void checkpoint(ExperimentState& s) {
    MetricsRecord rec = evaluate_checkpoint(s.test_envs, s.belief, s.space, s.space.true_reward(),
                                            s.config.risk_method, evaluation_params(s.config));
    rec.inference_count = s.inference_count;
    rec.batch_index = static_cast<std::size_t>(s.current_batch);
    rec.query_index = static_cast<std::size_t>(s.current_query);
    s.metrics_log.push_back(rec);
    s.belief_log.push_back(s.belief);
}

void publish_round(ExperimentState& s) {
    const auto& c = s.config;
    SelectionParams params;
    params.query_size = static_cast<std::size_t>(c.query_size);
    params.grad_steps = c.grad_steps;
    params.step_size = c.step_size;
    params.strategy = c.gain_strategy;
    const std::uint64_t round_id = s.rounds_published;
    params.seed = derive_seed(c.seeds.queries, {round_id});
    auto selected = select_query_detailed(s.belief, s.space, s.batch_envs, answer_model(c), params);

    QueryRound round;
    round.round_id = round_id;
    round.query = std::move(selected.query);
    round.per_env_fes = std::move(selected.per_env_fes);
    round.answers.assign(s.batch_envs.size(), std::nullopt);
    s.round = std::move(round);
    ++s.rounds_published;
    s.status = ExperimentStatus::AwaitingAnswers;
}

Json risk_method_to_json(const RiskMethod& m) {
    Json j;
    if (const auto* w = std::get_if<WorstCase>(&m)) {
        j["kind"] = "worst_case";
        j["samples"] = w->samples;
    } else if (const auto* v = std::get_if<VariancePenalty>(&m)) {
        j["kind"] = "variance_penalty";
        j["coefficient"] = v->coefficient;
    } else if (std::holds_alternative<MeanOnly>(m)) {
        j["kind"] = "mean_only";
    } else {
        j["kind"] = "true_reward";
    }
    return j;
}

RiskMethod risk_method_from_json(const Json& j) {
    if (j.is_string()) return parse_risk_method(j.get<std::string>());
    const auto kind = j.at("kind").get<std::string>();
    RiskMethod m;
    if (kind == "worst_case") {
        const auto n = j.value("samples", 10);
        if (n < 1) throw ConfigError("invalid experiment config: worst_case samples must be >= 1");
        m = WorstCase{static_cast<std::size_t>(n)};
    } else if (kind == "variance_penalty") {
        m = VariancePenalty{j.value("coefficient", 1.0)};
    } else if (kind == "mean_only") {
        m = MeanOnly{};
    } else if (kind == "true_reward") {
        m = TrueReward{};
    } else {
        throw ConfigError("invalid experiment config: unknown risk_method kind '" + kind + "'");
    }
    return m;
}

}  // namespace

void validate(const ExperimentConfig& c) {
    require(c.batches >= 1, "batches must be >= 1");
    require(c.envs_per_batch >= 1, "envs_per_batch must be >= 1");
    require(c.queries_per_batch >= 0, "queries_per_batch must be >= 0");
    require(c.query_size >= 2, "query_size must be >= 2");
    require(c.feature_dim >= 1, "feature_dim must be >= 1");
    try {
        rbaird::validate(c.risk_method);
    } catch (const std::invalid_argument& e) {
        require(false, e.what());
    }
    require(c.rationality >= 0.0, "rationality must be >= 0");
    require(c.oracle_rationality >= 0.0, "oracle_rationality must be >= 0");
    require(c.temperature > 0.0, "temperature must be > 0");
    require(c.discount > 0.0 && c.discount <= 1.0, "discount must lie in (0, 1]");
    require(c.living_reward >= 0.0, "living_reward must be >= 0");
    require(c.horizon >= 1, "horizon must be >= 1");
    require(c.space_size >= 2, "space_size must be >= 2");
    require(c.test_env_count >= 1, "test_env_count must be >= 1");
    if (c.feature_schedule) {
        require(c.feature_schedule->initial_active >= 1 && c.feature_schedule->initial_active <= c.feature_dim,
                "feature_schedule.initial_active must lie in [1, feature_dim]");
        require(c.feature_schedule->added_per_batch >= 0, "feature_schedule.added_per_batch must be >= 0");
    }
    require(c.grad_steps >= 0, "grad_steps must be >= 0");
    require(c.step_size > 0.0, "step_size must be > 0");
    require(c.sample_count >= 2, "sample_count must be >= 2");
    require(c.variance_samples >= 1, "variance_samples must be >= 1");
    require(c.grid_width >= 1 && c.grid_height >= 1 && c.grid_width * c.grid_height >= 2,
            "grid must have at least two cells");
    require(c.wall_density >= 0.0 && c.wall_density <= 0.3, "wall_density must lie in [0, 0.3]");
    require(c.feature_density > 0.0 && c.feature_density <= 1.0, "feature_density must lie in (0, 1]");
    require(c.features_per_env >= 0 && c.features_per_env <= c.feature_dim, "features_per_env must lie in [0, feature_dim]");
}

std::vector<std::string> preset_names() {
    return {"basic", "big_batches", "many_batches", "new_features", "aird_baseline"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    if (name == "basic") {
        c.batches = 4, c.queries_per_batch = 5, c.envs_per_batch = 5;
    } else if (name == "big_batches") {
        c.batches = 4, c.queries_per_batch = 3, c.envs_per_batch = 10;
    } else if (name == "many_batches") {
        c.batches = 11, c.queries_per_batch = 1, c.envs_per_batch = 5;
    } else if (name == "new_features") {
        c.batches = 6, c.queries_per_batch = 2, c.envs_per_batch = 5;
        c.feature_schedule = FeatureSchedule{2, 2};
    } else if (name == "aird_baseline") {
        c.batches = 1, c.queries_per_batch = 100, c.envs_per_batch = 1;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["batches"] = c.batches;
    j["envs_per_batch"] = c.envs_per_batch;
    j["queries_per_batch"] = c.queries_per_batch;
    j["query_size"] = c.query_size;
    j["feature_dim"] = c.feature_dim;
    j["risk_method"] = risk_method_to_json(c.risk_method);
    j["rationality"] = c.rationality;
    j["oracle_rationality"] = c.oracle_rationality;
    j["temperature"] = c.temperature;
    j["discount"] = c.discount;
    j["living_reward"] = c.living_reward;
    j["horizon"] = c.horizon;
    j["space_size"] = c.space_size;
    j["test_env_count"] = c.test_env_count;
    if (c.feature_schedule)
        j["feature_schedule"] = {{"initial_active", c.feature_schedule->initial_active},
                                 {"added_per_batch", c.feature_schedule->added_per_batch}};
    else
        j["feature_schedule"] = nullptr;
    j["seeds"] = {{"space", c.seeds.space},
                  {"envs", c.seeds.envs},
                  {"queries", c.seeds.queries},
                  {"oracle", c.seeds.oracle},
                  {"sampling", c.seeds.sampling}};
    j["oracle_mode"] = c.oracle_mode == OracleMode::Simulated ? "simulated" : "interactive";
    j["grad_steps"] = c.grad_steps;
    j["step_size"] = c.step_size;
    j["gain_strategy"] = c.gain_strategy == GainStrategy::Mixture ? "mixture" : "most_probable_answer";
    j["sample_count"] = c.sample_count;
    j["variance_samples"] = c.variance_samples;
    j["grid_width"] = c.grid_width;
    j["grid_height"] = c.grid_height;
    j["wall_density"] = c.wall_density;
    j["feature_density"] = c.feature_density;
    j["features_per_env"] = c.features_per_env;
    return j;
}

ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base) {
    if (!j.is_object()) throw ConfigError("invalid experiment config: expected a JSON object");
    static const std::set<std::string> known = {
        "batches",     "envs_per_batch",  "queries_per_batch", "query_size",   "feature_dim",
        "risk_method", "rationality",     "oracle_rationality", "temperature", "discount",
        "living_reward", "horizon",       "space_size",        "test_env_count", "feature_schedule",
        "seeds",       "oracle_mode",     "grad_steps",        "step_size",    "gain_strategy",
        "sample_count", "variance_samples", "grid_width",      "grid_height",  "wall_density",
        "feature_density", "features_per_env"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("invalid experiment config: unknown field '" + key + "'");

    ExperimentConfig c = base;
    try {
        const auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("batches", c.batches);
        get("envs_per_batch", c.envs_per_batch);
        get("queries_per_batch", c.queries_per_batch);
        get("query_size", c.query_size);
        get("feature_dim", c.feature_dim);
        if (j.contains("risk_method")) c.risk_method = risk_method_from_json(j.at("risk_method"));
        get("rationality", c.rationality);
        get("oracle_rationality", c.oracle_rationality);
        get("temperature", c.temperature);
        get("discount", c.discount);
        get("living_reward", c.living_reward);
        get("horizon", c.horizon);
        get("space_size", c.space_size);
        get("test_env_count", c.test_env_count);
        if (j.contains("feature_schedule")) {
            const auto& fs = j.at("feature_schedule");
            if (fs.is_null())
                c.feature_schedule.reset();
            else
                c.feature_schedule = FeatureSchedule{fs.at("initial_active").get<int>(),
                                                     fs.at("added_per_batch").get<int>()};
        }
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            if (s.is_number_unsigned() || s.is_number_integer()) {
                c.seeds = ExperimentSeeds::all(s.get<std::uint64_t>());
            } else {
                c.seeds.space = s.value("space", c.seeds.space);
                c.seeds.envs = s.value("envs", c.seeds.envs);
                c.seeds.queries = s.value("queries", c.seeds.queries);
                c.seeds.oracle = s.value("oracle", c.seeds.oracle);
                c.seeds.sampling = s.value("sampling", c.seeds.sampling);
            }
        }
        if (j.contains("oracle_mode")) {
            const auto m = j.at("oracle_mode").get<std::string>();
            if (m == "simulated")
                c.oracle_mode = OracleMode::Simulated;
            else if (m == "interactive")
                c.oracle_mode = OracleMode::Interactive;
            else
                throw ConfigError("invalid experiment config: oracle_mode must be 'simulated' or 'interactive'");
        }
        get("grad_steps", c.grad_steps);
        get("step_size", c.step_size);
        if (j.contains("gain_strategy")) {
            const auto g = j.at("gain_strategy").get<std::string>();
            if (g == "mixture")
                c.gain_strategy = GainStrategy::Mixture;
            else if (g == "most_probable_answer")
                c.gain_strategy = GainStrategy::MostProbableAnswer;
            else
                throw ConfigError("invalid experiment config: unknown gain_strategy '" + g + "'");
        }
        get("sample_count", c.sample_count);
        get("variance_samples", c.variance_samples);
        get("grid_width", c.grid_width);
        get("grid_height", c.grid_height);
        get("wall_density", c.wall_density);
        get("feature_density", c.feature_density);
        get("features_per_env", c.features_per_env);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    validate(c);
    return c;
}

int feature_activation(int batch_index, const std::optional<FeatureSchedule>& schedule, int feature_dim) {
    if (batch_index < 0) throw std::invalid_argument("feature_activation: batch_index must be >= 0");
    if (!schedule) return feature_dim;
    const long active =
        static_cast<long>(schedule->initial_active) + static_cast<long>(batch_index) * schedule->added_per_batch;
    return static_cast<int>(std::min<long>(feature_dim, active));
}

const char* to_string(ExperimentStatus s) {
    switch (s) {
        case ExperimentStatus::Running: return "running";
        case ExperimentStatus::AwaitingAnswers: return "awaiting_answers";
        case ExperimentStatus::Done: return "done";
    }
    return "?";
}

Json to_json(const AnswerLogEntry& e) {
    Json j;
    j["round_id"] = e.round_id;
    j["env_index"] = e.env_index;
    j["choice_index"] = e.choice_index;
    j["timestamp"] = e.timestamp;
    return j;
}

AnswerLogEntry answer_entry_from_json(const Json& j) {
    try {
        return {j.at("round_id").get<std::uint64_t>(), j.at("env_index").get<std::size_t>(),
                j.at("choice_index").get<std::size_t>(), j.value("timestamp", std::string{})};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("answer log entry: ") + e.what());
    }
}

ExperimentState start_experiment(const ExperimentConfig& config, const std::optional<RewardSpace>& space) {
    validate(config);
    ExperimentState s;
    s.config = config;
    if (space) {
        space->validate();
        if (space->dim() != static_cast<std::size_t>(config.feature_dim))
            throw ConfigError("invalid experiment config: supplied reward space does not match feature_dim");
        s.space = *space;
    } else {
        s.space = generate_reward_space(static_cast<std::size_t>(config.space_size),
                                        static_cast<std::size_t>(config.feature_dim), config.seeds.space);
    }
    if (!s.space.true_index) throw ConfigError("invalid experiment config: reward space has no designated true member");
    s.belief = uniform_belief(s.space);
    s.test_envs.reserve(static_cast<std::size_t>(config.test_env_count));
    for (int i = 0; i < config.test_env_count; ++i)
        s.test_envs.push_back(make_environment(config,
                                               derive_seed(config.seeds.envs, {kTestStream, static_cast<std::uint64_t>(i)}),
                                               config.feature_dim, 0, "test-" + std::to_string(i)));
    s.batch_envs = make_batch(config, 0);
    checkpoint(s);
    return s;
}

bool submit_answer(ExperimentState& s, const QueryAnswer& a, const std::string& timestamp) {
    if (s.status != ExperimentStatus::AwaitingAnswers || !s.round)
        throw AnswerError(AnswerError::Kind::NotAwaited, "no query round is awaiting answers");
    auto& round = *s.round;
    if (a.env_index >= round.answers.size())
        throw AnswerError(AnswerError::Kind::OutOfRange, "env_index out of range");
    if (a.choice_index >= round.query.size())
        throw AnswerError(AnswerError::Kind::OutOfRange, "choice_index out of range");
    if (round.answers[a.env_index])
        throw AnswerError(AnswerError::Kind::Duplicate, "environment " + std::to_string(a.env_index) +
                                                            " already answered in round " +
                                                            std::to_string(round.round_id));
    round.answers[a.env_index] = a.choice_index;
    s.answer_log.push_back({round.round_id, a.env_index, a.choice_index, timestamp});
    return round.complete();
}

void step_experiment(ExperimentState& s, const std::optional<std::vector<QueryAnswer>>& answers) {
    if (s.status == ExperimentStatus::Done) {
        if (answers) throw AnswerError(AnswerError::Kind::NotAwaited, "experiment is done");
        return;
    }
    if (s.status == ExperimentStatus::Running) {
        if (answers && !answers->empty())
            throw AnswerError(AnswerError::Kind::NotAwaited, "no query round is awaiting answers");
        while (s.current_query >= s.config.queries_per_batch) {
            ++s.current_batch;
            if (s.current_batch >= s.config.batches) {
                s.current_batch = s.config.batches - 1;
                s.status = ExperimentStatus::Done;
                return;
            }
            s.current_query = 0;
            s.batch_envs = make_batch(s.config, s.current_batch);
        }
        publish_round(s);
        return;
    }

    // AwaitingAnswers: validate everything before touching the state.
    auto& round = *s.round;
    auto merged = round.answers;
    if (answers) {
        for (const auto& a : *answers) {
            if (a.env_index >= merged.size()) throw AnswerError(AnswerError::Kind::OutOfRange, "env_index out of range");
            if (a.choice_index >= round.query.size())
                throw AnswerError(AnswerError::Kind::OutOfRange, "choice_index out of range");
            if (merged[a.env_index])
                throw AnswerError(AnswerError::Kind::Duplicate,
                                  "environment " + std::to_string(a.env_index) + " answered twice");
            merged[a.env_index] = a.choice_index;
        }
    }
    if (!std::all_of(merged.begin(), merged.end(), [](const auto& m) { return m.has_value(); }))
        throw AnswerError(AnswerError::Kind::Incomplete, "answers must cover every batch environment");

    if (answers)
        for (const auto& a : *answers) s.answer_log.push_back({round.round_id, a.env_index, a.choice_index, {}});
    round.answers = std::move(merged);
    s.belief = apply_query_round(s.belief, s.space, round, s.config.rationality, &s.inference_count);
    ++s.current_query;
    s.round.reset();
    s.status = ExperimentStatus::Running;
    checkpoint(s);
}

std::vector<QueryAnswer> oracle_answers(const ExperimentState& s) {
    if (s.status != ExperimentStatus::AwaitingAnswers || !s.round)
        throw AnswerError(AnswerError::Kind::NotAwaited, "no query round is awaiting answers");
    const auto& round = *s.round;
    std::vector<QueryAnswer> out;
    for (std::size_t e = 0; e < round.per_env_fes.size(); ++e) {
        if (round.answers[e]) continue;
        out.push_back(simulated_answer(e, round.per_env_fes[e], s.space.true_reward(), s.config.oracle_rationality,
                                       derive_seed(s.config.seeds.oracle, {round.round_id, e})));
    }
    return out;
}

ExperimentState run_experiment(const ExperimentConfig& config, const std::optional<RewardSpace>& space) {
    if (config.oracle_mode != OracleMode::Simulated)
        throw ConfigError("run_experiment requires oracle_mode = simulated");
    ExperimentState s = start_experiment(config, space);
    while (s.status != ExperimentStatus::Done) {
        if (s.status == ExperimentStatus::AwaitingAnswers)
            step_experiment(s, oracle_answers(s));
        else
            step_experiment(s);
    }
    return s;
}

ExperimentState replay_answers(const ExperimentConfig& config, const std::vector<AnswerLogEntry>& log,
                               const std::optional<RewardSpace>& space) {
    ExperimentState s = start_experiment(config, space);
    std::size_t pos = 0;
    while (s.status != ExperimentStatus::Done) {
        if (s.status == ExperimentStatus::Running) {
            step_experiment(s);
            continue;
        }
        if (pos == log.size()) break;
        const auto& entry = log[pos];
        if (entry.round_id != s.round->round_id)
            throw std::invalid_argument("answer log: entry for round " + std::to_string(entry.round_id) +
                                        " while round " + std::to_string(s.round->round_id) + " is open");
        const bool complete = submit_answer(s, {entry.env_index, entry.choice_index}, entry.timestamp);
        ++pos;
        if (complete) step_experiment(s);
    }
    if (pos != log.size()) throw std::invalid_argument("answer log: entries beyond the end of the experiment");
    return s;
}

Json round_document(const ExperimentState& s) {
    if (!s.round) throw AnswerError(AnswerError::Kind::NotAwaited, "no query round is published");
    const auto& round = *s.round;
    const auto& c = s.config;
    EvaluationParams eval = evaluation_params(c);

    Json doc;
    doc["round_id"] = round.round_id;
    doc["batch_index"] = s.current_batch;
    doc["query_index"] = s.current_query;
    Json candidates = Json::array();
    for (const auto& w : round.query.candidates) candidates.push_back(to_json(w));
    doc["candidates"] = std::move(candidates);

    Json envs = Json::array();
    for (std::size_t e = 0; e < s.batch_envs.size(); ++e) {
        const auto& env = s.batch_envs[e];
        Json entry;
        entry["env_index"] = e;
        entry["env_id"] = env.id();
        entry["environment"] = to_json(env);
        Json trajectories = Json::array();
        Json values = Json::array();
        for (std::size_t k = 0; k < round.query.size(); ++k) {
            const auto& w = round.query.candidates[k];
            const auto rewards = state_rewards(env, w);
            const auto traj = rollout(env, value_iteration(env, rewards, c.horizon), c.horizon);
            trajectories.push_back(trajectory_to_json(env, "candidate", traj));
            Json v;
            v["candidate_index"] = k;
            v["feature_expectations"] = round.per_env_fes[e][k].phi;
            v["candidate_return"] = trajectory_return(env, rewards, traj);
            v["steps"] = traj.states.size() - 1;
            v["reaches_goal"] = !traj.truncated;
            values.push_back(std::move(v));
        }
        entry["trajectories"] = std::move(trajectories);
        entry["values"] = std::move(values);
        entry["heatmap"] =
            render_trajectory_grid(env, s.belief, s.space, std::nullopt, c.risk_method, eval,
                                   derive_seed(c.seeds.sampling, {round.round_id, e}));
        envs.push_back(std::move(entry));
    }
    doc["envs"] = std::move(envs);

    Json answered = Json::array();
    for (std::size_t e = 0; e < round.answers.size(); ++e)
        if (round.answers[e]) answered.push_back({{"env_index", e}, {"choice_index", *round.answers[e]}});
    doc["answered"] = std::move(answered);
    doc["unanswered"] = round.unanswered();
    return doc;
}

}  // namespace rbaird
