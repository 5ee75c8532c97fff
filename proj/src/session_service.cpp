#include "rbaird/session_service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "rbaird/random.hpp"

namespace rbaird {

namespace fs = std::filesystem;

struct SessionService::Session {
    std::string id;
    std::shared_mutex mutex;
    ExperimentState state;
    std::string created_at;
    std::string updated_at;
    std::optional<fs::path> dir;
};

namespace {

HttpResponse json_response(int status, const Json& j) { return {status, j.dump()}; }

HttpResponse error(int status, const std::string& code, const std::string& message) {
    return json_response(status, Json{{"code", code}, {"message", message}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void append_line(const fs::path& path, const std::string& line) {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    f << line << '\n';
    f.flush();
    if (!f) throw std::runtime_error("cannot append to '" + path.string() + "'");
}

std::vector<AnswerLogEntry> read_answer_log(const fs::path& path) {
    std::vector<AnswerLogEntry> log;
    if (!fs::exists(path)) return log;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        log.push_back(answer_entry_from_json(Json::parse(line)));
    }
    return log;
}

Json metrics_record_json(const MetricsRecord& r) {
    Json j;
    j["inference_count"] = r.inference_count;
    j["batch_index"] = r.batch_index;
    j["query_index"] = r.query_index;
    j["test_regret"] = r.test_regret;
    j["risk_regret"] = r.risk_regret;
    j["test_variance"] = r.test_variance;
    j["risk_variance"] = r.risk_variance;
    j["posterior_entropy"] = r.posterior_entropy;
    j["true_member_probability"] = r.true_member_probability;
    return j;
}

std::optional<std::string> param(const QueryParams& params, const std::string& key) {
    const auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return it->second;
}

Json session_json(const std::string& id, const ExperimentState& st, const std::string& created_at,
                  const std::string& updated_at);

}  // namespace

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

SessionService::SessionService(std::optional<fs::path> storage_root) : root_(std::move(storage_root)) {
    if (root_) {
        fs::create_directories(*root_);
        load_sessions();
    }
}

SessionService::~SessionService() = default;

void SessionService::load_sessions() {
    for (const auto& entry : fs::directory_iterator(*root_)) {
        if (!entry.is_directory()) continue;
        const fs::path dir = entry.path();
        if (!fs::exists(dir / "config.json")) continue;
        auto s = std::make_shared<Session>();
        s->id = dir.filename().string();
        s->dir = dir;
        const auto config = config_from_json(Json::parse(read_file(dir / "config.json")));
        s->state = replay_answers(config, read_answer_log(dir / "answers.jsonl"));
        if (s->state.status == ExperimentStatus::Running) step_experiment(s->state);
        if (fs::exists(dir / "session.json")) {
            const auto meta = Json::parse(read_file(dir / "session.json"));
            s->created_at = meta.value("created_at", std::string{});
        }
        s->updated_at = s->state.answer_log.empty() ? s->created_at : s->state.answer_log.back().timestamp;
        sessions_[s->id] = std::move(s);
    }
}

std::size_t SessionService::session_count() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
}

std::optional<ExperimentState> SessionService::snapshot(const std::string& id) const {
    const auto s = find(id);
    if (!s) return std::nullopt;
    std::shared_lock lock(s->mutex);
    return s->state;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::string SessionService::new_id() {
    static thread_local std::random_device rd;
    const std::uint64_t entropy = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    char buf[24];
    std::snprintf(buf, sizeof buf, "s%016llx",
                  static_cast<unsigned long long>(mix64(entropy ^ (++counter_ * 0x9e3779b97f4a7c15ULL))));
    return buf;
}

HttpResponse SessionService::handle(const std::string& method, const std::string& path, const QueryParams& params,
                                    const std::string& body) {
    try {
        const auto parts = split_path(path);
        if (parts.empty() || parts[0] != "sessions") return error(404, "not_found", "no route for " + path);
        if (parts.size() == 1) {
            if (method != "POST") return error(405, "method_not_allowed", "use POST /sessions");
            return create_session(body);
        }
        const auto session = find(parts[1]);
        if (!session) return error(404, "not_found", "unknown session '" + parts[1] + "'");
        if (parts.size() == 2) {
            if (method != "GET") return error(405, "method_not_allowed", "use GET");
            return get_session(*session);
        }
        if (parts.size() != 3) return error(404, "not_found", "no route for " + path);
        const std::string& leaf = parts[2];
        if (leaf == "answers") {
            if (method != "POST") return error(405, "method_not_allowed", "use POST");
            return post_answer(*session, body);
        }
        if (method != "GET") return error(405, "method_not_allowed", "use GET");
        if (leaf == "round") return get_round(*session);
        if (leaf == "belief") return get_belief(*session);
        if (leaf == "metrics") return get_metrics(*session);
        if (leaf == "trajectories") return get_trajectories(*session, params);
        return error(404, "not_found", "no route for " + path);
    } catch (const std::exception& e) {
        return error(500, "internal_error", e.what());
    }
}

HttpResponse SessionService::create_session(const std::string& body) {
    Json j;
    try {
        j = body.empty() ? Json::object() : Json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        return error(400, "bad_request", std::string("malformed JSON: ") + e.what());
    }
    ExperimentConfig config;
    try {
        if (!j.is_object()) throw ConfigError("invalid experiment config: expected a JSON object");
        ExperimentConfig base;
        if (j.contains("preset")) {
            base = preset(j.at("preset").get<std::string>());
            j.erase("preset");
        }
        base.oracle_mode = OracleMode::Interactive;
        config = config_from_json(j, base);
        if (config.oracle_mode != OracleMode::Interactive)
            throw ConfigError("invalid experiment config: sessions require oracle_mode interactive");
    } catch (const ConfigError& e) {
        return error(422, "invalid_config", e.what());
    } catch (const nlohmann::json::exception& e) {
        return error(422, "invalid_config", e.what());
    }

    auto s = std::make_shared<Session>();
    s->state = start_experiment(config);
    step_experiment(s->state);
    s->created_at = iso8601_now();
    s->updated_at = s->created_at;
    {
        std::unique_lock lock(mutex_);
        do s->id = new_id();
        while (sessions_.count(s->id));
        if (root_) {
            s->dir = *root_ / s->id;
            fs::create_directories(*s->dir);
            write_file(*s->dir / "config.json", to_json(config).dump(2) + "\n");
            write_file(*s->dir / "session.json", Json{{"id", s->id}, {"created_at", s->created_at}}.dump() + "\n");
            write_file(*s->dir / "answers.jsonl", "");
        }
        sessions_[s->id] = s;
    }
    std::shared_lock lock(s->mutex);
    return json_response(201, session_json(s->id, s->state, s->created_at, s->updated_at));
}

namespace {

Json session_json(const std::string& id, const ExperimentState& st, const std::string& created_at,
                  const std::string& updated_at) {
    Json j;
    j["id"] = id;
    j["status"] = to_string(st.status);
    j["batch_index"] = st.current_batch;
    j["query_index"] = st.current_query;
    j["inference_count"] = st.inference_count;
    j["rounds_published"] = st.rounds_published;
    j["round_id"] = st.round ? Json(st.round->round_id) : Json(nullptr);
    j["unanswered"] = st.round ? Json(st.round->unanswered()) : Json::array();
    j["checkpoints"] = st.metrics_log.size();
    j["created_at"] = created_at;
    j["updated_at"] = updated_at;
    j["config"] = to_json(st.config);
    return j;
}

}  // namespace

HttpResponse SessionService::get_session(Session& s) {
    std::shared_lock lock(s.mutex);
    return json_response(200, session_json(s.id, s.state, s.created_at, s.updated_at));
}

HttpResponse SessionService::get_round(Session& s) {
    std::shared_lock lock(s.mutex);
    if (s.state.status == ExperimentStatus::Done) return error(409, "experiment_done", "experiment is complete");
    return json_response(200, round_document(s.state));
}

HttpResponse SessionService::post_answer(Session& s, const std::string& body) {
    QueryAnswer answer;
    std::optional<std::uint64_t> round_id;
    try {
        const auto j = Json::parse(body);
        const auto& env = j.at("env_index");
        const auto& choice = j.at("choice_index");
        if (!env.is_number_integer() || !choice.is_number_integer())
            return error(400, "bad_request", "env_index and choice_index must be integers");
        if (env.get<long long>() < 0 || choice.get<long long>() < 0)
            return error(400, "out_of_range", "indices must be non-negative");
        answer = {env.get<std::size_t>(), choice.get<std::size_t>()};
        if (j.contains("round_id") && !j.at("round_id").is_null()) round_id = j.at("round_id").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        return error(400, "bad_request", std::string("answer body: ") + e.what());
    }

    std::unique_lock lock(s.mutex);
    auto& st = s.state;
    if (st.status == ExperimentStatus::Done) return error(409, "experiment_done", "experiment is complete");
    if (round_id && (!st.round || *round_id != st.round->round_id))
        return error(409, "stale_round", "round " + std::to_string(*round_id) + " is not the open round");
    const std::uint64_t answered_round = st.round->round_id;
    const std::string now = iso8601_now();
    bool complete = false;
    try {
        complete = submit_answer(st, answer, now);
    } catch (const AnswerError& e) {
        switch (e.kind()) {
            case AnswerError::Kind::OutOfRange: return error(400, "out_of_range", e.what());
            case AnswerError::Kind::Duplicate: return error(409, "duplicate_answer", e.what());
            default: return error(409, "not_awaiting_answers", e.what());
        }
    }
    if (s.dir) {
        try {
            append_line(*s.dir / "answers.jsonl", to_json(st.answer_log.back()).dump());
        } catch (...) {
            st.round->answers[answer.env_index].reset();
            st.answer_log.pop_back();
            throw;
        }
    }
    s.updated_at = now;
    if (complete) {
        step_experiment(st);
        step_experiment(st);
    }
    Json j;
    j["round_id"] = answered_round;
    j["env_index"] = answer.env_index;
    j["choice_index"] = answer.choice_index;
    j["belief_updated"] = complete;
    j["status"] = to_string(st.status);
    j["next_round_id"] = complete && st.round ? Json(st.round->round_id) : Json(nullptr);
    j["unanswered"] = st.round ? Json(st.round->unanswered()) : Json::array();
    j["inference_count"] = st.inference_count;
    return json_response(200, j);
}

HttpResponse SessionService::get_belief(Session& s) {
    std::shared_lock lock(s.mutex);
    return json_response(200, belief_snapshot(s.state.belief, s.state.space));
}

HttpResponse SessionService::get_metrics(Session& s) {
    std::shared_lock lock(s.mutex);
    Json records = Json::array();
    for (const auto& r : s.state.metrics_log) records.push_back(metrics_record_json(r));
    Json j;
    j["count"] = records.size();
    j["records"] = std::move(records);
    return json_response(200, j);
}

HttpResponse SessionService::get_trajectories(Session& s, const QueryParams& params) {
    std::shared_lock lock(s.mutex);
    const auto& st = s.state;
    std::size_t env_index = 0;
    if (const auto e = param(params, "env")) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(*e, &used);
            if (used != e->size() || v < 0) throw std::invalid_argument("env");
            env_index = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            return error(400, "bad_request", "env must be a non-negative integer");
        }
    }
    if (env_index >= st.test_envs.size())
        return error(400, "out_of_range", "env must be below " + std::to_string(st.test_envs.size()));
    std::vector<std::string> planners{"optimal", "unsafe", "risk"};
    if (const auto m = param(params, "method")) {
        if (*m != "optimal" && *m != "unsafe" && *m != "risk")
            return error(400, "bad_request", "method must be optimal, unsafe or risk");
        planners = {*m};
    }

    const auto& env = st.test_envs[env_index];
    const auto& c = st.config;
    const std::uint64_t env_seed = derive_seed(c.seeds.sampling, {env_index});
    const PlanSettings settings{static_cast<std::size_t>(c.sample_count), c.horizon, kDefaultTolerance};
    const RewardFunction& true_w = st.space.true_reward();
    Json trajectories = Json::array();
    for (const auto& name : planners) {
        RiskMethod method = c.risk_method;
        if (name == "optimal") method = TrueReward{};
        if (name == "unsafe") method = MeanOnly{};
        const auto path = plan_with_method(env, st.belief, st.space, method, env_seed, true_w, settings);
        Json t = trajectory_to_json(env, name, path.trajectory);
        t["features"] = path.features.phi;
        t["true_return"] = true_return(env, path, true_w);
        trajectories.push_back(std::move(t));
    }
    EvaluationParams eval;
    eval.sample_count = static_cast<std::size_t>(c.sample_count);
    eval.horizon = c.horizon;
    eval.seed = c.seeds.sampling;
    Json j;
    j["env_index"] = env_index;
    j["env_id"] = env.id();
    j["method"] = to_string(c.risk_method);
    j["trajectories"] = std::move(trajectories);
    j["heatmap"] = render_trajectory_grid(env, st.belief, st.space, std::nullopt, c.risk_method, eval, env_seed);
    return json_response(200, j);
}

HttpServer::HttpServer(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        QueryParams params(req.params.begin(), req.params.end());
        const HttpResponse r = service_.handle(req.method, req.path, params, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    server_->Get(R"(/.*)", dispatch);
    server_->Post(R"(/.*)", dispatch);
    server_->Put(R"(/.*)", dispatch);
    server_->Delete(R"(/.*)", dispatch);
    server_->Patch(R"(/.*)", dispatch);
    server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpServer::wait() {
    if (thread_.joinable()) thread_.join();
}

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace rbaird
