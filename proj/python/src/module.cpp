// Python bindings. JSON crosses the boundary as text; the package wrapper decodes it.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rbaird/orchestrator.hpp"
#include "rbaird/session_service.hpp"

namespace py = pybind11;
using namespace rbaird;

namespace {

ExperimentConfig parse_config(const std::string& config_json, const std::string& preset_name) {
    const ExperimentConfig base = preset_name.empty() ? ExperimentConfig{} : preset(preset_name);
    return config_json.empty() ? base : config_from_json(Json::parse(config_json), base);
}

std::string state_json(const ExperimentState& s) {
    Json j;
    j["config"] = to_json(s.config);
    j["status"] = to_string(s.status);
    j["inference_count"] = s.inference_count;
    j["belief"] = belief_snapshot(s.belief, s.space);
    j["metrics_csv"] = metrics_csv(s.metrics_log);
    Json answers = Json::array();
    for (const auto& e : s.answer_log) answers.push_back(to_json(e));
    j["answers"] = answers;
    return j.dump();
}

std::vector<AnswerLogEntry> parse_answers(const std::string& answers_json) {
    std::vector<AnswerLogEntry> log;
    for (const auto& e : Json::parse(answers_json)) log.push_back(answer_entry_from_json(e));
    return log;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Risk-averse batch active inverse reward design core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("preset_names", &preset_names);
    m.def(
        "resolve_config",
        [](const std::string& config_json, const std::string& preset_name) {
            const auto c = parse_config(config_json, preset_name);
            validate(c);
            return to_json(c).dump();
        },
        py::arg("config_json") = "", py::arg("preset") = "");
    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::string& preset_name) {
            auto c = parse_config(config_json, preset_name);
            c.oracle_mode = OracleMode::Simulated;
            py::gil_scoped_release release;
            return state_json(run_experiment(c));
        },
        py::arg("config_json") = "", py::arg("preset") = "");
    m.def(
        "replay_answers",
        [](const std::string& config_json, const std::string& answers_json) {
            const auto c = parse_config(config_json, "");
            const auto log = parse_answers(answers_json);
            py::gil_scoped_release release;
            return state_json(replay_answers(c, log));
        },
        py::arg("config_json"), py::arg("answers_json"));
    m.def(
        "plan",
        [](const std::string& env_json, const std::vector<double>& weights, int horizon) {
            const auto env = environment_from_json(Json::parse(env_json));
            const RewardFunction w{weights};
            const auto rewards = state_rewards(env, w);
            const auto traj = rollout(env, value_iteration(env, rewards, horizon), horizon);
            Json j = trajectory_to_json(env, "optimal", traj);
            j["return"] = trajectory_return(env, rewards, traj);
            return j.dump();
        },
        py::arg("env_json"), py::arg("weights"), py::arg("horizon") = kDefaultHorizon);

    py::class_<SessionService>(m, "SessionService")
        .def(py::init([](const std::string& root) {
                 return std::make_unique<SessionService>(root.empty() ? std::nullopt
                                                                      : std::optional<std::filesystem::path>(root));
             }),
             py::arg("storage_root") = "")
        .def(
            "handle",
            [](SessionService& s, const std::string& method, const std::string& path,
               const std::map<std::string, std::string>& params, const std::string& body) {
                const QueryParams q(params.begin(), params.end());
                HttpResponse r;
                {
                    py::gil_scoped_release release;
                    r = s.handle(method, path, q, body);
                }
                return py::make_tuple(r.status, r.body);
            },
            py::arg("method"), py::arg("path"), py::arg("params") = std::map<std::string, std::string>{},
            py::arg("body") = "")
        .def("session_count", &SessionService::session_count);
}
