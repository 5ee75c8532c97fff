// rbaird command-line entry point: run, compare, plot, serve.
#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rbaird/orchestrator.hpp"
#include "rbaird/random.hpp"
#include "rbaird/session_service.hpp"

namespace fs = std::filesystem;
using namespace rbaird;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw UsageError("cannot open '" + p.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
}

struct RunOptions {
    std::string preset;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string risk_method;
    std::optional<double> oracle_beta;
    bool quiet = false;
};

ExperimentConfig resolve_config(const RunOptions& o) {
    ExperimentConfig c = o.preset.empty() ? ExperimentConfig{} : preset(o.preset);
    if (!o.config_path.empty()) {
        Json j;
        try {
            j = Json::parse(read_text(o.config_path));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(o.config_path + ": " + e.what());
        }
        c = config_from_json(j, c);
    }
    if (o.seed) c.seeds = ExperimentSeeds::all(*o.seed);
    if (!o.risk_method.empty()) {
        try {
            c.risk_method = parse_risk_method(o.risk_method);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (o.oracle_beta) c.oracle_rationality = *o.oracle_beta;
    c.oracle_mode = OracleMode::Simulated;
    validate(c);
    return c;
}

ExperimentState simulate(const ExperimentConfig& c, bool quiet, const std::string& label = {}) {
    ExperimentState s = start_experiment(c);
    std::size_t reported = 0;
    while (s.status != ExperimentStatus::Done) {
        if (s.status == ExperimentStatus::AwaitingAnswers)
            step_experiment(s, oracle_answers(s));
        else
            step_experiment(s);
        if (!quiet && s.metrics_log.size() > reported) {
            reported = s.metrics_log.size();
            const auto& r = s.metrics_log.back();
            std::fprintf(stderr, "%s%sinferences %zu batch %zu query %zu test_regret %.4f risk_regret %.4f p_true %.4f\n",
                         label.c_str(), label.empty() ? "" : " ", r.inference_count, r.batch_index, r.query_index,
                         r.test_regret, r.risk_regret, r.true_member_probability);
        }
    }
    return s;
}

void write_run(const ExperimentState& s, const fs::path& out) {
    fs::create_directories(out / "trajectories");
    write_text(out / "config_resolved.json", to_json(s.config).dump(2) + "\n");
    export_metrics_csv(s.metrics_log, out / "metrics.csv");
    write_text(out / "belief_final.json", belief_snapshot(s.belief, s.space).dump(2) + "\n");
    std::string log;
    for (const auto& e : s.answer_log) log += to_json(e).dump() + "\n";
    write_text(out / "answers.jsonl", log);

    EvaluationParams eval;
    eval.sample_count = static_cast<std::size_t>(s.config.sample_count);
    eval.variance_samples = static_cast<std::size_t>(s.config.variance_samples);
    eval.horizon = s.config.horizon;
    eval.seed = s.config.seeds.sampling;
    const PlanSettings settings{eval.sample_count, eval.horizon, eval.tolerance};
    const auto& true_w = s.space.true_reward();
    for (std::size_t e = 0; e < s.test_envs.size(); ++e) {
        const auto& env = s.test_envs[e];
        const std::uint64_t env_seed = derive_seed(eval.seed, {e});
        Json doc = render_trajectory_grid(env, s.belief, s.space, true_w, s.config.risk_method, eval, env_seed);
        doc["trajectories"]["optimal"] = trajectory_to_json(
            env, "optimal", plan_with_method(env, s.belief, s.space, TrueReward{}, env_seed, true_w, settings).trajectory);
        write_text(out / "trajectories" / (env.id() + ".json"), doc.dump(2) + "\n");
    }
}

int cmd_run(const RunOptions& o) {
    const ExperimentConfig c = resolve_config(o);
    const ExperimentState s = simulate(c, o.quiet);
    if (!o.out.empty()) write_run(s, o.out);
    if (!o.quiet) {
        const auto& r = s.metrics_log.back();
        std::fprintf(stderr, "done: %zu inferences, final test_regret %.6g, p_true %.6g\n", s.inference_count,
                     r.test_regret, r.true_member_probability);
    }
    if (o.out.empty()) std::cout << metrics_csv(s.metrics_log);
    return kExitOk;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct CompareOptions {
    std::vector<std::string> inputs;
    std::vector<std::string> presets;
    int seeds = 10;
    int jobs = 1;
    std::string out;
    bool quiet = false;
};

int cmd_compare(const CompareOptions& o) {
    if (o.inputs.empty() && o.presets.empty()) throw UsageError("compare needs run directories or --presets");
    std::vector<std::pair<std::string, std::vector<MetricsRecord>>> series;
    for (const auto& in : o.inputs) {
        fs::path p = in;
        if (fs::is_directory(p)) p /= "metrics.csv";
        if (!fs::exists(p)) throw UsageError("missing run directory or metrics file '" + in + "'");
        series.emplace_back(in, read_metrics_csv(p));
    }
    if (!o.presets.empty()) {
        if (o.seeds < 1) throw UsageError("--seeds must be >= 1");
        struct Job {
            std::string preset;
            int seed;
        };
        std::vector<Job> jobs;
        for (const auto& p : o.presets) {
            preset(p);
            for (int sd = 1; sd <= o.seeds; ++sd) jobs.push_back({p, sd});
        }
        std::vector<std::vector<MetricsRecord>> results(jobs.size());
        std::atomic<std::size_t> next{0};
        std::mutex err_mutex;
        std::exception_ptr failure;
        const auto worker = [&] {
            for (std::size_t i; (i = next++) < jobs.size();) {
                try {
                    RunOptions ro;
                    ro.preset = jobs[i].preset;
                    ro.seed = static_cast<std::uint64_t>(jobs[i].seed);
                    results[i] = simulate(resolve_config(ro), true).metrics_log;
                    if (!o.quiet) {
                        std::lock_guard lock(err_mutex);
                        std::fprintf(stderr, "finished %s seed %d\n", jobs[i].preset.c_str(), jobs[i].seed);
                    }
                } catch (...) {
                    std::lock_guard lock(err_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::max(1, o.jobs); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
        for (std::size_t i = 0; i < jobs.size(); ++i) series.emplace_back(jobs[i].preset, std::move(results[i]));
    }

    // Group by source label, then by inference_count; medians across the group's runs.
    std::vector<std::string> order;
    std::map<std::string, std::map<std::size_t, std::vector<const MetricsRecord*>>> groups;
    for (const auto& [label, records] : series) {
        if (!groups.count(label)) order.push_back(label);
        auto& g = groups[label];
        // A run may log several records at one inference count; keep its last.
        std::map<std::size_t, const MetricsRecord*> last;
        for (const auto& r : records) last[r.inference_count] = &r;
        for (const auto& [k, r] : last) g[k].push_back(r);
    }
    std::ostringstream csv;
    csv << "source,inference_count,runs,test_regret,risk_regret,test_variance,risk_variance,posterior_entropy,"
           "true_member_probability\n";
    for (const auto& label : order) {
        for (const auto& [k, rs] : groups[label]) {
            const auto med = [&](double MetricsRecord::*field) {
                std::vector<double> v;
                for (const auto* r : rs) v.push_back(r->*field);
                return median(std::move(v));
            };
            char buf[512];
            std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", label.c_str(), k,
                          rs.size(), med(&MetricsRecord::test_regret), med(&MetricsRecord::risk_regret),
                          med(&MetricsRecord::test_variance), med(&MetricsRecord::risk_variance),
                          med(&MetricsRecord::posterior_entropy), med(&MetricsRecord::true_member_probability));
            csv << buf;
        }
    }
    if (o.out.empty())
        std::cout << csv.str();
    else
        write_text(o.out, csv.str());
    return kExitOk;
}

struct PlotOptions {
    std::vector<std::string> inputs;
    std::vector<std::string> metrics{"test_regret", "risk_regret"};
    std::string out;
    std::string title;
};

double metric_value(const MetricsRecord& r, const std::string& m) {
    if (m == "test_regret") return r.test_regret;
    if (m == "risk_regret") return r.risk_regret;
    if (m == "test_variance") return r.test_variance;
    if (m == "risk_variance") return r.risk_variance;
    if (m == "posterior_entropy") return r.posterior_entropy;
    if (m == "true_member_probability") return r.true_member_probability;
    throw UsageError("unknown metric '" + m + "'");
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

int cmd_plot(const PlotOptions& o) {
    if (o.inputs.empty()) throw UsageError("plot needs at least one metrics CSV");
    struct Series {
        std::string label;
        std::vector<std::pair<double, double>> points;
    };
    std::vector<Series> series;
    for (const auto& in : o.inputs) {
        fs::path p = in;
        if (fs::is_directory(p)) p /= "metrics.csv";
        if (!fs::exists(p)) throw UsageError("missing metrics file '" + in + "'");
        const auto records = read_metrics_csv(p);
        for (const auto& m : o.metrics) {
            Series s{in + ":" + m, {}};
            for (const auto& r : records) s.points.emplace_back(static_cast<double>(r.inference_count), metric_value(r, m));
            series.push_back(std::move(s));
        }
    }
    double xmax = 1.0, ymin = 0.0, ymax = 1e-12;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    const double W = 800, H = 480, L = 70, R = 220, T = 40, B = 50;
    const auto sx = [&](double x) { return L + (W - L - R) * x / xmax; };
    const auto sy = [&](double y) { return H - B - (H - T - B) * (y - ymin) / (ymax - ymin); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    std::ostringstream svg;
    char buf[256];
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
        << ' ' << H << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!o.title.empty())
        svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << svg_escape(o.title)
            << "</text>\n";
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R,
                  H - B);
    svg << buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
    svg << buf;
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmax * i / 5.0, yv = ymin + (ymax - ymin) * i / 5.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"11\">%g</text>\n",
                      sx(xv), H - B + 16, xv);
        svg << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\" font-size=\"11\">%.3g</text>\n",
                      L - 6, sy(yv) + 4, yv);
        svg << buf;
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">inference_count</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = palette[i % std::size(palette)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : series[i].points) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(x), sy(y));
            svg << buf;
        }
        svg << "\"/>\n";
        const double ly = T + 18.0 * static_cast<double>(i);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n", W - R + 10,
                      ly, W - R + 30, ly, color);
        svg << buf;
        svg << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
            << svg_escape(series[i].label) << "</text>\n";
    }
    svg << "</svg>\n";
    if (o.out.empty())
        std::cout << svg.str();
    else
        write_text(o.out, svg.str());
    return kExitOk;
}

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data;
};

int cmd_serve(const ServeOptions& o) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    SessionService service(o.data.empty() ? std::nullopt : std::optional<fs::path>(o.data));
    HttpServer server(service);
    const int port = server.start(o.host, o.port);
    std::cout << "listening on http://" << o.host << ":" << port << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-averse batch active inverse reward design experiments"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run one simulated experiment");
    run_cmd->add_option("--preset", run.preset, "Named preset")->check(CLI::IsMember(preset_names()));
    run_cmd->add_option("--config", run.config_path, "JSON config file; its fields override the preset");
    run_cmd->add_option("--seed", run.seed, "Seed for every stream");
    run_cmd->add_option("--out", run.out, "Output directory (metrics CSV to stdout when absent)");
    run_cmd->add_option("--risk-method", run.risk_method, "worst:N, variance:C, mean or true");
    run_cmd->add_option("--oracle-beta", run.oracle_beta, "Simulated oracle rationality");
    run_cmd->add_flag("--quiet", run.quiet, "No progress output");

    CompareOptions cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Median metrics across runs or preset/seed grids");
    cmp_cmd->add_option("inputs", cmp.inputs, "Run directories or metrics CSV files");
    cmp_cmd->add_option("--presets", cmp.presets, "Presets to run")->delimiter(',');
    cmp_cmd->add_option("--seeds", cmp.seeds, "Seeds 1..N per preset");
    cmp_cmd->add_option("--jobs", cmp.jobs, "Worker threads");
    cmp_cmd->add_option("--out", cmp.out, "Output CSV (stdout when absent)");
    cmp_cmd->add_flag("--quiet", cmp.quiet, "No progress output");

    PlotOptions plot;
    auto* plot_cmd = app.add_subcommand("plot", "SVG line chart from metrics CSV files");
    plot_cmd->add_option("inputs", plot.inputs, "Metrics CSV files or run directories")->required();
    plot_cmd->add_option("--metric", plot.metrics, "Metric columns to draw")->delimiter(',');
    plot_cmd->add_option("--out", plot.out, "Output SVG (stdout when absent)");
    plot_cmd->add_option("--title", plot.title, "Chart title");

    ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "Start the interactive session service");
    serve_cmd->add_option("--host", serve.host, "Bind address");
    serve_cmd->add_option("--port", serve.port, "Port; 0 picks a free one");
    serve_cmd->add_option("--data", serve.data, "Session storage directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*cmp_cmd) return cmd_compare(cmp);
        if (*plot_cmd) return cmd_plot(plot);
        if (*serve_cmd) return cmd_serve(serve);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
