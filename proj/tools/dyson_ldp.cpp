// dyson-ldp: command-line front end for the simulator, the rate functionals, the
// importance sampler and the acceptance suite.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "dyson_ldp/acceptance.hpp"
#include "dyson_ldp/dyson_ldp.hpp"

namespace fs = std::filesystem;
using namespace dyson_ldp;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(const std::string& content) {
    const std::string header = "blob " + std::to_string(content.size()) + '\0';
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, content.data(), content.size());
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

json scalar_json(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(s, &pos);
        if (pos == s.size()) return i;
        const double d = std::stod(s, &pos);
        if (pos == s.size()) return d;
    } catch (const std::exception&) {
    }
    return s;
}

/// Effective values of every option of `app` (parsed or default), keyed by snake_case name.
json effective_config(const CLI::App* app) {
    json cfg = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty()) continue;
        std::string key = opt->get_lnames().front();
        if (key == "help" || key == "config") continue;
        std::replace(key.begin(), key.end(), '-', '_');
        if (opt->get_type_size() == 0) {
            cfg[key] = opt->count() > 0;
            continue;
        }
        const auto& res = opt->results();
        if (res.empty()) {
            cfg[key] = opt->get_default_str().empty() ? json(nullptr) : scalar_json(opt->get_default_str());
        } else if (opt->get_items_expected_max() > 1) {
            json arr = json::array();
            for (const auto& r : res) arr.push_back(scalar_json(r));
            cfg[key] = arr;
        } else {
            cfg[key] = scalar_json(res.back());
        }
    }
    cfg["command"] = app->get_name();
    return cfg;
}

/// Turns a JSON config into flags for `sub`, placed before the user's own flags so that
/// the command line wins (every option keeps its last value).
std::vector<std::string> config_to_args(const json& cfg, CLI::App* sub) {
    if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
    std::vector<std::string> args;
    for (const auto& [key, value] : cfg.items()) {
        std::string flag = key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + flag);
        } catch (const CLI::OptionNotFound&) {
            throw UsageError("unknown config key '" + key + "' for " + sub->get_name());
        }
        if (opt->get_type_size() == 0) {
            if (value.is_boolean() && value.get<bool>()) args.push_back("--" + flag);
            continue;
        }
        auto push = [&](const json& v) {
            args.push_back("--" + flag);
            args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        };
        if (value.is_array()) {
            for (const auto& v : value) push(v);
        } else if (!value.is_null()) {
            push(value);
        }
    }
    return args;
}

// Command implementations. Each returns the process exit code.

struct SimulateArgs {
    std::size_t n = 8;
    double theta = 0.0;
    int beta = 2;
    std::size_t steps = 100;
    double t_max = 1.0;
    std::uint64_t seed = 0;
    std::string mode = "particle";
    std::size_t replicas = 1;
    std::string out = "dyson_out";
    bool long_format = false;
    int workers = 0;
};

int cmd_simulate(const SimulateArgs& a, const json& config) {
    SimConfig c;
    c.n = a.n;
    c.theta = a.theta;
    c.beta = a.beta;
    c.grid = TimeGrid::uniform(0.0, a.t_max, a.steps);
    c.seed = a.seed;
    c.mode = parse_mode(a.mode);
    c.validate();
    if (a.replicas == 0) throw InvalidParameter("--replicas must be >= 1");
    const auto paths = parallel_map(a.replicas, resolve_workers(a.workers), [&](std::size_t r) { return simulate(c, r); });

    const fs::path dir(a.out);
    fs::create_directories(dir);
    json files = json::array();
    auto emit = [&](const fs::path& p, const std::string& text) {
        write_text(p, text);
        files.push_back({{"path", p.filename().string()}, {"sha1", git_blob_sha1(text)}, {"bytes", text.size()}});
    };
    if (a.long_format) {
        std::ostringstream os;
        write_ensembles_long_csv(os, paths, config);
        emit(dir / "paths.csv", os.str());
    } else {
        for (const auto& e : paths) {
            std::ostringstream os;
            json cfg = config;
            cfg["replica"] = e.replica_id();
            write_ensemble_csv(os, e, cfg);
            emit(dir / ("replica_" + std::to_string(e.replica_id()) + ".csv"), os.str());
        }
    }
    const json manifest{{"tool", "dyson-ldp"}, {"version", kVersion}, {"config", config}, {"files", files}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << files.size() << " file(s) to " << dir.string() << "\n";
    return 0;
}

struct RateArgs {
    std::string path;
    bool fixed = false;
    double theta = 0.0;
    double x = 2.0;
    int beta = 2;
    std::size_t emit_optimal_path = 0;
    std::string out;
};

std::string format_rate(double v) {
    if (std::isinf(v)) return "+inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int cmd_rate(const RateArgs& a, const json& config) {
    const RateParams params{a.theta, a.beta};
    params.validate();
    if (a.fixed == !a.path.empty()) throw UsageError("rate needs exactly one of --fixed or --path");
    if (!a.path.empty()) {
        const ScalarPath phi = read_path_csv(a.path);
        std::cout << format_rate(rate_I(phi, params)) << "\n";
        return 0;
    }
    const double k = params.beta_factor() * K_theta(a.theta, a.x);
    std::cout << format_rate(k) << "\n";
    if (a.emit_optimal_path > 0) {
        const ScalarPath p = optimal_path(FixedTimeQuery{a.theta, a.x, 0.0}, TimeGrid::unit(a.emit_optimal_path));
        const std::string file = a.out.empty() ? "optimal_path.csv" : a.out;
        write_path_csv(file, p, "phi", config);
        std::cerr << "optimal path written to " << file << "\n";
    }
    return 0;
}

struct OptimalPathArgs {
    double theta = 0.0;
    double x = 2.5;
    double eta = 0.0;
    std::size_t steps = 1000;
    std::string out;
};

int cmd_optimal_path(const OptimalPathArgs& a, const json& config) {
    const ScalarPath p = optimal_path(FixedTimeQuery{a.theta, a.x, a.eta}, TimeGrid::uniform(a.eta, 1.0, a.steps));
    if (a.out.empty()) {
        write_path_csv(std::cout, p, "phi", config);
    } else {
        write_path_csv(a.out, p, "phi", config);
    }
    return 0;
}

struct MinimizeArgs {
    double theta = 0.0;
    double x = 2.5;
    double eta = 0.0;
    std::size_t steps = 799;
    std::size_t restarts = 3;
    std::size_t max_iterations = 2000;
    double tolerance = 1e-10;
    std::string out;
    std::string trace;
};

int cmd_minimize(const MinimizeArgs& a, const json& config) {
    VarProblem p;
    p.theta = a.theta;
    p.x = a.x;
    p.eta = a.eta;
    p.grid = TimeGrid::uniform(a.eta, 1.0, a.steps);
    p.options.max_iterations = a.max_iterations;
    p.options.tolerance = a.tolerance;
    p.options.record_trace = !a.trace.empty();
    const VarResult r = minimize_path_restarts(p, a.restarts);
    json summary = to_json(r);
    summary.erase("trace");
    if (a.eta == 0.0) summary["K_theta"] = json_number(K_theta(a.theta, a.x));
    std::cout << summary.dump() << "\n";
    if (!r.converged) std::cerr << "warning: minimizer stopped before convergence\n";
    if (!a.out.empty()) write_path_csv(a.out, r.path, "phi", config);
    if (!a.trace.empty()) {
        std::ostringstream os;
        os << "# config: " << config.dump() << "\niter,objective,step\n";
        for (const auto& row : r.trace)
            os << row.iter << ',' << format_double(row.objective) << ',' << format_double(row.step) << '\n';
        write_text(a.trace, os.str());
    }
    return 0;
}

struct EstimateArgs {
    std::string kind = "tail";
    double theta = 0.0;
    std::size_t n = 16;
    double x = 2.5;
    std::string path;
    std::string centre = "lln";
    double delta = 0.3;
    std::size_t replicas = 1000;
    std::uint64_t seed = 0;
    std::string tilt = "optimal";
    std::string mode = "particle";
    std::size_t steps = 200;
    int beta = 2;
    int workers = 0;
    std::string out;
};

int cmd_estimate(const EstimateArgs& a, const json& config) {
    SamplerOptions opt;
    opt.beta = a.beta;
    opt.workers = a.workers;
    if (a.tilt != "optimal" && a.tilt != "none") throw UsageError("--tilt must be optimal or none");
    EstimateReport r;
    if (a.kind == "tail") {
        TailOptions tail;
        tail.tilt = a.tilt == "optimal" ? TailTilt::optimal : TailTilt::none;
        tail.mode = parse_mode(a.mode);
        tail.steps = a.steps;
        r = estimate_tail_prob(a.theta, a.n, a.x, a.replicas, a.seed, tail, opt);
    } else if (a.kind == "tube") {
        ScalarPath phi;
        if (!a.path.empty()) {
            phi = read_path_csv(a.path);
        } else if (a.centre == "lln") {
            phi = lln_path(a.theta, TimeGrid::unit(a.steps));
        } else if (a.centre == "optimal") {
            phi = optimal_path(FixedTimeQuery{a.theta, a.x, 0.0}, TimeGrid::unit(a.steps));
        } else if (a.centre == "line") {
            const double th = a.theta, x = a.x;
            phi = ScalarPath::sample(TimeGrid::unit(a.steps), [=](double t) { return th + (x - th) * t; },
                                     [=](double) { return x - th; });
        } else {
            throw UsageError("--centre must be lln, optimal or line");
        }
        r = estimate_tube_prob(a.theta, a.n, phi, a.delta, a.replicas, a.seed, a.tilt == "optimal", opt);
    } else {
        throw UsageError("--kind must be tube or tail");
    }
    json j = to_json(r);
    j["config"] = config;
    if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
    std::printf("p_hat=%.6g  -log(p_hat)/N=%s  target=%s  hits=%zu/%zu%s\n", r.p_hat,
                format_rate(r.minus_log_rate).c_str(), format_rate(r.target_rate).c_str(), r.hits, r.n_replicas,
                r.flags.empty() ? "" : ("  flags=" + json(r.flags).dump()).c_str());
    return 0;
}

struct TightnessArgs {
    std::size_t n = 32;
    double theta = 0.0;
    std::size_t steps = 100;
    std::size_t replicas = 200;
    std::uint64_t seed = 0;
    std::vector<double> eta{0.8};
    std::vector<double> delta{0.05};
    std::vector<std::size_t> p{1};
    std::string mode = "particle";
    int workers = 0;
    std::string out;
};

int cmd_tightness(const TightnessArgs& a, const json& config) {
    SimConfig c;
    c.n = a.n;
    c.theta = a.theta;
    c.grid = TimeGrid::unit(a.steps);
    c.seed = a.seed;
    c.mode = parse_mode(a.mode);
    c.validate();
    for (std::size_t p : a.p)
        if (p < 1 || p > a.n) throw InvalidParameter("--p must lie in [1, N]");
    const auto paths = parallel_map(a.replicas, resolve_workers(a.workers), [&](std::size_t r) { return simulate(c, r); });
    json rows = json::array();
    bool all = true;
    std::printf("%8s %8s %4s %10s %12s %12s %s\n", "eta", "delta", "p", "windows", "frequency", "bound", "pass");
    for (double eta : a.eta)
        for (double delta : a.delta)
            for (std::size_t p : a.p) {
                const TightnessReport r = tightness_check(paths, eta, delta, p);
                all = all && r.pass;
                rows.push_back(to_json(r));
                std::printf("%8.4g %8.4g %4zu %10zu %12.4g %12.4g %s\n", eta, delta, p, r.windows, r.frequency, r.bound,
                            r.pass ? "yes" : "no");
            }
    if (!a.out.empty()) write_text(a.out, json{{"config", config}, {"results", rows}}.dump(2) + "\n");
    return 0;
}

struct ValidateArgs {
    std::vector<std::string> only;
    bool json_out = false;
    int workers = 0;
};

int cmd_validate(const ValidateArgs& a) {
    namespace acc = acceptance;
    std::vector<acc::Result> results;
    for (const auto& c : acc::criteria()) {
        if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), c.id) == a.only.end()) continue;
        results.push_back(acc::run(c, a.workers));
        if (!a.json_out) std::cout << acc::format_line(results.back()) << std::endl;
    }
    if (results.empty()) throw UsageError("no acceptance criterion matches --only");
    std::vector<std::string> failed;
    for (const auto& r : results)
        if (!r.pass) failed.push_back(r.id);
    if (a.json_out) {
        json arr = json::array();
        for (const auto& r : results)
            arr.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail},
                           {"seconds", r.seconds}, {"budget_seconds", r.budget}});
        std::cout << json{{"results", arr}, {"all_pass", failed.empty()}}.dump(2) << "\n";
    } else if (!failed.empty()) {
        std::cout << "failed:";
        for (const auto& id : failed) std::cout << ' ' << id;
        std::cout << "\n";
    }
    return failed.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dyson Brownian motion with a spike: simulation, large-deviation rates and importance sampling",
                 "dyson-ldp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::string config_file;
    auto add_config = [&](CLI::App* s) {
        s->add_option("--config", config_file, "JSON file of option values (snake_case keys)");
    };

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "simulate eigenvalue paths and write CSVs plus a manifest");
    s_sim->add_option("--n", sim.n, "matrix size N");
    s_sim->add_option("--theta", sim.theta, "spike strength");
    s_sim->add_option("--beta", sim.beta, "2 (Hermitian) or 1 (real symmetric)");
    s_sim->add_option("--steps", sim.steps, "number of time steps");
    s_sim->add_option("--t-max", sim.t_max, "final time");
    s_sim->add_option("--seed", sim.seed, "base seed");
    s_sim->add_option("--mode", sim.mode, "particle or matrix");
    s_sim->add_option("--replicas", sim.replicas, "number of independent replicas");
    s_sim->add_option("--out", sim.out, "output directory");
    s_sim->add_flag("--long-format", sim.long_format, "write one long CSV with a replica column");
    s_sim->add_option("--workers", sim.workers, "worker threads (0: DYSON_LDP_WORKERS or all cores)");
    add_config(s_sim);

    RateArgs rate;
    auto* s_rate = app.add_subcommand("rate", "evaluate the path rate of a CSV path or the fixed-time rate");
    s_rate->add_option("--path", rate.path, "CSV with columns t,phi");
    s_rate->add_flag("--fixed", rate.fixed, "fixed-time rate K_theta(x)");
    s_rate->add_option("--theta", rate.theta, "spike strength");
    s_rate->add_option("--x", rate.x, "level at t = 1 (with --fixed)");
    s_rate->add_option("--beta", rate.beta, "2 or 1 (halves the rate)");
    s_rate->add_option("--emit-optimal-path", rate.emit_optimal_path, "also write the minimizing path on this many steps");
    s_rate->add_option("--out", rate.out, "file for --emit-optimal-path");
    add_config(s_rate);

    OptimalPathArgs opt;
    auto* s_opt = app.add_subcommand("optimal-path", "write the explicit minimizing path as CSV");
    s_opt->add_option("--theta", opt.theta, "value at the start time");
    s_opt->add_option("--x", opt.x, "value at t = 1");
    s_opt->add_option("--eta", opt.eta, "start time");
    s_opt->add_option("--steps", opt.steps, "number of grid steps");
    s_opt->add_option("--out", opt.out, "output CSV (stdout if omitted)");
    add_config(s_opt);

    MinimizeArgs mini;
    auto* s_min = app.add_subcommand("minimize", "minimize the discretized path rate numerically");
    s_min->add_option("--theta", mini.theta, "value at the start time");
    s_min->add_option("--x", mini.x, "value at t = 1");
    s_min->add_option("--eta", mini.eta, "start time");
    s_min->add_option("--steps", mini.steps, "number of grid steps");
    s_min->add_option("--restarts", mini.restarts, "number of starting paths");
    s_min->add_option("--max-iterations", mini.max_iterations, "iteration cap per run");
    s_min->add_option("--tolerance", mini.tolerance, "projected-gradient tolerance");
    s_min->add_option("--out", mini.out, "CSV for the minimizing path");
    s_min->add_option("--trace", mini.trace, "CSV for the objective trace");
    add_config(s_min);

    EstimateArgs est;
    auto* s_est = app.add_subcommand("estimate", "importance-sampling estimate of a tube or tail probability");
    s_est->add_option("--kind", est.kind, "tube or tail");
    s_est->add_option("--theta", est.theta, "spike strength");
    s_est->add_option("--n", est.n, "matrix size N");
    s_est->add_option("--x", est.x, "tail level, or the endpoint of the tube centre");
    s_est->add_option("--path", est.path, "tube centre as CSV (t,phi)");
    s_est->add_option("--centre", est.centre, "tube centre without --path: lln, optimal (to --x) or line (to --x)");
    s_est->add_option("--delta", est.delta, "tube radius");
    s_est->add_option("--replicas", est.replicas, "number of replicas");
    s_est->add_option("--seed", est.seed, "base seed");
    s_est->add_option("--tilt", est.tilt, "optimal or none");
    s_est->add_option("--mode", est.mode, "particle or matrix (matrix: untilted tail only)");
    s_est->add_option("--steps", est.steps, "time steps");
    s_est->add_option("--beta", est.beta, "2 or 1");
    s_est->add_option("--workers", est.workers, "worker threads");
    s_est->add_option("--out", est.out, "JSON report file");
    add_config(s_est);

    TightnessArgs tight;
    auto* s_tight = app.add_subcommand("tightness", "empirical window-oscillation frequencies against the bound");
    s_tight->add_option("--n", tight.n, "matrix size N");
    s_tight->add_option("--theta", tight.theta, "spike strength");
    s_tight->add_option("--steps", tight.steps, "time steps");
    s_tight->add_option("--replicas", tight.replicas, "number of replicas");
    s_tight->add_option("--seed", tight.seed, "base seed");
    s_tight->add_option("--eta", tight.eta, "oscillation thresholds")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s_tight->add_option("--delta", tight.delta, "window lengths")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s_tight->add_option("--p", tight.p, "eigenvalue indices (1 = top)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s_tight->add_option("--mode", tight.mode, "particle or matrix");
    s_tight->add_option("--workers", tight.workers, "worker threads");
    s_tight->add_option("--out", tight.out, "JSON results file");
    add_config(s_tight);

    ValidateArgs val;
    auto* s_val = app.add_subcommand("validate", "run the acceptance suite");
    s_val->add_option("--only", val.only, "run only these criteria (e.g. A1)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s_val->add_flag("--json", val.json_out, "machine-readable output");
    s_val->add_option("--workers", val.workers, "worker threads");

    try {
        // Splice config-file values in front of the user's flags.
        std::vector<std::string> args(argv + 1, argv + argc);
        std::reverse(args.begin(), args.end());
        if (argc >= 2) {
            std::string cfg_path;
            for (int i = 2; i < argc; ++i) {
                const std::string a = argv[i];
                if (a == "--config" && i + 1 < argc) cfg_path = argv[i + 1];
                if (a.rfind("--config=", 0) == 0) cfg_path = a.substr(9);
            }
            if (!cfg_path.empty()) {
                CLI::App* sub = nullptr;
                try {
                    sub = app.get_subcommand(argv[1]);
                } catch (const CLI::OptionNotFound&) {
                    throw UsageError(std::string("unknown command '") + argv[1] + "'");
                }
                std::ifstream is(cfg_path);
                if (!is) throw UsageError("cannot open config file " + cfg_path);
                json cfg;
                try {
                    cfg = json::parse(is);
                } catch (const json::parse_error& e) {
                    throw UsageError(std::string("config file is not valid JSON: ") + e.what());
                }
                std::vector<std::string> merged{argv[1]};
                const auto extra = config_to_args(cfg, sub);
                merged.insert(merged.end(), extra.begin(), extra.end());
                merged.insert(merged.end(), argv + 2, argv + argc);
                args.assign(merged.rbegin(), merged.rend());
            }
        }
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        const CLI::App* sub = app.get_subcommands().front();
        const json config = effective_config(sub);
        if (sub == s_sim) return cmd_simulate(sim, config);
        if (sub == s_rate) return cmd_rate(rate, config);
        if (sub == s_opt) return cmd_optimal_path(opt, config);
        if (sub == s_min) return cmd_minimize(mini, config);
        if (sub == s_est) return cmd_estimate(est, config);
        if (sub == s_tight) return cmd_tightness(tight, config);
        if (sub == s_val) return cmd_validate(val);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
