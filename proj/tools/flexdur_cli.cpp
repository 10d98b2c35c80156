// flexdur: simulate, fit, backtest and diagnose duration models from the shell.

#include "flexdur/data_io.hpp"
#include "flexdur/diagnostics.hpp"
#include "flexdur/errors.hpp"
#include "flexdur/estimate.hpp"
#include "flexdur/forecast.hpp"
#include "flexdur/serialize.hpp"
#include "flexdur/simulate.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace flexdur;

namespace {

constexpr const char* kVersion = "0.3.0";

struct ModelFlags {
    std::string dynamics{"se"};
    std::string residual{"exp"};
    std::optional<double> mu, alpha, beta, b0, a, b1;
    std::optional<double> kappa, d, p, s1, s2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dynamics", dynamics, "se | acd | logacd | logaci | renewal")->capture_default_str();
        cmd->add_option("--residual", residual, "exp | gamma | ggamma | burr")->capture_default_str();
        cmd->add_option("--mu", mu);
        cmd->add_option("--alpha", alpha);
        cmd->add_option("--beta", beta);
        cmd->add_option("--b0", b0);
        cmd->add_option("--a", a);
        cmd->add_option("--b1", b1);
        cmd->add_option("--kappa", kappa);
        cmd->add_option("--d", d, "generalized Gamma d");
        cmd->add_option("--p", p, "generalized Gamma p");
        cmd->add_option("--s1", s1, "Burr s1");
        cmd->add_option("--s2", s2, "Burr s2");
    }

    [[nodiscard]] ModelSpec model() const {
        const auto family = parse_dynamics_family(dynamics);
        const auto rfamily = parse_residual_family(residual);
        const std::map<std::string, std::optional<double>> values{
            {"mu", mu}, {"alpha", alpha}, {"beta", beta}, {"b0", b0}, {"a", a},  {"b1", b1},
            {"kappa", kappa}, {"d", d}, {"p", p}, {"s1", s1}, {"s2", s2}};
        auto collect = [&](const std::vector<std::string>& names) {
            std::vector<double> out;
            for (const auto& n : names) {
                const auto& v = values.at(n);
                if (!v) throw DomainError("missing --" + n + " for " + dynamics + "/" + residual);
                out.push_back(*v);
            }
            return out;
        };
        return ModelSpec(make_dynamics(family, collect(dynamics_param_names(family))),
                         make_residual(rfamily, collect(ResidualSpec::param_names(rfamily))));
    }
};

struct FitFlags {
    double tolerance{1e-6};
    std::size_t max_iterations{500};
    std::size_t restarts{5};
    std::uint64_t seed{1};
    std::size_t truncation_lag{100};

    void attach(CLI::App* cmd) {
        cmd->add_option("--tolerance", tolerance, "gradient sup-norm tolerance")->capture_default_str();
        cmd->add_option("--max-iter", max_iterations)->capture_default_str();
        cmd->add_option("--restarts", restarts)->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed)->capture_default_str();
        cmd->add_option("--truncation-lag", truncation_lag, "FI-logACD filter truncation")->capture_default_str();
    }

    [[nodiscard]] FitConfig config(std::size_t jobs) const {
        FitConfig c;
        c.tolerance = tolerance;
        c.max_iterations = max_iterations;
        c.restarts = restarts;
        c.seed = seed;
        c.truncation_lag = truncation_lag;
        c.jobs = jobs;
        return c;
    }
};

/// Output directory with the manifest written last.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw FormatError("cannot create output directory " + dir_.string());
    }

    fs::path file(const std::string& name) {
        outputs_.push_back(name);
        return dir_ / name;
    }

    void write(const std::string& name, const std::string& text) { write_text_atomic(file(name), text); }

    void manifest(const std::string& command, const Json& config, const std::vector<std::string>& inputs,
                  std::chrono::steady_clock::time_point started) {
        Json m;
        m["command"] = command;
        m["tool_version"] = kVersion;
        m["config"] = config;
        m["seed"] = config.contains("seed") ? config["seed"] : Json(nullptr);
        m["inputs"] = inputs;
        m["outputs"] = outputs_;
        m["runtime_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_text_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::vector<std::string> outputs_;
};

// Numeric option values are recorded as JSON numbers.
Json typed(const std::string& text) {
    const char* end = text.data() + text.size();
    long long integer = 0;
    if (auto [ptr, ec] = std::from_chars(text.data(), end, integer); ec == std::errc() && ptr == end) return integer;
    double real = 0.0;
    if (auto [ptr, ec] = std::from_chars(text.data(), end, real); ec == std::errc() && ptr == end) return real;
    return text;
}

Json snapshot(const CLI::App* cmd) {
    Json out;
    for (const auto* opt : cmd->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        const auto& results = opt->results();
        if (!results.empty()) {
            if (results.size() == 1) {
                out[name] = typed(results.front());
            } else {
                for (const auto& r : results) out[name].push_back(typed(r));
            }
        } else if (!opt->get_default_str().empty()) {
            out[name] = typed(opt->get_default_str());
        }
    }
    return out;
}

// key=value lines; '#' starts a comment. Values fill options not given on the command line.
void apply_config_file(CLI::App* cmd, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file " + path.string());
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (strip(line).empty()) continue;
        if (eq == std::string::npos) throw FormatError("config line is not key=value", row);
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr) throw FormatError("unknown config key '" + key + "'", row);
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

std::vector<double> load_durations(const fs::path& path) {
    if (!fs::exists(path)) throw FormatError("input file not found: " + path.string());
    return read_series(path).series.durations;
}

std::string records_csv(const std::vector<ForecastRecord>& records) {
    std::string text = "event_index,window_id,predicted,realized,latent_state\n";
    for (const auto& r : records) {
        text += std::to_string(r.event_index) + ',' + std::to_string(r.window_id) + ',' + format_double(r.predicted) +
                ',' + format_double(r.realized) + ',' + format_double(r.latent_state) + '\n';
    }
    return text;
}

std::string pairs_csv(const std::string& header, const std::vector<std::pair<double, double>>& rows) {
    std::string text = header + "\n";
    for (const auto& [x, y] : rows) text += format_double(x) + ',' + format_double(y) + '\n';
    return text;
}

std::vector<std::pair<double, double>> acf_rows(const std::vector<double>& acf) {
    std::vector<std::pair<double, double>> rows;
    for (std::size_t k = 0; k < acf.size(); ++k) rows.emplace_back(static_cast<double>(k), acf[k]);
    return rows;
}

struct Combination {
    DynamicsFamily dynamics;
    ResidualFamily residual;
};

std::vector<Combination> table_combinations() {
    std::vector<Combination> out;
    for (auto d : {DynamicsFamily::SE, DynamicsFamily::ACD, DynamicsFamily::LogACD}) {
        for (auto r : {ResidualFamily::Exponential, ResidualFamily::Gamma, ResidualFamily::GenGamma,
                       ResidualFamily::Burr}) {
            out.push_back({d, r});
        }
    }
    out.push_back({DynamicsFamily::LogACI, ResidualFamily::Exponential});
    return out;
}

std::string summary_row(const FitResult& fit) {
    std::string row = fit.label() + ',' + format_double(fit.loglik) + ',' + (fit.converged ? "true" : "false");
    for (std::size_t i = 0; i < 5; ++i) {
        if (i < fit.params.size()) {
            row += ',' + fit.param_names[i] + ',' + format_double(fit.params[i]) + ',' +
                   (fit.std_errors_available() ? format_double(fit.std_errors[i]) : std::string("NA"));
        } else {
            row += ",,,";
        }
    }
    return row + '\n';
}

void print_error(const std::string& kind, const std::string& message) {
    Json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flexdur: observation-driven duration models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::string config_path;
    std::size_t jobs = 1;
    std::string out_dir{"."};

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value file; command-line flags take precedence");
        cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate durations from a model");
    ModelFlags sim_model;
    std::size_t sim_n = 10000;
    std::uint64_t sim_seed = 1;
    std::size_t sim_burn = 0;
    std::optional<double> sim_init;
    bool require_stable = false;
    sim_model.attach(sim);
    sim->add_option("-n,--n", sim_n, "number of durations")->capture_default_str();
    sim->add_option("--seed", sim_seed)->capture_default_str();
    sim->add_option("--burn-in", sim_burn)->capture_default_str();
    sim->add_option("--initial-state", sim_init);
    sim->add_flag("--require-stable", require_stable, "reject parameters outside the stationary region");
    add_common(sim);

    // fit
    auto* fitc = app.add_subcommand("fit", "maximum-likelihood fit");
    std::string fit_data;
    std::string fit_model{"single"};
    ModelFlags fit_family;
    FitFlags fit_flags;
    fitc->add_option("--data", fit_data, "series CSV")->required();
    fitc->add_option("--model", fit_model, "single | all | fi")->capture_default_str();
    fitc->add_option("--dynamics", fit_family.dynamics)->capture_default_str();
    fitc->add_option("--residual", fit_family.residual)->capture_default_str();
    fitc->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    fit_flags.attach(fitc);
    add_common(fitc);

    // backtest
    auto* bt = app.add_subcommand("backtest", "rolling-window estimation and forecasting");
    std::string bt_data;
    std::string bt_model{"single"};
    ModelFlags bt_family;
    FitFlags bt_flags;
    RollingConfig rolling;
    bt->add_option("--data", bt_data, "series CSV")->required();
    bt->add_option("--model", bt_model, "single | fi")->capture_default_str();
    bt->add_option("--dynamics", bt_family.dynamics)->capture_default_str();
    bt->add_option("--residual", bt_family.residual)->capture_default_str();
    bt->add_option("--window", rolling.window)->capture_default_str();
    bt->add_option("--horizon", rolling.horizon)->capture_default_str();
    bt->add_option("--step", rolling.step)->capture_default_str();
    bt->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    bt_flags.attach(bt);
    add_common(bt);

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "in-sample residual diagnostics of a fitted model");
    std::string diag_data, diag_fit;
    std::optional<double> diag_init;
    diag->add_option("--data", diag_data, "series CSV")->required();
    diag->add_option("--fit", diag_fit, "fit.json or model JSON")->required();
    diag->add_option("--initial-state", diag_init);
    add_common(diag);

    // describe
    auto* desc = app.add_subcommand("describe", "descriptive statistics of a duration series");
    std::string desc_data;
    desc->add_option("--data", desc_data, "series CSV")->required();
    add_common(desc);

    // build-durations
    auto* build = app.add_subcommand("build-durations", "one-tick mid-price durations from quotes");
    std::string build_events, build_factors;
    double tick = 0.01;
    build->add_option("--events", build_events, "quote CSV")->required();
    build->add_option("--tick", tick)->capture_default_str();
    build->add_option("--factors", build_factors, "optional time,factor CSV for deseasonalization");
    add_common(build);

    // gen-demo
    auto* demo = app.add_subcommand("gen-demo", "synthetic quote stream");
    std::size_t demo_events = 30000;
    std::uint64_t demo_seed = 1;
    double demo_tick = 0.01;
    demo->add_option("--events", demo_events, "number of one-tick events")->capture_default_str();
    demo->add_option("--tick", demo_tick)->capture_default_str();
    demo->add_option("--seed", demo_seed)->capture_default_str();
    add_common(demo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        CLI::App* cmd = app.get_subcommands().front();
        if (!config_path.empty()) apply_config_file(cmd, config_path);
        const Json config = snapshot(cmd);
        const std::string name = cmd->get_name();

        if (cmd == sim) {
            const ModelSpec model = sim_model.model();
            const auto stability = check_stability(model);
            if (require_stable && !stability.stable) {
                throw DomainError("parameters violate the stability condition (alpha < beta for SE, a + b1 < 1 for "
                                  "ACD, |b1| < 1 for log-ACI)");
            }
            SimulationOptions options;
            options.seed = sim_seed;
            options.burn_in = sim_burn;
            options.initial_state = sim_init;
            const auto series = simulate(model, sim_n, options);
            for (const auto& w : series.warnings) std::cerr << "warning: " << w << '\n';
            OutputDir out(out_dir);
            write_series(series, out.file("series.csv"));
            out.manifest(name, config, {}, started);
        } else if (cmd == fitc) {
            const auto durations = load_durations(fit_data);
            const FitConfig fc = fit_flags.config(jobs);
            OutputDir out(out_dir);
            if (fit_model == "all") {
                Json all = Json::array();
                std::string summary = "model,loglik,converged";
                for (int i = 1; i <= 5; ++i) {
                    summary += ",param" + std::to_string(i) + ",value" + std::to_string(i) + ",se" + std::to_string(i);
                }
                summary += '\n';
                for (const auto& c : table_combinations()) {
                    const auto result = fit(c.dynamics, c.residual, durations, fc);
                    summary += summary_row(result);
                    all.push_back(to_json(result));
                }
                const auto fi = fit_fi_logacd(durations, fc);
                summary += summary_row(fi);
                all.push_back(to_json(fi));
                out.write("fits.json", all.dump(2) + "\n");
                out.write("summary.csv", summary);
                std::cout << summary;
            } else {
                const auto result =
                    fit_model == "fi" ? fit_fi_logacd(durations, fc)
                    : fit_model == "single"
                        ? fit(parse_dynamics_family(fit_family.dynamics), parse_residual_family(fit_family.residual),
                              durations, fc)
                        : throw DomainError("--model must be single, all or fi");
                const auto json = to_json(result);
                out.write("fit.json", json.dump(2) + "\n");
                std::cout << json.dump(2) << '\n';
                if (!result.converged) std::cerr << "warning: fit did not reach the gradient tolerance\n";
            }
            out.manifest(name, config, {fit_data}, started);
        } else if (cmd == bt) {
            const auto durations = load_durations(bt_data);
            ModelChoice choice;
            if (bt_model == "fi") {
                choice = ModelChoice::fi_logacd();
            } else if (bt_model == "single") {
                choice = ModelChoice::observation(parse_dynamics_family(bt_family.dynamics),
                                                  parse_residual_family(bt_family.residual));
            } else {
                throw DomainError("--model must be single or fi");
            }
            const auto result = rolling_backtest(durations, choice, rolling, bt_flags.config(1), jobs);
            const auto report = diagnose_forecasts(result.records);
            std::vector<double> realized(result.records.size());
            for (std::size_t i = 0; i < realized.size(); ++i) realized[i] = result.records[i].realized;
            const auto baseline = forecast_metrics(result.baseline, realized);

            Json rep = to_json(report);
            rep["model"] = choice.label();
            rep["windows"] = result.window_fits.size();
            rep["unconverged_windows"] = result.unconverged_windows;
            rep["baseline_rrmse"] = baseline.rrmse;
            rep["baseline_r_squared"] = baseline.r_squared;
            OutputDir out(out_dir);
            out.write("forecasts.csv", records_csv(result.records));
            out.write("report.json", rep.dump(2) + "\n");
            out.manifest(name, config, {bt_data}, started);
            std::cout << "model,rRMSE,R2,KS,W\n"
                      << choice.label() << ',' << format_double(report.rrmse) << ','
                      << format_double(report.r_squared) << ',' << format_double(report.ks) << ','
                      << format_double(report.wasserstein) << '\n';
        } else if (cmd == diag) {
            const auto durations = load_durations(diag_data);
            std::ifstream in(diag_fit);
            if (!in) throw FormatError("input file not found: " + diag_fit);
            Json fitted;
            try {
                fitted = Json::parse(in);
            } catch (const Json::exception& e) {
                throw FormatError(std::string("invalid JSON in ") + diag_fit + ": " + e.what());
            }
            const auto model = fitted_model_from_json(fitted);
            std::vector<double> residuals;
            std::size_t clamped = 0;
            if (const auto* m = std::get_if<ModelSpec>(&model)) {
                const double init = diag_init.value_or(default_initial_state(m->dynamics()));
                auto er = exp_residuals(*m, durations, init);
                residuals = std::move(er.values);
                clamped = er.clamped;
            } else {
                const auto& spec = std::get<FiLogAcdSpec>(model);
                std::vector<double> logs(durations.size());
                for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log(durations[i]);
                const auto eps = fi_residuals(spec, logs);
                for (std::size_t i = spec.truncation_lag; i < eps.size(); ++i) {
                    double e = -std::log(0.5 * std::erfc(eps[i] / (spec.sigma * std::sqrt(2.0))));
                    if (!std::isfinite(e) || e > kMaxExpResidual) {
                        e = kMaxExpResidual;
                        ++clamped;
                    }
                    residuals.push_back(e);
                }
            }
            std::vector<std::pair<double, double>> pp(residuals.size());
            std::vector<double> u(residuals.size());
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = -std::expm1(-residuals[i]);
            std::sort(u.begin(), u.end());
            for (std::size_t i = 0; i < u.size(); ++i) {
                pp[i] = {u[i], (static_cast<double>(i) + 0.5) / static_cast<double>(u.size())};
            }
            std::vector<std::pair<double, double>> res_rows;
            for (std::size_t i = 0; i < residuals.size(); ++i) res_rows.emplace_back(static_cast<double>(i), residuals[i]);
            const auto acf = sample_acf(residuals, std::min<std::size_t>(20, residuals.size() - 1));

            Json rep;
            rep["model"] = to_json(model);
            rep["n"] = residuals.size();
            rep["ks"] = ks_statistic(residuals);
            rep["wasserstein"] = wasserstein_msq(residuals);
            rep["clamped_residuals"] = clamped;
            rep["residual_acf"] = acf;
            OutputDir out(out_dir);
            out.write("pp.csv", pairs_csv("model_cdf,uniform", pp));
            out.write("residuals.csv", pairs_csv("index,exp_residual", res_rows));
            out.write("acf.csv", pairs_csv("lag,acf", acf_rows(acf)));
            out.write("report.json", rep.dump(2) + "\n");
            out.manifest(name, config, {diag_data, diag_fit}, started);
            std::cout << rep.dump(2) << '\n';
        } else if (cmd == desc) {
            const auto durations = load_durations(desc_data);
            const auto stats = to_json(descriptive_stats(durations));
            OutputDir out(out_dir);
            out.write("describe.json", stats.dump(2) + "\n");
            out.manifest(name, config, {desc_data}, started);
            std::cout << stats.dump(2) << '\n';
        } else if (cmd == build) {
            if (!fs::exists(build_events)) throw FormatError("input file not found: " + build_events);
            const auto events = read_events(build_events);
            auto series = build_durations(events, tick);
            std::vector<std::string> inputs{build_events};
            if (!build_factors.empty()) {
                series = deseasonalize(series, read_factors(build_factors));
                inputs.push_back(build_factors);
            }
            OutputDir out(out_dir);
            write_series(series.series, out.file("series.csv"));
            Json cfg = config;
            cfg["quote_updates"] = series.quote_updates;
            cfg["durations"] = series.series.size();
            cfg["zero_durations_replaced"] = series.zero_durations_replaced;
            out.manifest(name, cfg, inputs, started);
            std::cout << series.series.size() << " durations from " << series.quote_updates << " quote updates\n";
        } else if (cmd == demo) {
            const auto events = generate_demo_events(demo_events, demo_tick, demo_seed);
            OutputDir out(out_dir);
            write_events(events, out.file("events.csv"));
            out.manifest(name, config, {}, started);
        }
    } catch (const DomainError& e) {
        print_error("validation", e.what());
        return 2;
    } catch (const FormatError& e) {
        print_error("format", e.what());
        return 2;
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    } catch (const NumericalError& e) {
        print_error("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 3;
    }
    return 0;
}
