#include "bioinverse/cli.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bioinverse/errors.hpp"
#include "bioinverse/fem.hpp"
#include "bioinverse/io.hpp"
#include "bioinverse/threads.hpp"

namespace bioinverse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ParameterVector to_parameter_vector(const std::vector<double>& values) {
    ParameterVector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = values[i];
    return v;
}

std::unique_ptr<ForwardModel> load_model(const json& jm, const fs::path& base_dir) {
    const auto kind = jm.at("kind").get<std::string>();
    if (kind == "bump") {
        BumpModelConfig config;
        config.radius = jm.value("radius", config.radius);
        config.vertex_count = jm.value("vertex_count", config.vertex_count);
        return std::make_unique<BumpModel>(config);
    }
    if (kind == "fem") {
        if (!jm.contains("scenario"))
            throw ValidationError("fem model needs a 'scenario' entry");
        const auto& js = jm.at("scenario");
        FemScenario scenario =
            js.is_string() ? read_fem_scenario(base_dir / js.get<std::string>())
                           : fem_scenario_from_json(js, base_dir);
        return std::make_unique<FemModel>(std::move(scenario));
    }
    if (kind == "growth") {
        if (!jm.contains("curve") || !jm.contains("samples"))
            throw ValidationError("growth model needs 'curve' and 'samples' entries");
        const fs::path curve_path = base_dir / jm.at("curve").get<std::string>();
        fs::path sidecar = curve_path;
        sidecar.replace_extension(".json");
        if (jm.contains("sidecar"))
            sidecar = base_dir / jm.at("sidecar").get<std::string>();
        InterfaceCurve base = read_curve_csv(curve_path, sidecar);
        auto samples = read_samples_csv(base_dir / jm.at("samples").get<std::string>());
        const double dt_g = jm.value("dt_g", 86400.0);
        if (samples.size() != base.vertices.size())
            throw ValidationError("growth model needs one sample per curve vertex");
        return std::make_unique<GrowthModel>(std::move(base), std::move(samples), dt_g);
    }
    throw ValidationError("unknown model kind '" + kind + "'");
}

int exit_code_for(LMStatus status) {
    switch (status) {
    case LMStatus::converged_grad:
    case LMStatus::converged_res:
        return kExitOk;
    case LMStatus::mu_blowup:
        return kExitMuBlowup;
    case LMStatus::model_failure:
        return kExitModelFailure;
    case LMStatus::max_iterations:
        return kExitMaxIterations;
    }
    return kExitValidation;
}

Provenance make_provenance(const std::string& subcommand, const RunConfig& cfg) {
    Provenance prov;
    prov.subcommand = subcommand;
    prov.config_hash = cfg.config_hash;
    prov.seed = cfg.seed;
    prov.model_id = cfg.model->id();
    return prov;
}

// Shared error trap: validation problems exit 2, model breakdowns 4.
template <typename Fn> int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const MapDegenerate& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ModelFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModelFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

Observation make_level_observation(const RunConfig& cfg, std::size_t level) {
    return generate_observation(*cfg.model, cfg.theta_true, cfg.rays,
                                cfg.sigmas[level],
                                NoiseStream::derive(cfg.seed, level));
}

} // namespace

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in),
                            std::istreambuf_iterator<char>()};
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }

    try {
        RunConfig cfg;
        cfg.config_hash = "fnv1a64:" + fnv1a64_hex(bytes);
        cfg.model = load_model(j.at("model"), path.parent_path());

        std::set<std::string> seen;
        std::vector<double> lower, upper;
        for (const auto& p : j.at("parameters")) {
            const auto name = p.at("name").get<std::string>();
            if (!seen.insert(name).second)
                throw ValidationError("duplicate parameter name '" + name + "'");
            cfg.parameters.names.push_back(name);
            lower.push_back(p.at("lower").get<double>());
            upper.push_back(p.at("upper").get<double>());
            if (p.contains("unit"))
                cfg.parameters.units.push_back(p.at("unit").get<std::string>());
        }
        cfg.parameters.lower = to_parameter_vector(lower);
        cfg.parameters.upper = to_parameter_vector(upper);
        cfg.parameters.validate();
        if (cfg.parameters.names != cfg.model->parameter_names())
            throw ValidationError("parameter names do not match the model's (" +
                                  cfg.model->id() + ")");

        if (j.contains("lm")) {
            const auto& jl = j.at("lm");
            cfg.lm.alpha = jl.value("alpha", cfg.lm.alpha);
            cfg.lm.beta = jl.value("beta", cfg.lm.beta);
            cfg.lm.mu0 = jl.value("mu0", cfg.lm.mu0);
            cfg.lm.eps_grad = jl.value("eps_grad", cfg.lm.eps_grad);
            cfg.lm.eps_res = jl.value("eps_res", cfg.lm.eps_res);
            cfg.lm.n_max = jl.value("n_max", cfg.lm.n_max);
            cfg.lm.mu_blowup = jl.value("mu_blowup", cfg.lm.mu_blowup);
        }
        cfg.lm.validate();

        if (j.contains("rays")) {
            const auto& jr = j.at("rays");
            if (jr.contains("indices"))
                cfg.rays.indices = jr.at("indices").get<std::vector<std::size_t>>();
            cfg.rays.into_biofilm = jr.value("into_biofilm", true);
            if (jr.contains("max_length"))
                cfg.rays.max_length = jr.at("max_length").get<double>();
            if (jr.contains("directions")) {
                for (const auto& d : jr.at("directions"))
                    cfg.rays.directions.push_back(
                        {d.at(0).get<double>(), d.at(1).get<double>()});
                if (cfg.rays.directions.size() != cfg.rays.indices.size())
                    throw ValidationError("ray directions do not match the indices");
            }
        }

        cfg.sigmas = j.value("sigmas", std::vector<double>{});
        for (double s : cfg.sigmas)
            if (!(s >= 0.0))
                throw ValidationError("noise levels must be non-negative");

        cfg.seed = j.value("seed", std::uint64_t{0});

        if (j.contains("theta_true")) {
            cfg.theta_true =
                to_parameter_vector(j.at("theta_true").get<std::vector<double>>());
            if (cfg.theta_true.size() !=
                static_cast<Eigen::Index>(cfg.parameters.names.size()))
                throw ValidationError("theta_true does not match the parameter count");
        }

        if (j.contains("initial_guesses")) {
            for (const auto& g : j.at("initial_guesses")) {
                const auto guess = to_parameter_vector(g.get<std::vector<double>>());
                if (guess.size() !=
                    static_cast<Eigen::Index>(cfg.parameters.names.size()))
                    throw ValidationError("initial guess does not match the parameter count");
                if (!cfg.parameters.strictly_inside(guess))
                    throw ValidationError("initial guess lies outside the parameter box");
                cfg.initial_guesses.push_back(guess);
            }
        }

        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

int cmd_forward(const CliOptions& options) {
    return guarded([&] {
        RunConfig cfg = load_run_config(options.config);
        if (options.seed) cfg.seed = *options.seed;
        if (!options.theta) throw ValidationError("forward needs an evaluation point");
        const ParameterVector theta = to_parameter_vector(*options.theta);
        if (theta.size() != static_cast<Eigen::Index>(cfg.parameters.names.size()))
            throw ValidationError("evaluation point does not match the parameter count");
        const InterfaceCurve curve = cfg.model->evaluate(theta);
        fs::create_directories(options.out);
        const Provenance prov = make_provenance("forward", cfg);
        write_curve_csv(options.out / "interface.csv", curve, prov);
        write_curve_sidecar(options.out / "interface.json", curve, prov);
        return kExitOk;
    });
}

int cmd_synth(const CliOptions& options) {
    return guarded([&] {
        RunConfig cfg = load_run_config(options.config);
        if (options.seed) cfg.seed = *options.seed;
        if (cfg.sigmas.empty()) throw ValidationError("config lists no noise levels");
        if (cfg.theta_true.size() == 0)
            throw ValidationError("config has no theta_true");
        fs::create_directories(options.out);
        const Provenance prov = make_provenance("synth", cfg);
        for (std::size_t level = 0; level < cfg.sigmas.size(); ++level) {
            const Observation obs = make_level_observation(cfg, level);
            write_observation_json(
                options.out / ("obs_" + std::to_string(level) + ".json"), obs, prov);
        }
        return kExitOk;
    });
}

int cmd_invert(const CliOptions& options) {
    return guarded([&] {
        RunConfig cfg = load_run_config(options.config);
        if (options.seed) cfg.seed = *options.seed;
        const Observation obs = read_observation_json(options.observation);
        if (obs.provenance.model_id != cfg.model->id())
            throw ValidationError("observation was generated by model '" +
                                  obs.provenance.model_id + "', config uses '" +
                                  cfg.model->id() + "'");
        ParameterVector x0;
        if (options.theta) {
            x0 = to_parameter_vector(*options.theta);
        } else {
            if (cfg.initial_guesses.empty())
                throw ValidationError("no initial guess: pass one or add initial_guesses");
            x0 = cfg.initial_guesses.front();
        }
        const LMResult result =
            run(make_residual(*cfg.model, obs), x0, cfg.parameters, cfg.lm);
        fs::create_directories(options.out);
        const Provenance prov = make_provenance("invert", cfg);
        write_trace_csv(options.out / "trace.csv", result.trace, prov);
        write_result_json(options.out / "result.json", result, cfg.parameters.names, prov);
        return exit_code_for(result.status);
    });
}

int cmd_campaign(const CliOptions& options) {
    return guarded([&] {
        RunConfig cfg = load_run_config(options.config);
        if (options.seed) cfg.seed = *options.seed;
        if (cfg.sigmas.empty()) throw ValidationError("config lists no noise levels");
        if (cfg.initial_guesses.empty())
            throw ValidationError("config lists no initial guesses");
        if (cfg.theta_true.size() == 0)
            throw ValidationError("config has no theta_true");

        const std::size_t n_levels = cfg.sigmas.size();
        const std::size_t n_guesses = cfg.initial_guesses.size();
        std::vector<Observation> observations;
        observations.reserve(n_levels);
        for (std::size_t level = 0; level < n_levels; ++level)
            observations.push_back(make_level_observation(cfg, level));

        const fs::path runs_dir = options.out / "runs";
        fs::create_directories(runs_dir);
        auto run_dir_of = [&](std::size_t level, std::size_t guess) {
            return runs_dir /
                   ("L" + std::to_string(level) + "_g" + std::to_string(guess));
        };

        const std::size_t total = n_levels * n_guesses;
        std::vector<CampaignRun> runs(total);
        std::vector<std::size_t> fresh;
        for (std::size_t i = 0; i < total; ++i) {
            const std::size_t level = i / n_guesses;
            const std::size_t guess = i % n_guesses;
            runs[i].level = level;
            runs[i].guess = guess;
            runs[i].sigma = cfg.sigmas[level];
            LMResult previous;
            if (read_result_json(run_dir_of(level, guess) / "result.json", previous))
                runs[i].result = std::move(previous);
            else
                fresh.push_back(i);
        }

        const auto n_fresh = static_cast<std::ptrdiff_t>(fresh.size());
        std::exception_ptr first_error;
        std::ptrdiff_t first_error_index = n_fresh;
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
        for (std::ptrdiff_t f = 0; f < n_fresh; ++f) {
            try {
                const std::size_t i = fresh[static_cast<std::size_t>(f)];
                runs[i].result = run(
                    make_residual(*cfg.model, observations[runs[i].level]),
                    cfg.initial_guesses[runs[i].guess], cfg.parameters, cfg.lm);
            } catch (...) {
#pragma omp critical(bioinverse_cli_campaign_error)
                if (f < first_error_index) {
                    first_error_index = f;
                    first_error = std::current_exception();
                }
            }
        }
        if (first_error) std::rethrow_exception(first_error);

        const Provenance prov = make_provenance("campaign", cfg);
        for (std::size_t i : fresh) {
            const fs::path dir = run_dir_of(runs[i].level, runs[i].guess);
            fs::create_directories(dir);
            write_trace_csv(dir / "trace.csv", runs[i].result.trace, prov);
            write_result_json(dir / "result.json", runs[i].result,
                              cfg.parameters.names, prov);
        }

        const auto summary = summarize_campaign(
            runs, n_levels, static_cast<int>(cfg.parameters.names.size()));
        write_summary_csv(options.out / "summary.csv", summary,
                          cfg.parameters.names, prov);
        return kExitOk;
    });
}

int cmd_report(const CliOptions& options) {
    return guarded([&] {
        if (!fs::is_directory(options.run_dir))
            throw ValidationError("run directory not found: " + options.run_dir.string());
        std::vector<fs::path> traces;
        for (const auto& entry : fs::recursive_directory_iterator(options.run_dir))
            if (entry.is_regular_file() && entry.path().filename() == "trace.csv")
                traces.push_back(entry.path());
        std::sort(traces.begin(), traces.end());
        if (traces.empty())
            throw ValidationError("no traces under " + options.run_dir.string());

        Provenance prov;
        prov.subcommand = "report";
        if (!options.config.empty()) {
            const RunConfig cfg = load_run_config(options.config);
            prov.config_hash = cfg.config_hash;
            prov.seed = cfg.seed;
            prov.model_id = cfg.model->id();
        }

        fs::create_directories(options.out);
        std::size_t n_params = 0;
        std::vector<std::pair<std::string, std::vector<TraceRow>>> tidied;
        for (const auto& trace_path : traces) {
            const auto rows = read_trace_csv(trace_path);
            std::vector<TraceRow> tidy;
            int last_k = -1;
            for (const auto& row : rows) {
                if (row.k == last_k) continue;
                last_k = row.k;
                tidy.push_back(row);
                n_params = std::max(n_params, row.x.size());
            }
            const fs::path rel =
                fs::relative(trace_path.parent_path(), options.run_dir);
            std::string label = rel.generic_string();
            if (label == ".") {
                label = "root";
            } else {
                std::replace(label.begin(), label.end(), '/', '_');
            }
            tidied.emplace_back(label, std::move(tidy));
        }

        auto row_columns = [&](const TraceRow& row) {
            std::string text = std::to_string(row.k) + "," + fmt_g17(row.err_res) +
                               "," + fmt_g17(row.err_grad) + "," + fmt_g17(row.mu);
            for (std::size_t i = 0; i < n_params; ++i)
                text += "," + fmt_g17(i < row.x.size() ? row.x[i] : 0.0);
            return text;
        };
        std::string x_columns;
        for (std::size_t i = 0; i < n_params; ++i)
            x_columns += ",x_" + std::to_string(i);

        std::string merged = prov.comment_line() + "\nrun,k,err_res_mm,err_grad,mu" +
                             x_columns + "\n";
        for (const auto& [label, tidy] : tidied) {
            std::string text = prov.comment_line() + "\nk,err_res_mm,err_grad,mu" +
                               x_columns + "\n";
            for (const auto& row : tidy) {
                text += row_columns(row) + "\n";
                merged += label + "," + row_columns(row) + "\n";
            }
            std::ofstream out(options.out / ("tidy_" + label + ".csv"),
                              std::ios::binary);
            if (!out) throw ValidationError("cannot write tidy file for " + label);
            out << text;
        }
        std::ofstream out(options.out / "report_all.csv", std::ios::binary);
        if (!out)
            throw ValidationError("cannot write " +
                                  (options.out / "report_all.csv").string());
        out << merged;
        return kExitOk;
    });
}

} // namespace bioinverse
