#include "detnest/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "detnest/correlate.hpp"
#include "detnest/decode.hpp"
#include "detnest/nest.hpp"
#include "detnest/rng.hpp"
#include "detnest/simulate.hpp"

namespace detnest {

using nlohmann::json;
namespace fs = std::filesystem;

void PipelineConfig::validate() const {
    if (distance < 2) throw ConfigError("distance must be at least 2");
    if (rounds == 0) throw ConfigError("rounds must be at least 1");
    if (shards < 1) throw ConfigError("shards must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (rounds_per_trial < 1) throw ConfigError("rounds_per_trial must be at least 1");
    if (correlation_window < 0) throw ConfigError("correlation_window must be non-negative");
    if (output_dir.empty()) throw ConfigError("output_dir must be set");
    try {
        policy.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (truth_models.defaults.empty()) throw ConfigError("truth models missing");
    for (const auto& [kind, m] : truth_models.defaults) {
        try {
            m.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("truth model for ") + gate_kind_name(kind) + ": " +
                              e.what());
        }
    }
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    PipelineConfig c;
    try {
        if (j.at("schema").get<std::string>() != "pipeline.v1")
            throw ConfigError("expected schema pipeline.v1");
        c.distance = j.value("distance", 3);
        c.rounds = j.value("rounds", std::uint64_t{1000000});
        c.seed = j.at("seed").get<std::uint64_t>();  // no silent entropy
        c.shards = j.value("shards", 1);
        c.threads = j.value("threads", 1);
        c.include_square = j.value("include_square", true);
        if (j.contains("cluster_policy")) {
            const auto& p = j.at("cluster_policy");
            c.policy.space_cells = p.value("space_cells", 2);
            c.policy.time_rounds = p.value("time_rounds", 3);
            c.policy.max_cluster_size = p.value("max_cluster_size", 2);
        }
        c.parameterization =
            parameterization_from_name(j.value("parameterization", std::string("per-kind")));
        if (j.contains("truth_models_path"))
            c.truth_models = load_error_models(j.at("truth_models_path").get<std::string>());
        else
            c.truth_models = error_models_from_json(j.at("truth_models").dump());
        c.trials = j.value("trials", std::uint64_t{20000});
        c.rounds_per_trial = j.value("rounds_per_trial", std::uint64_t{10});
        c.correlation_window = j.value("correlation_window", 2);
        c.output_dir = j.value("output_dir", std::string("detnest-out"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

std::string PipelineConfig::to_json() const {
    json j;
    j["schema"] = "pipeline.v1";
    j["distance"] = distance;
    j["rounds"] = rounds;
    j["seed"] = seed;
    j["shards"] = shards;
    j["threads"] = threads;
    j["include_square"] = include_square;
    j["cluster_policy"] = {{"space_cells", policy.space_cells},
                           {"time_rounds", policy.time_rounds},
                           {"max_cluster_size", policy.max_cluster_size}};
    j["parameterization"] = parameterization_name(parameterization);
    j["truth_models"] = json::parse(error_models_to_json(truth_models));
    j["trials"] = trials;
    j["rounds_per_trial"] = rounds_per_trial;
    j["correlation_window"] = correlation_window;
    j["output_dir"] = output_dir;
    return j.dump(2);
}

namespace {

std::map<GateKind, GateErrorModel> kind_map(const ErrorModelSet& set) {
    std::map<GateKind, GateErrorModel> m;
    for (auto k : {GateKind::Init0, GateKind::Hadamard, GateKind::CZ, GateKind::IdleMemory,
                   GateKind::MeasureZ}) {
        auto it = set.defaults.find(k);
        m[k] = it != set.defaults.end() ? it->second : GateErrorModel::zero(k);
        m[k].kind = k;
    }
    return m;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text << '\n';
}

/// Injected rate for one fitted unknown, read back from the truth circuit.
double injected_rate_for(const ConstraintSystem::UnknownRef& ref, Parameterization param,
                         const std::vector<const Circuit*>& circuits) {
    switch (param) {
        case Parameterization::PerKindDepolarizing: {
            // Kind rate is shared; read it off the first circuit's defaults.
            for (const Circuit* c : circuits) {
                auto it = c->default_models.find(ref.kind);
                if (it != c->default_models.end()) return it->second.total();
            }
            return 0;
        }
        default: {
            for (const Circuit* c : circuits) {
                if (c->name != ref.circuit_name) continue;
                const GateErrorModel& m = c->model_for(c->gate(ref.gate_id));
                return ref.pauli.empty() ? m.total() : m.term(ref.pauli);
            }
            return 0;
        }
    }
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineConfig& config) {
    config.validate();
    fs::create_directories(config.output_dir);
    fs::path out(config.output_dir);

    auto started = std::chrono::system_clock::now();
    json report;
    json result;
    result["config"] = json::parse(config.to_json());

    auto truth_kinds = kind_map(config.truth_models);

    // Stage: circuits and analytic nests.
    Circuit rep, square;
    Nest rep_nest, sq_z_nest, sq_x_nest;
    try {
        rep = build_repetition_circuit(config.distance, truth_kinds);
        save_circuit(rep, (out / "repetition.circuit.json").string());
        rep_nest = build_nest(rep, StabilizerType::Z);
        save_nest(rep_nest, (out / "repetition.nest.json").string());
        write_file(out / "repetition.nestplot.json", nest_plot_json(rep_nest));
        if (config.include_square) {
            square = build_parity_square_circuit(truth_kinds);
            save_circuit(square, (out / "square.circuit.json").string());
            sq_z_nest = build_nest(square, StabilizerType::Z);
            sq_x_nest = build_nest(square, StabilizerType::X);
            save_nest(sq_z_nest, (out / "square.z.nest.json").string());
            save_nest(sq_x_nest, (out / "square.x.nest.json").string());
        }
    } catch (const std::exception& e) {
        throw StageError("build-nest", e.what());
    }

    // Stage: simulation.
    std::vector<MeasurementRecord> rep_records, sq_records;
    try {
        std::uint64_t shard_rounds = config.rounds / config.shards;
        rep_records = simulate_sharded(rep, shard_rounds, derive_seed(config.seed, 11),
                                       config.shards, config.threads);
        save_record(rep_records[0], (out / "repetition.mrec").string());
        write_file(out / "repetition.mrec.json", record_sidecar_json(rep_records[0]));
        if (config.include_square) {
            sq_records = simulate_sharded(square, shard_rounds, derive_seed(config.seed, 12),
                                          config.shards, config.threads);
            save_record(sq_records[0], (out / "square.mrec").string());
            write_file(out / "square.mrec.json", record_sidecar_json(sq_records[0]));
        }
    } catch (const std::exception& e) {
        throw StageError("simulate", e.what());
    }

    // Stage: extraction.
    EstimatedNest rep_est, sq_z_est, sq_x_est;
    try {
        std::vector<EstimatedNest> parts;
        for (const auto& r : rep_records) parts.push_back(estimate_nest(r, rep_nest, config.policy));
        rep_est = merge_estimates(parts);
        save_estimate(rep_est, (out / "repetition.est.json").string());
        if (config.include_square) {
            std::vector<EstimatedNest> zs, xs;
            for (const auto& r : sq_records) {
                zs.push_back(estimate_nest(r, sq_z_nest, config.policy));
                xs.push_back(estimate_nest(r, sq_x_nest, config.policy));
            }
            sq_z_est = merge_estimates(zs);
            sq_x_est = merge_estimates(xs);
            save_estimate(sq_z_est, (out / "square.z.est.json").string());
            save_estimate(sq_x_est, (out / "square.x.est.json").string());
        }
    } catch (const std::exception& e) {
        throw StageError("extract", e.what());
    }

    // Stage: inversion.
    ConstraintSystem system;
    FitResult fit;
    ErrorModelSet fitted;
    try {
        std::vector<NestPair> pairs = {{&rep_nest, &rep_est}};
        if (config.include_square) {
            pairs.push_back({&sq_z_nest, &sq_z_est});
            pairs.push_back({&sq_x_nest, &sq_x_est});
        }
        system = build_system(pairs, config.parameterization);
        fit = solve(system);
        fitted = fitted_models_for(system, fit, rep.name);
        write_file(out / "fitted.models.json", error_models_to_json(fitted));
        write_file(out / "fit.report.json", fit_report_json(system, fit));
    } catch (const std::exception& e) {
        throw StageError("invert", e.what());
    }

    // Stage: validation (observed truth vs fitted-model prediction).
    ComparisonReport verdict;
    try {
        LogicalTrialResult observed = logical_error_rate(
            rep, config.trials, config.rounds_per_trial, derive_seed(config.seed, 21));
        Circuit predicted_circuit = with_models(rep, fitted);
        LogicalTrialResult predicted =
            logical_error_rate(predicted_circuit, config.trials, config.rounds_per_trial,
                               derive_seed(config.seed, 22));
        verdict = compare_predicted_vs_observed(observed, predicted);
        write_file(out / "verdict.json", comparison_report_json(verdict));
    } catch (const std::exception& e) {
        throw StageError("validate", e.what());
    }

    // Stage: correlation (square record).
    if (config.include_square) {
        try {
            CrossCorrelationReport corr =
                cross_correlate(sq_records[0], square, config.correlation_window, config.policy);
            write_file(out / "correlation.json", cross_correlation_json(corr));
            AutocorrelationReport auto_rep =
                temporal_autocorrelate(sq_records[0], 5);
            write_file(out / "autocorrelation.json", autocorrelation_json(auto_rep));
        } catch (const std::exception& e) {
            throw StageError("correlate", e.what());
        }
    }

    // Recovered-vs-injected table and the statistical gate.
    std::vector<const Circuit*> circuits = {&rep};
    if (config.include_square) circuits.push_back(&square);

    bool recovery_ok = true;
    json table = json::array();
    for (size_t i = 0; i < system.cols(); ++i) {
        json row;
        row["parameter"] = system.unknown_names[i];
        row["identifiable"] = static_cast<bool>(fit.identifiable[i]);
        double injected = injected_rate_for(system.unknown_refs[i], config.parameterization,
                                            circuits);
        row["injected"] = injected;
        if (fit.identifiable[i]) {
            row["recovered"] = fit.rates[i];
            row["sigma"] = fit.sigmas[i];
            double dev = std::abs(fit.rates[i] - injected);
            bool ok = dev <= 3 * fit.sigmas[i];
            row["within_3_sigma"] = ok;
            recovery_ok &= ok;
        }
        table.push_back(row);
    }

    result["recovery"] = table;
    result["recovery_ok"] = recovery_ok;
    result["verdict"] = verdict_name(verdict.verdict);
    result["verdict_p_value"] = verdict.p_value;
    result["unidentifiable"] = fit.unidentifiable;
    result["fit_chi2"] = fit.chi2;
    result["fit_dof"] = fit.dof;
    result["fit_p_value"] = fit.p_value;
    result["artifacts"] = json::array();
    for (const auto& entry : fs::directory_iterator(out))
        if (entry.path().filename() != "report.json")
            result["artifacts"].push_back(entry.path().filename().string());
    std::sort(result["artifacts"].begin(), result["artifacts"].end());

    auto finished = std::chrono::system_clock::now();
    report["meta"] = {
        {"started_unix_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(started.time_since_epoch())
             .count()},
        {"elapsed_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(finished - started).count()},
    };
    report["result"] = result;

    PipelineOutcome outcome;
    outcome.recovery_ok = recovery_ok;
    outcome.verdict = verdict_name(verdict.verdict);
    outcome.exit_code = recovery_ok ? 0 : 4;
    outcome.report_json = report.dump(2);
    outcome.report_path = (out / "report.json").string();
    write_file(out / "report.json", outcome.report_json);
    return outcome;
}

}  // namespace detnest
