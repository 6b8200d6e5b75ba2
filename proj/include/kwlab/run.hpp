#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kwlab/config.hpp"
#include "kwlab/continuation.hpp"
#include "kwlab/eigen.hpp"
#include "kwlab/energy.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/io.hpp"
#include "kwlab/mesh.hpp"
#include "kwlab/mountain_pass.hpp"
#include "kwlab/problem.hpp"
#include "kwlab/solvers.hpp"
#include "kwlab/torus.hpp"

namespace kw {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit protocol: 0 completed, 1 hard error (bad input, certified
// impossibility, broken invariant), 2 completed-but-unconverged (budget ran
// out or instance judged unsolvable by exhaustion).
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

using ordered_json = nlohmann::ordered_json;

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "output.dir",
        "domain.kind", "domain.resolution", "domain.length", "domain.operator", "domain.mesh",
        "weight.family", "weight.value", "weight.amplitude", "weight.offset", "weight.sigma",
        "weight.mean", "weight.path",
        "problem.alpha",
        "solver.tol", "solver.max_iter", "solver.inner_tol", "solver.inner_max_iter",
        "solver.newton_max_iter",
        "eigen.tol", "eigen.max_iter",
        "pass.nodes", "pass.eps_factor", "pass.relax_tol", "pass.max_sweeps", "pass.t_cap",
        "pass.distinct_tol", "pass.trace",
        "sweep.alphas",
        "alpha0.lo", "alpha0.hi", "alpha0.width_tol", "alpha0.max_probes",
        "manufacture.family", "manufacture.value", "manufacture.amplitude",
        "manufacture.offset", "manufacture.sigma", "manufacture.mean",
        "spectrum.field",
    };
    return keys;
}

inline DomainPtr build_domain(const Config& cfg) {
    const std::string kind = cfg.get_string("domain.kind", "torus");
    if (kind == "torus") {
        const long n = cfg.get_long("domain.resolution", 64);
        const double length = cfg.get_double("domain.length", 1.0);
        const std::string op = cfg.get_string("domain.operator", "spectral");
        TorusGrid::Backend backend;
        if (op == "spectral")
            backend = TorusGrid::Backend::spectral;
        else if (op == "fd")
            backend = TorusGrid::Backend::fd;
        else
            throw error(errc::invalid_argument, "domain.operator must be spectral or fd");
        if (n < 4) throw error(errc::invalid_argument, "domain.resolution too small");
        return std::make_shared<TorusGrid>(static_cast<std::size_t>(n), length, backend);
    }
    if (kind == "mesh") {
        return TriangleMesh::load_off(cfg.require_string("domain.mesh"));
    }
    throw error(errc::invalid_argument, "domain.kind must be torus or mesh");
}

inline ScalarField build_family_field(const Config& cfg, const DomainPtr& dom,
                                      const std::string& prefix) {
    const std::string family = cfg.require_string(prefix + ".family");
    if (family == "constant")
        return constant_field(dom, cfg.require_double(prefix + ".value"));
    if (family == "cosine")
        return cosine_field(dom, cfg.get_double(prefix + ".amplitude", 1.0),
                            cfg.get_double(prefix + ".offset", 0.0));
    if (family == "two-bumps")
        return two_bumps_field(dom, cfg.get_double(prefix + ".amplitude", 1.0),
                               cfg.get_double(prefix + ".sigma", 0.1),
                               cfg.get_double(prefix + ".mean", -0.2));
    if (family == "file") {
        if (prefix != "weight")
            throw error(errc::invalid_argument, prefix + ".family cannot be 'file'");
        return read_field(cfg.require_string("weight.path"), dom);
    }
    throw error(errc::invalid_argument,
                prefix + ".family must be constant, cosine, two-bumps" +
                    (prefix == "weight" ? ", or file" : ""));
}

inline SolveOptions solve_options(const Config& cfg, const DomainPtr& dom) {
    SolveOptions o;
    const bool mesh = dynamic_cast<const TriangleMesh*>(dom.get()) != nullptr;
    o.tol = cfg.get_double("solver.tol", mesh ? 1e-8 : 1e-10);
    o.max_iter = static_cast<std::size_t>(cfg.get_long("solver.max_iter", 2000));
    o.inner_tol = cfg.get_double("solver.inner_tol", 1e-12);
    o.inner_max_iter = static_cast<std::size_t>(cfg.get_long("solver.inner_max_iter", 0));
    return o;
}

inline EigenOptions eigen_options(const Config& cfg) {
    EigenOptions o;
    o.tol = cfg.get_double("eigen.tol", 1e-9);
    o.max_iter = static_cast<std::size_t>(cfg.get_long("eigen.max_iter", 500));
    return o;
}

inline ContinuationOptions continuation_options(const Config& cfg, const DomainPtr& dom) {
    ContinuationOptions o;
    o.solve = solve_options(cfg, dom);
    o.newton_max_iter = static_cast<std::size_t>(cfg.get_long("solver.newton_max_iter", 40));
    o.eigen = eigen_options(cfg);
    return o;
}

inline MountainPassOptions pass_options(const Config& cfg, const DomainPtr& dom) {
    MountainPassOptions o;
    o.nodes = static_cast<std::size_t>(cfg.get_long("pass.nodes", 21));
    o.eps_factor = cfg.get_double("pass.eps_factor", 0.1);
    o.relax_tol = cfg.get_double("pass.relax_tol", 1e-5);
    o.max_sweeps = static_cast<std::size_t>(cfg.get_long("pass.max_sweeps", 4000));
    o.t_cap = cfg.get_double("pass.t_cap", 1e6);
    o.distinct_tol = cfg.get_double("pass.distinct_tol", 0.1);
    o.newton = solve_options(cfg, dom);
    o.newton.max_iter = static_cast<std::size_t>(cfg.get_long("solver.newton_max_iter", 40));
    return o;
}

inline ordered_json record_json(const SolutionRecord& rec) {
    ordered_json j;
    j["method"] = rec.method;
    j["residual_linf"] = rec.residual;
    j["identity_gap"] = rec.gap;
    j["energy_F"] = rec.energy_value;
    if (rec.lambda_min)
        j["lambda_min"] = *rec.lambda_min;
    else
        j["lambda_min"] = nullptr;
    j["iterations"] = rec.iterations;
    j["converged"] = rec.converged;
    return j;
}

inline ordered_json validation_json(const ValidationReport& v) {
    ordered_json j;
    j["k_min"] = v.k_min;
    j["k_max"] = v.k_max;
    j["k_mean"] = v.k_mean;
    j["sign_changing"] = v.sign_changing;
    j["admissible_for_two_solutions"] = v.admissible_for_two_solutions;
    return j;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Shared state for one CLI run.
class Run {
public:
    Run(std::string command, const std::string& config_path, std::string output_override)
        : command_(std::move(command)),
          cfg_(Config::parse_file(config_path, known_config_keys())) {
        out_dir_ = output_override.empty() ? cfg_.get_string("output.dir", "out")
                                           : std::move(output_override);
        std::filesystem::create_directories(out_dir_);
        doc_["tool"] = "kwlab";
        doc_["version"] = kToolVersion;
        doc_["command"] = command_;
        doc_["timestamp"] = utc_timestamp();
        ordered_json cfg_echo;
        for (const auto& [k, v] : cfg_.entries()) cfg_echo[k] = v;
        doc_["config"] = std::move(cfg_echo);
    }

    int execute() {
        if (command_ == "validate") return cmd_validate();
        if (command_ == "solve-min") return cmd_solve_min();
        if (command_ == "solve-second") return cmd_solve_second();
        if (command_ == "sweep") return cmd_sweep();
        if (command_ == "alpha0") return cmd_alpha0();
        if (command_ == "spectrum") return cmd_spectrum();
        if (command_ == "manufacture") return cmd_manufacture();
        throw error(errc::invalid_argument, "unknown command '" + command_ + "'");
    }

private:
    std::string artifact(const std::string& name) const { return out_dir_ + "/" + name; }

    void flush_doc() {
        std::ofstream out(artifact("run.json"));
        if (!out) throw error(errc::io_error, "cannot write run.json");
        out << doc_.dump(2) << "\n";
    }

    std::pair<DomainPtr, ScalarField> instance() {
        DomainPtr dom = build_domain(cfg_);
        ScalarField k = build_family_field(cfg_, dom, "weight");
        doc_["domain"] = dom->describe();
        return {std::move(dom), std::move(k)};
    }

    int cmd_validate() {
        auto [dom, k] = instance();
        const double alpha = cfg_.get_double("problem.alpha", -1.0);
        doc_["validation"] = validation_json(validate_raw(k, alpha));
        flush_doc();
        return kExitOk;
    }

    int cmd_solve_min() {
        auto [dom, k] = instance();
        const double alpha = cfg_.require_double("problem.alpha");
        doc_["validation"] = validation_json(validate_raw(k, alpha));
        SweepEntry entry = first_solution(dom, k, alpha, continuation_options(cfg_, dom));
        ordered_json records = ordered_json::array();
        int code = kExitOk;
        ordered_json artifacts;
        if (entry.solvable) {
            records.push_back(record_json(*entry.record));
            write_field(artifact("u1.kwf"), entry.record->u);
            artifacts["u1"] = "u1.kwf";
            if (!entry.record->converged) code = kExitNotConverged;
        } else {
            doc_["unsolvable"] = true;
            code = kExitNotConverged;
        }
        doc_["records"] = std::move(records);
        doc_["artifacts"] = std::move(artifacts);
        flush_doc();
        return code;
    }

    int cmd_solve_second() {
        auto [dom, k] = instance();
        const double alpha = cfg_.require_double("problem.alpha");
        doc_["validation"] = validation_json(validate_raw(k, alpha));
        ContinuationOptions copts = continuation_options(cfg_, dom);
        SweepEntry entry = first_solution(dom, k, alpha, copts);
        if (!entry.solvable) {
            doc_["unsolvable"] = true;
            doc_["records"] = ordered_json::array();
            flush_doc();
            return kExitNotConverged;
        }
        ProblemSpec spec(dom, k, alpha);
        MountainPassOptions mopts = pass_options(cfg_, dom);
        SecondSolutionResult second = second_solution(spec, entry.record->u, mopts);
        EigenResult eig2 = principal_eigenpair(spec, second.record.u, copts.eigen);
        if (eig2.converged) second.record.lambda_min = eig2.lambda;

        ordered_json records = ordered_json::array();
        records.push_back(record_json(*entry.record));
        records.push_back(record_json(second.record));
        doc_["records"] = std::move(records);

        ordered_json pass;
        pass["t0"] = second.pass.t0;
        pass["level"] = second.pass.level;
        pass["peak_index"] = second.pass.peak_index;
        pass["sweeps"] = second.pass.sweeps;
        pass["j_path"] = second.pass.j_path;
        pass["separation_linf"] = linf(second.record.u - entry.record->u);
        pass["energy_gap"] = second.record.energy_value - entry.record->energy_value;
        doc_["pass"] = std::move(pass);

        ordered_json artifacts;
        write_field(artifact("u1.kwf"), entry.record->u);
        write_field(artifact("u2.kwf"), second.record.u);
        artifacts["u1"] = "u1.kwf";
        artifacts["u2"] = "u2.kwf";
        if (cfg_.get_bool("pass.trace", false)) {
            std::ofstream tr(artifact("trace.csv"));
            tr << "sweep,peak,j_peak,grad_norm\n";
            char line[128];
            for (const auto& row : second.pass.trace) {
                std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g\n", row.sweep, row.peak,
                              row.j_peak, row.grad_norm);
                tr << line;
            }
            artifacts["trace"] = "trace.csv";
        }
        doc_["artifacts"] = std::move(artifacts);
        flush_doc();
        const bool ok = entry.record->converged && second.record.converged;
        return ok ? kExitOk : kExitNotConverged;
    }

    int cmd_sweep() {
        auto [dom, k] = instance();
        const std::vector<double> alphas = cfg_.require_double_list("sweep.alphas");
        auto entries = alpha_sweep(dom, k, alphas, continuation_options(cfg_, dom));

        ordered_json table = ordered_json::array();
        std::ofstream csv(artifact("sweep.csv"));
        csv << "alpha,solvable,strategy,residual_linf,identity_gap,energy_F,lambda_min,"
               "iterations,converged\n";
        for (const auto& e : entries) {
            ordered_json row;
            row["alpha"] = e.alpha;
            row["solvable"] = e.solvable;
            row["strategy"] = e.strategy;
            if (e.record) row["record"] = record_json(*e.record);
            table.push_back(std::move(row));
            char line[256];
            if (e.record) {
                std::snprintf(line, sizeof line, "%.17g,%d,%s,%.17g,%.17g,%.17g,%.17g,%zu,%d\n",
                              e.alpha, e.solvable ? 1 : 0, e.strategy.c_str(),
                              e.record->residual, e.record->gap, e.record->energy_value,
                              e.record->lambda_min.value_or(std::nan("")),
                              e.record->iterations, e.record->converged ? 1 : 0);
            } else {
                std::snprintf(line, sizeof line, "%.17g,%d,%s,,,,,,\n", e.alpha,
                              e.solvable ? 1 : 0, e.strategy.c_str());
            }
            csv << line;
        }
        doc_["sweep"] = std::move(table);
        doc_["artifacts"] = ordered_json{{"sweep", "sweep.csv"}};
        flush_doc();
        return kExitOk;
    }

    int cmd_alpha0() {
        auto [dom, k] = instance();
        const double lo = cfg_.require_double("alpha0.lo");
        const double hi = cfg_.require_double("alpha0.hi");
        const double width = cfg_.get_double("alpha0.width_tol", 0.01);
        const auto max_probes =
            static_cast<std::size_t>(cfg_.get_long("alpha0.max_probes", 48));
        ThresholdEstimate est = estimate_critical_alpha(dom, k, lo, hi, width,
                                                        continuation_options(cfg_, dom),
                                                        max_probes);
        ordered_json block;
        block["lo"] = est.lo;
        block["hi"] = est.hi;
        block["width"] = est.hi - est.lo;
        block["probes"] = est.probes;
        ordered_json transcript = ordered_json::array();
        for (const auto& e : est.transcript) {
            ordered_json row;
            row["alpha"] = e.alpha;
            row["solvable"] = e.solvable;
            row["strategy"] = e.strategy;
            if (e.record) row["record"] = record_json(*e.record);
            transcript.push_back(std::move(row));
        }
        block["transcript"] = std::move(transcript);
        doc_["threshold"] = std::move(block);
        flush_doc();
        return kExitOk;
    }

    int cmd_spectrum() {
        auto [dom, k] = instance();
        const double alpha = cfg_.require_double("problem.alpha");
        ProblemSpec spec(dom, k, alpha);
        ScalarField state(dom);
        ordered_json records = ordered_json::array();
        if (cfg_.has("spectrum.field")) {
            state = read_field(cfg_.require_string("spectrum.field"), dom);
        } else {
            SweepEntry entry = first_solution(dom, k, alpha, continuation_options(cfg_, dom));
            if (!entry.solvable) {
                doc_["unsolvable"] = true;
                flush_doc();
                return kExitNotConverged;
            }
            state = entry.record->u;
            records.push_back(record_json(*entry.record));
        }
        EigenResult eig = principal_eigenpair(spec, state, eigen_options(cfg_));
        ordered_json block;
        block["lambda_min"] = eig.lambda;
        block["iterations"] = eig.iterations;
        block["converged"] = eig.converged;
        block["rayleigh_check"] = second_variation(spec, state, eig.phi);
        doc_["spectrum"] = std::move(block);
        doc_["records"] = std::move(records);
        write_field(artifact("phi.kwf"), eig.phi);
        write_field(artifact("state.kwf"), state);
        doc_["artifacts"] = ordered_json{{"phi", "phi.kwf"}, {"state", "state.kwf"}};
        flush_doc();
        return eig.converged ? kExitOk : kExitNotConverged;
    }

    int cmd_manufacture() {
        DomainPtr dom = build_domain(cfg_);
        doc_["domain"] = dom->describe();
        const double alpha = cfg_.require_double("problem.alpha");
        ScalarField u_star = build_family_field(cfg_, dom, "manufacture");
        ScalarField k = manufactured_weight(u_star, alpha);
        ProblemSpec spec(dom, k, alpha);
        doc_["validation"] = validation_json(validate_spec(spec));
        doc_["manufacture"] =
            ordered_json{{"residual_linf", residual_linf(spec, u_star)},
                         {"identity_gap", identity_gap(spec, u_star)}};
        write_field(artifact("k.kwf"), k);
        write_field(artifact("u_star.kwf"), u_star);
        doc_["artifacts"] = ordered_json{{"k", "k.kwf"}, {"u_star", "u_star.kwf"}};
        flush_doc();
        return kExitOk;
    }

    std::string command_;
    Config cfg_;
    std::string out_dir_;
    ordered_json doc_;
};

} // namespace kw
