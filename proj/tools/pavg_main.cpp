#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pavg/avgmat_oracle.hpp"
#include "pavg/config.hpp"
#include "pavg/data_gen.hpp"
#include "pavg/engine.hpp"
#include "pavg/metrics.hpp"
#include "pavg/runio.hpp"
#include "pavg/theory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitVerification = 2;
constexpr int kExitNumeric = 3;

pavg::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    pavg::Config cfg = pavg::Config::from_file(path);
    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw pavg::ConfigError("--set expects section.key=value, got '" + item + "'");
        cfg.set(item.substr(0, eq), item.substr(eq + 1));
    }
    return cfg;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    pavg::Config cfg = load_config(config_path, overrides);
    pavg::BuiltRun built = pavg::build_run(cfg);
    const auto outputs = pavg::execute_all(built);
    for (const auto& out : outputs) {
        std::printf("run %s\n", out.directory.c_str());
        std::printf("  iter.csv  fnv64:%s\n", pavg::hash_hex(out.iter_hash).c_str());
        std::printf("  round.csv fnv64:%s\n", pavg::hash_hex(out.round_hash).c_str());
        std::printf("  final loss %.17g\n", out.result.metrics.rounds.empty()
                                                ? out.result.metrics.iterations.back().global_loss
                                                : out.result.metrics.rounds.back().global_loss);
    }
    return kExitOk;
}

int cmd_verify_matrices(std::size_t m_min, std::size_t m_max, std::size_t dj_min,
                        std::size_t dj_max) {
    using pavg::Matrix;
    bool ok = true;
    for (std::size_t m = m_min; m <= m_max; ++m) {
        for (std::size_t dj = dj_min; dj <= dj_max; ++dj) {
            const Matrix j_mat = pavg::build_J(m, dj);
            const std::vector<Matrix> seq = {Matrix::identity(m * dj), j_mat,
                                             pavg::build_P(m, dj, 1, 1, 2),
                                             pavg::build_P(m, dj, 1, 2, 2)};
            const auto prop = pavg::check_properties(seq, j_mat);
            const auto spec = pavg::spectral_check(m, dj);
            const bool pass = prop.ok && spec.ok;
            ok = ok && pass;
            std::printf("m=%zu d_j=%zu properties max_dev=%.3e op_norm=%.12f %s\n", m, dj,
                        prop.max_deviation, spec.operator_norm, pass ? "ok" : "VIOLATION");
            if (!prop.ok) std::printf("  failing property: %s\n", prop.failing_property.c_str());
            if (!spec.ok) std::printf("  spectral: %s\n", spec.diagnostic.c_str());
        }
    }

    // worked 4x4 example: d = 3, tau = 2, m = 2, block sizes (2, 1)
    Matrix expected(4, 4);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) expected(r, c) = (r % 2 == c % 2) ? 0.5 : 0.0;
    const Matrix p00 = pavg::build_P(2, 2, 1, 1, 2);
    const Matrix p01 = pavg::build_P(2, 2, 1, 2, 2);
    const bool example_ok = p00 == expected && p01 == Matrix::identity(4) &&
                            (p00 * std::vector<double>{1, 2, 3, 4}) ==
                                std::vector<double>{2, 3, 2, 3};
    ok = ok && example_ok;
    std::printf("4x4 example matrices and worked product: %s\n", example_ok ? "ok" : "VIOLATION");

    std::printf("verify-matrices: %s\n", ok ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitVerification;
}

int cmd_check_bound(const std::string& config_path, const std::vector<std::string>& overrides,
                    std::size_t reps) {
    pavg::Config cfg = load_config(config_path, overrides);
    pavg::BuiltRun built = pavg::build_run(cfg);
    if (!built.sim.objective->spec().sigma_known)
        throw pavg::ConfigError(
            "check-bound needs the quadratic carrier (exact sigma_j); got another objective");

    const pavg::TheoryInputs inputs = pavg::theory_inputs_for(built.sim);
    const auto check = pavg::lr_constraint_iid(inputs.l_max(), inputs.tau, inputs.eta);
    std::printf("eta=%.6g  L_max=%.6g  tau=%zu  constraint slack=%.6g  speedup regime (K>m^3): %s\n",
                inputs.eta, inputs.l_max(), inputs.tau, check.slack,
                pavg::linear_speedup_regime(inputs.workers, inputs.iterations) ? "yes" : "no");
    const auto bound = pavg::bound_rhs_iid(inputs);
    if (!bound.valid) {
        std::printf("refused: %s\n", bound.reason.c_str());
        return kExitConfig;
    }
    const double measured = pavg::measured_avg_grad_sq(built.sim, reps);
    std::printf("bound terms: optimization %.6g, noise/m %.6g, discrepancy %.6g\n",
                bound.terms[0], bound.terms[1], bound.terms[2]);
    std::printf("measured LHS (seed-mean over %zu runs) %.6g  <=  bound RHS %.6g : %s\n", reps,
                measured, bound.total, measured <= bound.total ? "PASS" : "FAIL");

    if (built.sim.objective->spec().dissimilarity_known) {
        const auto niid = pavg::bound_rhs_niid(inputs);
        const auto caps =
            pavg::lr_constraint_niid(inputs.l_max(), inputs.tau, inputs.beta_sq_max(), inputs.eta);
        std::printf("theorem-2 caps: main %.6g appendix %.6g; RHS main-form %.6g appendix-form %.6g\n",
                    caps.cap_main, caps.cap_appendix, niid.valid ? niid.total : 0.0,
                    niid.valid ? niid.total_alternate : 0.0);
    }
    return measured <= bound.total ? kExitOk : kExitVerification;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& overrides,
                const std::string& out_path) {
    auto run_scheme = [&](const std::string& scheme) {
        pavg::Config cfg = load_config(config_path, overrides);
        cfg.set("scheme", scheme);
        pavg::BuiltRun built = pavg::build_run(cfg);
        return pavg::run(built.sim);
    };
    const pavg::RunResult periodic = run_scheme("periodic");
    const pavg::RunResult partial = run_scheme("partial");
    const auto& pi = periodic.metrics.iterations;
    const auto& pa = partial.metrics.iterations;

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw pavg::ConfigError("cannot write " + out_path);
    out << "k,periodic_loss,partial_loss,periodic_mean_disc,partial_mean_disc,"
           "periodic_cum_scalars,partial_cum_scalars,periodic_cum_events,partial_cum_events\n";
    char buf[256];
    double max_disc_periodic = 0.0, max_disc_partial = 0.0;
    for (std::size_t t = 0; t < pi.size() && t < pa.size(); ++t) {
        max_disc_periodic = std::max(max_disc_periodic, pi[t].mean_discrepancy);
        max_disc_partial = std::max(max_disc_partial, pa[t].mean_discrepancy);
        std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%.17g,%.17g,%llu,%llu,%llu,%llu\n",
                      static_cast<unsigned long long>(pi[t].k), pi[t].global_loss,
                      pa[t].global_loss, pi[t].mean_discrepancy, pa[t].mean_discrepancy,
                      static_cast<unsigned long long>(pi[t].cum_scalars),
                      static_cast<unsigned long long>(pa[t].cum_scalars),
                      static_cast<unsigned long long>(pi[t].cum_events),
                      static_cast<unsigned long long>(pa[t].cum_events));
        out << buf;
    }
    const double final_gap = pi.back().global_loss - pa.back().global_loss;
    std::printf("compare: wrote %s\n", out_path.c_str());
    std::printf("max mean discrepancy: periodic %.6g, partial %.6g, ratio %.6g\n",
                max_disc_periodic, max_disc_partial,
                max_disc_partial > 0.0 ? max_disc_periodic / max_disc_partial : 0.0);
    std::printf("final loss gap (periodic - partial): %.6g\n", final_gap);
    std::printf("scalars transferred: periodic %llu, partial %llu; events %llu vs %llu\n",
                static_cast<unsigned long long>(periodic.metrics.cost.scalars),
                static_cast<unsigned long long>(partial.metrics.cost.scalars),
                static_cast<unsigned long long>(periodic.metrics.cost.events),
                static_cast<unsigned long long>(partial.metrics.cost.events));
    return kExitOk;
}

int cmd_export_split(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& out_path) {
    pavg::Config cfg = load_config(config_path, overrides);
    const std::size_t m = cfg.get_size("m", 1);
    const std::uint64_t seed = cfg.get_u64("seed", 0);
    const std::uint64_t data_seed = cfg.get_u64("data.seed", seed);
    const std::string split_kind = cfg.get_string("data.split", "iid");

    // labels from the configured dataset, or synthetic balanced classes
    std::vector<int> labels;
    const std::string dataset = cfg.get_string("objective.dataset", "");
    if (!dataset.empty()) {
        const pavg::Dataset data = pavg::load_csv_dataset(dataset);
        labels.reserve(data.size());
        for (double l : data.labels) labels.push_back(static_cast<int>(l));
    } else {
        const std::size_t classes = cfg.get_size("data.classes", 10);
        const std::size_t samples = cfg.get_size("data.samples", 1000);
        labels.resize(samples);
        for (std::size_t s = 0; s < samples; ++s) labels[s] = static_cast<int>(s % classes);
    }

    pavg::RngStream rng = pavg::derive_stream(data_seed, 0x5EED);
    pavg::FederatedSplit split;
    if (split_kind == "iid") {
        split = pavg::split_iid(labels.size(), m, rng);
    } else if (split_kind == "dirichlet") {
        const double alpha = cfg.get_double("data.alpha", 0.5);
        const std::size_t min_per = cfg.get_size("data.min_per_worker", 1);
        const int retries = static_cast<int>(cfg.get_u64("data.retries", 100));
        split = pavg::split_dirichlet(labels, m, alpha, min_per, rng, retries);
    } else {
        throw pavg::ConfigError("key 'data.split': expected iid|dirichlet");
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw pavg::ConfigError("cannot write " + out_path);
    pavg::save_split(out, split);
    const auto report = pavg::heterogeneity_report(split, labels);
    std::printf("export-split: %zu workers, %zu samples, mean TV distance %.4f -> %s\n",
                split.workers(), split.total_samples(), report.mean_tv, out_path.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic local SGD simulator: sync, periodic and partial model averaging"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::vector<std::string> overrides;
    std::size_t reps = 10;
    std::size_t m_min = 2, m_max = 4, dj_min = 1, dj_max = 3;

    auto* c_run = app.add_subcommand("run", "run an experiment from a config file");
    c_run->add_option("--config", config_path, "config file path")->required();
    c_run->add_option("--set", overrides, "override keys, e.g. --set scheme.tau=8");

    auto* c_verify = app.add_subcommand("verify-matrices", "averaging-matrix property suite");
    c_verify->add_option("--m-min", m_min);
    c_verify->add_option("--m-max", m_max);
    c_verify->add_option("--dj-min", dj_min);
    c_verify->add_option("--dj-max", dj_max);

    auto* c_bound = app.add_subcommand("check-bound", "seeded-mean convergence-bound check");
    c_bound->add_option("--config", config_path)->required();
    c_bound->add_option("--set", overrides);
    c_bound->add_option("--reps", reps, "number of seeds to average over");

    auto* c_compare = app.add_subcommand("compare", "periodic vs partial on matched seeds");
    c_compare->add_option("--config", config_path)->required();
    c_compare->add_option("--set", overrides);
    c_compare->add_option("--out", out_path, "joined CSV path")->default_val("compare.csv");

    auto* c_split = app.add_subcommand("export-split", "write a federated split as TSV");
    c_split->add_option("--config", config_path)->required();
    c_split->add_option("--set", overrides);
    c_split->add_option("--out", out_path, "split file path")->default_val("split.tsv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) return cmd_run(config_path, overrides);
        if (c_verify->parsed()) return cmd_verify_matrices(m_min, m_max, dj_min, dj_max);
        if (c_bound->parsed()) return cmd_check_bound(config_path, overrides, reps);
        if (c_compare->parsed()) return cmd_compare(config_path, overrides, out_path);
        if (c_split->parsed()) return cmd_export_split(config_path, overrides, out_path);
    } catch (const pavg::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const pavg::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
