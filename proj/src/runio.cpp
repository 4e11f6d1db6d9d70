#include "pavg/runio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pavg/metrics.hpp"

namespace pavg {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << bytes;
}

} // namespace

RunOutputs execute_repetition(const BuiltRun& run, std::size_t rep) {
    SimConfig sim = run.sim;
    sim.seed = run.sim.seed + rep;

    // manifest config: this exact repetition, directly rerunnable
    std::map<std::string, std::string> echo = run.effective;
    echo["seed"] = std::to_string(sim.seed);
    echo["repetitions"] = "1";
    const std::string config_text = format_config(echo);
    const std::string config_hash = hash_hex(fnv1a64(config_text)).substr(8);

    RunOutputs out;
    out.result = pavg::run(sim);

    std::ostringstream iter_stream, round_stream;
    write_iteration_csv(iter_stream, out.result.metrics);
    write_round_csv(round_stream, out.result.metrics);
    const std::string iter_bytes = iter_stream.str();
    const std::string round_bytes = round_stream.str();
    out.iter_hash = fnv1a64(iter_bytes);
    out.round_hash = fnv1a64(round_bytes);

    namespace fs = std::filesystem;
    const fs::path dir = fs::path(run.out_root) / (config_hash + "-s" + std::to_string(sim.seed));
    fs::create_directories(dir);
    out.directory = dir.string();
    out.iter_csv = (dir / "iter.csv").string();
    out.round_csv = (dir / "round.csv").string();
    out.manifest = (dir / "manifest.cfg").string();

    write_file(out.iter_csv, iter_bytes);
    write_file(out.round_csv, round_bytes);

    std::ostringstream manifest;
    manifest << "# run manifest; this file is a complete effective config\n"
             << "# rerun with: pavg run --config manifest.cfg\n"
             << "# config_hash: " << config_hash << "\n"
             << "# output iter.csv fnv64:" << hash_hex(out.iter_hash) << "\n"
             << "# output round.csv fnv64:" << hash_hex(out.round_hash) << "\n\n"
             << config_text;
    write_file(out.manifest, manifest.str());
    return out;
}

std::vector<RunOutputs> execute_all(const BuiltRun& run) {
    std::vector<RunOutputs> outputs;
    outputs.reserve(run.repetitions);
    for (std::size_t rep = 0; rep < run.repetitions; ++rep)
        outputs.push_back(execute_repetition(run, rep));
    return outputs;
}

TheoryInputs theory_inputs_for(const SimConfig& sim) {
    const ObjectiveSpec& spec = sim.objective->spec();
    TheoryInputs in;
    in.lipschitz = spec.lipschitz;
    in.sigma_sq = spec.sigma_sq;
    in.beta_sq = spec.beta_sq;
    in.kappa_sq = spec.kappa_sq;
    in.workers = sim.objective->num_workers();
    in.iterations = sim.iterations;
    in.tau = spec.lipschitz.size();
    in.eta = sim.scheme.lr.base;
    in.f_init = sim.objective->global_loss(sim.init);
    in.f_inf = sim.objective->min_loss();
    in.worker_weights = sim.objective->weights();
    return in;
}

double measured_avg_grad_sq(const SimConfig& sim, std::size_t reps) {
    if (reps < 1) throw std::invalid_argument("measured_avg_grad_sq: reps >= 1");
    double acc = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        SimConfig cfg = sim;
        cfg.seed = sim.seed + rep;
        cfg.eval_every = 1;
        const RunResult result = run(cfg);
        acc += average_grad_sq_norm(result.metrics);
    }
    return acc / static_cast<double>(reps);
}

} // namespace pavg
