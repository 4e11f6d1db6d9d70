#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pavg/config.hpp"
#include "pavg/engine.hpp"
#include "pavg/theory.hpp"

namespace pavg {

// FNV-1a 64-bit content hash, used to fingerprint configs and outputs.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

struct RunOutputs {
    std::string directory;
    std::string iter_csv;
    std::string round_csv;
    std::string manifest;
    std::uint64_t iter_hash = 0;
    std::uint64_t round_hash = 0;
    RunResult result;
};

// Executes repetition `rep` of a built run (seed = base seed + rep) and
// writes iter.csv, round.csv and manifest.cfg into
// <out_root>/<confighash8>-s<seed>/. The manifest is itself a complete
// config reproducing exactly this repetition.
RunOutputs execute_repetition(const BuiltRun& run, std::size_t rep);

// All repetitions in order; returns one RunOutputs per repetition.
std::vector<RunOutputs> execute_all(const BuiltRun& run);

// Theory inputs matching a built simulation: constants from the objective
// spec, F(u_1) from the configured init, F_inf from the objective.
TheoryInputs theory_inputs_for(const SimConfig& sim);

// Seed-mean over `reps` runs (seeds seed..seed+reps-1) of the measured
// (1/K) sum ||grad F(u_k)||^2, theorem indexing (init plus first K-1 states).
double measured_avg_grad_sq(const SimConfig& sim, std::size_t reps);

} // namespace pavg
