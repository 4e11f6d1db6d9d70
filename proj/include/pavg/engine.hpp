#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "pavg/metrics.hpp"
#include "pavg/objectives.hpp"
#include "pavg/param_space.hpp"
#include "pavg/rng.hpp"

namespace pavg {

// Non-finite gradients/parameters abort the run with a diagnostic.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Averaging over an empty active set and similar contract violations.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LrSchedule {
    enum class Kind { constant, step } kind = Kind::constant;
    double base = 0.1;
    std::size_t warmup_iters = 0;          // linear ramp up to base
    std::vector<std::uint64_t> milestones; // decay applied from these iterations on
    double decay = 0.1;

    double eta(std::uint64_t k) const;
};

enum class Redistribution { average_then_distribute, direct_handoff };

struct ParticipationConfig {
    double active_ratio = 1.0;
    std::size_t reselect_every = 10; // communication rounds between device reselection
    Redistribution redistribution = Redistribution::direct_handoff;
    double interval_stretch = 1.1; // tau adjustment for the partial scheme when ratio < 1

    bool enabled() const { return active_ratio < 1.0; }
};

struct SchemeConfig {
    Scheme scheme = Scheme::partial;
    std::size_t tau = 1;
    PartitionStrategy partition = PartitionStrategy::contiguous;
    double momentum = 0.0; // in [0, 1); momentum buffers stay local, never averaged
    LrSchedule lr;
};

struct WorkerState {
    ParameterVector x;
    ParameterVector velocity;
};

struct SimConfig {
    SchemeConfig scheme;
    ParticipationConfig participation;
    std::shared_ptr<const Objective> objective;
    ParameterVector init;          // u_1; all workers start here
    std::uint64_t iterations = 1;  // K
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    std::size_t eval_every = 1; // loss/grad cadence in iterations; 0 = round ends only
};

// Test instrumentation: optional tapes filled per iteration (full
// participation only). gradient_tape holds the raw stochastic gradients,
// state_tape the post-averaging worker parameters.
struct RunHooks {
    std::vector<std::vector<ParameterVector>>* gradient_tape = nullptr;
    std::vector<std::vector<ParameterVector>>* state_tape = nullptr;
};

struct RunResult {
    RunMetrics metrics;
    ParameterVector u_final;
    std::size_t tau_effective = 1;
};

// One SGD step on a worker: x -= eta * (momentum-filtered) stochastic
// gradient. Returns the gradient actually applied (pre-momentum).
ParameterVector local_sgd_step(WorkerState& w, const Objective& objective, std::size_t worker,
                               double eta, std::size_t batch_size, double momentum,
                               RngStream& rng);

// Replace block j of every active worker with the weighted block average.
// Weights are renormalized over the active set; afterwards all active
// workers agree exactly on block j.
void partial_average(std::vector<WorkerState>& workers, const std::vector<std::size_t>& active,
                     const PartitionScheme& scheme, std::size_t j,
                     const std::vector<double>& weights);

// Full-coordinate weighted average; afterwards all active workers are identical.
void full_average(std::vector<WorkerState>& workers, const std::vector<std::size_t>& active,
                  const std::vector<double>& weights);

// Weighted mean of the active workers' parameters (ascending worker id,
// compensated summation; the engine's single deterministic reduction).
ParameterVector weighted_mean(const std::vector<WorkerState>& workers,
                              const std::vector<std::size_t>& active,
                              const std::vector<double>& weights);

// Uniform random subset of ceil(ratio * m) worker ids, sorted ascending.
std::vector<std::size_t> select_active(std::size_t m, const ParticipationConfig& participation,
                                       RngStream& rng);

// Move local models onto a newly selected active set, either averaged first
// (option 1) or permuted across sorted ids without averaging (option 2).
void apply_redistribution(std::vector<WorkerState>& workers,
                          const std::vector<std::size_t>& old_active,
                          const std::vector<std::size_t>& new_active, Redistribution option,
                          const std::vector<double>& weights);

RunResult run(const SimConfig& config, const RunHooks& hooks = {});

} // namespace pavg
