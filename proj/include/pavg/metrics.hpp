#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pavg/param_space.hpp"

namespace pavg {

enum class Scheme { sync, periodic, partial };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

// Communication accountant. `scalars`/`events` cover the averaging traffic;
// re-distribution traffic under partial participation is flagged separately.
struct CommCost {
    std::uint64_t scalars = 0; // parameter scalars aggregated, summed over workers
    std::uint64_t events = 0;  // synchronization operations
    std::uint64_t redistribution_scalars = 0;
    std::uint64_t redistribution_events = 0;
};

struct IterationRecord {
    std::uint64_t k = 0;
    double global_loss = 0.0; // NaN when skipped by cadence
    double mean_discrepancy = 0.0;
    double max_discrepancy = 0.0;
    double grad_sq_norm = 0.0; // NaN when skipped by cadence
    std::uint64_t cum_scalars = 0;
    std::uint64_t cum_events = 0;
};

struct RoundRecord {
    std::uint64_t r = 0;
    double global_loss = 0.0;
    double min_local_loss = 0.0;
    double max_local_loss = 0.0;
};

struct RunMetrics {
    std::vector<IterationRecord> iterations; // one record per iteration 1..K
    std::vector<RoundRecord> rounds;         // one per completed communication round
    double init_loss = 0.0;                  // F(u_1) at the shared initial point
    double init_grad_sq_norm = 0.0;          // ||grad F(u_1)||^2
    CommCost cost;                           // final cumulative counters
};

// Mean and max over the given workers of ||u - x^i||^2.
std::pair<double, double> discrepancy(const std::vector<ParameterVector>& workers,
                                      const std::vector<std::size_t>& ids,
                                      const ParameterVector& u);

// Theorem-style average of ||grad F(u_k)||^2 over the first K iterates: the
// initial point plus the models after iterations 1..K-1.
double average_grad_sq_norm(const RunMetrics& metrics);

// Closed-form accountant for a full run; cross-checked against the engine's
// incremental counters in tests. active_per_round lists the participating
// worker count for each communication round (size 1 broadcasts).
CommCost comm_cost(Scheme scheme, std::size_t d, std::size_t tau, std::uint64_t iterations,
                   std::size_t workers, const std::vector<std::size_t>& active_per_round = {});

// CSV emission, 17 significant digits for bit-faithful reload.
// iter.csv: k,global_loss,mean_disc,max_disc,grad_sq_norm,cum_scalars,cum_events
// round.csv: r,global_loss,min_local_loss,max_local_loss
void write_iteration_csv(std::ostream& out, const RunMetrics& metrics);
void write_round_csv(std::ostream& out, const RunMetrics& metrics);

} // namespace pavg
