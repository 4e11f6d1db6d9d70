#include "pavg/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "pavg/param_space.hpp"

namespace pavg {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::sync: return "sync";
        case Scheme::periodic: return "periodic";
        case Scheme::partial: return "partial";
    }
    return "?";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "sync") return Scheme::sync;
    if (name == "periodic") return Scheme::periodic;
    if (name == "partial") return Scheme::partial;
    throw std::invalid_argument("unknown scheme: " + name);
}

std::pair<double, double> discrepancy(const std::vector<ParameterVector>& workers,
                                      const std::vector<std::size_t>& ids,
                                      const ParameterVector& u) {
    if (ids.empty()) throw std::invalid_argument("discrepancy: empty worker set");
    double mean = 0.0, worst = 0.0;
    for (std::size_t i : ids) {
        const ParameterVector& x = workers.at(i);
        double sq = 0.0;
        for (std::size_t c = 0; c < u.size(); ++c) {
            const double dlt = u[c] - x[c];
            sq += dlt * dlt;
        }
        mean += sq;
        if (sq > worst) worst = sq;
    }
    mean /= static_cast<double>(ids.size());
    return {mean, worst};
}

double average_grad_sq_norm(const RunMetrics& metrics) {
    if (metrics.iterations.empty()) throw std::invalid_argument("average_grad_sq_norm: empty run");
    const std::size_t k_total = metrics.iterations.size();
    double acc = metrics.init_grad_sq_norm;
    for (std::size_t t = 0; t + 1 < k_total; ++t) {
        const double g = metrics.iterations[t].grad_sq_norm;
        if (std::isnan(g))
            throw std::invalid_argument("average_grad_sq_norm: run recorded without full cadence");
        acc += g;
    }
    return acc / static_cast<double>(k_total);
}

CommCost comm_cost(Scheme scheme, std::size_t d, std::size_t tau, std::uint64_t iterations,
                   std::size_t workers, const std::vector<std::size_t>& active_per_round) {
    if (tau == 0 || workers == 0) throw std::invalid_argument("comm_cost: tau, workers >= 1");
    const std::size_t round_len = scheme == Scheme::sync ? 1 : tau;
    auto active_at_round = [&](std::uint64_t r) -> std::uint64_t {
        if (active_per_round.empty()) return workers;
        if (active_per_round.size() == 1) return active_per_round[0];
        return active_per_round.at(static_cast<std::size_t>(r - 1));
    };
    // contiguous block sizes: d/tau with the remainder on the lowest blocks
    auto block_size = [&](std::size_t j) -> std::uint64_t {
        return d / tau + (j <= d % tau ? 1 : 0);
    };

    CommCost cost;
    for (std::uint64_t k = 1; k <= iterations; ++k) {
        const std::uint64_t round = (k - 1) / round_len + 1;
        const std::uint64_t active = active_at_round(round);
        switch (scheme) {
            case Scheme::sync:
                cost.scalars += static_cast<std::uint64_t>(d) * active;
                cost.events += 1;
                break;
            case Scheme::periodic:
                if (k % tau == 0) {
                    cost.scalars += static_cast<std::uint64_t>(d) * active;
                    cost.events += 1;
                }
                break;
            case Scheme::partial:
                cost.scalars += block_size(active_partition(k, tau)) * active;
                cost.events += 1;
                break;
        }
    }
    return cost;
}

namespace {

void put(std::ostream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

} // namespace

void write_iteration_csv(std::ostream& out, const RunMetrics& metrics) {
    out << "k,global_loss,mean_disc,max_disc,grad_sq_norm,cum_scalars,cum_events\n";
    for (const auto& rec : metrics.iterations) {
        out << rec.k << ',';
        put(out, rec.global_loss);
        out << ',';
        put(out, rec.mean_discrepancy);
        out << ',';
        put(out, rec.max_discrepancy);
        out << ',';
        put(out, rec.grad_sq_norm);
        out << ',' << rec.cum_scalars << ',' << rec.cum_events << '\n';
    }
}

void write_round_csv(std::ostream& out, const RunMetrics& metrics) {
    out << "r,global_loss,min_local_loss,max_local_loss\n";
    for (const auto& rec : metrics.rounds) {
        out << rec.r << ',';
        put(out, rec.global_loss);
        out << ',';
        put(out, rec.min_local_loss);
        out << ',';
        put(out, rec.max_local_loss);
        out << '\n';
    }
}

} // namespace pavg
