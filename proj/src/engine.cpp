#include "pavg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace pavg {

double LrSchedule::eta(std::uint64_t k) const {
    double e = base;
    if (warmup_iters > 0 && k <= warmup_iters)
        return base * static_cast<double>(k) / static_cast<double>(warmup_iters);
    if (kind == Kind::step)
        for (std::uint64_t ms : milestones)
            if (k >= ms) e *= decay;
    return e;
}

namespace {

struct KahanAcc {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

double active_weight_sum(const std::vector<std::size_t>& active,
                         const std::vector<double>& weights) {
    KahanAcc acc;
    for (std::size_t i : active) acc.add(weights.at(i));
    return acc.value();
}

// weighted block mean over active workers, ascending id order
std::vector<double> block_mean(const std::vector<WorkerState>& workers,
                               const std::vector<std::size_t>& active,
                               const std::vector<std::size_t>& coords,
                               const std::vector<double>& weights, double weight_sum) {
    std::vector<double> mean(coords.size());
    for (std::size_t t = 0; t < coords.size(); ++t) {
        KahanAcc acc;
        for (std::size_t i : active) acc.add(weights[i] * workers[i].x[coords[t]]);
        mean[t] = acc.value() / weight_sum;
    }
    return mean;
}

// same formula and evaluation order as metrics discrepancy()
std::pair<double, double> state_discrepancy(const std::vector<WorkerState>& workers,
                                            const std::vector<std::size_t>& ids,
                                            const ParameterVector& u) {
    double mean = 0.0, worst = 0.0;
    for (std::size_t i : ids) {
        double sq = 0.0;
        for (std::size_t c = 0; c < u.size(); ++c) {
            const double dlt = u[c] - workers[i].x[c];
            sq += dlt * dlt;
        }
        mean += sq;
        if (sq > worst) worst = sq;
    }
    mean /= static_cast<double>(ids.size());
    return {mean, worst};
}

void run_sharded(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t t = 0; t < count; ++t) fn(t);
        return;
    }
    const std::size_t n_threads = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += n_threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace

ParameterVector local_sgd_step(WorkerState& w, const Objective& objective, std::size_t worker,
                               double eta, std::size_t batch_size, double momentum,
                               RngStream& rng) {
    if (!(eta > 0.0)) throw std::invalid_argument("local_sgd_step: eta must be positive");
    ParameterVector g = objective.stochastic_gradient(worker, w.x, batch_size, rng);
    if (!all_finite(g))
        throw NumericError("non-finite stochastic gradient on worker " + std::to_string(worker));
    if (momentum > 0.0) {
        for (std::size_t c = 0; c < g.size(); ++c) {
            w.velocity[c] = momentum * w.velocity[c] + g[c];
            w.x[c] -= eta * w.velocity[c];
        }
    } else {
        for (std::size_t c = 0; c < g.size(); ++c) w.x[c] -= eta * g[c];
    }
    if (!all_finite(w.x))
        throw NumericError("non-finite parameters on worker " + std::to_string(worker));
    return g;
}

void partial_average(std::vector<WorkerState>& workers, const std::vector<std::size_t>& active,
                     const PartitionScheme& scheme, std::size_t j,
                     const std::vector<double>& weights) {
    if (active.empty()) throw ProtocolError("partial_average: empty active set");
    const auto& coords = scheme.block(j);
    const double wsum = active_weight_sum(active, weights);
    const auto mean = block_mean(workers, active, coords, weights, wsum);
    for (std::size_t i : active)
        for (std::size_t t = 0; t < coords.size(); ++t) workers[i].x[coords[t]] = mean[t];
}

void full_average(std::vector<WorkerState>& workers, const std::vector<std::size_t>& active,
                  const std::vector<double>& weights) {
    if (active.empty()) throw ProtocolError("full_average: empty active set");
    const std::size_t d = workers[active.front()].x.size();
    std::vector<std::size_t> coords(d);
    std::iota(coords.begin(), coords.end(), 0);
    const double wsum = active_weight_sum(active, weights);
    const auto mean = block_mean(workers, active, coords, weights, wsum);
    for (std::size_t i : active) workers[i].x = mean;
}

ParameterVector weighted_mean(const std::vector<WorkerState>& workers,
                              const std::vector<std::size_t>& active,
                              const std::vector<double>& weights) {
    if (active.empty()) throw ProtocolError("weighted_mean: empty active set");
    const std::size_t d = workers[active.front()].x.size();
    std::vector<std::size_t> coords(d);
    std::iota(coords.begin(), coords.end(), 0);
    return block_mean(workers, active, coords, weights, active_weight_sum(active, weights));
}

std::vector<std::size_t> select_active(std::size_t m, const ParticipationConfig& participation,
                                       RngStream& rng) {
    const double ratio = participation.active_ratio;
    if (!(ratio > 0.0) || ratio > 1.0)
        throw std::invalid_argument("select_active: active_ratio must be in (0, 1]");
    const std::size_t count =
        std::min<std::size_t>(m, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(m))));
    std::vector<std::size_t> ids(m);
    std::iota(ids.begin(), ids.end(), 0);
    if (count < m) {
        // partial Fisher-Yates: the first `count` slots form the sample
        for (std::size_t t = 0; t < count; ++t)
            std::swap(ids[t], ids[t + rng.next_below(m - t)]);
        ids.resize(count);
        std::sort(ids.begin(), ids.end());
    }
    return ids;
}

void apply_redistribution(std::vector<WorkerState>& workers,
                          const std::vector<std::size_t>& old_active,
                          const std::vector<std::size_t>& new_active, Redistribution option,
                          const std::vector<double>& weights) {
    if (old_active.empty() || new_active.empty())
        throw ProtocolError("apply_redistribution: empty active set");
    if (option == Redistribution::average_then_distribute) {
        const ParameterVector u = weighted_mean(workers, old_active, weights);
        for (std::size_t i : new_active) workers[i].x = u;
    } else {
        if (old_active.size() != new_active.size())
            throw ProtocolError("apply_redistribution: active set size changed");
        std::vector<ParameterVector> models;
        models.reserve(old_active.size());
        for (std::size_t i : old_active) models.push_back(workers[i].x);
        for (std::size_t t = 0; t < new_active.size(); ++t)
            workers[new_active[t]].x = std::move(models[t]);
    }
}

RunResult run(const SimConfig& config, const RunHooks& hooks) {
    const Objective& objective = *config.objective;
    const std::size_t m = objective.num_workers();
    const std::size_t d = objective.dim();
    const std::uint64_t k_total = config.iterations;

    if (k_total < 1) throw std::invalid_argument("run: K >= 1 required");
    if (config.init.size() != d) throw std::invalid_argument("run: init dimension mismatch");
    if (config.scheme.momentum < 0.0 || config.scheme.momentum >= 1.0)
        throw std::invalid_argument("run: momentum must lie in [0, 1)");
    if (config.scheme.tau < 1) throw std::invalid_argument("run: tau >= 1 required");
    if (config.scheme.scheme == Scheme::partial && config.scheme.tau > d)
        throw std::invalid_argument("run: tau exceeds model dimension");
    if ((hooks.gradient_tape || hooks.state_tape) && config.participation.enabled())
        throw std::invalid_argument("run: tapes require full participation");

    const Scheme scheme = config.scheme.scheme;
    // the 10%-longer-interval fairness adjustment applies to the partial
    // scheme only, and only when device participation is partial
    std::size_t tau_eff = scheme == Scheme::sync ? 1 : config.scheme.tau;
    if (scheme == Scheme::partial && config.participation.enabled())
        tau_eff = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround(config.participation.interval_stretch *
                                static_cast<double>(config.scheme.tau))));
    std::unique_ptr<PartitionScheme> partition;
    if (scheme == Scheme::partial) {
        tau_eff = std::min(tau_eff, d);
        partition = std::make_unique<PartitionScheme>(
            make_partition(config.scheme.partition, d, tau_eff));
    }
    const std::size_t round_len = scheme == Scheme::sync ? 1 : tau_eff;
    const std::vector<double>& weights = objective.weights();

    std::vector<WorkerState> workers(m);
    for (auto& w : workers) {
        w.x = config.init;
        w.velocity.assign(d, 0.0);
    }

    // stream i drives worker i's gradient sampling; stream m drives selection
    std::vector<RngStream> streams;
    streams.reserve(m);
    for (std::size_t i = 0; i < m; ++i) streams.push_back(derive_stream(config.seed, i));
    RngStream selection_stream = derive_stream(config.seed, m);

    std::vector<std::size_t> active = config.participation.enabled()
                                          ? select_active(m, config.participation, selection_stream)
                                          : [&] {
                                                std::vector<std::size_t> all(m);
                                                std::iota(all.begin(), all.end(), 0);
                                                return all;
                                            }();

    RunResult result;
    result.tau_effective = tau_eff;
    RunMetrics& metrics = result.metrics;
    metrics.iterations.reserve(k_total);
    metrics.init_loss = objective.global_loss(config.init);
    {
        const ParameterVector g0 = objective.global_gradient(config.init);
        double sq = 0.0;
        for (double v : g0) sq += v * v;
        metrics.init_grad_sq_norm = sq;
    }

    if (hooks.gradient_tape) hooks.gradient_tape->clear();
    if (hooks.state_tape) hooks.state_tape->clear();

    std::vector<ParameterVector> iter_grads(m);
    std::exception_ptr worker_error;
    std::mutex error_mutex;

    for (std::uint64_t k = 1; k <= k_total; ++k) {
        const std::uint64_t round = (k - 1) / round_len + 1;
        const bool round_start = (k - 1) % round_len == 0;

        if (round_start && round > 1 && config.participation.enabled() &&
            config.participation.reselect_every > 0 &&
            (round - 1) % config.participation.reselect_every == 0) {
            const std::vector<std::size_t> previous = active;
            active = select_active(m, config.participation, selection_stream);
            apply_redistribution(workers, previous, active, config.participation.redistribution,
                                 weights);
            metrics.cost.redistribution_events += 1;
            const std::uint64_t d64 = d;
            metrics.cost.redistribution_scalars +=
                config.participation.redistribution == Redistribution::average_then_distribute
                    ? d64 * (previous.size() + active.size())
                    : d64 * active.size();
        }

        const double eta = config.scheme.lr.eta(k);

        run_sharded(active.size(), config.threads, [&](std::size_t t) {
            const std::size_t i = active[t];
            try {
                ParameterVector g = local_sgd_step(workers[i], objective, i, eta,
                                                   config.batch_size, config.scheme.momentum,
                                                   streams[i]);
                if (hooks.gradient_tape) iter_grads[i] = std::move(g);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!worker_error) worker_error = std::current_exception();
            }
        });
        if (worker_error) std::rethrow_exception(worker_error);

        switch (scheme) {
            case Scheme::sync:
                full_average(workers, active, weights);
                metrics.cost.scalars += static_cast<std::uint64_t>(d) * active.size();
                metrics.cost.events += 1;
                break;
            case Scheme::periodic:
                if (k % tau_eff == 0) {
                    full_average(workers, active, weights);
                    metrics.cost.scalars += static_cast<std::uint64_t>(d) * active.size();
                    metrics.cost.events += 1;
                }
                break;
            case Scheme::partial: {
                const std::size_t j = active_partition(k, tau_eff);
                partial_average(workers, active, *partition, j, weights);
                metrics.cost.scalars +=
                    static_cast<std::uint64_t>(partition->block_size(j)) * active.size();
                metrics.cost.events += 1;
                break;
            }
        }

        if (hooks.gradient_tape) hooks.gradient_tape->push_back(iter_grads);
        if (hooks.state_tape) {
            std::vector<ParameterVector> snap(m);
            for (std::size_t i = 0; i < m; ++i) snap[i] = workers[i].x;
            hooks.state_tape->push_back(std::move(snap));
        }

        const ParameterVector u = weighted_mean(workers, active, weights);
        IterationRecord rec;
        rec.k = k;
        const auto [mean_disc, max_disc] = state_discrepancy(workers, active, u);
        rec.mean_discrepancy = mean_disc;
        rec.max_discrepancy = max_disc;
        const bool round_end = k % round_len == 0;
        const bool eval = (config.eval_every > 0 && k % config.eval_every == 0) || round_end;
        if (eval) {
            rec.global_loss = objective.global_loss(u);
            const ParameterVector g = objective.global_gradient(u);
            double sq = 0.0;
            for (double v : g) sq += v * v;
            rec.grad_sq_norm = sq;
        } else {
            rec.global_loss = std::nan("");
            rec.grad_sq_norm = std::nan("");
        }
        rec.cum_scalars = metrics.cost.scalars;
        rec.cum_events = metrics.cost.events;
        metrics.iterations.push_back(rec);

        if (round_end) {
            RoundRecord rr;
            rr.r = k / round_len;
            rr.global_loss = rec.global_loss;
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (std::size_t i : active) {
                const double l = objective.global_loss(workers[i].x);
                if (first) {
                    lo = hi = l;
                    first = false;
                } else {
                    lo = std::min(lo, l);
                    hi = std::max(hi, l);
                }
            }
            rr.min_local_loss = lo;
            rr.max_local_loss = hi;
            metrics.rounds.push_back(rr);
        }
    }

    // the returned model is always the fully averaged one; when K is not a
    // multiple of the interval this is the forced final full average
    result.u_final = weighted_mean(workers, active, weights);
    for (std::size_t i : active) workers[i].x = result.u_final;
    return result;
}

} // namespace pavg
