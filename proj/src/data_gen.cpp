#include "pavg/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pavg {

std::size_t FederatedSplit::total_samples() const {
    std::size_t n = 0;
    for (const auto& a : assignments) n += a.size();
    return n;
}

namespace {

void fill_weights(FederatedSplit& split) {
    const double n = static_cast<double>(split.total_samples());
    split.weights.clear();
    split.weights.reserve(split.workers());
    for (const auto& a : split.assignments)
        split.weights.push_back(static_cast<double>(a.size()) / n);
}

// deal `count` items across m workers proportionally to `props`, flooring and
// assigning leftovers by largest remainder (ties broken by worker id)
std::vector<std::size_t> apportion(const std::vector<double>& props, std::size_t count) {
    const std::size_t m = props.size();
    std::vector<std::size_t> alloc(m, 0);
    std::vector<std::pair<double, std::size_t>> remainders(m);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double share = props[i] * static_cast<double>(count);
        alloc[i] = static_cast<std::size_t>(std::floor(share));
        assigned += alloc[i];
        remainders[i] = {share - std::floor(share), i};
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t t = 0; assigned < count; ++t, ++assigned) alloc[remainders[t % m].second]++;
    return alloc;
}

} // namespace

FederatedSplit split_iid(std::size_t n_samples, std::size_t m, RngStream& rng) {
    if (m == 0) throw std::invalid_argument("split_iid: m >= 1 required");
    if (n_samples < m) throw std::invalid_argument("split_iid: more workers than samples");
    std::vector<std::size_t> perm(n_samples);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n_samples - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.next_below(i + 1)]);

    FederatedSplit split;
    split.assignments.resize(m);
    const std::size_t base = n_samples / m, rem = n_samples % m;
    std::size_t next = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t len = base + (i < rem ? 1 : 0);
        split.assignments[i].assign(perm.begin() + next, perm.begin() + next + len);
        next += len;
    }
    fill_weights(split);
    return split;
}

FederatedSplit split_dirichlet(const std::vector<int>& labels, std::size_t m, double alpha,
                               std::size_t min_samples_per_worker, RngStream& rng,
                               int max_retries) {
    if (m == 0) throw std::invalid_argument("split_dirichlet: m >= 1 required");
    if (!(alpha > 0.0)) throw std::invalid_argument("split_dirichlet: alpha must be positive");
    if (labels.empty()) throw std::invalid_argument("split_dirichlet: empty label list");
    if (labels.size() < m * min_samples_per_worker)
        throw InfeasibleSplitError("split_dirichlet: not enough samples for the per-worker minimum");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t s = 0; s < labels.size(); ++s) by_class[labels[s]].push_back(s);

    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        FederatedSplit split;
        split.assignments.assign(m, {});
        split.num_classes = by_class.size();
        split.alpha = alpha;
        for (auto& [cls, samples] : by_class) {
            (void)cls;
            auto pool = samples;
            for (std::size_t i = pool.size() - 1; i > 0; --i)
                std::swap(pool[i], pool[rng.next_below(i + 1)]);
            std::vector<double> props(m);
            double total = 0.0;
            for (double& p : props) {
                p = rng.next_gamma(alpha);
                total += p;
            }
            if (!(total > 0.0) || !std::isfinite(total)) {
                // every draw underflowed: the alpha -> 0 limit is a point
                // mass on one uniformly chosen worker
                props.assign(m, 0.0);
                props[rng.next_below(m)] = 1.0;
            } else {
                for (double& p : props) p /= total;
            }
            const auto alloc = apportion(props, pool.size());
            std::size_t next = 0;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t t = 0; t < alloc[i]; ++t)
                    split.assignments[i].push_back(pool[next++]);
        }
        const bool feasible = std::all_of(
            split.assignments.begin(), split.assignments.end(),
            [&](const auto& a) { return a.size() >= min_samples_per_worker; });
        if (!feasible) continue;
        for (auto& a : split.assignments) std::sort(a.begin(), a.end());
        fill_weights(split);
        return split;
    }
    throw InfeasibleSplitError("split_dirichlet: retry budget exhausted; alpha too small for m");
}

HeterogeneityReport heterogeneity_report(const FederatedSplit& split,
                                         const std::vector<int>& labels) {
    int max_label = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("heterogeneity_report: negative class id");
        max_label = std::max(max_label, l);
    }
    const std::size_t c = static_cast<std::size_t>(max_label) + 1;

    std::vector<double> global(c, 0.0);
    for (int l : labels) global[static_cast<std::size_t>(l)] += 1.0;
    for (double& g : global) g /= static_cast<double>(labels.size());

    HeterogeneityReport rep;
    rep.class_histograms.assign(split.workers(), std::vector<std::size_t>(c, 0));
    rep.tv_distance.resize(split.workers());
    for (std::size_t i = 0; i < split.workers(); ++i) {
        for (std::size_t s : split.assignments[i])
            rep.class_histograms[i][static_cast<std::size_t>(labels.at(s))]++;
        const double n_i = static_cast<double>(split.assignments[i].size());
        double tv = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            const double p = n_i > 0 ? static_cast<double>(rep.class_histograms[i][k]) / n_i : 0.0;
            tv += std::abs(p - global[k]);
        }
        rep.tv_distance[i] = 0.5 * tv;
        rep.mean_tv += rep.tv_distance[i];
    }
    rep.mean_tv /= static_cast<double>(split.workers());
    return rep;
}

void save_split(std::ostream& out, const FederatedSplit& split) {
    for (std::size_t i = 0; i < split.workers(); ++i)
        for (std::size_t s : split.assignments[i]) out << i << '\t' << s << '\n';
}

FederatedSplit load_split(std::istream& in) {
    FederatedSplit split;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::size_t worker, sample;
        if (!(ss >> worker >> sample)) throw std::invalid_argument("load_split: malformed row");
        if (worker >= split.assignments.size()) split.assignments.resize(worker + 1);
        split.assignments[worker].push_back(sample);
    }
    if (split.assignments.empty()) throw std::invalid_argument("load_split: empty split file");
    fill_weights(split);
    return split;
}

} // namespace pavg
