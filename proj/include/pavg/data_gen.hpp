#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "pavg/rng.hpp"

namespace pavg {

// Failure to place min_samples_per_worker on every worker within the retry
// budget (small alpha can leave workers empty).
struct InfeasibleSplitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FederatedSplit {
    std::vector<std::vector<std::size_t>> assignments; // per-worker sample indices
    std::vector<double> weights;                       // p_i = n_i / n
    std::size_t num_classes = 0;
    double alpha = 0.0; // Dirichlet concentration; 0 for IID shards

    std::size_t workers() const { return assignments.size(); }
    std::size_t total_samples() const;
};

// Random permutation sharded into m near-equal parts (remainder to the
// lowest-index workers); p_i = 1/m up to rounding.
FederatedSplit split_iid(std::size_t n_samples, std::size_t m, RngStream& rng);

// Class-wise Dirichlet allocation: for each class, proportions across the m
// workers are drawn from Dir(alpha * 1_m) and the class samples are dealt
// out by largest remainder. Resamples (up to max_retries) until every worker
// holds at least min_samples_per_worker.
FederatedSplit split_dirichlet(const std::vector<int>& labels, std::size_t m, double alpha,
                               std::size_t min_samples_per_worker, RngStream& rng,
                               int max_retries = 100);

struct HeterogeneityReport {
    std::vector<std::vector<std::size_t>> class_histograms; // [worker][class]
    std::vector<double> tv_distance;                        // vs global label distribution
    double mean_tv = 0.0;
};

HeterogeneityReport heterogeneity_report(const FederatedSplit& split,
                                         const std::vector<int>& labels);

// Line-oriented text format: one `worker_id<TAB>sample_index` row per sample.
void save_split(std::ostream& out, const FederatedSplit& split);
FederatedSplit load_split(std::istream& in);

} // namespace pavg
