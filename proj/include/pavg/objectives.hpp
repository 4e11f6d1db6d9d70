#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pavg/param_space.hpp"
#include "pavg/rng.hpp"

namespace pavg {

enum class ObjectiveKind { quadratic, logistic, mlp };

// Per-partition constants of an objective with respect to its defining
// partition scheme. Exact for the quadratic carrier; conservative bounds or
// flagged estimates for the data-driven objectives.
struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::quadratic;
    std::size_t dim = 0;
    std::vector<double> lipschitz;      // L_j, one per partition block, > 0
    std::vector<double> sigma_sq;       // per-partition stochastic-gradient variance
    std::vector<double> beta_sq;        // dissimilarity slope, >= 1 when known
    std::vector<double> kappa_sq;       // dissimilarity offset, >= 0 when known
    bool lipschitz_is_estimate = false; // true when L_j came from power iteration
    bool sigma_known = false;           // true when sigma_sq holds exact values
    bool dissimilarity_known = false;   // true when beta_sq/kappa_sq are derived

    double l_max() const;
};

struct Dataset {
    std::vector<std::vector<double>> features; // one row per sample
    std::vector<double> labels;

    std::size_t size() const { return features.size(); }
    std::size_t feature_dim() const { return features.empty() ? 0 : features[0].size(); }
};

// Headerless CSV, one sample per row: feature columns first, label last.
Dataset load_csv_dataset(const std::string& path);

// A federated objective F(x) = sum_i p_i F_i(x). Every worker-facing method
// is deterministic given its arguments; stochastic gradients consume only the
// caller-supplied stream, so each worker's draws are independent of execution
// order.
class Objective {
public:
    virtual ~Objective() = default;

    const ObjectiveSpec& spec() const { return spec_; }
    std::size_t dim() const { return spec_.dim; }
    const std::vector<double>& weights() const { return weights_; } // p_i, sums to 1

    std::size_t num_workers() const { return num_workers_; }

    virtual double global_loss(const ParameterVector& x) const = 0;
    virtual ParameterVector global_gradient(const ParameterVector& x) const = 0;
    virtual double local_loss(std::size_t worker, const ParameterVector& x) const = 0;
    virtual ParameterVector local_gradient(std::size_t worker, const ParameterVector& x) const = 0;

    // Unbiased estimate of the local full-batch gradient. The quadratic
    // carrier injects Gaussian noise with exact per-partition variance and
    // ignores batch_size; dataset objectives sample batch_size rows with
    // replacement.
    virtual ParameterVector stochastic_gradient(std::size_t worker, const ParameterVector& x,
                                                std::size_t batch_size, RngStream& rng) const = 0;

    // Lower bound on the global loss; exact minimum for the quadratic,
    // the documented bound 0 for the nonnegative data losses.
    virtual double min_loss() const { return 0.0; }

protected:
    Objective(ObjectiveSpec spec, std::size_t workers, std::vector<double> weights);

    ObjectiveSpec spec_;
    std::size_t num_workers_;
    std::vector<double> weights_;
};

// F_i(x) = 1/2 sum_j L_j ||x_j - c_{i,j}||^2 over the blocks of `scheme`.
// Noise: each coordinate of block j gets independent N(0, sigma_j^2 / d_j),
// so E||g_j - grad_j F_i||^2 = sigma_j^2 exactly. Shifts empty => all zero
// (IID); otherwise one d-dimensional target per worker. Derived dissimilarity
// constants (beta_j^2 = 1, kappa_j^2 = L_j^2 * weighted shift variance) are
// stored in the spec.
std::unique_ptr<Objective> make_quadratic(const PartitionScheme& scheme,
                                          std::vector<double> curvature,
                                          std::vector<double> sigma,
                                          std::vector<ParameterVector> worker_shifts,
                                          std::size_t workers,
                                          std::vector<double> weights = {});

// L2-regularized binary cross-entropy over `data`, split across workers by
// `assignments` (per-worker sample index lists; pass a single list owning all
// samples for a centralized objective). L_j stored as the analytic bound
// max_s ||x_{s,j}||^2 / 4 + l2.
std::unique_ptr<Objective> make_logistic(Dataset data,
                                         std::vector<std::vector<std::size_t>> assignments,
                                         double l2, const PartitionScheme& scheme);

// Mean-squared-error MLP with tanh hidden activations and a linear output,
// hand-written backprop. layer_sizes runs input..output; a two-entry list is
// a plain linear least-squares model. L_j estimated by Hessian power
// iteration at a deterministic probe point and flagged as an estimate.
std::unique_ptr<Objective> make_mlp(std::vector<std::size_t> layer_sizes, Dataset data,
                                    std::vector<std::vector<std::size_t>> assignments,
                                    const PartitionScheme& scheme, std::uint64_t probe_seed = 1);

// Parameter count of an MLP with the given layer sizes.
std::size_t mlp_param_count(const std::vector<std::size_t>& layer_sizes);

} // namespace pavg
