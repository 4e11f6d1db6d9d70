#include "pavg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pavg {

double ObjectiveSpec::l_max() const {
    if (lipschitz.empty()) throw std::logic_error("ObjectiveSpec: no Lipschitz constants stored");
    return *std::max_element(lipschitz.begin(), lipschitz.end());
}

Objective::Objective(ObjectiveSpec spec, std::size_t workers, std::vector<double> weights)
    : spec_(std::move(spec)), num_workers_(workers), weights_(std::move(weights)) {
    if (num_workers_ == 0) throw std::invalid_argument("objective: needs at least one worker");
    if (weights_.empty()) weights_.assign(num_workers_, 1.0 / static_cast<double>(num_workers_));
    if (weights_.size() != num_workers_)
        throw std::invalid_argument("objective: weight count does not match worker count");
    double sum = 0.0;
    for (double w : weights_) {
        if (w < 0.0) throw std::invalid_argument("objective: negative worker weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("objective: worker weights must sum to 1");
}

Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("dataset: cannot open " + path);
    Dataset data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2) throw std::invalid_argument("dataset: row needs features and a label");
        if (!data.features.empty() && row.size() - 1 != data.feature_dim())
            throw std::invalid_argument("dataset: inconsistent column count");
        data.labels.push_back(row.back());
        row.pop_back();
        data.features.push_back(std::move(row));
    }
    if (data.features.empty()) throw std::invalid_argument("dataset: no samples in " + path);
    return data;
}

namespace {

std::vector<double> weights_from_assignments(const std::vector<std::vector<std::size_t>>& a) {
    std::size_t total = 0;
    for (const auto& list : a) total += list.size();
    if (total == 0) throw std::invalid_argument("objective: empty dataset assignment");
    std::vector<double> w;
    w.reserve(a.size());
    for (const auto& list : a) w.push_back(static_cast<double>(list.size()) / static_cast<double>(total));
    return w;
}

// ---------------------------------------------------------------------------
// quadratic carrier
// ---------------------------------------------------------------------------

class QuadraticObjective final : public Objective {
public:
    QuadraticObjective(ObjectiveSpec spec, PartitionScheme scheme, std::vector<double> sigma,
                       std::vector<ParameterVector> shifts, std::size_t workers,
                       std::vector<double> weights)
        : Objective(std::move(spec), workers, std::move(weights)),
          scheme_(std::move(scheme)),
          sigma_(std::move(sigma)),
          shifts_(std::move(shifts)) {
        // weighted mean shift and per-block weighted shift variance
        mean_shift_.assign(dim(), 0.0);
        if (!shifts_.empty()) {
            for (std::size_t i = 0; i < num_workers_; ++i)
                for (std::size_t c = 0; c < dim(); ++c) mean_shift_[c] += weights_[i] * shifts_[i][c];
        }
        shift_var_.assign(scheme_.tau(), 0.0);
        if (!shifts_.empty()) {
            for (std::size_t j = 1; j <= scheme_.tau(); ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < num_workers_; ++i) {
                    double sq = 0.0;
                    for (std::size_t c : scheme_.block(j)) {
                        const double dlt = shifts_[i][c] - mean_shift_[c];
                        sq += dlt * dlt;
                    }
                    acc += weights_[i] * sq;
                }
                shift_var_[j - 1] = acc;
            }
        }
        spec_.beta_sq.assign(scheme_.tau(), 1.0);
        spec_.kappa_sq.resize(scheme_.tau());
        for (std::size_t j = 0; j < scheme_.tau(); ++j)
            spec_.kappa_sq[j] = spec_.lipschitz[j] * spec_.lipschitz[j] * shift_var_[j];
        spec_.dissimilarity_known = true;
    }

    double global_loss(const ParameterVector& x) const override {
        // F(x) = 1/2 sum_j L_j (||x_j - cbar_j||^2 + weighted shift variance_j)
        double f = 0.0;
        for (std::size_t j = 1; j <= scheme_.tau(); ++j) {
            double sq = 0.0;
            for (std::size_t c : scheme_.block(j)) {
                const double dlt = x[c] - mean_shift_[c];
                sq += dlt * dlt;
            }
            f += 0.5 * spec_.lipschitz[j - 1] * (sq + shift_var_[j - 1]);
        }
        return f;
    }

    ParameterVector global_gradient(const ParameterVector& x) const override {
        ParameterVector g(dim());
        for (std::size_t j = 1; j <= scheme_.tau(); ++j)
            for (std::size_t c : scheme_.block(j))
                g[c] = spec_.lipschitz[j - 1] * (x[c] - mean_shift_[c]);
        return g;
    }

    double local_loss(std::size_t worker, const ParameterVector& x) const override {
        double f = 0.0;
        for (std::size_t j = 1; j <= scheme_.tau(); ++j) {
            double sq = 0.0;
            for (std::size_t c : scheme_.block(j)) {
                const double dlt = x[c] - shift_at(worker, c);
                sq += dlt * dlt;
            }
            f += 0.5 * spec_.lipschitz[j - 1] * sq;
        }
        return f;
    }

    ParameterVector local_gradient(std::size_t worker, const ParameterVector& x) const override {
        ParameterVector g(dim());
        for (std::size_t j = 1; j <= scheme_.tau(); ++j)
            for (std::size_t c : scheme_.block(j))
                g[c] = spec_.lipschitz[j - 1] * (x[c] - shift_at(worker, c));
        return g;
    }

    ParameterVector stochastic_gradient(std::size_t worker, const ParameterVector& x,
                                        std::size_t /*batch_size*/, RngStream& rng) const override {
        ParameterVector g = local_gradient(worker, x);
        for (std::size_t j = 1; j <= scheme_.tau(); ++j) {
            const double sigma = sigma_[j - 1];
            if (sigma <= 0.0) continue;
            const double per_coord = sigma / std::sqrt(static_cast<double>(scheme_.block_size(j)));
            for (std::size_t c : scheme_.block(j)) g[c] += per_coord * rng.next_gaussian();
        }
        return g;
    }

    double min_loss() const override {
        double f = 0.0;
        for (std::size_t j = 0; j < scheme_.tau(); ++j)
            f += 0.5 * spec_.lipschitz[j] * shift_var_[j];
        return f;
    }

private:
    double shift_at(std::size_t worker, std::size_t coord) const {
        return shifts_.empty() ? 0.0 : shifts_[worker][coord];
    }

    PartitionScheme scheme_;
    std::vector<double> sigma_;
    std::vector<ParameterVector> shifts_; // empty = all zero
    ParameterVector mean_shift_;
    std::vector<double> shift_var_;
};

// ---------------------------------------------------------------------------
// logistic regression
// ---------------------------------------------------------------------------

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

class LogisticObjective final : public Objective {
public:
    LogisticObjective(ObjectiveSpec spec, Dataset data,
                      std::vector<std::vector<std::size_t>> assignments, double l2,
                      std::vector<double> weights)
        : Objective(std::move(spec), assignments.size(), std::move(weights)),
          data_(std::move(data)),
          assignments_(std::move(assignments)),
          l2_(l2) {}

    double global_loss(const ParameterVector& w) const override {
        double acc = 0.0;
        for (std::size_t s = 0; s < data_.size(); ++s) acc += sample_loss(s, w);
        return acc / static_cast<double>(data_.size()) + 0.5 * l2_ * dot(w, w);
    }

    ParameterVector global_gradient(const ParameterVector& w) const override {
        ParameterVector g(dim(), 0.0);
        for (std::size_t s = 0; s < data_.size(); ++s) add_sample_gradient(s, w, 1.0, g);
        const double inv = 1.0 / static_cast<double>(data_.size());
        for (std::size_t c = 0; c < dim(); ++c) g[c] = g[c] * inv + l2_ * w[c];
        return g;
    }

    double local_loss(std::size_t worker, const ParameterVector& w) const override {
        const auto& rows = assignments_.at(worker);
        if (rows.empty()) return 0.5 * l2_ * dot(w, w);
        double acc = 0.0;
        for (std::size_t s : rows) acc += sample_loss(s, w);
        return acc / static_cast<double>(rows.size()) + 0.5 * l2_ * dot(w, w);
    }

    ParameterVector local_gradient(std::size_t worker, const ParameterVector& w) const override {
        const auto& rows = assignments_.at(worker);
        ParameterVector g(dim(), 0.0);
        for (std::size_t s : rows) add_sample_gradient(s, w, 1.0, g);
        const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
        for (std::size_t c = 0; c < dim(); ++c) g[c] = g[c] * inv + l2_ * w[c];
        return g;
    }

    ParameterVector stochastic_gradient(std::size_t worker, const ParameterVector& w,
                                        std::size_t batch_size, RngStream& rng) const override {
        if (batch_size == 0) throw std::invalid_argument("stochastic_gradient: batch_size >= 1");
        const auto& rows = assignments_.at(worker);
        if (rows.empty()) return local_gradient(worker, w);
        ParameterVector g(dim(), 0.0);
        for (std::size_t b = 0; b < batch_size; ++b) {
            const std::size_t s = rows[rng.next_below(rows.size())];
            add_sample_gradient(s, w, 1.0, g);
        }
        const double inv = 1.0 / static_cast<double>(batch_size);
        for (std::size_t c = 0; c < dim(); ++c) g[c] = g[c] * inv + l2_ * w[c];
        return g;
    }

private:
    double sample_loss(std::size_t s, const ParameterVector& w) const {
        const double z = dot(data_.features[s], w);
        return softplus(z) - data_.labels[s] * z;
    }

    void add_sample_gradient(std::size_t s, const ParameterVector& w, double scale,
                             ParameterVector& g) const {
        const double z = dot(data_.features[s], w);
        const double coef = scale * (sigmoid(z) - data_.labels[s]);
        const auto& x = data_.features[s];
        for (std::size_t c = 0; c < dim(); ++c) g[c] += coef * x[c];
    }

    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        return acc;
    }

    Dataset data_;
    std::vector<std::vector<std::size_t>> assignments_;
    double l2_;
};

// ---------------------------------------------------------------------------
// tanh MLP with mean-squared error
// ---------------------------------------------------------------------------

class MlpObjective final : public Objective {
public:
    MlpObjective(ObjectiveSpec spec, std::vector<std::size_t> layers, Dataset data,
                 std::vector<std::vector<std::size_t>> assignments, std::vector<double> weights)
        : Objective(std::move(spec), assignments.size(), std::move(weights)),
          layers_(std::move(layers)),
          data_(std::move(data)),
          assignments_(std::move(assignments)) {
        std::size_t off = 0;
        for (std::size_t l = 1; l < layers_.size(); ++l) {
            w_off_.push_back(off);
            off += layers_[l] * layers_[l - 1];
            b_off_.push_back(off);
            off += layers_[l];
        }
    }

    double global_loss(const ParameterVector& p) const override {
        double acc = 0.0;
        for (std::size_t s = 0; s < data_.size(); ++s) acc += sample_loss(s, p);
        return acc / static_cast<double>(data_.size());
    }

    ParameterVector global_gradient(const ParameterVector& p) const override {
        ParameterVector g(dim(), 0.0);
        for (std::size_t s = 0; s < data_.size(); ++s) backprop(s, p, g);
        const double inv = 1.0 / static_cast<double>(data_.size());
        for (double& v : g) v *= inv;
        return g;
    }

    double local_loss(std::size_t worker, const ParameterVector& p) const override {
        const auto& rows = assignments_.at(worker);
        if (rows.empty()) return 0.0;
        double acc = 0.0;
        for (std::size_t s : rows) acc += sample_loss(s, p);
        return acc / static_cast<double>(rows.size());
    }

    ParameterVector local_gradient(std::size_t worker, const ParameterVector& p) const override {
        const auto& rows = assignments_.at(worker);
        ParameterVector g(dim(), 0.0);
        if (rows.empty()) return g;
        for (std::size_t s : rows) backprop(s, p, g);
        const double inv = 1.0 / static_cast<double>(rows.size());
        for (double& v : g) v *= inv;
        return g;
    }

    ParameterVector stochastic_gradient(std::size_t worker, const ParameterVector& p,
                                        std::size_t batch_size, RngStream& rng) const override {
        if (batch_size == 0) throw std::invalid_argument("stochastic_gradient: batch_size >= 1");
        const auto& rows = assignments_.at(worker);
        if (rows.empty()) return ParameterVector(dim(), 0.0);
        ParameterVector g(dim(), 0.0);
        for (std::size_t b = 0; b < batch_size; ++b)
            backprop(rows[rng.next_below(rows.size())], p, g);
        const double inv = 1.0 / static_cast<double>(batch_size);
        for (double& v : g) v *= inv;
        return g;
    }

    // Per-block curvature estimate: power iteration on the diagonal Hessian
    // block at a small deterministic probe point, Hv by central differences.
    void estimate_curvature(const PartitionScheme& scheme, std::uint64_t probe_seed) {
        RngStream rng = derive_stream(probe_seed, 0);
        ParameterVector x0(dim());
        for (double& v : x0) v = 0.1 * rng.next_gaussian();
        const double eps = 1e-4;
        for (std::size_t j = 1; j <= scheme.tau(); ++j) {
            const auto& idx = scheme.block(j);
            std::vector<double> v(idx.size());
            double norm = 0.0;
            for (double& c : v) {
                c = rng.next_gaussian();
                norm += c * c;
            }
            norm = std::sqrt(norm);
            for (double& c : v) c /= norm;
            double lambda = 1.0;
            for (int it = 0; it < 30; ++it) {
                ParameterVector xp = x0, xm = x0;
                for (std::size_t t = 0; t < idx.size(); ++t) {
                    xp[idx[t]] += eps * v[t];
                    xm[idx[t]] -= eps * v[t];
                }
                const ParameterVector gp = global_gradient(xp);
                const ParameterVector gm = global_gradient(xm);
                double nrm = 0.0;
                std::vector<double> hv(idx.size());
                for (std::size_t t = 0; t < idx.size(); ++t) {
                    hv[t] = (gp[idx[t]] - gm[idx[t]]) / (2.0 * eps);
                    nrm += hv[t] * hv[t];
                }
                nrm = std::sqrt(nrm);
                if (nrm < 1e-14) break;
                lambda = nrm;
                for (std::size_t t = 0; t < idx.size(); ++t) v[t] = hv[t] / nrm;
            }
            spec_.lipschitz[j - 1] = std::max(lambda, 1e-12);
        }
    }

private:
    // forward pass storing activations; returns 1/2 ||out - y||^2
    double forward(std::size_t s, const ParameterVector& p,
                   std::vector<std::vector<double>>& acts) const {
        acts.assign(layers_.size(), {});
        acts[0] = data_.features[s];
        for (std::size_t l = 1; l < layers_.size(); ++l) {
            const std::size_t rows = layers_[l], cols = layers_[l - 1];
            acts[l].assign(rows, 0.0);
            const double* w = p.data() + w_off_[l - 1];
            const double* b = p.data() + b_off_[l - 1];
            for (std::size_t r = 0; r < rows; ++r) {
                double z = b[r];
                for (std::size_t c = 0; c < cols; ++c) z += w[r * cols + c] * acts[l - 1][c];
                acts[l][r] = (l + 1 < layers_.size()) ? std::tanh(z) : z;
            }
        }
        const double out = acts.back()[0];
        const double err = out - data_.labels[s];
        return 0.5 * err * err;
    }

    double sample_loss(std::size_t s, const ParameterVector& p) const {
        std::vector<std::vector<double>> acts;
        return forward(s, p, acts);
    }

    void backprop(std::size_t s, const ParameterVector& p, ParameterVector& g) const {
        std::vector<std::vector<double>> acts;
        forward(s, p, acts);
        std::vector<double> delta{acts.back()[0] - data_.labels[s]};
        for (std::size_t l = layers_.size() - 1; l >= 1; --l) {
            const std::size_t rows = layers_[l], cols = layers_[l - 1];
            double* gw = g.data() + w_off_[l - 1];
            double* gb = g.data() + b_off_[l - 1];
            for (std::size_t r = 0; r < rows; ++r) {
                gb[r] += delta[r];
                for (std::size_t c = 0; c < cols; ++c) gw[r * cols + c] += delta[r] * acts[l - 1][c];
            }
            if (l == 1) break;
            const double* w = p.data() + w_off_[l - 1];
            std::vector<double> prev(cols, 0.0);
            for (std::size_t c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < rows; ++r) acc += w[r * cols + c] * delta[r];
                const double a = acts[l - 1][c];
                prev[c] = acc * (1.0 - a * a); // tanh'
            }
            delta = std::move(prev);
        }
    }

    std::vector<std::size_t> layers_;
    Dataset data_;
    std::vector<std::vector<std::size_t>> assignments_;
    std::vector<std::size_t> w_off_, b_off_;
};

void validate_assignments(const std::vector<std::vector<std::size_t>>& a, std::size_t n) {
    if (a.empty()) throw std::invalid_argument("objective: needs at least one worker");
    for (const auto& rows : a)
        for (std::size_t s : rows)
            if (s >= n) throw std::invalid_argument("objective: sample index out of range");
}

} // namespace

std::unique_ptr<Objective> make_quadratic(const PartitionScheme& scheme,
                                          std::vector<double> curvature, std::vector<double> sigma,
                                          std::vector<ParameterVector> worker_shifts,
                                          std::size_t workers, std::vector<double> weights) {
    const std::size_t tau = scheme.tau();
    if (curvature.size() != tau || sigma.size() != tau)
        throw std::invalid_argument("quadratic: curvature/sigma length must equal tau");
    for (double l : curvature)
        if (!(l > 0.0)) throw std::invalid_argument("quadratic: curvature must be positive");
    for (double s : sigma)
        if (s < 0.0) throw std::invalid_argument("quadratic: sigma must be nonnegative");
    if (!worker_shifts.empty()) {
        if (worker_shifts.size() != workers)
            throw std::invalid_argument("quadratic: one shift vector per worker required");
        for (const auto& c : worker_shifts)
            if (c.size() != scheme.dim())
                throw std::invalid_argument("quadratic: shift dimension mismatch");
    }
    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::quadratic;
    spec.dim = scheme.dim();
    spec.lipschitz = curvature;
    spec.sigma_sq.resize(tau);
    for (std::size_t j = 0; j < tau; ++j) spec.sigma_sq[j] = sigma[j] * sigma[j];
    spec.sigma_known = true;
    return std::make_unique<QuadraticObjective>(std::move(spec), scheme, std::move(sigma),
                                                std::move(worker_shifts), workers,
                                                std::move(weights));
}

std::unique_ptr<Objective> make_logistic(Dataset data,
                                         std::vector<std::vector<std::size_t>> assignments,
                                         double l2, const PartitionScheme& scheme) {
    if (data.size() == 0) throw std::invalid_argument("logistic: empty dataset");
    if (l2 < 0.0) throw std::invalid_argument("logistic: l2 must be nonnegative");
    if (scheme.dim() != data.feature_dim())
        throw std::invalid_argument("logistic: partition dimension must equal feature count");
    validate_assignments(assignments, data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        if (!all_finite(data.features[s])) throw std::invalid_argument("logistic: non-finite feature");
        if (data.labels[s] != 0.0 && data.labels[s] != 1.0)
            throw std::invalid_argument("logistic: labels must be 0 or 1");
    }
    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::logistic;
    spec.dim = data.feature_dim();
    // per-sample Hessian block for block j is bounded by ||x_{s,j}||^2 / 4 + l2
    spec.lipschitz.assign(scheme.tau(), 0.0);
    for (std::size_t j = 1; j <= scheme.tau(); ++j) {
        double worst = 0.0;
        for (const auto& x : data.features) {
            double sq = 0.0;
            for (std::size_t c : scheme.block(j)) sq += x[c] * x[c];
            worst = std::max(worst, sq);
        }
        spec.lipschitz[j - 1] = std::max(worst / 4.0 + l2, 1e-12);
    }
    spec.sigma_sq.assign(scheme.tau(), 0.0); // not analytically known for minibatching
    auto w = weights_from_assignments(assignments);
    return std::make_unique<LogisticObjective>(std::move(spec), std::move(data),
                                               std::move(assignments), l2, std::move(w));
}

std::size_t mlp_param_count(const std::vector<std::size_t>& layer_sizes) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
    std::size_t d = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l)
        d += layer_sizes[l] * (layer_sizes[l - 1] + 1);
    return d;
}

std::unique_ptr<Objective> make_mlp(std::vector<std::size_t> layer_sizes, Dataset data,
                                    std::vector<std::vector<std::size_t>> assignments,
                                    const PartitionScheme& scheme, std::uint64_t probe_seed) {
    if (data.size() == 0) throw std::invalid_argument("mlp: empty dataset");
    for (std::size_t n : layer_sizes)
        if (n == 0) throw std::invalid_argument("mlp: zero-width layer");
    if (layer_sizes.front() != data.feature_dim())
        throw std::invalid_argument("mlp: input width must equal feature count");
    if (layer_sizes.back() != 1) throw std::invalid_argument("mlp: scalar output expected");
    const std::size_t d = mlp_param_count(layer_sizes);
    if (scheme.dim() != d)
        throw std::invalid_argument("mlp: partition dimension must equal parameter count");
    validate_assignments(assignments, data.size());

    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::mlp;
    spec.dim = d;
    spec.sigma_sq.assign(scheme.tau(), 0.0);
    spec.lipschitz.assign(scheme.tau(), 1.0);
    spec.lipschitz_is_estimate = true;
    auto w = weights_from_assignments(assignments);
    auto obj = std::make_unique<MlpObjective>(std::move(spec), std::move(layer_sizes),
                                              std::move(data), std::move(assignments),
                                              std::move(w));
    obj->estimate_curvature(scheme, probe_seed);
    return obj;
}

} // namespace pavg
