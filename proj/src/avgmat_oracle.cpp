#include "pavg/avgmat_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pavg {

namespace {
constexpr std::size_t kMaxOracleSide = 256;

void check_side(std::size_t m, std::size_t d_j) {
    if (m == 0 || d_j == 0) throw std::invalid_argument("oracle: m, d_j >= 1");
    if (m * d_j > kMaxOracleSide)
        throw std::invalid_argument("oracle: m * d_j exceeds the dense-matrix cap");
}
} // namespace

Matrix Matrix::identity(std::size_t n) {
    Matrix e(n, n);
    for (std::size_t i = 0; i < n; ++i) e(i, i) = 1.0;
    return e;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: shape mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double v = a(r, k);
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += v * b(k, c);
        }
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("matrix difference: shape mismatch");
    Matrix out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) - b(r, c);
    return out;
}

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: shape mismatch");
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) acc += a(r, c) * x[c];
        out[r] = acc;
    }
    return out;
}

std::vector<double> symmetric_eigenvalues(Matrix a, int max_sweeps) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues: square matrix required");
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a(r, p), arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = a(p, r), aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

Matrix build_J(std::size_t m, std::size_t d_j) {
    check_side(m, d_j);
    const std::size_t n = m * d_j;
    Matrix j(n, n);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            for (std::size_t c = 0; c < d_j; ++c) j(a * d_j + c, b * d_j + c) = inv_m;
    return j;
}

Matrix build_P(std::size_t m, std::size_t d_j, std::size_t j, std::uint64_t k, std::size_t tau) {
    check_side(m, d_j);
    if (j < 1 || j > tau) throw std::invalid_argument("build_P: partition index out of range");
    return active_partition(k, tau) == j ? build_J(m, d_j) : Matrix::identity(m * d_j);
}

namespace {

double max_abs(const Matrix& a) {
    double worst = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c)));
    return worst;
}

} // namespace

PropertyReport check_properties(const std::vector<Matrix>& p_sequence, const Matrix& j_mat) {
    PropertyReport rep;
    const std::size_t n = j_mat.rows();
    const std::size_t d_j = [&] {
        // infer d_j from the first off-diagonal 1/m entry pattern of J
        for (std::size_t c = 1; c < n; ++c)
            if (j_mat(0, c) != 0.0) return c;
        return n;
    }();
    constexpr double tol = 1e-12;
    auto fail = [&](const std::string& name, double dev) {
        if (dev > rep.max_deviation) rep.max_deviation = dev;
        if (rep.ok && dev > tol) {
            rep.ok = false;
            rep.failing_property = name;
        }
    };

    const std::vector<double> ones(n, 1.0);
    for (const Matrix& p : p_sequence) {
        // property 1: P 1 = 1
        const auto p1 = p * ones;
        double dev = 0.0;
        for (double v : p1) dev = std::max(dev, std::abs(v - 1.0));
        fail("P*1=1", dev);

        // property 2: J P = J
        fail("J*P=J", max_abs(j_mat * p - j_mat));
    }

    for (const Matrix& pa : p_sequence) {
        for (const Matrix& pb : p_sequence) {
            const Matrix prod = pa * pb;
            // property 3: products symmetric
            double dev = 0.0;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = r + 1; c < n; ++c)
                    dev = std::max(dev, std::abs(prod(r, c) - prod(c, r)));
            fail("product symmetry", dev);

            // property 4: products couple only equal coordinates across the
            // worker grid (per-coordinate m x m diagonal blocks)
            double structure = 0.0;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    if (r % d_j != c % d_j) structure = std::max(structure, std::abs(prod(r, c)));
            fail("product block structure", structure);
        }
    }
    return rep;
}

SpectralReport spectral_check(std::size_t m, std::size_t d_j, std::size_t draws,
                              std::uint64_t seed) {
    check_side(m, d_j);
    SpectralReport rep;
    const std::size_t n = m * d_j;
    const Matrix diff = Matrix::identity(n) - build_J(m, d_j);

    const auto eig = symmetric_eigenvalues(diff);
    for (double ev : eig) {
        const double dev = std::min(std::abs(ev), std::abs(ev - 1.0));
        rep.max_eigenvalue_deviation = std::max(rep.max_eigenvalue_deviation, dev);
    }
    rep.operator_norm = std::max(std::abs(eig.front()), std::abs(eig.back()));

    RngStream rng = derive_stream(seed, 0);
    for (std::size_t t = 0; t < draws; ++t) {
        std::vector<double> x(n);
        double nx = 0.0;
        for (double& v : x) {
            v = rng.next_gaussian();
            nx += v * v;
        }
        const auto y = diff * x;
        double ny = 0.0;
        for (double v : y) ny += v * v;
        rep.max_contraction_excess =
            std::max(rep.max_contraction_excess, std::sqrt(ny) - std::sqrt(nx));
    }

    const double expected_norm = m >= 2 ? 1.0 : 0.0;
    if (rep.max_eigenvalue_deviation > 1e-10) {
        rep.ok = false;
        rep.diagnostic = "eigenvalues of I-J leave {0,1}";
    } else if (std::abs(rep.operator_norm - expected_norm) > 1e-10) {
        rep.ok = false;
        rep.diagnostic = "operator norm of I-J deviates from " + std::to_string(expected_norm);
    } else if (rep.max_contraction_excess > 1e-10) {
        rep.ok = false;
        rep.diagnostic = "||(I-J)x|| exceeded ||x||";
    }
    return rep;
}

std::vector<double> vectorize_block(const std::vector<ParameterVector>& worker_params,
                                    const PartitionScheme& scheme, std::size_t j) {
    std::vector<double> out;
    out.reserve(worker_params.size() * scheme.block_size(j));
    for (const auto& x : worker_params) {
        const auto piece = slice(x, scheme, j);
        out.insert(out.end(), piece.begin(), piece.end());
    }
    return out;
}

ReplayResult replay_recursion(const PartitionScheme& scheme, std::size_t m,
                              const ParameterVector& init,
                              const std::vector<std::vector<ParameterVector>>& gradient_tape,
                              double eta) {
    const std::size_t tau = scheme.tau();
    const std::uint64_t k_total = gradient_tape.size();
    if (k_total == 0) throw std::invalid_argument("replay_recursion: empty tape");
    for (const auto& grads : gradient_tape)
        if (grads.size() != m) throw std::invalid_argument("replay_recursion: tape worker count");

    ReplayResult result;
    result.states.resize(k_total + 1);
    result.consensus_gap_sq.assign(k_total, std::vector<double>(tau, 0.0));

    // per-block matrices and initial vectorized states
    std::vector<Matrix> j_mats(tau), i_mats(tau);
    std::vector<std::vector<double>> state(tau);
    const std::vector<ParameterVector> init_all(m, init);
    for (std::size_t j = 1; j <= tau; ++j) {
        const std::size_t d_j = scheme.block_size(j);
        j_mats[j - 1] = build_J(m, d_j);
        i_mats[j - 1] = Matrix::identity(m * d_j);
        state[j - 1] = vectorize_block(init_all, scheme, j);
    }
    result.states[0] = state;

    // telescoped form bookkeeping: for every past gradient s the running
    // product prod_{l=s..k} P_l, updated as P_k is applied
    std::vector<std::vector<std::vector<double>>> tape_blocks; // [s][j][m*d_j]
    std::vector<std::vector<Matrix>> running_products;         // [s][j]

    for (std::uint64_t k = 1; k <= k_total; ++k) {
        const std::size_t j_active = active_partition(k, tau);

        std::vector<std::vector<double>> g_blocks(tau);
        for (std::size_t j = 1; j <= tau; ++j)
            g_blocks[j - 1] = vectorize_block(gradient_tape[k - 1], scheme, j);

        // direct recursion: x_k = P_k (x_{k-1} - eta g_k)
        for (std::size_t j = 1; j <= tau; ++j) {
            auto& x = state[j - 1];
            for (std::size_t t = 0; t < x.size(); ++t) x[t] -= eta * g_blocks[j - 1][t];
            if (j == j_active) x = j_mats[j - 1] * x;
        }
        result.states[k] = state;

        // telescoped form: extend the product list with P_k
        running_products.push_back(std::vector<Matrix>(tau));
        tape_blocks.push_back(g_blocks);
        for (std::size_t s = 0; s < running_products.size(); ++s)
            for (std::size_t j = 1; j <= tau; ++j) {
                Matrix& prod = running_products[s][j - 1];
                if (s + 1 == running_products.size())
                    prod = build_P(m, scheme.block_size(j), j, k, tau);
                else if (j == j_active)
                    prod = j_mats[j - 1] * prod; // P_k is J here, identity otherwise
            }

        for (std::size_t j = 1; j <= tau; ++j) {
            const std::size_t n = m * scheme.block_size(j);
            // direct (J - I) x_k
            const auto jx = j_mats[j - 1] * state[j - 1];
            std::vector<double> direct(n);
            double gap_sq = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                direct[t] = jx[t] - state[j - 1][t];
                gap_sq += direct[t] * direct[t];
            }
            result.consensus_gap_sq[k - 1][j - 1] = gap_sq;

            // telescoped: -eta sum_s (J - prod_{l=s..k} P_l) g_s
            std::vector<double> telescoped(n, 0.0);
            for (std::size_t s = 0; s < tape_blocks.size(); ++s) {
                const auto proj = j_mats[j - 1] * tape_blocks[s][j - 1];
                const auto prop = running_products[s][j - 1] * tape_blocks[s][j - 1];
                for (std::size_t t = 0; t < n; ++t) telescoped[t] -= eta * (proj[t] - prop[t]);
            }
            for (std::size_t t = 0; t < n; ++t)
                result.max_form_disagreement =
                    std::max(result.max_form_disagreement, std::abs(direct[t] - telescoped[t]));
        }
    }
    return result;
}

} // namespace pavg
