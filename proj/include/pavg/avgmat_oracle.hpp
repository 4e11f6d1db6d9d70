#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pavg/param_space.hpp"
#include "pavg/rng.hpp"

namespace pavg {

// Small dense matrix; the oracle is a correctness reference, not a
// performance path, and is capped at m * d_j <= 256.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, const std::vector<double>& x);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(Matrix a, int max_sweeps = 64);

// J_j = (1/m) 1_m 1_m^T (x) I_{d_j}: block (a,b) of the m x m worker grid is
// (1/m) I_{d_j}; applying it replaces every worker's block with the mean.
Matrix build_J(std::size_t m, std::size_t d_j);

// P_{(j,k)} = J_j when iteration k (1-based) synchronizes partition j, the
// identity otherwise; same k -> j mapping as active_partition().
Matrix build_P(std::size_t m, std::size_t d_j, std::size_t j, std::uint64_t k, std::size_t tau);

struct PropertyReport {
    bool ok = true;
    std::string failing_property; // empty when ok
    double max_deviation = 0.0;
};

// Verifies to 1e-12: P 1 = 1; J P = J; pairwise products symmetric; products
// have the per-coordinate m x m block structure (entries couple only equal
// coordinates within the block).
PropertyReport check_properties(const std::vector<Matrix>& p_sequence, const Matrix& j_mat);

struct SpectralReport {
    bool ok = true;
    double max_eigenvalue_deviation = 0.0; // eig(I-J) distance from {0,1}
    double operator_norm = 0.0;            // ||I-J||_op
    double max_contraction_excess = 0.0;   // max over draws of ||(I-J)x|| - ||x||
    std::string diagnostic;
};

// Eigenvalues of I - J lie in {0,1} (1e-10); its operator norm is 1 for
// m >= 2 (0 for m = 1); ||(I-J)x|| <= ||x|| over `draws` random vectors.
SpectralReport spectral_check(std::size_t m, std::size_t d_j, std::size_t draws = 1000,
                              std::uint64_t seed = 7);

struct ReplayResult {
    // states[k][j-1] is the vectorized block-j state (length m*d_j) after
    // iteration k; states[0] is the initial state
    std::vector<std::vector<std::vector<double>>> states;
    // largest deviation between the direct recursion's (J-I)x and the
    // telescoped-sum form, over all iterations and blocks
    double max_form_disagreement = 0.0;
    // ||(J-I)x||^2 per iteration and block, from the direct recursion
    std::vector<std::vector<double>> consensus_gap_sq;
};

// Replays x_k = P_{(j,k)} (x_{k-1} - eta g_{k-1}) per block on a frozen
// gradient tape (tape[k][i] is worker i's gradient at iteration k+1), and
// cross-checks the telescoped expansion
//   (J-I) x_k = -eta * sum_s (J - prod_{l=s..k} P_l) g_s.
ReplayResult replay_recursion(const PartitionScheme& scheme, std::size_t m,
                              const ParameterVector& init,
                              const std::vector<std::vector<ParameterVector>>& gradient_tape,
                              double eta);

// Concatenation of the workers' block-j slices, worker-major.
std::vector<double> vectorize_block(const std::vector<ParameterVector>& worker_params,
                                    const PartitionScheme& scheme, std::size_t j);

} // namespace pavg
