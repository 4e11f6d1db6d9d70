#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pavg {

// Inputs to the convergence-bound evaluators. Per-partition vectors run over
// the tau blocks of the objective's defining partition; global dissimilarity
// constants are taken as maxima over blocks.
struct TheoryInputs {
    std::vector<double> lipschitz; // L_j > 0
    std::vector<double> sigma_sq;  // sigma_j^2 >= 0
    std::vector<double> beta_sq;   // >= 1; empty = IID (all 1)
    std::vector<double> kappa_sq;  // >= 0; empty = IID (all 0)
    std::size_t workers = 1;       // m
    std::uint64_t iterations = 1;  // K
    std::size_t tau = 1;
    double eta = 0.0;
    double f_init = 0.0;                // F(u_1)
    double f_inf = 0.0;                 // exact minimum or documented lower bound
    std::vector<double> worker_weights; // p_i; empty = uniform

    double l_max() const;
    double beta_sq_max() const; // 1 when unknown
    double sum_p_sq() const;    // sum p_i^2 (1/m when uniform)
};

struct LrCheck {
    bool satisfied = false;
    double slack = 0.0; // 1 - (L^2 eta^2 tau(tau-1) + eta L)
};

// Theorem-1 condition L_max^2 eta^2 tau(tau-1) + eta L_max <= 1.
LrCheck lr_constraint_iid(double l_max, std::size_t tau, double eta);

// Largest eta satisfying the Theorem-1 condition (1/L_max at tau = 1).
double max_eta_iid(double l_max, std::size_t tau);

struct LrCheckNiid {
    double cap_main = 0.0;     // (1/L) min{1/2, 1/sqrt(2 tau(tau-1)(2 beta^2+1))}
    double cap_appendix = 0.0; // (1/L) min{1,   ... }
    bool satisfied_main = false;
    bool satisfied_appendix = false;
};

// Theorem-2 condition; the main text caps the first branch at 1/2, the
// appendix derivation at 1. Both variants are computed, neither is canonical.
LrCheckNiid lr_constraint_niid(double l_max, std::size_t tau, double beta_sq, double eta);

struct BoundReport {
    bool valid = false; // false when the learning-rate precondition fails
    std::string reason; // set when invalid
    double total = 0.0;
    std::vector<double> terms;      // per-term breakdown
    double total_alternate = 0.0;   // non-IID only: appendix second-term variant
    std::vector<double> terms_alternate;
};

// Theorem-1 right-hand side:
//   2/(eta K) (F(u_1) - F_inf) + eta/m sum L_j sigma_j^2
//   + eta^2 (tau-1) sum L_j^2 sigma_j^2.
// Refuses (valid = false) when the IID learning-rate condition fails.
BoundReport bound_rhs_iid(const TheoryInputs& in);

// Theorem-2 right-hand side, second term in both reported forms:
//   main text 4 eta (sum p_i^2)(sum L_j sigma_j^2), appendix 2 eta/m sum L_j sigma_j^2;
// remaining terms 4/(eta K)(F(u_1)-F_inf), 3 eta^2 (tau-1) sum L_j^2 sigma_j^2,
// 6 eta^2 tau(tau-1) sum L_j^2 kappa_j^2.
// Refuses when the appendix-variant learning-rate condition fails.
BoundReport bound_rhs_niid(const TheoryInputs& in);

// The linear-speedup schedule eta = sqrt(m/K); callers still pass it through
// the constraint check.
double speedup_eta(std::size_t m, std::uint64_t k);

// True when K > m^3, the regime where the 1/sqrt(mK) term dominates.
bool linear_speedup_regime(std::size_t m, std::uint64_t k);

} // namespace pavg
