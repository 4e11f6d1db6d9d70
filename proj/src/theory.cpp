#include "pavg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pavg {

double TheoryInputs::l_max() const {
    if (lipschitz.empty()) throw std::invalid_argument("theory: no Lipschitz constants");
    return *std::max_element(lipschitz.begin(), lipschitz.end());
}

double TheoryInputs::beta_sq_max() const {
    if (beta_sq.empty()) return 1.0;
    return *std::max_element(beta_sq.begin(), beta_sq.end());
}

double TheoryInputs::sum_p_sq() const {
    if (worker_weights.empty()) return 1.0 / static_cast<double>(workers);
    double acc = 0.0;
    for (double p : worker_weights) acc += p * p;
    return acc;
}

LrCheck lr_constraint_iid(double l_max, std::size_t tau, double eta) {
    if (!(l_max > 0.0) || !(eta > 0.0) || tau < 1)
        throw std::invalid_argument("lr_constraint_iid: positive inputs required");
    const double t = static_cast<double>(tau);
    const double lhs = l_max * l_max * eta * eta * t * (t - 1.0) + eta * l_max;
    LrCheck check;
    check.slack = 1.0 - lhs;
    check.satisfied = lhs <= 1.0;
    return check;
}

double max_eta_iid(double l_max, std::size_t tau) {
    if (!(l_max > 0.0) || tau < 1)
        throw std::invalid_argument("max_eta_iid: positive inputs required");
    if (tau == 1) return 1.0 / l_max;
    const double t = static_cast<double>(tau);
    // positive root of L^2 tau(tau-1) eta^2 + L eta - 1 = 0
    const double a = l_max * l_max * t * (t - 1.0);
    return (-l_max + std::sqrt(l_max * l_max + 4.0 * a)) / (2.0 * a);
}

LrCheckNiid lr_constraint_niid(double l_max, std::size_t tau, double beta_sq, double eta) {
    if (!(l_max > 0.0) || !(eta > 0.0) || tau < 1)
        throw std::invalid_argument("lr_constraint_niid: positive inputs required");
    if (beta_sq < 1.0) throw std::invalid_argument("lr_constraint_niid: beta^2 >= 1 required");
    const double t = static_cast<double>(tau);
    const double denom = 2.0 * t * (t - 1.0) * (2.0 * beta_sq + 1.0);
    const double second =
        denom > 0.0 ? 1.0 / std::sqrt(denom) : std::numeric_limits<double>::infinity();
    LrCheckNiid check;
    check.cap_main = std::min(0.5, second) / l_max;
    check.cap_appendix = std::min(1.0, second) / l_max;
    check.satisfied_main = eta <= check.cap_main;
    check.satisfied_appendix = eta <= check.cap_appendix;
    return check;
}

namespace {

void validate_inputs(const TheoryInputs& in) {
    if (in.lipschitz.size() != in.tau || in.sigma_sq.size() != in.tau)
        throw std::invalid_argument("theory: per-partition vectors must have length tau");
    for (double l : in.lipschitz)
        if (!(l > 0.0)) throw std::invalid_argument("theory: L_j must be positive");
    for (double s : in.sigma_sq)
        if (s < 0.0) throw std::invalid_argument("theory: sigma_j^2 must be nonnegative");
    if (in.workers < 1 || in.iterations < 1 || in.tau < 1)
        throw std::invalid_argument("theory: m, K, tau >= 1 required");
    if (in.f_init < in.f_inf)
        throw std::invalid_argument("theory: F(u_1) must be at least F_inf");
    if (!(in.eta > 0.0)) throw std::invalid_argument("theory: eta must be positive");
}

double sum_l_sigma(const TheoryInputs& in) {
    double acc = 0.0;
    for (std::size_t j = 0; j < in.tau; ++j) acc += in.lipschitz[j] * in.sigma_sq[j];
    return acc;
}

double sum_l2_sigma(const TheoryInputs& in) {
    double acc = 0.0;
    for (std::size_t j = 0; j < in.tau; ++j)
        acc += in.lipschitz[j] * in.lipschitz[j] * in.sigma_sq[j];
    return acc;
}

} // namespace

BoundReport bound_rhs_iid(const TheoryInputs& in) {
    validate_inputs(in);
    BoundReport rep;
    const LrCheck check = lr_constraint_iid(in.l_max(), in.tau, in.eta);
    if (!check.satisfied) {
        rep.reason = "learning-rate condition L^2 eta^2 tau(tau-1) + eta L <= 1 violated (slack " +
                     std::to_string(check.slack) + "); the bound is not claimed there";
        return rep;
    }
    const double t = static_cast<double>(in.tau);
    const double k = static_cast<double>(in.iterations);
    const double m = static_cast<double>(in.workers);
    rep.terms = {
        2.0 / (in.eta * k) * (in.f_init - in.f_inf),
        in.eta / m * sum_l_sigma(in),
        in.eta * in.eta * (t - 1.0) * sum_l2_sigma(in),
    };
    rep.total = rep.terms[0] + rep.terms[1] + rep.terms[2];
    rep.valid = true;
    return rep;
}

BoundReport bound_rhs_niid(const TheoryInputs& in) {
    validate_inputs(in);
    if (!in.beta_sq.empty() && in.beta_sq.size() != in.tau)
        throw std::invalid_argument("theory: beta_sq length must be tau");
    if (!in.kappa_sq.empty() && in.kappa_sq.size() != in.tau)
        throw std::invalid_argument("theory: kappa_sq length must be tau");
    BoundReport rep;
    const LrCheckNiid check = lr_constraint_niid(in.l_max(), in.tau, in.beta_sq_max(), in.eta);
    if (!check.satisfied_appendix) {
        rep.reason = "learning-rate cap (appendix variant) violated: eta " +
                     std::to_string(in.eta) + " > " + std::to_string(check.cap_appendix) +
                     "; the bound is not claimed there";
        return rep;
    }
    const double t = static_cast<double>(in.tau);
    const double k = static_cast<double>(in.iterations);
    const double m = static_cast<double>(in.workers);
    double sum_l2_kappa = 0.0;
    for (std::size_t j = 0; j < in.tau && j < in.kappa_sq.size(); ++j)
        sum_l2_kappa += in.lipschitz[j] * in.lipschitz[j] * in.kappa_sq[j];

    const double optimization = 4.0 / (in.eta * k) * (in.f_init - in.f_inf);
    const double third = 3.0 * in.eta * in.eta * (t - 1.0) * sum_l2_sigma(in);
    const double fourth = 6.0 * in.eta * in.eta * t * (t - 1.0) * sum_l2_kappa;

    rep.terms = {optimization, 4.0 * in.eta * in.sum_p_sq() * sum_l_sigma(in), third, fourth};
    rep.total = rep.terms[0] + rep.terms[1] + rep.terms[2] + rep.terms[3];
    rep.terms_alternate = {optimization, 2.0 * in.eta / m * sum_l_sigma(in), third, fourth};
    rep.total_alternate = rep.terms_alternate[0] + rep.terms_alternate[1] +
                          rep.terms_alternate[2] + rep.terms_alternate[3];
    rep.valid = true;
    return rep;
}

double speedup_eta(std::size_t m, std::uint64_t k) {
    if (m < 1 || k < 1) throw std::invalid_argument("speedup_eta: m, K >= 1 required");
    return std::sqrt(static_cast<double>(m) / static_cast<double>(k));
}

bool linear_speedup_regime(std::size_t m, std::uint64_t k) {
    const double m_d = static_cast<double>(m);
    return static_cast<double>(k) > m_d * m_d * m_d;
}

} // namespace pavg
