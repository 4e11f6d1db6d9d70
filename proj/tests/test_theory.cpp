#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pavg/theory.hpp"

using namespace pavg;

namespace {

TheoryInputs base_inputs() {
    TheoryInputs in;
    in.lipschitz = {1.0, 1.0};
    in.sigma_sq = {1.0, 1.0};
    in.workers = 4;
    in.iterations = 1000;
    in.tau = 2;
    in.eta = 0.1;
    in.f_init = 5.0;
    in.f_inf = 0.0;
    return in;
}

} // namespace

TEST_CASE("IID learning-rate constraint") {
    // tau = 1 reduces to eta L <= 1
    const auto unit = lr_constraint_iid(1.0, 1, 1.0);
    CHECK(unit.satisfied);
    CHECK(unit.slack == doctest::Approx(0.0));

    // boundary: 2 * 0.25 + 0.5 = 1
    const auto boundary = lr_constraint_iid(1.0, 2, 0.5);
    CHECK(boundary.satisfied);
    CHECK(boundary.slack == doctest::Approx(0.0));

    // 0.72 + 0.6 = 1.32 > 1
    const auto violated = lr_constraint_iid(1.0, 2, 0.6);
    CHECK(!violated.satisfied);
    CHECK(violated.slack == doctest::Approx(-0.32));
}

TEST_CASE("largest admissible IID eta") {
    CHECK(max_eta_iid(1.0, 2) == doctest::Approx(0.5));
    CHECK(max_eta_iid(2.0, 1) == doctest::Approx(0.5));
    CHECK(max_eta_iid(1.0, 8) < max_eta_iid(1.0, 2));

    // plugging the root back saturates the constraint
    for (const double l : {0.5, 1.0, 3.0})
        for (const std::size_t tau : {1u, 2u, 5u, 16u}) {
            const double eta = max_eta_iid(l, tau);
            CHECK(std::abs(lr_constraint_iid(l, tau, eta).slack) <= 1e-12);
        }
}

TEST_CASE("non-IID learning-rate caps, both variants") {
    // tau = 1: second branch is infinite, main-text cap is 1/(2L)
    const auto unit = lr_constraint_niid(2.0, 1, 1.0, 0.2);
    CHECK(unit.cap_main == doctest::Approx(0.25));
    CHECK(unit.cap_appendix == doctest::Approx(0.5));
    CHECK(unit.satisfied_main);

    // sqrt(2*2*1*3) = sqrt(12): cap 0.2887 for both variants
    const auto both = lr_constraint_niid(1.0, 2, 1.0, 0.1);
    CHECK(both.cap_main == doctest::Approx(1.0 / std::sqrt(12.0)));
    CHECK(both.cap_appendix == doctest::Approx(1.0 / std::sqrt(12.0)));

    // increasing beta^2 strictly shrinks the cap (tau >= 2)
    CHECK(lr_constraint_niid(1.0, 2, 4.0, 0.1).cap_main <
          lr_constraint_niid(1.0, 2, 1.0, 0.1).cap_main);

    // the appendix cap dominates the main-text cap everywhere
    for (const double beta : {1.0, 2.0, 10.0})
        for (const std::size_t tau : {1u, 2u, 4u}) {
            const auto caps = lr_constraint_niid(1.0, tau, beta, 0.01);
            CHECK(caps.cap_appendix >= caps.cap_main);
            if (caps.satisfied_main) CHECK(caps.satisfied_appendix);
        }

    CHECK_THROWS_AS(lr_constraint_niid(1.0, 2, 0.5, 0.1), std::invalid_argument);
}

TEST_CASE("Theorem-1 right-hand side") {
    // sigma = 0: pure optimization term
    TheoryInputs in = base_inputs();
    in.sigma_sq = {0.0, 0.0};
    const auto clean = bound_rhs_iid(in);
    CHECK(clean.valid);
    CHECK(clean.total == doctest::Approx(2.0 * 5.0 / (0.1 * 1000.0)));
    CHECK(clean.terms[1] == 0.0);
    CHECK(clean.terms[2] == 0.0);

    // tau = 1 kills the discrepancy term
    TheoryInputs tau1 = base_inputs();
    tau1.tau = 1;
    tau1.lipschitz = {1.0};
    tau1.sigma_sq = {1.0};
    CHECK(bound_rhs_iid(tau1).terms[2] == 0.0);

    // doubling m halves the noise term exactly
    TheoryInputs m4 = base_inputs();
    const auto t4 = bound_rhs_iid(m4);
    m4.workers = 8;
    const auto t8 = bound_rhs_iid(m4);
    CHECK(t8.terms[1] == doctest::Approx(t4.terms[1] / 2.0));

    // refusal outside the admissible learning-rate region
    TheoryInputs bad = base_inputs();
    bad.eta = 0.9;
    const auto refused = bound_rhs_iid(bad);
    CHECK(!refused.valid);
    CHECK(!refused.reason.empty());
}

TEST_CASE("Theorem-2 right-hand side, both second-term forms") {
    TheoryInputs in = base_inputs();
    in.eta = 0.05;
    in.beta_sq = {1.0, 1.0};
    in.kappa_sq = {0.0, 0.0};
    const auto iid_degenerate = bound_rhs_niid(in);
    CHECK(iid_degenerate.valid);
    CHECK(iid_degenerate.terms[3] == 0.0); // kappa = 0 kills the dissimilarity term

    // uniform weights: main-text second term equals 4 eta/m sum L sigma^2
    const double expect = 4.0 * in.eta / 4.0 * (1.0 + 1.0);
    CHECK(iid_degenerate.terms[1] == doctest::Approx(expect));
    // appendix form is half of it
    CHECK(iid_degenerate.terms_alternate[1] == doctest::Approx(expect / 2.0));

    // tau = 1: discrepancy and dissimilarity terms vanish
    TheoryInputs tau1 = in;
    tau1.tau = 1;
    tau1.lipschitz = {1.0};
    tau1.sigma_sq = {1.0};
    tau1.beta_sq = {2.0};
    tau1.kappa_sq = {3.0};
    tau1.eta = 0.2;
    const auto t1 = bound_rhs_niid(tau1);
    CHECK(t1.valid);
    CHECK(t1.terms[2] == 0.0);
    CHECK(t1.terms[3] == 0.0);

    // refusal tracks the appendix cap
    TheoryInputs bad = in;
    bad.eta = 0.5;
    CHECK(!bound_rhs_niid(bad).valid);
}

TEST_CASE("constraint and bound evaluators agree on refusal") {
    TheoryInputs in = base_inputs();
    for (double eta = 0.05; eta < 1.2; eta += 0.05) {
        in.eta = eta;
        const bool constraint_ok = lr_constraint_iid(in.l_max(), in.tau, eta).satisfied;
        CHECK(bound_rhs_iid(in).valid == constraint_ok);
        const bool niid_ok =
            lr_constraint_niid(in.l_max(), in.tau, in.beta_sq_max(), eta).satisfied_appendix;
        CHECK(bound_rhs_niid(in).valid == niid_ok);
    }
}

TEST_CASE("linear speedup helpers") {
    CHECK(speedup_eta(16, 16) == doctest::Approx(1.0));
    CHECK(speedup_eta(4, 100) == doctest::Approx(0.2));
    CHECK(speedup_eta(1, 10000) == doctest::Approx(0.01));

    CHECK(linear_speedup_regime(4, 65));   // 65 > 64
    CHECK(!linear_speedup_regime(4, 64));  // boundary excluded
    CHECK(linear_speedup_regime(1, 2));
}
