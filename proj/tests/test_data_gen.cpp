#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "pavg/data_gen.hpp"

using namespace pavg;

namespace {

std::vector<int> balanced_labels(std::size_t classes, std::size_t per_class) {
    std::vector<int> labels;
    labels.reserve(classes * per_class);
    for (std::size_t s = 0; s < classes * per_class; ++s)
        labels.push_back(static_cast<int>(s % classes));
    return labels;
}

void check_conservation(const FederatedSplit& split, std::size_t n) {
    std::vector<int> seen(n, 0);
    for (const auto& a : split.assignments)
        for (std::size_t s : a) seen.at(s)++;
    for (int c : seen) CHECK(c == 1);
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < split.workers(); ++i) {
        CHECK(split.weights[i] ==
              static_cast<double>(split.assignments[i].size()) / static_cast<double>(n));
        weight_sum += split.weights[i];
    }
    CHECK(std::abs(weight_sum - 1.0) < 1e-12);
}

} // namespace

TEST_CASE("iid split shards evenly") {
    RngStream rng(1);
    const auto even = split_iid(4, 2, rng);
    CHECK(even.assignments[0].size() == 2);
    CHECK(even.assignments[1].size() == 2);
    CHECK(even.weights == std::vector<double>{0.5, 0.5});
    check_conservation(even, 4);

    const auto odd = split_iid(5, 2, rng);
    CHECK(odd.assignments[0].size() == 3);
    CHECK(odd.assignments[1].size() == 2);
    CHECK(odd.weights[0] == doctest::Approx(0.6));
    CHECK(odd.weights[1] == doctest::Approx(0.4));

    const auto solo = split_iid(7, 1, rng);
    CHECK(solo.assignments[0].size() == 7);
    CHECK(solo.weights == std::vector<double>{1.0});

    CHECK_THROWS_AS(split_iid(2, 3, rng), std::invalid_argument);
}

TEST_CASE("dirichlet split at huge alpha approaches uniform class proportions") {
    const auto labels = balanced_labels(4, 1000);
    RngStream rng(7);
    const auto split = split_dirichlet(labels, 4, 1e6, 1, rng);
    check_conservation(split, labels.size());
    const auto rep = heterogeneity_report(split, labels);
    for (std::size_t i = 0; i < 4; ++i) {
        const double n_i = static_cast<double>(split.assignments[i].size());
        for (std::size_t c = 0; c < 4; ++c) {
            const double prop = static_cast<double>(rep.class_histograms[i][c]) / n_i;
            CHECK(std::abs(prop - 0.25) < 0.02);
        }
    }
}

TEST_CASE("dirichlet split edge cases") {
    const auto labels = balanced_labels(3, 10);
    RngStream rng(9);
    const auto solo = split_dirichlet(labels, 1, 0.1, 1, rng);
    CHECK(solo.assignments[0].size() == labels.size());

    for (double alpha : {0.1, 1.0}) {
        RngStream r2(11);
        const auto split = split_dirichlet(labels, 3, alpha, 1, r2);
        check_conservation(split, labels.size());
    }

    // two nearly point-mass classes cannot give four workers two samples each
    const auto tiny = balanced_labels(2, 4);
    RngStream r3(13);
    CHECK_THROWS_AS(split_dirichlet(tiny, 4, 1e-6, 2, r3, 5), InfeasibleSplitError);
    CHECK_THROWS_AS(split_dirichlet(tiny, 9, 1e-6, 1, r3, 5), InfeasibleSplitError);
}

TEST_CASE("heterogeneity report closed forms") {
    // each worker holds exactly one of c classes: TV = 1 - 1/c
    const std::size_t c = 5, per = 20;
    std::vector<int> labels;
    FederatedSplit split;
    split.assignments.resize(c);
    for (std::size_t cls = 0; cls < c; ++cls)
        for (std::size_t t = 0; t < per; ++t) {
            split.assignments[cls].push_back(labels.size());
            labels.push_back(static_cast<int>(cls));
        }
    split.weights.assign(c, 1.0 / static_cast<double>(c));
    const auto rep = heterogeneity_report(split, labels);
    for (double tv : rep.tv_distance) CHECK(tv == doctest::Approx(1.0 - 1.0 / c));

    // single worker: TV exactly 0
    FederatedSplit solo;
    solo.assignments = {{}};
    for (std::size_t s = 0; s < labels.size(); ++s) solo.assignments[0].push_back(s);
    solo.weights = {1.0};
    CHECK(heterogeneity_report(solo, labels).mean_tv == 0.0);

    // IID split of balanced labels stays near the global distribution
    RngStream rng(3);
    const auto big_labels = balanced_labels(4, 500);
    const auto iid = split_iid(big_labels.size(), 4, rng);
    CHECK(heterogeneity_report(iid, big_labels).mean_tv < 0.05);
}

TEST_CASE("mean TV heterogeneity decreases as alpha grows") {
    const auto labels = balanced_labels(10, 200);
    const std::size_t m = 8, seeds = 20;
    double mean_tv[3] = {0, 0, 0};
    const double alphas[3] = {0.1, 1.0, 1e6};
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t seed = 0; seed < seeds; ++seed) {
            RngStream rng = derive_stream(1000 + seed, a);
            const auto split = split_dirichlet(labels, m, alphas[a], 1, rng);
            mean_tv[a] += heterogeneity_report(split, labels).mean_tv / seeds;
        }
    }
    CHECK(mean_tv[0] > mean_tv[1]);
    CHECK(mean_tv[1] > mean_tv[2]);
}

TEST_CASE("split export/import round trip") {
    RngStream rng(21);
    const auto labels = balanced_labels(3, 40);
    const auto split = split_dirichlet(labels, 4, 0.5, 1, rng);
    std::stringstream buf;
    save_split(buf, split);
    const auto loaded = load_split(buf);
    CHECK(loaded.assignments == split.assignments);
    CHECK(loaded.weights == split.weights);

    std::stringstream empty;
    CHECK_THROWS_AS(load_split(empty), std::invalid_argument);
}
