#include "denfuse/assignment.hpp"
#include "denfuse/errors.hpp"
#include "denfuse/metrics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

using namespace denfuse;

namespace {

std::vector<MeasVector> random_points(Rng& rng, int n, double spread) {
    std::uniform_real_distribution<double> u(0.0, spread);
    std::vector<MeasVector> out;
    for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng));
    return out;
}

double brute_force_assignment(const Eigen::MatrixXd& c) {
    const bool rows_small = c.rows() <= c.cols();
    const Eigen::MatrixXd m = rows_small ? c : Eigen::MatrixXd(c.transpose());
    std::vector<int> idx(m.cols());
    std::iota(idx.begin(), idx.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, idx[r]);
        best = std::min(best, s);
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

}  // namespace

TEST_CASE("GOSPA reference values") {
    const std::vector<MeasVector> none;
    const std::vector<MeasVector> one = {MeasVector(3, 4)};

    const auto empty = gospa(none, one);
    CHECK(empty.total == 25.0);
    CHECK(empty.missed == 25.0);
    CHECK(empty.localisation == 0.0);
    CHECK(empty.false_ == 0.0);

    const auto ghost = gospa(one, none);
    CHECK(ghost.false_ == 25.0);
    CHECK(ghost.missed == 0.0);

    const std::vector<MeasVector> near = {MeasVector(9, 12)};  // distance 10
    const auto pair = gospa(near, one);
    CHECK(pair.total == doctest::Approx(10.0));
    CHECK(pair.localisation == doctest::Approx(10.0));
    REQUIRE(pair.assignment.size() == 1);
    CHECK(pair.assignment[0] == std::pair<int, int>(0, 0));

    const std::vector<MeasVector> far = {MeasVector(100, 4)};
    const auto apart = gospa(far, one);
    CHECK(apart.total == 50.0);
    CHECK(apart.missed == 25.0);
    CHECK(apart.false_ == 25.0);
    CHECK(apart.assignment.empty());

    const std::vector<MeasVector> many = {MeasVector(0, 0), MeasVector(7, 1), MeasVector(-4, 2)};
    CHECK(gospa(many, many).total == 0.0);
    CHECK(gospa(none, none).total == 0.0);
}

TEST_CASE("GOSPA with other orders") {
    const std::vector<MeasVector> t = {MeasVector(0, 0), MeasVector(10, 0)};
    const std::vector<MeasVector> e = {MeasVector(3, 4)};
    GospaParams p;
    p.p = 2.0;
    const auto g = gospa(e, t, p);
    // (5^2 + 50^2 / 2)^(1/2)
    CHECK(g.total == doctest::Approx(std::sqrt(25.0 + 1250.0)));
    CHECK(g.localisation == doctest::Approx(25.0));

    GospaParams bad;
    bad.alpha = 3.0;
    CHECK_THROWS_AS((void)gospa(e, t, bad), ConfigError);
    bad = GospaParams{};
    bad.p = 0.5;
    CHECK_THROWS_AS((void)gospa(e, t, bad), ConfigError);
    bad = GospaParams{};
    bad.cutoff = 0.0;
    CHECK_THROWS_AS((void)gospa(e, t, bad), ConfigError);
}

TEST_CASE("GOSPA equals exhaustive search") {
    Rng rng(2024);
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        GospaParams p;
        if (trial % 3 == 1) p.alpha = 1.0;
        if (trial % 5 == 2) p.p = 2.0;
        const auto t = random_points(rng, count(rng), 150.0);
        const auto e = random_points(rng, count(rng), 150.0);
        const auto g = gospa(e, t, p);
        CHECK(g.total == oracle::brute_force_gospa(e, t, p));
        if (p.p == 1.0) CHECK(g.total == doctest::Approx(g.localisation + g.missed + g.false_));
    }
}

TEST_CASE("moving an estimate towards its truth never increases GOSPA") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_points(rng, 4, 120.0);
        auto e = random_points(rng, 4, 120.0);
        const auto g = gospa(e, t);
        if (g.assignment.empty()) continue;
        const auto [ti, ei] = g.assignment.front();
        e[ei] = 0.5 * (e[ei] + t[ti]);
        CHECK(gospa(e, t).total <= g.total + 1e-12);
    }
}

TEST_CASE("assignment solver") {
    Eigen::MatrixXd c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto a = solve_assignment(c);
    CHECK(a == std::vector<int>{1, 0, 2});

    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + trial % 6;
        const int cols = 1 + (trial / 6) % 6;
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
        const auto sol = solve_assignment(m);
        REQUIRE(static_cast<int>(sol.size()) == rows);
        double cost = 0.0;
        std::vector<int> used;
        for (int r = 0; r < rows; ++r)
            if (sol[r] >= 0) {
                cost += m(r, sol[r]);
                used.push_back(sol[r]);
            }
        std::sort(used.begin(), used.end());
        CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
        CHECK(static_cast<int>(used.size()) == std::min(rows, cols));
        CHECK(cost == doctest::Approx(brute_force_assignment(m)).epsilon(1e-12));
    }
    CHECK(solve_assignment(Eigen::MatrixXd(0, 3)).empty());
    CHECK(solve_assignment(Eigen::MatrixXd(2, 0)) == std::vector<int>{-1, -1});
}

TEST_CASE("mean and population std") {
    const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
    const auto ms = mean_std(v);
    CHECK(ms.mean == 5.0);
    CHECK(ms.std == 2.0);
    CHECK(mean_std(std::vector<double>{}).mean == 0.0);
}

TEST_CASE("aggregation over runs, steps and sensors") {
    auto b = [](double loc, double missed) {
        GospaBreakdown g;
        g.localisation = loc;
        g.missed = g.false_ = missed;
        g.total = loc + 2 * missed;
        return g;
    };
    MethodRecord r;
    r.method = "X";
    // run 0: mean over (2 steps x 2 sensors) of totals 10, 20, 30, 40 -> 25
    // run 1: totals 5, 5, 5, 5 -> 5
    r.gospa = {{{b(10, 0), b(20, 0)}, {b(30, 0), b(0, 20)}}, {{b(5, 0), b(5, 0)}, {b(5, 0), b(5, 0)}}};
    r.communication = {40, 60};
    const auto s = aggregate(r);
    CHECK(s.runs == 2);
    CHECK(s.mgospa.mean == doctest::Approx(15.0));
    CHECK(s.mgospa.std == doctest::Approx(10.0));
    CHECK(s.missed.mean == doctest::Approx(2.5));
    CHECK(s.localisation.mean == doctest::Approx(10.0));
    CHECK(s.communication_iterations == doctest::Approx(25.0));
    REQUIRE(s.per_step.size() == 2);
    CHECK(s.per_step[0].mean == doctest::Approx(10.0));
    CHECK(s.per_step[1].mean == doctest::Approx(20.0));

    MethodRecord ragged = r;
    ragged.gospa[1].pop_back();
    CHECK_THROWS_AS((void)aggregate(ragged), ConfigError);
    ragged = r;
    ragged.gospa[1][0].pop_back();
    CHECK_THROWS_AS((void)aggregate(ragged), ConfigError);
    CHECK_THROWS_AS((void)aggregate(MethodRecord{}), ConfigError);
}
