// Independent reference computations shared by the unit and acceptance tests.
#pragma once

#include "denfuse/metrics.hpp"
#include "denfuse/rng.hpp"
#include "denfuse/vi_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using namespace denfuse;

/// Covariance of the sufficient statistics in the flattened coordinates:
/// x_a for the linear part, x_a^2 on the diagonal and 2 x_a x_b above it.
/// Uses the closed-form third and fourth Gaussian moments.
inline Eigen::Matrix<double, kBlockSize, kBlockSize> fisher_block(const ObjectGaussian& o) {
    struct Stat {
        int a, b;  // b < 0: linear statistic x_a
        double scale;
    };
    std::vector<Stat> stats;
    for (int a = 0; a < kStateDim; ++a) stats.push_back({a, -1, 1.0});
    for (int a = 0; a < kStateDim; ++a)
        for (int b = a; b < kStateDim; ++b) stats.push_back({a, b, a == b ? 1.0 : 2.0});

    const auto& m = o.mean;
    const auto& s = o.cov;
    auto cov_lin_quad = [&](int a, int c, int d) { return m(c) * s(a, d) + m(d) * s(a, c); };
    auto cov_quad_quad = [&](int a, int b, int c, int d) {
        return s(a, c) * s(b, d) + s(a, d) * s(b, c) + m(a) * m(c) * s(b, d) + m(a) * m(d) * s(b, c) +
               m(b) * m(c) * s(a, d) + m(b) * m(d) * s(a, c);
    };

    Eigen::Matrix<double, kBlockSize, kBlockSize> g;
    for (int i = 0; i < kBlockSize; ++i)
        for (int j = 0; j < kBlockSize; ++j) {
            const Stat& p = stats[i];
            const Stat& q = stats[j];
            double v;
            if (p.b < 0 && q.b < 0)
                v = s(p.a, q.a);
            else if (p.b < 0)
                v = cov_lin_quad(p.a, q.a, q.b);
            else if (q.b < 0)
                v = cov_lin_quad(q.a, p.a, p.b);
            else
                v = cov_quad_quad(p.a, p.b, q.a, q.b);
            g(i, j) = p.scale * q.scale * v;
        }
    return g;
}

/// Fisher matrix of the flattened parameters times a flattened direction.
inline Eigen::VectorXd fisher_times(const NaturalParams& lambda, const Eigen::VectorXd& direction) {
    const GaussianBelief q = moments_from_nat(lambda);
    Eigen::VectorXd out(direction.size());
    for (int k = 0; k < q.num_objects(); ++k)
        out.segment<kBlockSize>(k * kBlockSize) =
            fisher_block(q.objects[k]) * direction.segment<kBlockSize>(k * kBlockSize);
    return out;
}

/// Central differences of f over the flattened coordinates of lambda.
inline Eigen::VectorXd fd_gradient(const std::function<double(const NaturalParams&)>& f, const NaturalParams& lambda,
                                   double step) {
    const Eigen::VectorXd x = flatten(lambda);
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x;
        Eigen::VectorXd lo = x;
        hi(i) += step;
        lo(i) -= step;
        g(i) = (f(unflatten(hi)) - f(unflatten(lo))) / (2.0 * step);
    }
    return g;
}

/// A small random tracking instance: per-sensor scans of object returns and
/// clutter, a prior eta and a nearby variational point lambda.
struct Instance {
    int num_objects = 0;
    std::vector<SensorModel> sensors;
    std::vector<Scan> scans;
    NaturalParams eta;
    NaturalParams lambda;
};

inline ObjectGaussian random_gaussian(Rng& rng, const StateVector& centre, double pos_var, double vel_var) {
    std::normal_distribution<double> n;
    ObjectGaussian o;
    o.mean = centre;
    StateMatrix a;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) a(r, c) = 0.3 * n(rng);
    StateVector scale;
    scale << pos_var, vel_var, pos_var, vel_var;
    const StateMatrix d = scale.cwiseSqrt().asDiagonal();
    o.cov = symmetrised(d * (StateMatrix::Identity() + a * a.transpose()) * d);
    return o;
}

inline Instance random_instance(std::uint64_t seed, int num_objects, int num_sensors) {
    Rng rng(seed);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(-60.0, 60.0);
    std::poisson_distribution<int> clutter_count(3);
    Instance inst;
    inst.num_objects = num_objects;

    GaussianBelief prior;
    GaussianBelief point;
    std::vector<StateVector> truth;
    for (int k = 0; k < num_objects; ++k) {
        StateVector x;
        x << u(rng), 2.0 * n(rng), u(rng), 2.0 * n(rng);
        truth.push_back(x);
        prior.objects.push_back(random_gaussian(rng, x, 40.0, 4.0));
        StateVector shifted = x;
        shifted(0) += 3.0 * n(rng);
        shifted(2) += 3.0 * n(rng);
        point.objects.push_back(random_gaussian(rng, shifted, 20.0, 2.0));
    }
    inst.eta = nat_from_moments(prior);
    inst.lambda = nat_from_moments(point);

    for (int s = 0; s < num_sensors; ++s) {
        SensorModel sensor = SensorModel::uniform(num_objects, 25.0, 120.0 * 120.0, 3.0, 1.0);
        Scan scan;
        scan.sensor_id = s;
        for (int k = 0; k < num_objects; ++k)
            if (n(rng) > -0.5)
                scan.measurements.emplace_back(truth[k](0) + 5.0 * n(rng), truth[k](2) + 5.0 * n(rng));
        const int c = clutter_count(rng);
        for (int j = 0; j < c; ++j) scan.measurements.emplace_back(u(rng), u(rng));
        inst.sensors.push_back(sensor);
        inst.scans.push_back(scan);
    }
    return inst;
}

/// GOSPA by enumerating every injective map between the two sets. Costs are
/// summed in truth-index order, then the penalties are added.
inline double brute_force_gospa(const std::vector<MeasVector>& estimates, const std::vector<MeasVector>& truth,
                                const GospaParams& p) {
    const bool truth_small = truth.size() <= estimates.size();
    const std::size_t n_small = truth_small ? truth.size() : estimates.size();
    const std::size_t n_large = truth_small ? estimates.size() : truth.size();
    const double penalty = std::pow(p.cutoff, p.p) / p.alpha;
    std::vector<int> idx(n_large);
    std::iota(idx.begin(), idx.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        // truth i is paired with estimate map[i], or nothing.
        std::vector<int> map(truth.size(), -1);
        for (std::size_t i = 0; i < n_small; ++i) {
            if (truth_small)
                map[i] = idx[i];
            else
                map[idx[i]] = static_cast<int>(i);
        }
        double loc = 0.0;
        int paired = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (map[i] < 0) continue;
            const double d = (truth[i] - estimates[map[i]]).norm();
            if (d < p.cutoff) {
                loc += std::pow(d, p.p);
                ++paired;
            }
        }
        const double missed = penalty * static_cast<double>(truth.size() - paired);
        const double false_ = penalty * static_cast<double>(estimates.size() - paired);
        best = std::min(best, std::pow(loc + missed + false_, 1.0 / p.p));
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

}  // namespace oracle
