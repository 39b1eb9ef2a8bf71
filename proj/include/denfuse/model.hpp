#pragma once

#include "denfuse/types.hpp"

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace denfuse {

/// Linear Gaussian transition x' = F x + w, w ~ N(0, Q), shared by all objects.
struct DynamicsModel {
    StateMatrix transition = StateMatrix::Identity();
    StateMatrix process_noise = StateMatrix::Zero();
    double tau = 1.0;

    /// Two decoupled constant-velocity axes with white-noise acceleration of
    /// the given intensity: Q_d = q [[tau^3/3, tau^2/2], [tau^2/2, tau]].
    [[nodiscard]] static DynamicsModel constant_velocity(double tau, double intensity);
};

/// NHPP sensor: Gaussian object returns through H, uniform clutter over a
/// region of volume V, Poisson rates [clutter, object 1..K].
struct SensorModel {
    ObsMatrix observation = position_observation();
    std::vector<MeasMatrix> noise;  // one R_k per object
    double volume = 1.0;
    Eigen::VectorXd rates;          // size K + 1, index 0 is clutter

    [[nodiscard]] int num_objects() const { return static_cast<int>(rates.size()) - 1; }

    /// Throws ConfigError when any invariant fails.
    void validate() const;

    [[nodiscard]] static SensorModel uniform(int num_objects, double noise_variance, double volume,
                                             double clutter_rate, double object_rate);
};

struct ObjectGaussian {
    StateVector mean = StateVector::Zero();
    StateMatrix cov = StateMatrix::Identity();
};

/// Mean-field Gaussian over K objects, stored as K independent 4x4 blocks.
struct GaussianBelief {
    std::vector<ObjectGaussian> objects;

    [[nodiscard]] int num_objects() const { return static_cast<int>(objects.size()); }
    /// Stacked 4K mean vector.
    [[nodiscard]] Eigen::VectorXd stacked_mean() const;
    /// H-projected means, one per object.
    [[nodiscard]] std::vector<MeasVector> positions() const;
};

[[nodiscard]] GaussianBelief predict_belief(const GaussianBelief& prior, const DynamicsModel& dyn);
/// Per-object dynamics; `dyn` must hold one entry per object.
[[nodiscard]] GaussianBelief predict_belief(const GaussianBelief& prior, std::span<const DynamicsModel> dyn);

/// log N(y; mean, cov) for a 2-D Gaussian.
[[nodiscard]] double gaussian_logpdf(const MeasVector& y, const MeasVector& mean, const MeasMatrix& cov);

/// Point-state measurement log-likelihood; origin 0 is clutter.
[[nodiscard]] double measurement_loglik(const MeasVector& y, int origin, std::span<const StateVector> states,
                                        const SensorModel& sensor);

/// Expected log-likelihood E_q[log l(y | X_origin)] under a Gaussian belief:
/// log N(y; H mu, R) - 0.5 tr(R^-1 H Sigma H^T).
[[nodiscard]] double measurement_loglik(const MeasVector& y, int origin, const GaussianBelief& belief,
                                        const SensorModel& sensor);

/// Categorical p(theta = k) = rate_k / sum(rates).
[[nodiscard]] Eigen::VectorXd association_prior(const SensorModel& sensor);

/// True when `m` admits a Cholesky factorisation.
template <typename Derived>
[[nodiscard]] bool is_positive_definite(const Eigen::MatrixBase<Derived>& m) {
    Eigen::LLT<typename Derived::PlainObject> llt(m);
    return llt.info() == Eigen::Success && m.allFinite();
}

}  // namespace denfuse
