#pragma once

#include "denfuse/model.hpp"
#include "denfuse/sim.hpp"
#include "denfuse/types.hpp"

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace denfuse {

/// Canonical parameters of one Gaussian factor: linear = Sigma^-1 mu,
/// quadratic = -1/2 Sigma^-1. Gradients and sufficient statistics share the
/// same shape and reuse this type.
struct NaturalBlock {
    StateVector linear = StateVector::Zero();
    StateMatrix quadratic = StateMatrix::Zero();
};

struct NaturalParams {
    std::vector<NaturalBlock> blocks;

    [[nodiscard]] int num_objects() const { return static_cast<int>(blocks.size()); }
    [[nodiscard]] static NaturalParams zeros(int num_objects);

    NaturalParams& operator+=(const NaturalParams& other);
    NaturalParams& operator-=(const NaturalParams& other);
    NaturalParams& operator*=(double scale);
};

[[nodiscard]] NaturalParams operator+(NaturalParams a, const NaturalParams& b);
[[nodiscard]] NaturalParams operator-(NaturalParams a, const NaturalParams& b);
[[nodiscard]] NaturalParams operator*(double scale, NaturalParams a);

/// Consensus payload layout, fixed for all sensors: per object the 4 linear
/// entries, then the 10 upper-triangular quadratic entries in row-major order.
[[nodiscard]] Eigen::VectorXd flatten(const NaturalParams& p);
[[nodiscard]] NaturalParams unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat);
void flatten_into(const NaturalParams& p, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out);

/// Index of the first object whose -2 * quadratic is not positive definite.
[[nodiscard]] std::optional<int> first_invalid_object(const NaturalParams& p);
[[nodiscard]] bool is_valid_block(const NaturalBlock& b);

/// Moment <-> natural conversions. Throw NumericalError naming the object on
/// a non-PD block.
[[nodiscard]] NaturalParams nat_from_moments(const GaussianBelief& belief);
[[nodiscard]] GaussianBelief moments_from_nat(const NaturalParams& params);
[[nodiscard]] NaturalBlock nat_from_moments(const ObjectGaussian& o);
[[nodiscard]] ObjectGaussian moments_from_nat(const NaturalBlock& b, int object_index = 0);

/// q(theta_j = k) for one sensor; rows are measurements, columns origins
/// 0 (clutter) .. K.
struct AssociationPosterior {
    Eigen::MatrixXd probabilities;

    [[nodiscard]] int num_measurements() const { return static_cast<int>(probabilities.rows()); }
    /// Throws ConfigError unless entries lie in [0, 1] and rows sum to one.
    void validate(double tol = 1e-9) const;
};

/// Optimal association factor given the state belief. Rows use log-sum-exp;
/// a row whose weights all vanish falls back to the association prior.
[[nodiscard]] AssociationPosterior association_posterior(const GaussianBelief& belief, const Scan& scan,
                                                         const SensorModel& sensor);
[[nodiscard]] AssociationPosterior association_posterior(const NaturalParams& lambda, const Scan& scan,
                                                         const SensorModel& sensor);

/// Per-object data terms H^T R^-1 sum_j y_j q_jk and -1/2 H^T R^-1 H sum_j q_jk.
[[nodiscard]] NaturalParams data_statistics(const AssociationPosterior& assoc, const Scan& scan,
                                            const SensorModel& sensor);

enum class GradientVariant { canonical, verbatim };

/// Natural gradient of the local LM-ELBO of one sensor. The association
/// factor is recomputed from `lambda` and held fixed while differentiating.
[[nodiscard]] NaturalParams natural_gradient_local(const NaturalParams& lambda, const NaturalParams& eta,
                                                   const Scan& scan, const SensorModel& sensor, int num_sensors,
                                                   GradientVariant variant = GradientVariant::canonical);

/// Zero of the summed canonical natural gradient for fixed associations:
/// eta + sum over sensors of data_statistics.
[[nodiscard]] NaturalParams cavi_state_update(const NaturalParams& eta, std::span<const Scan> scans,
                                              std::span<const SensorModel> sensors,
                                              std::span<const AssociationPosterior> assoc);

struct ElboValue {
    double total = 0.0;
    double likelihood = 0.0;   // expected log-likelihood of the measurements
    double state = 0.0;        // -KL(q(X) || prior), weighted for local bounds
    double association = 0.0;  // -KL(q(theta) || p(theta))
};

/// KL(N(q) || N(p)) for one object.
[[nodiscard]] double gaussian_kl(const ObjectGaussian& q, const ObjectGaussian& p);

/// LM-ELBO over the given sensors, with the full prior term.
[[nodiscard]] ElboValue lm_elbo(const NaturalParams& lambda, const NaturalParams& eta, std::span<const Scan> scans,
                                std::span<const SensorModel> sensors);

/// Local LM-ELBO of one sensor; the prior term is weighted by 1 / num_sensors.
[[nodiscard]] ElboValue lm_elbo_local(const NaturalParams& lambda, const NaturalParams& eta, const Scan& scan,
                                      const SensorModel& sensor, int num_sensors);

/// Fixed-form ELBO with an explicit association table per sensor.
[[nodiscard]] ElboValue fixed_form_elbo(const NaturalParams& lambda, std::span<const AssociationPosterior> rho,
                                        const NaturalParams& eta, std::span<const Scan> scans,
                                        std::span<const SensorModel> sensors);

}  // namespace denfuse
