#include "denfuse/model.hpp"

#include "denfuse/errors.hpp"

#include <cmath>
#include <numbers>

namespace denfuse {

DynamicsModel DynamicsModel::constant_velocity(double tau, double intensity) {
    Eigen::Matrix2d f;
    f << 1.0, tau, 0.0, 1.0;
    Eigen::Matrix2d q;
    q << tau * tau * tau / 3.0, tau * tau / 2.0, tau * tau / 2.0, tau;
    q *= intensity;

    DynamicsModel dyn;
    dyn.tau = tau;
    dyn.transition.setZero();
    dyn.process_noise.setZero();
    dyn.transition.topLeftCorner<2, 2>() = f;
    dyn.transition.bottomRightCorner<2, 2>() = f;
    dyn.process_noise.topLeftCorner<2, 2>() = q;
    dyn.process_noise.bottomRightCorner<2, 2>() = q;
    return dyn;
}

void SensorModel::validate() const {
    if (rates.size() < 1) throw ConfigError("sensor rates must contain the clutter rate");
    if (!(volume > 0.0) || !std::isfinite(volume)) throw ConfigError("clutter volume must be positive");
    if ((rates.array() < 0.0).any() || !rates.allFinite()) throw ConfigError("Poisson rates must be nonnegative");
    if (!(rates.sum() > 0.0)) throw ConfigError("at least one Poisson rate must be positive");
    if (static_cast<int>(noise.size()) != num_objects())
        throw ConfigError("sensor needs one noise covariance per object");
    for (std::size_t k = 0; k < noise.size(); ++k) {
        if (!noise[k].isApprox(noise[k].transpose()) || !is_positive_definite(noise[k]))
            throw ConfigError("measurement noise must be symmetric positive definite (object " +
                              std::to_string(k + 1) + ")");
    }
}

SensorModel SensorModel::uniform(int num_objects, double noise_variance, double volume, double clutter_rate,
                                 double object_rate) {
    SensorModel s;
    s.noise.assign(num_objects, noise_variance * MeasMatrix::Identity());
    s.volume = volume;
    s.rates = Eigen::VectorXd::Constant(num_objects + 1, object_rate);
    s.rates(0) = clutter_rate;
    return s;
}

Eigen::VectorXd GaussianBelief::stacked_mean() const {
    Eigen::VectorXd out(kStateDim * objects.size());
    for (std::size_t k = 0; k < objects.size(); ++k) out.segment<kStateDim>(kStateDim * k) = objects[k].mean;
    return out;
}

std::vector<MeasVector> GaussianBelief::positions() const {
    const ObsMatrix h = position_observation();
    std::vector<MeasVector> out;
    out.reserve(objects.size());
    for (const auto& o : objects) out.push_back(h * o.mean);
    return out;
}

namespace {

ObjectGaussian predict_object(const ObjectGaussian& o, const DynamicsModel& dyn) {
    ObjectGaussian out;
    out.mean = dyn.transition * o.mean;
    out.cov = symmetrised(dyn.transition * o.cov * dyn.transition.transpose() + dyn.process_noise);
    return out;
}

}  // namespace

GaussianBelief predict_belief(const GaussianBelief& prior, const DynamicsModel& dyn) {
    GaussianBelief out;
    out.objects.reserve(prior.objects.size());
    for (const auto& o : prior.objects) out.objects.push_back(predict_object(o, dyn));
    return out;
}

GaussianBelief predict_belief(const GaussianBelief& prior, std::span<const DynamicsModel> dyn) {
    if (dyn.size() != prior.objects.size())
        throw ConfigError("dynamics model count " + std::to_string(dyn.size()) + " does not match object count " +
                          std::to_string(prior.objects.size()));
    GaussianBelief out;
    out.objects.reserve(prior.objects.size());
    for (std::size_t k = 0; k < prior.objects.size(); ++k) out.objects.push_back(predict_object(prior.objects[k], dyn[k]));
    return out;
}

double gaussian_logpdf(const MeasVector& y, const MeasVector& mean, const MeasMatrix& cov) {
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    const MeasVector r = y - mean;
    const double maha = (cov(1, 1) * r(0) * r(0) - (cov(0, 1) + cov(1, 0)) * r(0) * r(1) + cov(0, 0) * r(1) * r(1)) / det;
    return -0.5 * maha - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
}

namespace {

void check_origin(int origin, const SensorModel& sensor) {
    if (origin < 0 || origin > sensor.num_objects())
        throw ConfigError("origin index " + std::to_string(origin) + " outside 0.." +
                          std::to_string(sensor.num_objects()));
}

}  // namespace

double measurement_loglik(const MeasVector& y, int origin, std::span<const StateVector> states,
                          const SensorModel& sensor) {
    check_origin(origin, sensor);
    if (origin == 0) return -std::log(sensor.volume);
    if (static_cast<int>(states.size()) != sensor.num_objects())
        throw ConfigError("state count does not match sensor object count");
    return gaussian_logpdf(y, sensor.observation * states[origin - 1], sensor.noise[origin - 1]);
}

double measurement_loglik(const MeasVector& y, int origin, const GaussianBelief& belief, const SensorModel& sensor) {
    check_origin(origin, sensor);
    if (origin == 0) return -std::log(sensor.volume);
    if (belief.num_objects() != sensor.num_objects())
        throw ConfigError("belief object count does not match sensor object count");
    const auto& o = belief.objects[origin - 1];
    const MeasMatrix& r = sensor.noise[origin - 1];
    const MeasMatrix projected = sensor.observation * o.cov * sensor.observation.transpose();
    const double trace = r.ldlt().solve(projected).trace();
    return gaussian_logpdf(y, sensor.observation * o.mean, r) - 0.5 * trace;
}

Eigen::VectorXd association_prior(const SensorModel& sensor) {
    const double total = sensor.rates.sum();
    if (!(total > 0.0)) throw ConfigError("association prior needs a positive total rate");
    return sensor.rates / total;
}

}  // namespace denfuse
