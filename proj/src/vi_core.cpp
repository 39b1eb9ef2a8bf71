#include "denfuse/vi_core.hpp"

#include "denfuse/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace denfuse {

NaturalParams NaturalParams::zeros(int num_objects) {
    NaturalParams p;
    p.blocks.assign(num_objects, NaturalBlock{});
    return p;
}

namespace {

void require_same_shape(const NaturalParams& a, const NaturalParams& b) {
    if (a.blocks.size() != b.blocks.size())
        throw ConfigError("natural parameter object counts differ (" + std::to_string(a.blocks.size()) + " vs " +
                          std::to_string(b.blocks.size()) + ")");
}

}  // namespace

NaturalParams& NaturalParams::operator+=(const NaturalParams& other) {
    require_same_shape(*this, other);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        blocks[k].linear += other.blocks[k].linear;
        blocks[k].quadratic += other.blocks[k].quadratic;
    }
    return *this;
}

NaturalParams& NaturalParams::operator-=(const NaturalParams& other) {
    require_same_shape(*this, other);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        blocks[k].linear -= other.blocks[k].linear;
        blocks[k].quadratic -= other.blocks[k].quadratic;
    }
    return *this;
}

NaturalParams& NaturalParams::operator*=(double scale) {
    for (auto& b : blocks) {
        b.linear *= scale;
        b.quadratic *= scale;
    }
    return *this;
}

NaturalParams operator+(NaturalParams a, const NaturalParams& b) { return a += b; }
NaturalParams operator-(NaturalParams a, const NaturalParams& b) { return a -= b; }
NaturalParams operator*(double scale, NaturalParams a) { return a *= scale; }

void flatten_into(const NaturalParams& p, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
    if (out.size() != kBlockSize * p.num_objects()) throw ConfigError("flatten: output has the wrong length");
    Eigen::Index i = 0;
    for (const auto& b : p.blocks) {
        for (int a = 0; a < kStateDim; ++a) out(i++) = b.linear(a);
        for (int r = 0; r < kStateDim; ++r)
            for (int c = r; c < kStateDim; ++c) out(i++) = b.quadratic(r, c);
    }
}

Eigen::VectorXd flatten(const NaturalParams& p) {
    Eigen::RowVectorXd out(kBlockSize * p.num_objects());
    flatten_into(p, out);
    return out.transpose();
}

NaturalParams unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
    if (flat.size() % kBlockSize != 0) throw ConfigError("unflatten: length is not a multiple of the block size");
    NaturalParams p = NaturalParams::zeros(static_cast<int>(flat.size() / kBlockSize));
    Eigen::Index i = 0;
    for (auto& b : p.blocks) {
        for (int a = 0; a < kStateDim; ++a) b.linear(a) = flat(i++);
        for (int r = 0; r < kStateDim; ++r)
            for (int c = r; c < kStateDim; ++c) b.quadratic(r, c) = b.quadratic(c, r) = flat(i++);
    }
    return p;
}

bool is_valid_block(const NaturalBlock& b) {
    return b.linear.allFinite() && is_positive_definite(StateMatrix(-2.0 * b.quadratic));
}

std::optional<int> first_invalid_object(const NaturalParams& p) {
    for (int k = 0; k < p.num_objects(); ++k)
        if (!is_valid_block(p.blocks[k])) return k;
    return std::nullopt;
}

NaturalBlock nat_from_moments(const ObjectGaussian& o) {
    Eigen::LLT<StateMatrix> llt(o.cov);
    if (llt.info() != Eigen::Success || !o.cov.allFinite())
        throw NumericalError("covariance is not positive definite", 0);
    const StateMatrix precision = symmetrised(llt.solve(StateMatrix::Identity()));
    NaturalBlock b;
    b.linear = precision * o.mean;
    b.quadratic = -0.5 * precision;
    return b;
}

ObjectGaussian moments_from_nat(const NaturalBlock& b, int object_index) {
    const StateMatrix precision = -2.0 * b.quadratic;
    Eigen::LLT<StateMatrix> llt(precision);
    if (llt.info() != Eigen::Success || !precision.allFinite())
        throw NumericalError("-2 * quadratic natural parameter is not positive definite", object_index);
    ObjectGaussian o;
    o.cov = symmetrised(llt.solve(StateMatrix::Identity()));
    o.mean = llt.solve(b.linear);
    return o;
}

NaturalParams nat_from_moments(const GaussianBelief& belief) {
    NaturalParams p;
    p.blocks.reserve(belief.objects.size());
    for (int k = 0; k < belief.num_objects(); ++k) {
        try {
            p.blocks.push_back(nat_from_moments(belief.objects[k]));
        } catch (const NumericalError&) {
            throw NumericalError("covariance is not positive definite", k);
        }
    }
    return p;
}

GaussianBelief moments_from_nat(const NaturalParams& params) {
    GaussianBelief out;
    out.objects.reserve(params.blocks.size());
    for (int k = 0; k < params.num_objects(); ++k) out.objects.push_back(moments_from_nat(params.blocks[k], k));
    return out;
}

void AssociationPosterior::validate(double tol) const {
    if ((probabilities.array() < -tol).any() || (probabilities.array() > 1.0 + tol).any() ||
        !probabilities.allFinite())
        throw ConfigError("association probabilities must lie in [0, 1]");
    for (Eigen::Index j = 0; j < probabilities.rows(); ++j)
        if (std::abs(probabilities.row(j).sum() - 1.0) > tol)
            throw ConfigError("association row " + std::to_string(j) + " is not normalised");
}

namespace {

/// Per-object quantities reused across all measurements of a scan.
struct ObjectTerms {
    MeasVector predicted;
    MeasMatrix info;  // R^-1
    double log_rate;
    double offset;  // -log 2pi - 1/2 log|R| - 1/2 tr(R^-1 H Sigma H^T)
};

std::vector<ObjectTerms> object_terms(const GaussianBelief& belief, const SensorModel& sensor) {
    const int k_count = sensor.num_objects();
    std::vector<ObjectTerms> terms(k_count);
    for (int k = 0; k < k_count; ++k) {
        const auto& o = belief.objects[k];
        const MeasMatrix& r = sensor.noise[k];
        const MeasMatrix info = r.inverse();
        const MeasMatrix projected = sensor.observation * o.cov * sensor.observation.transpose();
        terms[k].predicted = sensor.observation * o.mean;
        terms[k].info = info;
        terms[k].log_rate = std::log(sensor.rates(k + 1));
        terms[k].offset = -std::log(2.0 * std::numbers::pi) -
                          0.5 * std::log(r.determinant()) - 0.5 * (info * projected).trace();
    }
    return terms;
}

void check_counts(const GaussianBelief& belief, const SensorModel& sensor) {
    if (belief.num_objects() != sensor.num_objects())
        throw ConfigError("belief has " + std::to_string(belief.num_objects()) + " objects, sensor expects " +
                          std::to_string(sensor.num_objects()));
}

}  // namespace

AssociationPosterior association_posterior(const GaussianBelief& belief, const Scan& scan, const SensorModel& sensor) {
    check_counts(belief, sensor);
    const int k_count = sensor.num_objects();
    const int m_count = static_cast<int>(scan.measurements.size());
    const auto terms = object_terms(belief, sensor);
    const double clutter = std::log(sensor.rates(0)) - std::log(sensor.volume);

    AssociationPosterior out;
    out.probabilities.resize(m_count, k_count + 1);
    Eigen::VectorXd logw(k_count + 1);
    for (int j = 0; j < m_count; ++j) {
        const MeasVector& y = scan.measurements[j];
        logw(0) = clutter;
        for (int k = 0; k < k_count; ++k) {
            const MeasVector r = y - terms[k].predicted;
            logw(k + 1) = terms[k].log_rate + terms[k].offset - 0.5 * r.dot(terms[k].info * r);
        }
        const double top = logw.maxCoeff();
        if (!std::isfinite(top)) {
            out.probabilities.row(j) = association_prior(sensor).transpose();
            continue;
        }
        // Scalar exp keeps exp(-inf) an exact zero for silent origins.
        Eigen::RowVectorXd w(k_count + 1);
        for (int k = 0; k <= k_count; ++k) w(k) = std::exp(logw(k) - top);
        out.probabilities.row(j) = w / w.sum();
    }
    return out;
}

AssociationPosterior association_posterior(const NaturalParams& lambda, const Scan& scan, const SensorModel& sensor) {
    return association_posterior(moments_from_nat(lambda), scan, sensor);
}

NaturalParams data_statistics(const AssociationPosterior& assoc, const Scan& scan, const SensorModel& sensor) {
    const int k_count = sensor.num_objects();
    if (assoc.num_measurements() != static_cast<int>(scan.measurements.size()) ||
        assoc.probabilities.cols() != k_count + 1)
        throw ConfigError("association table does not match the scan");
    NaturalParams out = NaturalParams::zeros(k_count);
    for (int k = 0; k < k_count; ++k) {
        MeasVector weighted = MeasVector::Zero();
        double mass = 0.0;
        for (int j = 0; j < assoc.num_measurements(); ++j) {
            const double q = assoc.probabilities(j, k + 1);
            weighted += q * scan.measurements[j];
            mass += q;
        }
        const MeasMatrix info = sensor.noise[k].inverse();
        const Eigen::Matrix<double, kStateDim, kMeasDim> ht_info = sensor.observation.transpose() * info;
        out.blocks[k].linear = ht_info * weighted;
        out.blocks[k].quadratic = symmetrised(-0.5 * mass * ht_info * sensor.observation);
    }
    return out;
}

NaturalParams natural_gradient_local(const NaturalParams& lambda, const NaturalParams& eta, const Scan& scan,
                                     const SensorModel& sensor, int num_sensors, GradientVariant variant) {
    if (num_sensors < 1) throw ConfigError("num_sensors must be positive");
    if (lambda.num_objects() != eta.num_objects()) throw ConfigError("lambda and eta object counts differ");
    const GaussianBelief belief = moments_from_nat(lambda);
    NaturalParams grad = data_statistics(association_posterior(belief, scan, sensor), scan, sensor);
    const double inv_n = 1.0 / num_sensors;

    if (variant == GradientVariant::canonical) {
        for (int k = 0; k < grad.num_objects(); ++k) {
            grad.blocks[k].linear += inv_n * (eta.blocks[k].linear - lambda.blocks[k].linear);
            grad.blocks[k].quadratic += inv_n * (eta.blocks[k].quadratic - lambda.blocks[k].quadratic);
        }
        return grad;
    }

    // Printed form: the moment-parametrised prior and posterior terms appear
    // alongside the natural-parameter difference.
    const GaussianBelief prior = moments_from_nat(eta);
    for (int k = 0; k < grad.num_objects(); ++k) {
        const auto& q = belief.objects[k];
        const auto& p = prior.objects[k];
        const StateMatrix q_prec = q.cov.inverse();
        const StateMatrix p_prec = p.cov.inverse();
        grad.blocks[k].linear +=
            inv_n * (eta.blocks[k].linear - lambda.blocks[k].linear + p_prec * p.mean - q_prec * q.mean);
        grad.blocks[k].quadratic += inv_n * (eta.blocks[k].quadratic - lambda.blocks[k].quadratic) +
                                    0.5 * inv_n * symmetrised(q_prec - p_prec);
    }
    return grad;
}

namespace {

void check_sensor_spans(std::size_t scans, std::size_t sensors, std::size_t assoc) {
    if (scans != sensors || scans != assoc)
        throw ConfigError("scan, sensor and association counts must agree");
}

}  // namespace

NaturalParams cavi_state_update(const NaturalParams& eta, std::span<const Scan> scans,
                                std::span<const SensorModel> sensors, std::span<const AssociationPosterior> assoc) {
    check_sensor_spans(scans.size(), sensors.size(), assoc.size());
    NaturalParams out = eta;
    for (std::size_t s = 0; s < scans.size(); ++s) out += data_statistics(assoc[s], scans[s], sensors[s]);
    return out;
}

double gaussian_kl(const ObjectGaussian& q, const ObjectGaussian& p) {
    Eigen::LLT<StateMatrix> p_llt(p.cov);
    Eigen::LLT<StateMatrix> q_llt(q.cov);
    if (p_llt.info() != Eigen::Success || q_llt.info() != Eigen::Success)
        throw NumericalError("KL needs positive definite covariances", 0);
    const StateVector diff = p.mean - q.mean;
    const double trace = p_llt.solve(q.cov).trace();
    const double maha = diff.dot(p_llt.solve(diff));
    const double logdet_p = 2.0 * p_llt.matrixLLT().diagonal().array().log().sum();
    const double logdet_q = 2.0 * q_llt.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (trace + maha - kStateDim + logdet_p - logdet_q);
}

namespace {

double state_term(const GaussianBelief& q, const GaussianBelief& p) {
    double kl = 0.0;
    for (int k = 0; k < q.num_objects(); ++k) kl += gaussian_kl(q.objects[k], p.objects[k]);
    return -kl;
}

/// Adds the measurement-side terms of one sensor for association table rho.
void add_sensor_terms(const GaussianBelief& belief, const AssociationPosterior& rho, const Scan& scan,
                      const SensorModel& sensor, ElboValue& value) {
    check_counts(belief, sensor);
    if (rho.num_measurements() != static_cast<int>(scan.measurements.size()) ||
        rho.probabilities.cols() != sensor.num_objects() + 1)
        throw ConfigError("association table does not match the scan");
    const int k_count = sensor.num_objects();
    const Eigen::VectorXd prior = association_prior(sensor);
    const Eigen::VectorXd log_prior = prior.array().log();
    const auto terms = object_terms(belief, sensor);
    const double clutter_ll = -std::log(sensor.volume);

    for (int j = 0; j < rho.num_measurements(); ++j) {
        const MeasVector& y = scan.measurements[j];
        for (int k = 0; k <= k_count; ++k) {
            const double r = rho.probabilities(j, k);
            if (r <= 0.0) continue;
            double ll = clutter_ll;
            if (k > 0) {
                const auto& t = terms[k - 1];
                const MeasVector res = y - t.predicted;
                ll = t.offset - 0.5 * res.dot(t.info * res);
            }
            value.likelihood += r * ll;
            value.association += r * (log_prior(k) - std::log(r));
        }
    }
}

void finish(ElboValue& v) { v.total = v.likelihood + v.state + v.association; }

}  // namespace

ElboValue fixed_form_elbo(const NaturalParams& lambda, std::span<const AssociationPosterior> rho,
                          const NaturalParams& eta, std::span<const Scan> scans,
                          std::span<const SensorModel> sensors) {
    check_sensor_spans(scans.size(), sensors.size(), rho.size());
    for (const auto& r : rho) r.validate();
    const GaussianBelief q = moments_from_nat(lambda);
    ElboValue v;
    v.state = state_term(q, moments_from_nat(eta));
    for (std::size_t s = 0; s < scans.size(); ++s) add_sensor_terms(q, rho[s], scans[s], sensors[s], v);
    finish(v);
    return v;
}

ElboValue lm_elbo(const NaturalParams& lambda, const NaturalParams& eta, std::span<const Scan> scans,
                  std::span<const SensorModel> sensors) {
    if (scans.size() != sensors.size()) throw ConfigError("scan and sensor counts must agree");
    const GaussianBelief q = moments_from_nat(lambda);
    ElboValue v;
    v.state = state_term(q, moments_from_nat(eta));
    for (std::size_t s = 0; s < scans.size(); ++s)
        add_sensor_terms(q, association_posterior(q, scans[s], sensors[s]), scans[s], sensors[s], v);
    finish(v);
    return v;
}

ElboValue lm_elbo_local(const NaturalParams& lambda, const NaturalParams& eta, const Scan& scan,
                        const SensorModel& sensor, int num_sensors) {
    if (num_sensors < 1) throw ConfigError("num_sensors must be positive");
    const GaussianBelief q = moments_from_nat(lambda);
    ElboValue v;
    v.state = state_term(q, moments_from_nat(eta)) / num_sensors;
    add_sensor_terms(q, association_posterior(q, scan, sensor), scan, sensor, v);
    finish(v);
    return v;
}

}  // namespace denfuse
