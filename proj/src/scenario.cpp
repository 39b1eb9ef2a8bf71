#include "denfuse/scenario.hpp"

#include "denfuse/errors.hpp"
#include "denfuse/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace denfuse {

using nlohmann::json;

std::string to_string(MethodKind kind) {
    switch (kind) {
        case MethodKind::c_vt: return "C-VT";
        case MethodKind::i_vt: return "I-VT";
        case MethodKind::dec_vt: return "DeC-VT";
        case MethodKind::deaa_vt: return "DeAA-VT";
        case MethodKind::deng_vt: return "DeNG-VT";
    }
    return "?";
}

MethodKind method_kind_from_string(const std::string& s) {
    for (auto k : {MethodKind::c_vt, MethodKind::i_vt, MethodKind::dec_vt, MethodKind::deaa_vt, MethodKind::deng_vt})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown method kind '" + s + "'");
}

std::string to_string(GradientVariant v) { return v == GradientVariant::canonical ? "canonical" : "verbatim"; }

GradientVariant variant_from_string(const std::string& s) {
    if (s == "canonical") return GradientVariant::canonical;
    if (s == "verbatim") return GradientVariant::verbatim;
    throw ConfigError("unknown gradient variant '" + s + "' (expected canonical|verbatim)");
}

namespace {

/// Reads fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string context) : obj_(obj), context_(std::move(context)) {
        if (!obj_.is_object()) throw ConfigError(context_ + ": expected an object");
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!obj_.contains(key) || obj_.at(key).is_null()) return fallback;
        try {
            return obj_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(context_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key) || obj_.at(key).is_null()) return nullptr;
        return &obj_.at(key);
    }

    void finish() const {
        for (const auto& item : obj_.items())
            if (!seen_.count(item.key())) throw ConfigError(context_ + ": unknown field '" + item.key() + "'");
    }

    [[nodiscard]] const std::string& context() const { return context_; }

private:
    const json& obj_;
    std::string context_;
    std::set<std::string> seen_;
};

Eigen::Vector2d vec2(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(ctx + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const Eigen::Vector2d& v) { return json::array({v(0), v(1)}); }

Region read_region(const json& j, const std::string& ctx) {
    ObjectReader r(j, ctx);
    Region region;
    if (const json* lo = r.child("lower")) region.lower = vec2(*lo, ctx + ".lower");
    if (const json* hi = r.child("upper")) region.upper = vec2(*hi, ctx + ".upper");
    r.finish();
    return region;
}

json region_json(const Region& region) {
    return json{{"lower", to_json(region.lower)}, {"upper", to_json(region.upper)}};
}

MethodSpec read_method(const json& j, const std::string& ctx) {
    ObjectReader r(j, ctx);
    MethodSpec m;
    m.kind = method_kind_from_string(r.get<std::string>("kind", ""));
    m.name = r.get<std::string>("name", to_string(m.kind));
    TrackerConfig& c = m.config;
    c.alpha = r.get<double>("alpha", c.alpha);
    c.max_iterations = r.get<int>("max_iterations", c.max_iterations);
    c.variant = variant_from_string(r.get<std::string>("variant", to_string(c.variant)));
    c.consensus_rounds = r.get<int>("consensus_rounds", c.consensus_rounds);
    c.vi_iterations = r.get<int>("vi_iterations", c.vi_iterations);
    c.max_halvings = r.get<int>("max_halvings", c.max_halvings);
    r.finish();
    return m;
}

json method_json(const MethodSpec& m) {
    return json{{"name", m.name},
                {"kind", to_string(m.kind)},
                {"alpha", m.config.alpha},
                {"max_iterations", m.config.max_iterations},
                {"variant", to_string(m.config.variant)},
                {"consensus_rounds", m.config.consensus_rounds},
                {"vi_iterations", m.config.vi_iterations},
                {"max_halvings", m.config.max_halvings}};
}

}  // namespace

Scenario Scenario::from_json(const json& doc) {
    ObjectReader r(doc, "scenario");
    const int version = r.get<int>("schema_version", -1);
    if (version != kScenarioSchemaVersion)
        throw ConfigError("scenario.schema_version must be " + std::to_string(kScenarioSchemaVersion));

    Scenario s;
    s.name = r.get<std::string>("name", s.name);
    s.num_objects = r.get<int>("num_objects", s.num_objects);
    s.num_steps = r.get<int>("num_steps", s.num_steps);
    s.num_sensors = r.get<int>("num_sensors", s.num_sensors);
    s.tau = r.get<double>("tau", s.tau);
    s.process_noise_intensity = r.get<double>("process_noise_intensity", s.process_noise_intensity);
    s.measurement_noise_variance = r.get<double>("measurement_noise_variance", s.measurement_noise_variance);
    s.clutter_rate = r.get<double>("clutter_rate", s.clutter_rate);
    s.object_rate = r.get<double>("object_rate", s.object_rate);
    s.monte_carlo_runs = r.get<int>("monte_carlo_runs", s.monte_carlo_runs);
    s.seed = r.get<std::uint64_t>("seed", s.seed);
    s.convergence_step = r.get<int>("convergence_step", s.convergence_step);
    if (const json* region = r.child("region")) s.region = read_region(*region, "scenario.region");

    if (const json* net = r.child("network")) {
        ObjectReader nr(*net, "scenario.network");
        s.network.policy.radius = nr.get<double>("radius", s.network.policy.radius);
        s.network.policy.dropout = nr.get<double>("dropout", s.network.policy.dropout);
        s.network.policy.max_retries = nr.get<int>("max_retries", s.network.policy.max_retries);
        s.network.per_iteration = nr.get<bool>("per_iteration", s.network.per_iteration);
        if (const json* pos = nr.child("sensor_positions")) {
            if (!pos->is_array()) throw ConfigError("scenario.network.sensor_positions: expected an array");
            for (const auto& p : *pos) s.network.sensor_positions.push_back(vec2(p, "scenario.network.sensor_positions"));
        }
        nr.finish();
    }

    if (const json* init = r.child("initialisation")) {
        ObjectReader ir(*init, "scenario.initialisation");
        InitPolicy& ip = s.init;
        if (const json* spawn = ir.child("spawn")) ip.spawn = read_region(*spawn, "scenario.initialisation.spawn");
        ip.speed = ir.get<double>("speed", ip.speed);
        ip.position_noise_std = ir.get<double>("position_noise_std", ip.position_noise_std);
        ip.velocity_noise_std = ir.get<double>("velocity_noise_std", ip.velocity_noise_std);
        ip.position_variance = ir.get<double>("position_variance", ip.position_variance);
        ip.velocity_variance = ir.get<double>("velocity_variance", ip.velocity_variance);
        if (const json* states = ir.child("initial_states")) {
            if (!states->is_array()) throw ConfigError("scenario.initialisation.initial_states: expected an array");
            for (const auto& x : *states) {
                if (!x.is_array() || x.size() != kStateDim)
                    throw ConfigError("scenario.initialisation.initial_states: expected [x, vx, y, vy]");
                StateVector v;
                for (int d = 0; d < kStateDim; ++d) v(d) = x[d].get<double>();
                ip.initial_states.push_back(v);
            }
        }
        ir.finish();
    }

    if (const json* g = r.child("gospa")) {
        ObjectReader gr(*g, "scenario.gospa");
        s.gospa.p = gr.get<double>("p", s.gospa.p);
        s.gospa.alpha = gr.get<double>("alpha", s.gospa.alpha);
        s.gospa.cutoff = gr.get<double>("cutoff", s.gospa.cutoff);
        gr.finish();
    }

    if (const json* methods = r.child("methods")) {
        if (!methods->is_array()) throw ConfigError("scenario.methods: expected an array");
        for (std::size_t i = 0; i < methods->size(); ++i)
            s.methods.push_back(read_method((*methods)[i], "scenario.methods[" + std::to_string(i) + "]"));
    }
    r.finish();
    s.validate();
    return s;
}

json Scenario::to_json() const {
    json positions = json::array();
    for (const auto& p : network.sensor_positions) positions.push_back(denfuse::to_json(p));
    json states = json::array();
    for (const auto& x : init.initial_states) states.push_back(json::array({x(0), x(1), x(2), x(3)}));
    json methods_json = json::array();
    for (const auto& m : methods) methods_json.push_back(method_json(m));
    return json{
        {"schema_version", kScenarioSchemaVersion},
        {"name", name},
        {"num_objects", num_objects},
        {"num_steps", num_steps},
        {"num_sensors", num_sensors},
        {"tau", tau},
        {"process_noise_intensity", process_noise_intensity},
        {"measurement_noise_variance", measurement_noise_variance},
        {"clutter_rate", clutter_rate},
        {"object_rate", object_rate},
        {"region", region_json(region)},
        {"network",
         {{"radius", network.policy.radius},
          {"dropout", network.policy.dropout},
          {"max_retries", network.policy.max_retries},
          {"per_iteration", network.per_iteration},
          {"sensor_positions", positions}}},
        {"initialisation",
         {{"spawn", region_json(init.spawn)},
          {"speed", init.speed},
          {"initial_states", states},
          {"position_noise_std", init.position_noise_std},
          {"velocity_noise_std", init.velocity_noise_std},
          {"position_variance", init.position_variance},
          {"velocity_variance", init.velocity_variance}}},
        {"gospa", {{"p", gospa.p}, {"alpha", gospa.alpha}, {"cutoff", gospa.cutoff}}},
        {"methods", methods_json},
        {"monte_carlo_runs", monte_carlo_runs},
        {"seed", seed},
        {"convergence_step", convergence_step},
    };
}

void Scenario::validate() const {
    auto fail = [](const std::string& field, const std::string& why) { throw ConfigError("scenario." + field + ": " + why); };
    if (num_objects < 1) fail("num_objects", "must be >= 1");
    if (num_steps < 1) fail("num_steps", "must be >= 1");
    if (num_sensors < 1) fail("num_sensors", "must be >= 1");
    if (!(tau > 0.0)) fail("tau", "must be positive");
    if (process_noise_intensity < 0.0) fail("process_noise_intensity", "must be nonnegative");
    if (!(measurement_noise_variance > 0.0)) fail("measurement_noise_variance", "must be positive");
    if (clutter_rate < 0.0) fail("clutter_rate", "must be nonnegative");
    if (object_rate < 0.0) fail("object_rate", "must be nonnegative");
    if (!(clutter_rate + object_rate > 0.0)) fail("clutter_rate", "at least one Poisson rate must be positive");
    if (!((region.upper - region.lower).array() > 0.0).all()) fail("region", "upper must exceed lower");
    if (!((init.spawn.upper - init.spawn.lower).array() >= 0.0).all()) fail("initialisation.spawn", "upper must not be below lower");
    if (!(init.position_variance > 0.0) || !(init.velocity_variance > 0.0))
        fail("initialisation", "prior variances must be positive");
    if (init.position_noise_std < 0.0 || init.velocity_noise_std < 0.0)
        fail("initialisation", "noise standard deviations must be nonnegative");
    if (!init.initial_states.empty() && static_cast<int>(init.initial_states.size()) != num_objects)
        fail("initialisation.initial_states", "needs one state per object");
    if (!network.sensor_positions.empty() && static_cast<int>(network.sensor_positions.size()) != num_sensors)
        fail("network.sensor_positions", "needs one position per sensor");
    if (!(network.policy.radius > 0.0)) fail("network.radius", "must be positive");
    if (network.policy.dropout < 0.0 || network.policy.dropout >= 1.0) fail("network.dropout", "must lie in [0, 1)");
    if (network.policy.max_retries < 0) fail("network.max_retries", "must be nonnegative");
    if (monte_carlo_runs < 1) fail("monte_carlo_runs", "must be >= 1");
    if (convergence_step < 1 || convergence_step > num_steps) fail("convergence_step", "must lie in 1..num_steps");
    gospa.validate();
    std::set<std::string> names;
    for (const auto& m : methods) {
        if (m.name.empty()) fail("methods", "method names must be non-empty");
        if (!names.insert(m.name).second) fail("methods", "duplicate method name '" + m.name + "'");
        m.config.validate();
    }
    tracking_model().sensors.front().validate();
}

TrackingModel Scenario::tracking_model() const {
    TrackingModel model;
    model.dynamics = DynamicsModel::constant_velocity(tau, process_noise_intensity);
    model.sensors.assign(num_sensors, SensorModel::uniform(num_objects, measurement_noise_variance, region.volume(),
                                                           clutter_rate, object_rate));
    return model;
}

int Scenario::snapshots_per_step() const {
    if (!network.per_iteration) return 1;
    int needed = 1;
    for (const auto& m : methods) {
        switch (m.kind) {
            case MethodKind::deng_vt: needed = std::max(needed, m.config.max_iterations); break;
            case MethodKind::dec_vt:
            case MethodKind::deaa_vt: needed = std::max(needed, m.config.consensus_rounds); break;
            default: break;
        }
    }
    return needed;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return Scenario::from_json(doc);
}

Scenario resolve(Scenario s) {
    if (s.network.sensor_positions.empty())
        s.network.sensor_positions =
            random_sensor_layout(s.num_sensors, s.region, s.network.policy.radius, derive_seed(s.seed, Stream::layout));
    if (s.init.initial_states.empty())
        s.init.initial_states =
            random_initial_states(s.num_objects, s.init.spawn, s.init.speed, derive_seed(s.seed, Stream::truth, {0}));
    s.validate();
    return s;
}

std::string config_hash(const Scenario& scenario) {
    const std::string text = scenario.to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scenario select_methods(Scenario scenario, const std::vector<std::string>& names) {
    std::vector<MethodSpec> kept;
    for (const auto& n : names) {
        auto it = std::find_if(scenario.methods.begin(), scenario.methods.end(),
                               [&](const MethodSpec& m) { return m.name == n; });
        if (it == scenario.methods.end()) throw ConfigError("scenario has no method named '" + n + "'");
        kept.push_back(*it);
    }
    scenario.methods = std::move(kept);
    return scenario;
}

}  // namespace denfuse
