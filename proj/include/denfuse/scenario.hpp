#pragma once

#include "denfuse/metrics.hpp"
#include "denfuse/sim.hpp"
#include "denfuse/trackers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace denfuse {

inline constexpr int kScenarioSchemaVersion = 1;

enum class MethodKind { c_vt, i_vt, dec_vt, deaa_vt, deng_vt };

[[nodiscard]] std::string to_string(MethodKind kind);
[[nodiscard]] MethodKind method_kind_from_string(const std::string& s);
[[nodiscard]] std::string to_string(GradientVariant v);
[[nodiscard]] GradientVariant variant_from_string(const std::string& s);

struct MethodSpec {
    std::string name;
    MethodKind kind = MethodKind::c_vt;
    TrackerConfig config;
};

struct NetworkSpec {
    NetworkPolicy policy;
    bool per_iteration = false;  // resample the graph at every iteration / round
    std::vector<Eigen::Vector2d> sensor_positions;  // generated when empty
};

/// Track initialisation: truth X_0 perturbed by Gaussian noise, with a broad
/// diagonal covariance.
struct InitPolicy {
    Region spawn;
    double speed = 5.0;
    std::vector<StateVector> initial_states;  // generated when empty
    double position_noise_std = 5.0;
    double velocity_noise_std = 1.0;
    double position_variance = 100.0;
    double velocity_variance = 25.0;
};

struct Scenario {
    std::string name = "scenario";
    int num_objects = 10;
    int num_steps = 20;
    int num_sensors = 5;
    double tau = 1.0;
    double process_noise_intensity = 25.0;
    double measurement_noise_variance = 100.0;
    double clutter_rate = 100.0;
    double object_rate = 1.0;
    Region region;
    NetworkSpec network;
    InitPolicy init;
    std::vector<MethodSpec> methods;
    int monte_carlo_runs = 1;
    std::uint64_t seed = 1;
    GospaParams gospa;
    int convergence_step = 10;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    [[nodiscard]] TrackingModel tracking_model() const;
    /// Snapshots each step must provide for the configured methods.
    [[nodiscard]] int snapshots_per_step() const;

    /// Parses a scenario document; unknown fields are rejected.
    [[nodiscard]] static Scenario from_json(const nlohmann::json& doc);
    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);

/// Fills generated fields (sensor layout, initial truth states) from the seed.
[[nodiscard]] Scenario resolve(Scenario scenario);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const Scenario& scenario);

/// Keeps only methods whose name appears in `names`; unknown names throw.
[[nodiscard]] Scenario select_methods(Scenario scenario, const std::vector<std::string>& names);

}  // namespace denfuse
