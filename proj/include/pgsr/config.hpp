#pragma once

#include "pgsr/bench.hpp"
#include "pgsr/priors.hpp"
#include "pgsr/trainer.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pgsr {

// Experiment description read from a JSON file. Every key is optional except
// that unknown keys anywhere are rejected.
struct ExperimentConfig {
    Variant variant = Variant::SE;
    std::vector<std::string> benchmarks{"Nguyen-1"};
    int n_runs = 10;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string output_dir = "runs";
    bool stop_on_recovery = true;

    TrainConfig train{.batch_size = 500};
    std::optional<double> entropy_weight;
    std::optional<double> entropy_decay;

    bool equal_type_prior = true;
    bool domain_constraints = false;
    SoftLengthConfig soft_length;
    LengthBounds length_bounds;

    void validate() const;
    ExperimentSpec to_spec() const;
    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

// "a.b.c=value"; value is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

} // namespace pgsr
