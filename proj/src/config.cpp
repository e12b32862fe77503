#include "pgsr/config.hpp"

#include "pgsr/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pgsr {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) {
        throw InvalidConfig(std::string(where) + ": expected an object");
    }
    std::set<std::string_view> ok(allowed);
    for (const auto& [key, _] : obj.items()) {
        if (!ok.contains(key)) {
            throw InvalidConfig(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, std::string_view where)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw InvalidConfig("expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw InvalidConfig("expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw InvalidConfig("expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!it->is_string()) throw InvalidConfig("expected a string");
        }
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (std::is_unsigned_v<T> && it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0) {
                throw InvalidConfig("expected a non-negative integer");
            }
        }
        out = it->get<T>();
    } catch (const InvalidConfig& e) {
        throw InvalidConfig(std::string(where) + "." + key + ": " + e.what());
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string(where) + "." + key + ": " + e.what());
    }
}

} // namespace

void ExperimentConfig::validate() const
{
    if (benchmarks.empty()) {
        throw InvalidConfig("benchmarks: at least one benchmark is required");
    }
    for (const auto& b : benchmarks) {
        find_benchmark(b);
    }
    if (n_runs < 1) throw InvalidConfig("n_runs must be >= 1");
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
    if (output_dir.empty()) throw InvalidConfig("output_dir must not be empty");
    soft_length.validate();
    length_bounds.validate();
    resolve_train_config(to_spec()).validate();
}

ExperimentSpec ExperimentConfig::to_spec() const
{
    ExperimentSpec s;
    s.variant = variant;
    s.benchmarks = benchmarks;
    s.n_runs = n_runs;
    s.base_seed = seed;
    s.train = train;
    s.entropy_weight = entropy_weight;
    s.entropy_decay = entropy_decay;
    s.priors.equal_type = equal_type_prior;
    s.priors.domain_constraints = domain_constraints;
    s.priors.soft_length = soft_length;
    s.priors.length = length_bounds;
    s.workers = workers;
    s.stop_on_recovery = stop_on_recovery;
    return s;
}

ExperimentConfig parse_config(const json& doc)
{
    reject_unknown(doc, "config",
                   {"variant", "benchmarks", "n_runs", "seed", "workers", "output_dir", "stop_on_recovery", "train",
                    "priors"});
    ExperimentConfig c;
    if (auto it = doc.find("variant"); it != doc.end()) {
        if (!it->is_string()) throw InvalidConfig("config.variant: expected a string");
        c.variant = parse_variant(it->get<std::string>());
    }
    if (auto it = doc.find("benchmarks"); it != doc.end()) {
        const json names = it->is_string() ? json::array({*it}) : *it;
        if (!names.is_array()) throw InvalidConfig("config.benchmarks: expected an array of names");
        c.benchmarks.clear();
        for (const auto& b : names) {
            if (!b.is_string()) throw InvalidConfig("config.benchmarks: expected an array of names");
            if (b.get<std::string>() == "all") {
                for (const auto& bench : nguyen_suite()) c.benchmarks.push_back(bench.name);
            } else {
                c.benchmarks.push_back(b.get<std::string>());
            }
        }
    }
    read(doc, "n_runs", c.n_runs, "config");
    read(doc, "seed", c.seed, "config");
    read(doc, "workers", c.workers, "config");
    read(doc, "output_dir", c.output_dir, "config");
    read(doc, "stop_on_recovery", c.stop_on_recovery, "config");

    if (auto it = doc.find("train"); it != doc.end()) {
        const json& t = *it;
        reject_unknown(t, "config.train",
                       {"learning_rate", "batch_size", "risk_epsilon", "max_steps", "hidden_size", "normalize_by_kept",
                        "entropy_weight", "entropy_decay"});
        read(t, "learning_rate", c.train.learning_rate, "config.train");
        read(t, "batch_size", c.train.batch_size, "config.train");
        read(t, "risk_epsilon", c.train.risk_epsilon, "config.train");
        read(t, "max_steps", c.train.max_steps, "config.train");
        read(t, "hidden_size", c.train.hidden_size, "config.train");
        read(t, "normalize_by_kept", c.train.normalize_by_kept, "config.train");
        if (t.contains("entropy_weight")) {
            double v = 0;
            read(t, "entropy_weight", v, "config.train");
            c.entropy_weight = v;
        }
        if (t.contains("entropy_decay")) {
            double v = 0;
            read(t, "entropy_decay", v, "config.train");
            c.entropy_decay = v;
        }
    }
    if (auto it = doc.find("priors"); it != doc.end()) {
        const json& p = *it;
        reject_unknown(p, "config.priors", {"equal_type", "domain_constraints", "soft_length", "length_bounds"});
        read(p, "equal_type", c.equal_type_prior, "config.priors");
        read(p, "domain_constraints", c.domain_constraints, "config.priors");
        if (auto s = p.find("soft_length"); s != p.end()) {
            reject_unknown(*s, "config.priors.soft_length", {"target", "variance"});
            read(*s, "target", c.soft_length.target, "config.priors.soft_length");
            read(*s, "variance", c.soft_length.variance, "config.priors.soft_length");
        }
        if (auto l = p.find("length_bounds"); l != p.end()) {
            reject_unknown(*l, "config.priors.length_bounds", {"min", "max"});
            read(*l, "min", c.length_bounds.min_length, "config.priors.length_bounds");
            read(*l, "max", c.length_bounds.max_length, "config.priors.length_bounds");
        }
    }
    c.validate();
    return c;
}

ExperimentConfig parse_config_text(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidConfig("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json to_json(const ExperimentConfig& c)
{
    json train = {
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"risk_epsilon", c.train.risk_epsilon},
        {"max_steps", c.train.max_steps},
        {"hidden_size", c.train.hidden_size},
        {"normalize_by_kept", c.train.normalize_by_kept},
    };
    if (c.entropy_weight) train["entropy_weight"] = *c.entropy_weight;
    if (c.entropy_decay) train["entropy_decay"] = *c.entropy_decay;
    return json{
        {"variant", std::string(variant_name(c.variant))},
        {"benchmarks", c.benchmarks},
        {"n_runs", c.n_runs},
        {"seed", c.seed},
        {"workers", c.workers},
        {"output_dir", c.output_dir},
        {"stop_on_recovery", c.stop_on_recovery},
        {"train", train},
        {"priors",
         {{"equal_type", c.equal_type_prior},
          {"domain_constraints", c.domain_constraints},
          {"soft_length", {{"target", c.soft_length.target}, {"variance", c.soft_length.variance}}},
          {"length_bounds", {{"min", c.length_bounds.min_length}, {"max", c.length_bounds.max_length}}}}},
    };
}

void apply_override(json& doc, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw InvalidConfig("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    const std::string path(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) {
            throw InvalidConfig("override '" + path + "' has an empty path component");
        }
        if (!node->is_object()) {
            if (!node->is_null()) throw InvalidConfig("override '" + path + "' descends into a non-object");
            *node = json::object();
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

} // namespace pgsr
