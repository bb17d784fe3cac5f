#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fedsea/core.hpp"

namespace fedsea {

using json = nlohmann::json;

namespace detail {

template <class E, std::size_t N>
E parse_enum(const json& j, const std::pair<E, const char*> (&table)[N], const char* what) {
    if (!j.is_string()) throw ConfigError(std::string(what) + " must be a string");
    const auto s = j.get<std::string>();
    for (const auto& [e, name] : table)
        if (s == name) return e;
    throw ConfigError(std::string("unknown ") + what + ": " + s);
}

template <class E, std::size_t N>
const char* enum_name(E e, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [v, name] : table)
        if (v == e) return name;
    return "?";
}

inline constexpr std::pair<StepSizeKind, const char*> kStepKinds[] = {
    {StepSizeKind::constant, "constant"},
    {StepSizeKind::theory_convex, "theory_convex"},
    {StepSizeKind::decaying_strongly_convex, "decaying_strongly_convex"},
    {StepSizeKind::custom_sequence, "custom_sequence"},
};

inline constexpr std::pair<LossFamily, const char*> kLossFamilies[] = {
    {LossFamily::mean_quadratic, "mean_quadratic"},
    {LossFamily::gaussian_linreg, "gaussian_linreg"},
    {LossFamily::empirical_logistic, "empirical_logistic"},
};

inline constexpr std::pair<AdversaryKind, const char*> kAdversaryKinds[] = {
    {AdversaryKind::static_iid, "static_iid"},
    {AdversaryKind::static_heterogeneous, "static_heterogeneous"},
    {AdversaryKind::drifting_means, "drifting_means"},
    {AdversaryKind::cyclic_means, "cyclic_means"},
    {AdversaryKind::piecewise_shift, "piecewise_shift"},
    {AdversaryKind::dirac_adversarial, "dirac_adversarial"},
};

inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || item.key() == k;
        if (!ok) throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
    }
}

inline const json& require(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(std::string("missing key '") + key + "' in " + where);
    return *it;
}

inline std::size_t parse_count(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(std::string(what) + " must be a non-negative integer");
    return j.get<std::size_t>();
}

inline double parse_real(const json& j, const char* what) {
    if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
    return j.get<double>();
}

inline Vector parse_vector(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    Vector v;
    for (const auto& x : j) v.push_back(parse_real(x, what));
    return v;
}

inline std::vector<Vector> parse_vectors(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of arrays");
    std::vector<Vector> out;
    for (const auto& x : j) out.push_back(parse_vector(x, what));
    return out;
}

}  // namespace detail

inline const char* to_string(StepSizeKind k) { return detail::enum_name(k, detail::kStepKinds); }

inline json to_json(const StepSizePolicy& p) {
    json j;
    j["kind"] = to_string(p.kind);
    if (p.kind == StepSizeKind::constant) j["eta"] = p.eta;
    if (p.kind == StepSizeKind::custom_sequence) j["etas"] = p.etas;
    j["unsafe"] = p.unsafe;
    return j;
}

inline StepSizePolicy step_policy_from_json(const json& j) {
    if (j.is_string()) {
        StepSizePolicy p;
        p.kind = detail::parse_enum(j, detail::kStepKinds, "step-size kind");
        return p;
    }
    detail::reject_unknown_keys(j, {"kind", "eta", "etas", "unsafe"}, "step_size_policy");
    StepSizePolicy p;
    p.kind = detail::parse_enum(detail::require(j, "kind", "step_size_policy"), detail::kStepKinds, "step-size kind");
    if (j.contains("eta")) p.eta = detail::parse_real(j["eta"], "eta");
    if (j.contains("etas")) p.etas = detail::parse_vector(j["etas"], "etas");
    if (j.contains("unsafe")) {
        if (!j["unsafe"].is_boolean()) throw ConfigError("unsafe must be a boolean");
        p.unsafe = j["unsafe"].get<bool>();
    }
    if (p.kind == StepSizeKind::constant && !j.contains("eta")) throw ConfigError("constant step size needs 'eta'");
    if (p.kind == StepSizeKind::custom_sequence && !j.contains("etas")) throw ConfigError("custom_sequence needs 'etas'");
    return p;
}

inline json to_json(const LossSpec& s) {
    json j;
    j["family"] = to_string(s.family);
    j["covariate_variances"] = s.covariate_variances;
    j["convex_only"] = s.convex_only;
    j["surrogate_samples"] = s.surrogate_samples;
    return j;
}

inline LossSpec loss_spec_from_json(const json& j) {
    detail::reject_unknown_keys(j, {"family", "covariate_variances", "convex_only", "surrogate_samples"}, "loss_spec");
    LossSpec s;
    s.family = detail::parse_enum(detail::require(j, "family", "loss_spec"), detail::kLossFamilies, "loss family");
    if (j.contains("covariate_variances")) s.covariate_variances = detail::parse_vector(j["covariate_variances"], "covariate_variances");
    if (j.contains("convex_only")) {
        if (!j["convex_only"].is_boolean()) throw ConfigError("convex_only must be a boolean");
        s.convex_only = j["convex_only"].get<bool>();
    }
    if (j.contains("surrogate_samples")) s.surrogate_samples = detail::parse_count(j["surrogate_samples"], "surrogate_samples");
    return s;
}

inline json to_json(const AdversarySpec& s) {
    json j;
    j["kind"] = detail::enum_name(s.kind, detail::kAdversaryKinds);
    j["means"] = s.means;
    j["base"] = s.base;
    j["velocity"] = s.velocity;
    j["amplitude"] = s.amplitude;
    j["period"] = s.period;
    j["shift_times"] = s.shift_times;
    j["segments"] = s.segments;
    j["points"] = s.points;
    j["client_offsets"] = s.client_offsets;
    j["variances"] = s.variances;
    return j;
}

inline AdversarySpec adversary_spec_from_json(const json& j) {
    detail::reject_unknown_keys(j,
                                {"kind", "means", "base", "velocity", "amplitude", "period", "shift_times", "segments",
                                 "points", "client_offsets", "variances"},
                                "adversary_spec");
    AdversarySpec s;
    s.kind = detail::parse_enum(detail::require(j, "kind", "adversary_spec"), detail::kAdversaryKinds, "adversary kind");
    if (j.contains("means")) s.means = detail::parse_vectors(j["means"], "means");
    if (j.contains("base")) s.base = detail::parse_vector(j["base"], "base");
    if (j.contains("velocity")) s.velocity = detail::parse_vector(j["velocity"], "velocity");
    if (j.contains("amplitude")) s.amplitude = detail::parse_vector(j["amplitude"], "amplitude");
    if (j.contains("period")) s.period = detail::parse_count(j["period"], "period");
    if (j.contains("shift_times")) {
        if (!j["shift_times"].is_array()) throw ConfigError("shift_times must be an array");
        s.shift_times.clear();
        for (const auto& x : j["shift_times"]) s.shift_times.push_back(detail::parse_count(x, "shift_times"));
    }
    if (j.contains("segments")) s.segments = detail::parse_vectors(j["segments"], "segments");
    if (j.contains("points")) s.points = detail::parse_vectors(j["points"], "points");
    if (j.contains("client_offsets")) s.client_offsets = detail::parse_vectors(j["client_offsets"], "client_offsets");
    if (j.contains("variances")) {
        const auto& v = j["variances"];
        s.variances = v.is_number() ? Vector{detail::parse_real(v, "variances")} : detail::parse_vector(v, "variances");
    }
    return s;
}

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["num_clients"] = c.num_clients;
    j["horizon"] = c.horizon;
    j["sync_period"] = c.sync_period;
    j["dimension"] = c.dimension;
    j["step_size_policy"] = to_json(c.step_size);
    if (c.domain.bounded())
        j["projection_radius"] = *c.domain.radius;
    else
        j["projection_radius"] = "unbounded";
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["loss_spec"] = to_json(c.loss);
    j["adversary_spec"] = to_json(c.adversary);
    if (c.initial_point) j["initial_point"] = *c.initial_point;
    if (c.initial_distance) j["initial_distance"] = *c.initial_distance;
    j["sync_phase"] = c.sync_phase;
    j["mc_budget"] = c.mc_budget;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    try {
        detail::reject_unknown_keys(j,
                                    {"num_clients", "horizon", "sync_period", "dimension", "step_size_policy",
                                     "projection_radius", "replicates", "seed", "loss_spec", "adversary_spec",
                                     "initial_point", "initial_distance", "sync_phase", "mc_budget"},
                                    "config");
        const char* w = "config";
        ExperimentConfig c;
        c.num_clients = detail::parse_count(detail::require(j, "num_clients", w), "num_clients");
        c.horizon = detail::parse_count(detail::require(j, "horizon", w), "horizon");
        c.sync_period = detail::parse_count(detail::require(j, "sync_period", w), "sync_period");
        c.dimension = detail::parse_count(detail::require(j, "dimension", w), "dimension");
        c.step_size = step_policy_from_json(detail::require(j, "step_size_policy", w));
        const auto& r = detail::require(j, "projection_radius", w);
        if (r.is_string()) {
            if (r.get<std::string>() != "unbounded") throw ConfigError("projection_radius must be a number or \"unbounded\"");
            c.domain = Domain::unbounded();
        } else {
            c.domain = Domain::ball(detail::parse_real(r, "projection_radius"));
        }
        c.replicates = detail::parse_count(detail::require(j, "replicates", w), "replicates");
        const auto& seed = detail::require(j, "seed", w);
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
            throw ConfigError("seed must be a non-negative 64-bit integer");
        c.seed = seed.get<std::uint64_t>();
        c.loss = loss_spec_from_json(detail::require(j, "loss_spec", w));
        c.adversary = adversary_spec_from_json(detail::require(j, "adversary_spec", w));
        if (j.contains("initial_point")) c.initial_point = detail::parse_vector(j["initial_point"], "initial_point");
        if (j.contains("initial_distance")) c.initial_distance = detail::parse_real(j["initial_distance"], "initial_distance");
        if (j.contains("sync_phase")) c.sync_phase = detail::parse_count(j["sync_phase"], "sync_phase");
        if (j.contains("mc_budget")) c.mc_budget = detail::parse_count(j["mc_budget"], "mc_budget");
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

inline ExperimentConfig load_config(const std::string& path) { return config_from_json(load_json_file(path)); }

// FNV-1a over the canonical serialization; stable across runs and platforms.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace fedsea
