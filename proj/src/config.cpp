#include "qbandit/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <string_view>

namespace qbandit::config {

using nlohmann::json;
using policy::PolicyId;

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
        throw ConfigError(std::string(where) + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!key.empty() && key.front() == '_') {
            continue;
        }
        bool known = false;
        for (auto a : allowed) {
            known = known || a == key;
        }
        if (!known) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        try {
            target = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("key '") + key + "': " + e.what());
        }
    }
}

env::Band read_band(const json& j, const char* key, env::Band fallback) {
    if (auto it = j.find(key); it != j.end()) {
        if (!it->is_array() || it->size() != 2) {
            throw ConfigError(std::string("key '") + key + "': expected [lo, hi]");
        }
        return {(*it)[0].get<double>(), (*it)[1].get<double>()};
    }
    return fallback;
}

json band_json(const env::Band& b) { return json::array({b.lo, b.hi}); }

template <typename Enum>
Enum read_enum(const json& j, const char* key, Enum fallback,
               std::initializer_list<std::pair<std::string_view, Enum>> names) {
    auto it = j.find(key);
    if (it == j.end()) {
        return fallback;
    }
    if (!it->is_string()) {
        throw ConfigError(std::string("key '") + key + "': expected a string");
    }
    const auto text = it->get<std::string>();
    for (const auto& [name, value] : names) {
        if (name == text) {
            return value;
        }
    }
    throw ConfigError(std::string("key '") + key + "': unknown value '" + text + "'");
}

template <typename Enum>
std::string enum_name(Enum value, std::initializer_list<std::pair<std::string_view, Enum>> names) {
    for (const auto& [name, v] : names) {
        if (v == value) {
            return std::string(name);
        }
    }
    return "unknown";
}

const std::initializer_list<std::pair<std::string_view, policy::ScheduleKind>> kScheduleNames{
    {"anytime", policy::ScheduleKind::Anytime},
    {"fixed-horizon", policy::ScheduleKind::FixedHorizon}};
const std::initializer_list<std::pair<std::string_view, policy::PhaseMode>> kPhaseNames{
    {"solved", policy::PhaseMode::Solved}, {"zero", policy::PhaseMode::ForcedZero}};
const std::initializer_list<std::pair<std::string_view, policy::DisparityMode>> kDisparityNames{
    {"exclude-target", policy::DisparityMode::ExcludeTarget},
    {"all-arms", policy::DisparityMode::AllArms}};
const std::initializer_list<std::pair<std::string_view, policy::IxProbability>> kIxNames{
    {"amplified", policy::IxProbability::Amplified},
    {"pre-amplification", policy::IxProbability::PreAmplification}};

void read_environment(const json& j, harness::EnvConfig& out) {
    check_keys(j, "environment",
               {"kind", "arms", "cpu_ghz", "range_km", "channel", "task", "adversary", "loss_cap",
                "phases", "bernoulli"});
    out.kind = read_enum(j, "kind", out.kind,
                         {{"fog", harness::EnvConfig::Kind::Fog},
                          {"synthetic", harness::EnvConfig::Kind::Synthetic}});
    if (out.kind == harness::EnvConfig::Kind::Synthetic) {
        out.synthetic.phases.clear();
        read(j, "bernoulli", out.synthetic.bernoulli);
        auto it = j.find("phases");
        if (it == j.end() || !it->is_array()) {
            throw ConfigError("environment: synthetic kind needs a 'phases' array");
        }
        for (const auto& ph : *it) {
            check_keys(ph, "environment.phases[]", {"weight", "means"});
            env::SyntheticPhase phase;
            read(ph, "weight", phase.weight);
            read(ph, "means", phase.means);
            out.synthetic.phases.push_back(std::move(phase));
        }
        return;
    }
    auto& fog = out.fog;
    read(j, "arms", fog.arms);
    read(j, "cpu_ghz", fog.cpu_ghz);
    read(j, "range_km", fog.range_km);
    if (auto it = j.find("loss_cap"); it != j.end()) {
        fog.loss_cap = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
    }
    if (auto it = j.find("channel"); it != j.end()) {
        check_keys(*it, "environment.channel", {"tx_power_dbm", "bandwidth_hz", "noise_dbm_per_hz"});
        read(*it, "tx_power_dbm", fog.channel.tx_power_dbm);
        read(*it, "bandwidth_hz", fog.channel.bandwidth_hz);
        read(*it, "noise_dbm_per_hz", fog.channel.noise_dbm_per_hz);
    }
    if (auto it = j.find("task"); it != j.end()) {
        check_keys(*it, "environment.task", {"q_bits", "cycles_per_bit", "output_ratio"});
        read(*it, "q_bits", fog.task.q_bits);
        read(*it, "cycles_per_bit", fog.task.cycles_per_bit);
        read(*it, "output_ratio", fog.task.output_ratio);
    }
    if (auto it = j.find("adversary"); it != j.end()) {
        const json& a = *it;
        check_keys(a, "environment.adversary",
                   {"mode", "range", "epochs", "favored", "others", "period"});
        auto& adv = fog.adversary;
        if (auto m = a.find("mode"); m != a.end()) {
            const auto parsed = env::parse_adversary_mode(m->get<std::string>());
            if (!parsed) {
                throw ConfigError("environment.adversary: unknown mode '" + m->get<std::string>() + "'");
            }
            adv.mode = *parsed;
        }
        adv.range = read_band(a, "range", adv.range);
        adv.favored = read_band(a, "favored", adv.favored);
        adv.others = read_band(a, "others", adv.others);
        read(a, "epochs", adv.epochs);
        read(a, "period", adv.period);
    }
}

void read_policy_params(const json& j, policy::PolicySettings& s) {
    check_keys(j, "policy_params", {"schedule", "gamma_ratio", "qb", "eps_greedy", "exp3p"});
    s.schedule = read_enum(j, "schedule", s.schedule, kScheduleNames);
    read(j, "gamma_ratio", s.gamma_ratio);
    if (auto it = j.find("qb"); it != j.end()) {
        check_keys(*it, "policy_params.qb", {"phase", "disparity", "ix_probability"});
        s.qb.phase = read_enum(*it, "phase", s.qb.phase, kPhaseNames);
        s.qb.disparity = read_enum(*it, "disparity", s.qb.disparity, kDisparityNames);
        s.qb.ix_probability = read_enum(*it, "ix_probability", s.qb.ix_probability, kIxNames);
    }
    if (auto it = j.find("eps_greedy"); it != j.end()) {
        check_keys(*it, "policy_params.eps_greedy", {"epsilon"});
        read(*it, "epsilon", s.epsilon);
    }
    if (auto it = j.find("exp3p"); it != j.end()) {
        check_keys(*it, "policy_params.exp3p", {"beta_scale", "eta_scale", "gamma_scale"});
        read(*it, "beta_scale", s.exp3p.beta_scale);
        read(*it, "eta_scale", s.exp3p.eta_scale);
        read(*it, "gamma_scale", s.exp3p.gamma_scale);
    }
}

}  // namespace

harness::ExperimentConfig defaults() { return {}; }

harness::ExperimentConfig from_json(const json& j) {
    harness::ExperimentConfig c = defaults();
    check_keys(j, "config",
               {"schema", "horizon", "repetitions", "seed", "policies", "k_list", "output_dir",
                "environment", "policy_params"});
    read(j, "schema", c.schema);
    read(j, "horizon", c.horizon);
    read(j, "repetitions", c.repetitions);
    read(j, "seed", c.seed);
    read(j, "k_list", c.k_list);
    read(j, "output_dir", c.output_dir);
    if (auto it = j.find("policies"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("policies: expected an array of identifiers");
        }
        c.policies.clear();
        for (const auto& p : *it) {
            const auto text = p.is_string() ? p.get<std::string>() : p.dump();
            const auto id = policy::parse_policy_id(text);
            if (!id) {
                throw ConfigError("policies: unknown policy '" + text + "'");
            }
            c.policies.push_back(*id);
        }
    }
    if (auto it = j.find("environment"); it != j.end()) {
        read_environment(*it, c.environment);
    }
    if (auto it = j.find("policy_params"); it != j.end()) {
        read_policy_params(*it, c.settings);
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

json to_json(const harness::ExperimentConfig& c) {
    json policies = json::array();
    for (auto id : c.policies) {
        policies.push_back(std::string(policy::to_string(id)));
    }
    json environment;
    if (c.environment.kind == harness::EnvConfig::Kind::Synthetic) {
        json phases = json::array();
        for (const auto& ph : c.environment.synthetic.phases) {
            phases.push_back({{"weight", ph.weight}, {"means", ph.means}});
        }
        environment = {{"kind", "synthetic"},
                       {"bernoulli", c.environment.synthetic.bernoulli},
                       {"phases", phases}};
    } else {
        const auto& f = c.environment.fog;
        const auto& a = f.adversary;
        environment = {
            {"kind", "fog"},
            {"arms", f.arms},
            {"cpu_ghz", f.cpu_ghz},
            {"range_km", f.range_km},
            {"channel",
             {{"tx_power_dbm", f.channel.tx_power_dbm},
              {"bandwidth_hz", f.channel.bandwidth_hz},
              {"noise_dbm_per_hz", f.channel.noise_dbm_per_hz}}},
            {"task",
             {{"q_bits", f.task.q_bits},
              {"cycles_per_bit", f.task.cycles_per_bit},
              {"output_ratio", f.task.output_ratio}}},
            {"adversary",
             {{"mode", std::string(env::to_string(a.mode))},
              {"range", band_json(a.range)},
              {"epochs", a.epochs},
              {"favored", band_json(a.favored)},
              {"others", band_json(a.others)},
              {"period", a.period}}},
            {"loss_cap", f.loss_cap ? json(*f.loss_cap) : json(nullptr)},
        };
    }
    const auto& s = c.settings;
    json params = {
        {"schedule", enum_name(s.schedule, kScheduleNames)},
        {"gamma_ratio", s.gamma_ratio},
        {"qb",
         {{"phase", enum_name(s.qb.phase, kPhaseNames)},
          {"disparity", enum_name(s.qb.disparity, kDisparityNames)},
          {"ix_probability", enum_name(s.qb.ix_probability, kIxNames)}}},
        {"eps_greedy", {{"epsilon", s.epsilon}}},
        {"exp3p",
         {{"_source",
           "Bubeck & Cesa-Bianchi (2012), Theorem 3.3: beta = sqrt(ln K/(nK)), "
           "eta = 0.95 sqrt(ln K/(nK)), gamma = 1.05 sqrt(K ln K/n)"},
          {"beta_scale", s.exp3p.beta_scale},
          {"eta_scale", s.exp3p.eta_scale},
          {"gamma_scale", s.exp3p.gamma_scale}}},
    };
    return {{"schema", c.schema},
            {"horizon", c.horizon},
            {"repetitions", c.repetitions},
            {"seed", c.seed},
            {"policies", policies},
            {"k_list", c.k_list},
            {"output_dir", c.output_dir},
            {"environment", environment},
            {"policy_params", params}};
}

harness::ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

}  // namespace qbandit::config
