#include "vortex/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vortex/errors.hpp"
#include "vortex/kernel.hpp"
#include "vortex/meanfield.hpp"

namespace vortex {

using nlohmann::json;

void SweepConfig::validate() const {
    if (N_list.empty()) throw ConfigError("N_list is empty");
    for (int N : N_list)
        if (N < 1) throw ConfigError("N_list entries must be >= 1");
    if (times.empty()) throw ConfigError("times is empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0)) throw ConfigError("times must be non-negative");
        if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError("times must be strictly ascending");
    }
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (!is_power_of_two(pde_n) || pde_n < 16) throw ConfigError("pde_n must be a power of two >= 16");
    if (!(pde_dt > 0.0)) throw ConfigError("pde_dt must be positive");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    const auto& e = estimator;
    if (e.bins_k1 < 2 || e.bins_k2 < 2) throw ConfigError("bin counts must be >= 2");
    if (e.w2_method != "exact" && e.w2_method != "entropic") throw ConfigError("w2_method must be exact or entropic");
    if (e.quant_side < 2) throw ConfigError("quant_side must be >= 2");
    if (!(e.entropic_reg > 0.0) || e.entropic_iters < 1 || !(e.entropic_tol > 0.0))
        throw ConfigError("invalid entropic settings");
    try {
        parse_kernel(kernel);
        InitialDensity::parse(rho0, lambda).validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(ex.what());
    }
}

namespace {

template <class T>
void take(json& j, const char* key, T& dst) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        dst = it->get<T>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("bad value for '") + key + "': " + ex.what());
    }
    j.erase(it);
}

void reject_rest(const json& j, const std::string& where) {
    if (j.empty()) return;
    throw ConfigError("unknown key '" + j.begin().key() + "' in " + where);
}

}  // namespace

SweepConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    SweepConfig c;
    take(j, "N_list", c.N_list);
    take(j, "times", c.times);
    take(j, "dt", c.dt);
    take(j, "replicas", c.replicas);
    take(j, "master_seed", c.master_seed);
    take(j, "kernel", c.kernel);
    take(j, "pde_n", c.pde_n);
    take(j, "pde_dt", c.pde_dt);
    take(j, "rho0", c.rho0);
    take(j, "lambda", c.lambda);
    take(j, "out_dir", c.out_dir);
    take(j, "workers", c.workers);
    if (auto it = j.find("estimator"); it != j.end()) {
        json e = *it;
        if (!e.is_object()) throw ConfigError("estimator must be an object");
        auto& s = c.estimator;
        take(e, "bins_k1", s.bins_k1);
        take(e, "bins_k2", s.bins_k2);
        take(e, "w2_method", s.w2_method);
        take(e, "quant_side", s.quant_side);
        take(e, "entropic_reg", s.entropic_reg);
        take(e, "entropic_iters", s.entropic_iters);
        take(e, "entropic_tol", s.entropic_tol);
        reject_rest(e, "estimator");
        j.erase(it);
    }
    reject_rest(j, "config");
    c.validate();
    return c;
}

SweepConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const SweepConfig& c) {
    const auto& s = c.estimator;
    json j = {{"N_list", c.N_list},
              {"times", c.times},
              {"dt", c.dt},
              {"replicas", c.replicas},
              {"master_seed", c.master_seed},
              {"kernel", c.kernel},
              {"pde_n", c.pde_n},
              {"pde_dt", c.pde_dt},
              {"rho0", c.rho0},
              {"lambda", c.lambda},
              {"out_dir", c.out_dir},
              {"workers", c.workers},
              {"estimator",
               {{"bins_k1", s.bins_k1},
                {"bins_k2", s.bins_k2},
                {"w2_method", s.w2_method},
                {"quant_side", s.quant_side},
                {"entropic_reg", s.entropic_reg},
                {"entropic_iters", s.entropic_iters},
                {"entropic_tol", s.entropic_tol}}}};
    return j.dump(2);
}

}  // namespace vortex
