// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "cfxl/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace cfxl::harness
{
    namespace
    {
        using Member = std::variant<int ExperimentConfig::*, double ExperimentConfig::*, std::string ExperimentConfig::*,
                                    bool ExperimentConfig::*, std::uint64_t ExperimentConfig::*,
                                    std::vector<int> ExperimentConfig::*>;

        struct Field
        {
            const char *section; // empty for top-level keys
            const char *key;
            Member member;
        };

        // Order here is the dump order.
        const std::vector<Field> &fields()
        {
            using C = ExperimentConfig;
            static const std::vector<Field> f = {
                {"system", "num_bs", &C::num_bs},
                {"system", "num_ue", &C::num_ue},
                {"system", "bs_antennas_h", &C::bs_nh},
                {"system", "bs_antennas_v", &C::bs_nv},
                {"system", "ue_antennas_h", &C::ue_nh},
                {"system", "ue_antennas_v", &C::ue_nv},
                {"system", "bs_spacing_wl", &C::bs_spacing_wl},
                {"system", "ue_spacing_wl", &C::ue_spacing_wl},
                {"system", "carrier_ghz", &C::carrier_ghz},
                {"system", "area_m", &C::area_m},
                {"system", "min_bs_distance_m", &C::min_bs_distance_m},
                {"system", "bs_height_m", &C::bs_height_m},
                {"system", "ue_height_m", &C::ue_height_m},
                {"system", "noise_dbm", &C::noise_dbm},
                {"system", "p_max_mw", &C::p_max_mw},
                {"system", "bandwidth_mhz", &C::bandwidth_mhz},
                {"system", "d_max_m", &C::d_max_m},
                {"system", "kz_mode", &C::kz_mode},
                {"system", "spectrum", &C::spectrum},
                {"system", "lsf_mode", &C::lsf_mode},
                {"mdp", "gamma", &C::gamma},
                {"mdp", "r_g", &C::r_g},
                {"mdp", "r_b", &C::r_b},
                {"mdp", "alpha", &C::alpha},
                {"mdp", "beta_acc", &C::beta_acc},
                {"mdp", "threshold_mode", &C::threshold_mode},
                {"training", "variant", &C::variant},
                {"training", "architecture", &C::architecture},
                {"training", "scenario", &C::scenario},
                {"training", "sampling", &C::sampling},
                {"training", "episodes", &C::episodes},
                {"training", "steps", &C::steps},
                {"training", "hidden", &C::hidden},
                {"training", "leaky_slope", &C::leaky_slope},
                {"training", "lr_actor", &C::lr_actor},
                {"training", "lr_critic", &C::lr_critic},
                {"training", "tau", &C::tau},
                {"training", "soft_update", &C::soft_update},
                {"training", "grad_clip", &C::grad_clip},
                {"training", "buffer_size", &C::buffer_size},
                {"training", "pool_size", &C::pool_size},
                {"training", "batch_global", &C::batch_global},
                {"training", "batch_local", &C::batch_local},
                {"training", "mu", &C::mu},
                {"training", "nu", &C::nu},
                {"training", "ddpg_weight", &C::ddpg_weight},
                {"training", "reward_scale", &C::reward_scale},
                {"training", "noise_start", &C::noise_start},
                {"training", "noise_end", &C::noise_end},
                {"training", "weight_sharing", &C::weight_sharing},
                {"evaluation", "eval_every", &C::eval_every},
                {"evaluation", "eval_draws", &C::eval_draws},
                {"evaluation", "eval_mc_draws", &C::eval_mc_draws},
                {"evaluation", "n_conv", &C::n_conv},
                {"evaluation", "delta_conv", &C::delta_conv},
                {"evaluation", "fractional_exponent", &C::fractional_exponent},
                {"", "seed", &C::seed},
            };
            return f;
        }

        std::string full_name(const Field &f)
        {
            return std::string(f.section).empty() ? std::string(f.key) : std::string(f.section) + "." + f.key;
        }

        const Field *find_field(const std::string &name)
        {
            for (const auto &f : fields())
                if (full_name(f) == name || std::string(f.key) == name)
                    return &f;
            return nullptr;
        }

        std::string fmt_double(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        int parse_int(const std::string &key, const std::string &s)
        {
            try
            {
                std::size_t pos = 0;
                const long v = std::stol(s, &pos);
                if (pos != s.size())
                    throw std::invalid_argument(s);
                return static_cast<int>(v);
            }
            catch (const std::exception &)
            {
                throw ConfigError(key + ": expected an integer, got '" + s + "'");
            }
        }

        double parse_double(const std::string &key, const std::string &s)
        {
            try
            {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size())
                    throw std::invalid_argument(s);
                return v;
            }
            catch (const std::exception &)
            {
                throw ConfigError(key + ": expected a number, got '" + s + "'");
            }
        }

        std::uint64_t parse_u64(const std::string &key, const std::string &s)
        {
            try
            {
                std::size_t pos = 0;
                if (!s.empty() && s[0] == '-')
                    throw std::invalid_argument(s);
                const unsigned long long v = std::stoull(s, &pos, 0);
                if (pos != s.size())
                    throw std::invalid_argument(s);
                return v;
            }
            catch (const std::exception &)
            {
                throw ConfigError(key + ": expected a non-negative 64-bit integer, got '" + s + "'");
            }
        }

        bool parse_bool(const std::string &key, const std::string &s)
        {
            if (s == "true" || s == "1" || s == "yes" || s == "on")
                return true;
            if (s == "false" || s == "0" || s == "no" || s == "off")
                return false;
            throw ConfigError(key + ": expected a boolean, got '" + s + "'");
        }

        std::vector<int> parse_int_list(const std::string &key, const std::string &s)
        {
            std::vector<int> out;
            std::string item;
            std::string cleaned;
            for (char c : s)
                if (c != '[' && c != ']' && c != ' ')
                    cleaned += c;
            std::stringstream ss(cleaned);
            while (std::getline(ss, item, ','))
                out.push_back(parse_int(key, item));
            return out;
        }

        void assign(ExperimentConfig &cfg, const Field &f, const std::string &value)
        {
            const std::string name = full_name(f);
            std::visit(
                [&](auto m) {
                    using T = std::remove_cv_t<std::remove_reference_t<decltype(cfg.*m)>>;
                    if constexpr (std::is_same_v<T, int>)
                        cfg.*m = parse_int(name, value);
                    else if constexpr (std::is_same_v<T, double>)
                        cfg.*m = parse_double(name, value);
                    else if constexpr (std::is_same_v<T, std::string>)
                        cfg.*m = value;
                    else if constexpr (std::is_same_v<T, bool>)
                        cfg.*m = parse_bool(name, value);
                    else if constexpr (std::is_same_v<T, std::uint64_t>)
                        cfg.*m = parse_u64(name, value);
                    else
                        cfg.*m = parse_int_list(name, value);
                },
                f.member);
        }

        std::string render(const ExperimentConfig &cfg, const Field &f)
        {
            return std::visit(
                [&](auto m) -> std::string {
                    using T = std::remove_cv_t<std::remove_reference_t<decltype(cfg.*m)>>;
                    if constexpr (std::is_same_v<T, int>)
                        return std::to_string(cfg.*m);
                    else if constexpr (std::is_same_v<T, double>)
                        return fmt_double(cfg.*m);
                    else if constexpr (std::is_same_v<T, std::string>)
                        return "\"" + cfg.*m + "\"";
                    else if constexpr (std::is_same_v<T, bool>)
                        return cfg.*m ? "true" : "false";
                    else if constexpr (std::is_same_v<T, std::uint64_t>)
                        return std::to_string(cfg.*m);
                    else
                    {
                        std::string s = "[";
                        for (std::size_t i = 0; i < (cfg.*m).size(); ++i)
                            s += (i ? ", " : "") + std::to_string((cfg.*m)[i]);
                        return s + "]";
                    }
                },
                f.member);
        }

        std::string node_text(const YAML::Node &n, const std::string &name)
        {
            if (n.IsScalar())
                return n.Scalar();
            if (n.IsSequence())
            {
                std::string s;
                for (std::size_t i = 0; i < n.size(); ++i)
                {
                    if (!n[i].IsScalar())
                        throw ConfigError(name + ": nested lists are not supported");
                    s += (i ? "," : "") + n[i].Scalar();
                }
                return s;
            }
            throw ConfigError(name + ": expected a value");
        }
    } // namespace

    double ExperimentConfig::wavelength() const { return 299792458.0 / (carrier_ghz * 1e9); }

    void ExperimentConfig::validate() const
    {
        auto positive_int = [](int v, const char *key) {
            if (v < 1)
                throw ConfigError(std::string(key) + " must be >= 1");
        };
        auto positive = [](double v, const char *key) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError(std::string(key) + " must be positive");
        };
        positive_int(num_bs, "system.num_bs");
        positive_int(num_ue, "system.num_ue");
        positive_int(bs_nh, "system.bs_antennas_h");
        positive_int(bs_nv, "system.bs_antennas_v");
        positive_int(ue_nh, "system.ue_antennas_h");
        positive_int(ue_nv, "system.ue_antennas_v");
        positive(bs_spacing_wl, "system.bs_spacing_wl");
        positive(ue_spacing_wl, "system.ue_spacing_wl");
        if (bs_spacing_wl >= 0.5)
            throw ConfigError("system.bs_spacing_wl must be below half a wavelength (0.5); surfaces assume sub-half-wavelength spacing");
        if (ue_spacing_wl >= 0.5)
            throw ConfigError("system.ue_spacing_wl must be below half a wavelength (0.5); surfaces assume sub-half-wavelength spacing");
        positive(carrier_ghz, "system.carrier_ghz");
        positive(area_m, "system.area_m");
        if (!(min_bs_distance_m >= 0.0))
            throw ConfigError("system.min_bs_distance_m must be non-negative");
        if (!(bs_height_m >= 0.0) || !(ue_height_m >= 0.0))
            throw ConfigError("system heights must be non-negative");
        if (bs_height_m == ue_height_m)
            throw ConfigError("system.bs_height_m and system.ue_height_m must differ (parallel surfaces at one height see no gain)");
        if (!std::isfinite(noise_dbm))
            throw ConfigError("system.noise_dbm must be finite");
        positive(p_max_mw, "system.p_max_mw");
        positive(bandwidth_mhz, "system.bandwidth_mhz");
        if (!(d_max_m >= 0.0))
            throw ConfigError("system.d_max_m must be non-negative");
        channel::kz_mode_from_string(kz_mode);
        channel::spectral_model_from_tag(spectrum);
        se::lsf_mode_from_string(lsf_mode);

        if (!(gamma > 0.0 && gamma < 1.0))
            throw ConfigError("mdp.gamma must lie in (0, 1)");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("mdp.alpha must lie in [0, 1]");
        if (!(beta_acc > 1.0))
            throw ConfigError("mdp.beta_acc must exceed 1");
        if (!(r_b < r_g))
            throw ConfigError("mdp.r_b must be below mdp.r_g");
        if (threshold_mode != "relative" && threshold_mode != "absolute")
            throw ConfigError("mdp.threshold_mode must be relative|absolute");

        marl::variant_from_string(variant);
        dlpc::architecture_from_string(architecture);
        env::scenario_from_string(scenario);
        if (sampling != "auto" && sampling != "uniform" && sampling != "prioritized")
            throw ConfigError("training.sampling must be auto|uniform|prioritized");
        positive_int(episodes, "training.episodes");
        positive_int(steps, "training.steps");
        if (hidden.empty())
            throw ConfigError("training.hidden needs at least one layer");
        for (int h : hidden)
            if (h < 1)
                throw ConfigError("training.hidden sizes must be >= 1");
        if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
            throw ConfigError("training.leaky_slope must lie in [0, 1)");
        if (!(lr_actor >= 0.0))
            throw ConfigError("training.lr_actor must be non-negative");
        if (!(lr_critic >= 0.0))
            throw ConfigError("training.lr_critic must be non-negative");
        if (!(tau > 0.0 && tau <= 1.0))
            throw ConfigError("training.tau must lie in (0, 1]");
        marl::soft_direction_from_string(soft_update);
        positive(grad_clip, "training.grad_clip");
        positive_int(buffer_size, "training.buffer_size");
        positive_int(pool_size, "training.pool_size");
        if (pool_size > buffer_size)
            throw ConfigError("training.pool_size must not exceed training.buffer_size");
        positive_int(batch_global, "training.batch_global");
        positive_int(batch_local, "training.batch_local");
        positive(mu, "training.mu");
        if (!(nu > 0.0 && nu < 1.0))
            throw ConfigError("training.nu must lie in (0, 1)");
        if (!(ddpg_weight >= 0.0))
            throw ConfigError("training.ddpg_weight must be non-negative");
        if (reward_scale != "auto")
        {
            const double v = parse_double("training.reward_scale", reward_scale);
            if (!(v > 0.0))
                throw ConfigError("training.reward_scale must be positive or \"auto\"");
        }
        if (!(noise_start >= 0.0) || !(noise_end >= 0.0))
            throw ConfigError("training.noise_start and training.noise_end must be non-negative");

        positive_int(eval_every, "evaluation.eval_every");
        positive_int(eval_draws, "evaluation.eval_draws");
        positive_int(eval_mc_draws, "evaluation.eval_mc_draws");
        positive_int(n_conv, "evaluation.n_conv");
        positive(delta_conv, "evaluation.delta_conv");
        if (!(fractional_exponent >= 0.0))
            throw ConfigError("evaluation.fractional_exponent must be non-negative");
    }

    ExperimentConfig preset(const std::string &name)
    {
        ExperimentConfig c;
        if (name == "desk")
            return c;
        if (name == "large")
        {
            c.num_bs = 9;
            c.num_ue = 6;
            c.bs_nh = c.bs_nv = 9;
            c.ue_nh = c.ue_nv = 3;
            c.episodes = 1000;
            c.steps = 100;
            return c;
        }
        throw ConfigError("unknown preset '" + name + "' (expected desk|large)");
    }

    ExperimentConfig parse_config(const std::string &yaml_text, const ExperimentConfig &base)
    {
        ExperimentConfig cfg = base;
        YAML::Node root;
        try
        {
            root = YAML::Load(yaml_text);
        }
        catch (const YAML::Exception &e)
        {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        if (root.IsNull())
        {
            cfg.validate();
            return cfg;
        }
        if (!root.IsMap())
            throw ConfigError("config: top level must be a mapping");

        std::set<std::string> sections;
        for (const auto &f : fields())
            if (std::string(f.section).size())
                sections.insert(f.section);

        if (root["preset"])
            cfg = preset(root["preset"].as<std::string>());

        for (auto it = root.begin(); it != root.end(); ++it)
        {
            const std::string key = it->first.as<std::string>();
            if (key == "preset")
                continue;
            if (sections.count(key))
            {
                if (it->second.IsNull())
                    continue;
                if (!it->second.IsMap())
                    throw ConfigError(key + ": expected a mapping");
                for (auto jt = it->second.begin(); jt != it->second.end(); ++jt)
                {
                    const std::string name = key + "." + jt->first.as<std::string>();
                    const Field *f = nullptr;
                    for (const auto &cand : fields())
                        if (full_name(cand) == name)
                            f = &cand;
                    if (!f)
                        throw ConfigError("unknown config key '" + name + "'");
                    assign(cfg, *f, node_text(jt->second, name));
                }
                continue;
            }
            const Field *f = nullptr;
            for (const auto &cand : fields())
                if (std::string(cand.section).empty() && key == cand.key)
                    f = &cand;
            if (!f)
                throw ConfigError("unknown config key '" + key + "'");
            assign(cfg, *f, node_text(it->second, key));
        }
        cfg.validate();
        return cfg;
    }

    ExperimentConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str());
    }

    std::string dump_config(const ExperimentConfig &cfg)
    {
        std::ostringstream os;
        std::string current;
        for (const auto &f : fields())
        {
            const std::string section = f.section;
            if (section != current)
            {
                if (!section.empty())
                    os << section << ":\n";
                current = section;
            }
            os << (section.empty() ? "" : "  ") << f.key << ": " << render(cfg, f) << "\n";
        }
        return os.str();
    }

    std::string config_hash(const ExperimentConfig &cfg)
    {
        ExperimentConfig c = cfg;
        c.seed = 0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(dump_config(c))));
        return buf;
    }

    void set_key(ExperimentConfig &cfg, const std::string &key, const std::string &value)
    {
        const Field *f = find_field(key);
        if (!f)
            throw ConfigError("unknown config key '" + key + "'");
        assign(cfg, *f, value);
    }

    env::EnvConfig make_env_config(const ExperimentConfig &cfg)
    {
        env::EnvConfig e;
        const double lam = cfg.wavelength();
        e.num_bs = cfg.num_bs;
        e.num_ue = cfg.num_ue;
        e.bs_nh = cfg.bs_nh;
        e.bs_nv = cfg.bs_nv;
        e.ue_nh = cfg.ue_nh;
        e.ue_nv = cfg.ue_nv;
        e.bs_spacing = cfg.bs_spacing_wl * lam;
        e.ue_spacing = cfg.ue_spacing_wl * lam;
        e.area = cfg.area_m;
        e.min_bs_distance = cfg.min_bs_distance_m;
        e.bs_height = cfg.bs_height_m;
        e.ue_height = cfg.ue_height_m;
        e.noise_power = cfg.noise_watt();
        e.p_max = cfg.p_max_watt();
        e.d_max = cfg.d_max_m;
        e.scenario = env::scenario_from_string(cfg.scenario);
        e.mdp.gamma = cfg.gamma;
        e.mdp.r_g = cfg.r_g;
        e.mdp.r_b = cfg.r_b;
        e.mdp.alpha = cfg.alpha;
        e.mdp.beta_acc = cfg.beta_acc;
        e.channel.wavelength = lam;
        e.channel.kz = channel::kz_mode_from_string(cfg.kz_mode);
        e.channel.bs_spectrum = channel::spectral_model_from_tag(cfg.spectrum);
        e.channel.ue_spectrum = channel::spectral_model_from_tag(cfg.spectrum);
        e.lsf = se::lsf_mode_from_string(cfg.lsf_mode);
        return e;
    }

    marl::LearnerConfig make_learner_config(const ExperimentConfig &cfg)
    {
        marl::LearnerConfig l;
        l.apply_variant(marl::variant_from_string(cfg.variant));
        if (cfg.sampling == "uniform")
            l.prioritized = false;
        else if (cfg.sampling == "prioritized")
            l.prioritized = true;
        l.ddpg_weight = cfg.ddpg_weight;
        l.hidden = cfg.hidden;
        l.leaky_slope = cfg.leaky_slope;
        l.lr_actor = cfg.lr_actor;
        l.lr_critic = cfg.lr_critic;
        l.gamma = cfg.gamma;
        l.tau = cfg.tau;
        l.soft = marl::soft_direction_from_string(cfg.soft_update);
        l.grad_clip = cfg.grad_clip;
        l.buffer_capacity = cfg.buffer_size;
        l.pool_size = cfg.pool_size;
        l.batch_global = cfg.batch_global;
        l.batch_local = cfg.batch_local;
        l.mu = cfg.mu;
        l.nu = cfg.nu;
        l.noise_start = cfg.noise_start;
        l.noise_end = cfg.noise_end;
        l.noise_decay_steps = static_cast<long>(cfg.episodes) * cfg.steps;
        if (cfg.reward_scale != "auto")
            l.reward_scale = std::stod(cfg.reward_scale);
        return l;
    }
} // namespace cfxl::harness
