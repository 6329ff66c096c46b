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

// cfxl command line: simulate | train | eval | sweep | dump-config
// Exit codes: 0 ok, 2 configuration error, 3 runtime error.

#include "cfxl/harness/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace
{
    using namespace cfxl;
    using namespace cfxl::harness;

    struct CommonArgs
    {
        std::string config;
        std::string preset;
        std::string out;
        std::string variant, architecture, scenario;
        std::uint64_t seed = 0;
        bool seed_set = false;
        std::vector<std::string> overrides;
    };

    void add_common(CLI::App *app, CommonArgs &a, bool with_out)
    {
        app->add_option("-c,--config", a.config, "YAML config file");
        app->add_option("--preset", a.preset, "start from a named preset (desk|large)");
        app->add_option("-s,--seed", a.seed, "64-bit master seed")->each([&a](const std::string &) { a.seed_set = true; });
        if (with_out)
            app->add_option("-o,--out", a.out, "output directory")->required();
        app->add_option("--variant", a.variant, "maddpg|de-maddpg|pes-maddpg|mimo-maddpg");
        app->add_option("--architecture", a.architecture, "single|double");
        app->add_option("--scenario", a.scenario, "static|dynamic|pm-dynamic");
        app->add_option("--set", a.overrides, "override a key, e.g. --set training.episodes=20");
    }

    ExperimentConfig resolve(const CommonArgs &a)
    {
        ExperimentConfig base = a.preset.empty() ? ExperimentConfig{} : preset(a.preset);
        ExperimentConfig cfg = a.config.empty() ? base : parse_config([&] {
            std::ifstream in(a.config);
            if (!in)
                throw ConfigError("cannot open config file '" + a.config + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }(), base);
        if (!a.variant.empty())
            cfg.variant = a.variant;
        if (!a.architecture.empty())
            cfg.architecture = a.architecture;
        if (!a.scenario.empty())
            cfg.scenario = a.scenario;
        for (const auto &o : a.overrides)
        {
            const auto eq = o.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got '" + o + "'");
            set_key(cfg, o.substr(0, eq), o.substr(eq + 1));
        }
        if (a.seed_set)
            cfg.seed = a.seed;
        cfg.validate();
        return cfg;
    }

    std::string fmt(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cfxl: cell-free XL-MIMO power control"};
    app.require_subcommand(1);

    CommonArgs sim_args, train_args, sweep_args, dump_args;
    int mc_draws = 10000;
    auto *sim = app.add_subcommand("simulate", "channel statistics and SE at full and fractional power");
    add_common(sim, sim_args, false);
    sim->add_option("-o,--out", sim_args.out, "output directory for simulate.json");
    sim->add_option("--mc-draws", mc_draws, "Monte-Carlo draws")->check(CLI::PositiveNumber);

    bool timing = false, no_traj = false, no_ckpt = false;
    auto *train = app.add_subcommand("train", "train and evaluate one configuration");
    add_common(train, train_args, true);
    train->add_flag("--timing", timing, "also write timing.json (wall clock, not reproducible)");
    train->add_flag("--no-trajectory", no_traj, "skip trajectory.jsonl");
    train->add_flag("--no-checkpoint", no_ckpt, "skip checkpoint.json");

    std::string ckpt, eval_out;
    auto *ev = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    ev->add_option("--checkpoint", ckpt, "checkpoint.json written by train")->required();
    ev->add_option("-o,--out", eval_out, "output directory")->required();

    std::string axis, values;
    int workers = 1;
    auto *sw = app.add_subcommand("sweep", "one training run per axis value");
    add_common(sw, sweep_args, true);
    sw->add_option("--axis", axis, "ns_row|nr_row|spacing_s|spacing_r|K|M|seed or any config key")->required();
    sw->add_option("--values", values, "comma list or inclusive integer range a:b")->required();
    sw->add_option("-j,--workers", workers, "parallel runs")->check(CLI::PositiveNumber);

    auto *dump = app.add_subcommand("dump-config", "print the resolved configuration as YAML");
    add_common(dump, dump_args, false);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        if (*dump)
        {
            std::cout << dump_config(resolve(dump_args));
        }
        else if (*sim)
        {
            std::cout << simulate(resolve(sim_args), sim_args.out, mc_draws);
        }
        else if (*train)
        {
            const ExperimentConfig cfg = resolve(train_args);
            RunOptions ro;
            ro.out_dir = train_args.out;
            ro.timing = timing;
            ro.trajectory = !no_traj;
            ro.checkpoint = !no_ckpt;
            const RunResult r = run_experiment(cfg, ro);
            std::cout << "config_hash " << r.config_hash << "\nseed " << r.seed << "\nfinal_sum_se "
                      << fmt(r.final_eval.sum_se) << "\nreference_sum_se " << fmt(r.reference_sum_se)
                      << "\nconvergence_episode "
                      << (r.convergence_episode ? std::to_string(*r.convergence_episode) : std::string("none"))
                      << "\n";
        }
        else if (*ev)
        {
            const RunResult r = evaluate_checkpoint(ckpt, eval_out);
            std::cout << "final_sum_se " << fmt(r.final_eval.sum_se) << "\nmc_sum_se " << fmt(r.final_eval.mc_mean)
                      << " +- " << fmt(r.final_eval.mc_std) << "\n";
        }
        else if (*sw)
        {
            const auto points = sweep(resolve(sweep_args), axis, parse_values(values), sweep_args.out, workers);
            for (const auto &p : points)
                std::cout << p.axis << "=" << p.value << " final_sum_se " << fmt(p.result.final_eval.sum_se) << "\n";
        }
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
