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

#include "cfxl/harness/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace cfxl::harness
{
    using ojson = nlohmann::ordered_json;
    namespace fs = std::filesystem;

    Eigen::VectorXd fractional_baseline(const Eigen::VectorXd &betas, double exponent, double p_max)
    {
        if ((betas.array() <= 0.0).any())
            throw std::invalid_argument("fractional_baseline: betas must be positive");
        if (betas.size() == 0)
            return betas;
        const Eigen::VectorXd w = betas.array().pow(-exponent).matrix();
        return p_max * w / w.maxCoeff();
    }

    std::optional<int> detect_convergence(const std::vector<double> &series, int n_conv, double delta)
    {
        if (n_conv < 1)
            throw std::invalid_argument("detect_convergence: n_conv must be >= 1");
        const int n = static_cast<int>(series.size());
        if (n < n_conv)
            return std::nullopt;
        const double final_value = series.back();
        const double tol = delta * std::abs(final_value);
        auto inside = [&](int i) { return std::abs(series[static_cast<std::size_t>(i)] - final_value) <= tol; };
        // run[i]: length of the within-band run starting at i
        std::vector<int> run(static_cast<std::size_t>(n) + 1, 0);
        for (int i = n - 1; i >= 0; --i)
            run[static_cast<std::size_t>(i)] = inside(i) ? run[static_cast<std::size_t>(i) + 1] + 1 : 0;
        for (int i = 0; i + n_conv <= n; ++i)
            if (run[static_cast<std::size_t>(i)] >= n_conv)
                return i;
        return std::nullopt;
    }

    namespace
    {
        std::string num(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.12g", v);
            return buf;
        }

        std::vector<se::PowerAllocation> uniform_powers(const env::EnvConfig &ec, const Eigen::VectorXd &p)
        {
            std::vector<se::PowerAllocation> out;
            for (Eigen::Index k = 0; k < p.size(); ++k)
                out.push_back(se::PowerAllocation::uniform(ec.ue_antennas(), p(k)));
            return out;
        }

        void write_text(const fs::path &path, const std::string &text)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot write '" + path.string() + "'");
            out << text;
        }

        std::string read_text(const fs::path &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw std::runtime_error("cannot read '" + path.string() + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        const char *kMetricsHeader = "layer,episode,step,agent,reward,sum_se,power_w,budget_w,step_m,"
                                     "critic_loss_global,critic_loss_local,actor_objective,pr_mean,pr_max,updated";

        void write_metric_rows(std::ostream &os, int episode, int step, const dlpc::StepLog &log)
        {
            const auto &u1 = log.layer1.update;
            for (Eigen::Index k = 0; k < log.layer1.rewards.size(); ++k)
            {
                const auto ks = static_cast<std::size_t>(k);
                os << 1 << ',' << episode << ',' << step << ',' << k << ',' << num(log.layer1.rewards(k)) << ','
                   << num(log.env.reward_sum) << ',' << num(log.env.powers[ks].trace()) << ','
                   << num(log.budgets(k)) << ',' << num(log.env.steps_taken[ks]) << ',' << num(u1.critic_loss_global)
                   << ',' << num(u1.critic_loss_local) << ',' << num(u1.actor_objective) << ',' << num(u1.pr_mean)
                   << ',' << num(u1.pr_max) << ',' << (u1.updated ? 1 : 0) << '\n';
            }
            if (!log.layer2)
                return;
            const auto &u2 = log.layer2->update;
            const auto ns = log.env.powers.front().amp.size();
            for (Eigen::Index j = 0; j < log.layer2->rewards.size(); ++j)
            {
                const auto k = static_cast<std::size_t>(j / ns);
                const double p = std::pow(log.env.powers[k].amp(j % ns), 2);
                os << 2 << ',' << episode << ',' << step << ',' << j << ',' << num(log.layer2->rewards(j)) << ','
                   << num(log.env.reward_sum) << ',' << num(p) << ',' << num(log.budgets(static_cast<Eigen::Index>(k)))
                   << ",0," << num(u2.critic_loss_global) << ',' << num(u2.critic_loss_local) << ','
                   << num(u2.actor_objective) << ',' << num(u2.pr_mean) << ',' << num(u2.pr_max) << ','
                   << (u2.updated ? 1 : 0) << '\n';
            }
        }

        ojson trajectory_line(int episode, int step, const env::Environment &env, const dlpc::StepLog &log)
        {
            ojson j;
            j["episode"] = episode;
            j["t"] = step;
            ojson pos = ojson::array();
            for (const auto &p : env.world().ue_positions)
                pos.push_back({p.x(), p.y(), p.z()});
            j["ue_positions"] = pos;
            ojson acts = ojson::array();
            for (const auto &a : log.actions)
                acts.push_back({a.power, a.step, a.angle});
            j["actions"] = acts;
            j["steps_taken"] = log.env.steps_taken;
            j["rewards"] = std::vector<double>(log.env.rewards.data(), log.env.rewards.data() + log.env.rewards.size());
            return j;
        }

        EvalPoint greedy_eval(dlpc::PowerControlSystem &sys, env::Environment &env, const ExperimentConfig &cfg,
                              int episode)
        {
            EvalPoint ep;
            ep.episode = episode;
            sys.reset();
            ep.per_ue = Eigen::VectorXd::Zero(cfg.num_ue);
            std::vector<se::PowerAllocation> last;
            for (int t = 0; t < cfg.steps; ++t)
            {
                const dlpc::StepLog log = sys.step(false, false);
                ep.per_ue += log.env.rewards;
                last = log.env.powers;
            }
            ep.per_ue /= cfg.steps;
            ep.sum_se = ep.per_ue.sum();

            const se::StatsGrid grid = env.stats_grid();
            se::MonteCarloOptions mc;
            mc.n_draws = cfg.eval_mc_draws;
            mc.lsf = env.config().lsf;
            double s1 = 0.0, s2 = 0.0;
            for (int d = 0; d < cfg.eval_draws; ++d)
            {
                const std::uint64_t seed =
                    derive_seed(cfg.seed, "eval", static_cast<std::uint64_t>(episode) * 1000003ULL + d);
                const double v = se::se_monte_carlo(grid, last, env.config().noise_power, seed, mc).sum;
                s1 += v;
                s2 += v * v;
            }
            const double n = cfg.eval_draws;
            ep.mc_mean = s1 / n;
            ep.mc_std = n > 1 ? std::sqrt(std::max(0.0, (s2 - s1 * s1 / n) / (n - 1))) : 0.0;
            return ep;
        }

        std::string eval_csv(const ExperimentConfig &cfg, const std::vector<EvalPoint> &evals)
        {
            std::ostringstream os;
            os << "episode,sum_se";
            for (int k = 0; k < cfg.num_ue; ++k)
                os << ",se_ue" << k;
            os << ",mc_sum_se_mean,mc_sum_se_std,throughput_mbps\n";
            for (const auto &e : evals)
            {
                os << e.episode << ',' << num(e.sum_se);
                for (Eigen::Index k = 0; k < e.per_ue.size(); ++k)
                    os << ',' << num(e.per_ue(k));
                os << ',' << num(e.mc_mean) << ',' << num(e.mc_std) << ',' << num(e.sum_se * cfg.bandwidth_mhz)
                   << '\n';
            }
            return os.str();
        }

        ojson vec_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

        ojson layer_json(const std::string &name, marl::Learner &l)
        {
            ojson j;
            j["name"] = name;
            j["act_count"] = l.act_count();
            j["update_count"] = l.update_count();
            ojson nets = ojson::array();
            for (auto &[n, net] : l.named_networks())
                nets.push_back({{"name", n}, {"sizes", net->sizes()}, {"params", vec_json(net->params())}});
            j["networks"] = nets;
            ojson rngs = ojson::array();
            for (auto &[n, rng] : l.named_rngs())
            {
                std::ostringstream os;
                os << *rng;
                rngs.push_back({{"name", n}, {"state", os.str()}});
            }
            j["rngs"] = rngs;
            auto buffer_json = [](const std::string &bn, const marl::ReplayBuffer &b) {
                ojson recs = ojson::array();
                for (const auto &e : b.records())
                    recs.push_back({{"id", e.id},
                                    {"s", vec_json(e.s)},
                                    {"a", vec_json(e.a)},
                                    {"r", vec_json(e.r)},
                                    {"s_next", vec_json(e.s_next)},
                                    {"loss", e.loss},
                                    {"n", e.n},
                                    {"pr", e.pr}});
                return ojson{{"name", bn}, {"capacity", b.capacity()}, {"next_id", b.next_id()}, {"records", recs}};
            };
            ojson bufs = ojson::array();
            bufs.push_back(buffer_json("global", l.global_buffer()));
            for (std::size_t i = 0; i < l.local_buffers().size(); ++i)
                bufs.push_back(buffer_json("local." + std::to_string(i), l.local_buffers()[i]));
            j["buffers"] = bufs;
            return j;
        }

        Eigen::VectorXd json_vec(const ojson &j)
        {
            const auto v = j.get<std::vector<double>>();
            return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }

        void restore_layer(const ojson &j, marl::Learner &l)
        {
            l.act_count() = j.at("act_count").get<long>();
            l.update_count() = j.at("update_count").get<long>();
            auto nets = l.named_networks();
            const auto &jn = j.at("networks");
            if (jn.size() != nets.size())
                throw std::runtime_error("checkpoint: network count mismatch in " + j.at("name").get<std::string>());
            for (std::size_t i = 0; i < nets.size(); ++i)
            {
                if (jn[i].at("name").get<std::string>() != nets[i].first ||
                    jn[i].at("sizes").get<std::vector<int>>() != nets[i].second->sizes())
                    throw std::runtime_error("checkpoint: network " + nets[i].first + " does not match the config");
                nets[i].second->params() = json_vec(jn[i].at("params"));
            }
            auto rngs = l.named_rngs();
            const auto &jr = j.at("rngs");
            for (std::size_t i = 0; i < rngs.size() && i < jr.size(); ++i)
            {
                std::istringstream is(jr[i].at("state").get<std::string>());
                is >> *rngs[i].second;
            }
            auto restore_buf = [](const ojson &jb, marl::ReplayBuffer &b) {
                std::deque<marl::Experience> recs;
                for (const auto &r : jb.at("records"))
                {
                    marl::Experience e;
                    e.id = r.at("id").get<long>();
                    e.s = json_vec(r.at("s"));
                    e.a = json_vec(r.at("a"));
                    e.r = json_vec(r.at("r"));
                    e.s_next = json_vec(r.at("s_next"));
                    e.loss = r.at("loss").get<double>();
                    e.n = r.at("n").get<long>();
                    e.pr = r.at("pr").get<double>();
                    recs.push_back(std::move(e));
                }
                b.restore(std::move(recs), jb.at("next_id").get<long>());
            };
            const auto &jb = j.at("buffers");
            if (jb.size() != 1 + l.local_buffers().size())
                throw std::runtime_error("checkpoint: buffer count mismatch");
            restore_buf(jb[0], l.global_buffer());
            for (std::size_t i = 0; i < l.local_buffers().size(); ++i)
                restore_buf(jb[i + 1], l.local_buffers()[i]);
        }

        std::string checkpoint_json(const ExperimentConfig &cfg, int episodes_done, dlpc::PowerControlSystem &sys)
        {
            ojson j;
            j["format"] = "cfxl-checkpoint";
            j["version"] = kCheckpointVersion;
            j["config_hash"] = config_hash(cfg);
            j["seed"] = cfg.seed;
            j["episodes_completed"] = episodes_done;
            j["config"] = dump_config(cfg);
            ojson layers = ojson::array();
            layers.push_back(layer_json("layer1", sys.layer1()));
            if (sys.layer2())
                layers.push_back(layer_json("layer2", *sys.layer2()));
            j["layers"] = layers;
            return j.dump() + "\n";
        }

        ojson eval_json(const ExperimentConfig &cfg, const EvalPoint &e)
        {
            ojson j;
            j["episode"] = e.episode;
            j["sum_se"] = e.sum_se;
            j["per_ue_se"] = vec_json(e.per_ue);
            j["mc_sum_se_mean"] = e.mc_mean;
            j["mc_sum_se_std"] = e.mc_std;
            j["mc_evaluations"] = cfg.eval_draws;
            j["mc_draws_each"] = cfg.eval_mc_draws;
            j["throughput_mbps"] = e.sum_se * cfg.bandwidth_mhz;
            return j;
        }
    } // namespace

    Setup build_setup(const ExperimentConfig &cfg)
    {
        cfg.validate();
        Setup s;
        s.env_cfg = make_env_config(cfg);
        Rng placement = make_rng(cfg.seed, "placement");
        s.world = env::place(s.env_cfg, placement);

        const env::Environment probe(s.env_cfg, s.world);
        s.reference_sum_se =
            probe.evaluate(uniform_powers(s.env_cfg, Eigen::VectorXd::Constant(cfg.num_ue, s.env_cfg.p_max))).sum;
        if (!(s.reference_sum_se > 0.0) || !std::isfinite(s.reference_sum_se))
            throw std::runtime_error("reference sum SE is not positive; check the geometry and noise settings");
        if (cfg.threshold_mode == "relative")
        {
            s.env_cfg.mdp.r_g *= s.reference_sum_se;
            s.env_cfg.mdp.r_b *= s.reference_sum_se;
        }
        marl::LearnerConfig base = make_learner_config(cfg);
        s.reward_scale = cfg.reward_scale == "auto" ? 1.0 / s.reference_sum_se : base.reward_scale;
        base.reward_scale = s.reward_scale;
        s.system = dlpc::make_system_config(s.env_cfg, dlpc::architecture_from_string(cfg.architecture), base,
                                            cfg.weight_sharing);
        return s;
    }

    namespace
    {
        double fractional_sum(const ExperimentConfig &cfg, env::Environment &env)
        {
            env.reset();
            const Eigen::VectorXd p =
                fractional_baseline(env.observe_layer1(), cfg.fractional_exponent, env.config().p_max);
            return env.evaluate(uniform_powers(env.config(), p)).sum;
        }
    } // namespace

    std::string summary_json(const ExperimentConfig &cfg, const RunResult &r)
    {
        ojson j;
        j["schema_version"] = kSummaryVersion;
        j["config_hash"] = r.config_hash;
        j["seed"] = r.seed;
        j["variant"] = cfg.variant;
        j["architecture"] = cfg.architecture;
        j["scenario"] = cfg.scenario;
        j["episodes"] = cfg.episodes;
        j["steps"] = cfg.steps;
        j["reference_sum_se"] = r.reference_sum_se;
        j["reward_scale"] = r.reward_scale;
        j["fractional_sum_se"] = r.fractional_sum_se;
        j["convergence_episode"] = r.convergence_episode ? ojson(*r.convergence_episode) : ojson(nullptr);
        j["final_training_sum_se"] = r.episode_sum_se.empty() ? ojson(nullptr) : ojson(r.episode_sum_se.back());
        j["final"] = eval_json(cfg, r.final_eval);
        return j.dump(2) + "\n";
    }

    RunResult run_experiment(const ExperimentConfig &cfg, const RunOptions &opts)
    {
        const Setup setup = build_setup(cfg);
        env::Environment env(setup.env_cfg, setup.world);
        dlpc::PowerControlSystem sys(env, setup.system, cfg.seed);

        RunResult r;
        r.config_hash = config_hash(cfg);
        r.seed = cfg.seed;
        r.reference_sum_se = setup.reference_sum_se;
        r.reward_scale = setup.reward_scale;
        r.fractional_sum_se = fractional_sum(cfg, env);

        const bool files = !opts.out_dir.empty();
        const fs::path out(opts.out_dir);
        std::ofstream metrics, traj;
        const fs::path metrics_tmp = out / "metrics.csv.partial";
        if (files)
        {
            fs::create_directories(out);
            write_text(out / "config.yaml", dump_config(cfg));
            metrics.open(metrics_tmp, std::ios::binary);
            if (!metrics)
                throw std::runtime_error("cannot write '" + metrics_tmp.string() + "'");
            metrics << kMetricsHeader << '\n';
            if (opts.trajectory)
                traj.open(out / "trajectory.jsonl", std::ios::binary);
        }

        for (int e = 0; e < cfg.episodes; ++e)
        {
            const auto t0 = std::chrono::steady_clock::now();
            sys.reset();
            double total = 0.0;
            for (int t = 0; t < cfg.steps; ++t)
            {
                const dlpc::StepLog log = sys.step(true, true);
                total += log.env.reward_sum;
                if (opts.on_step)
                    opts.on_step(e, t, log);
                if (files)
                {
                    write_metric_rows(metrics, e, t, log);
                    if (opts.trajectory)
                        traj << trajectory_line(e, t, env, log).dump() << '\n';
                }
            }
            r.episode_sum_se.push_back(total / cfg.steps);
            if ((e + 1) % cfg.eval_every == 0 || e + 1 == cfg.episodes)
                r.evals.push_back(greedy_eval(sys, env, cfg, e + 1));
            r.wall_per_episode.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        r.convergence_episode = detect_convergence(r.episode_sum_se, cfg.n_conv, cfg.delta_conv);
        r.final_eval = r.evals.back();

        if (!files)
            return r;

        metrics.close();
        traj.close();
        {
            // second pass appends the convergence flag, known only once training ends
            std::ifstream in(metrics_tmp, std::ios::binary);
            std::ofstream final_csv(out / "metrics.csv", std::ios::binary);
            std::string line;
            std::getline(in, line);
            final_csv << line << ",converged\n";
            while (std::getline(in, line))
            {
                const auto c1 = line.find(',');
                const int episode = std::stoi(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1));
                const bool conv = r.convergence_episode && episode >= *r.convergence_episode;
                final_csv << line << ',' << (conv ? 1 : 0) << '\n';
            }
        }
        fs::remove(metrics_tmp);

        write_text(out / "eval.csv", eval_csv(cfg, r.evals));
        write_text(out / "summary.json", summary_json(cfg, r));
        if (opts.checkpoint)
            write_text(out / "checkpoint.json", checkpoint_json(cfg, cfg.episodes, sys));
        if (opts.timing)
        {
            ojson j;
            double total = 0.0;
            for (double w : r.wall_per_episode)
                total += w;
            j["wall_clock_total_s"] = total;
            j["wall_clock_per_episode_s"] = total / static_cast<double>(r.wall_per_episode.size());
            j["episodes"] = r.wall_per_episode;
            write_text(out / "timing.json", j.dump(2) + "\n");
        }
        return r;
    }

    RunResult evaluate_checkpoint(const std::string &checkpoint_path, const std::string &out_dir)
    {
        ojson j;
        try
        {
            j = ojson::parse(read_text(checkpoint_path));
        }
        catch (const ojson::exception &e)
        {
            throw ConfigError("checkpoint '" + checkpoint_path + "' is not valid JSON: " + e.what());
        }
        if (j.value("format", "") != "cfxl-checkpoint")
            throw ConfigError("'" + checkpoint_path + "' is not a cfxl checkpoint");
        if (j.value("version", 0) != kCheckpointVersion)
            throw ConfigError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));

        const ExperimentConfig cfg = parse_config(j.at("config").get<std::string>());
        const Setup setup = build_setup(cfg);
        env::Environment env(setup.env_cfg, setup.world);
        dlpc::PowerControlSystem sys(env, setup.system, cfg.seed);
        const auto &layers = j.at("layers");
        restore_layer(layers.at(0), sys.layer1());
        if (sys.layer2())
            restore_layer(layers.at(1), *sys.layer2());

        RunResult r;
        r.config_hash = config_hash(cfg);
        r.seed = cfg.seed;
        r.reference_sum_se = setup.reference_sum_se;
        r.reward_scale = setup.reward_scale;
        r.fractional_sum_se = fractional_sum(cfg, env);
        r.final_eval = greedy_eval(sys, env, cfg, j.at("episodes_completed").get<int>());
        r.evals.push_back(r.final_eval);
        if (!out_dir.empty())
        {
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "eval.csv", eval_csv(cfg, r.evals));
            write_text(fs::path(out_dir) / "summary.json", summary_json(cfg, r));
        }
        return r;
    }

    std::string simulate(const ExperimentConfig &cfg, const std::string &out_dir, int mc_draws)
    {
        const Setup setup = build_setup(cfg);
        env::Environment env(setup.env_cfg, setup.world);
        const auto &ec = env.config();
        const se::StatsGrid grid = env.stats_grid();

        ojson j;
        j["config_hash"] = config_hash(cfg);
        j["seed"] = cfg.seed;
        j["wavelength_m"] = ec.channel.wavelength;
        auto points = [](const std::vector<Vec3> &v) {
            ojson a = ojson::array();
            for (const auto &p : v)
                a.push_back({p.x(), p.y(), p.z()});
            return a;
        };
        j["bs_positions"] = points(env.world().bs_positions);
        j["ue_positions"] = points(env.world().ue_positions);
        const auto &st = grid.front().front();
        j["lattice"] = {{"bs_points", st.u_r.cols()}, {"ue_points", st.u_s.cols()}};
        const Eigen::MatrixXd beta = env.beta_matrix();
        ojson jb = ojson::array();
        for (Eigen::Index m = 0; m < beta.rows(); ++m)
            jb.push_back(vec_json(beta.row(m).transpose()));
        j["beta"] = jb;

        auto report = [&](const Eigen::VectorXd &p, const std::string &stream) {
            const auto powers = uniform_powers(ec, p);
            const se::SeReport closed = env.evaluate(powers);
            se::MonteCarloOptions mc;
            mc.n_draws = mc_draws;
            mc.lsf = ec.lsf;
            const se::SeReport sim = se::se_monte_carlo(grid, powers, ec.noise_power, derive_seed(cfg.seed, stream), mc);
            return ojson{{"powers_w", vec_json(p)},
                         {"closed_form", {{"per_ue", vec_json(closed.per_ue)}, {"sum", closed.sum}}},
                         {"monte_carlo", {{"per_ue", vec_json(sim.per_ue)}, {"sum", sim.sum}, {"draws", mc_draws}}},
                         {"throughput_mbps", closed.sum * cfg.bandwidth_mhz}};
        };
        j["full_power"] = report(Eigen::VectorXd::Constant(cfg.num_ue, ec.p_max), "simulate.full");
        j["fractional"] = report(fractional_baseline(env.observe_layer1(), cfg.fractional_exponent, ec.p_max),
                                 "simulate.fractional");
        const std::string text = j.dump(2) + "\n";
        if (!out_dir.empty())
        {
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "simulate.json", text);
        }
        return text;
    }

    std::string sweep_axis_key(const std::string &axis)
    {
        if (axis == "ns_row")
            return "system.ue_antennas_h";
        if (axis == "nr_row")
            return "system.bs_antennas_h";
        if (axis == "spacing_s")
            return "system.ue_spacing_wl";
        if (axis == "spacing_r")
            return "system.bs_spacing_wl";
        if (axis == "K")
            return "system.num_ue";
        if (axis == "M")
            return "system.num_bs";
        if (axis == "seed" || axis == "seeds")
            return "seed";
        return axis;
    }

    std::vector<std::string> parse_values(const std::string &text)
    {
        std::vector<std::string> out;
        const auto colon = text.find(':');
        if (colon != std::string::npos && text.find(',') == std::string::npos)
        {
            long a = 0, b = 0;
            try
            {
                a = std::stol(text.substr(0, colon));
                b = std::stol(text.substr(colon + 1));
            }
            catch (const std::exception &)
            {
                throw ConfigError("sweep values: bad range '" + text + "'");
            }
            if (b < a)
                throw ConfigError("sweep values: empty range '" + text + "'");
            for (long v = a; v <= b; ++v)
                out.push_back(std::to_string(v));
            return out;
        }
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty())
                out.push_back(item);
        if (out.empty())
            throw ConfigError("sweep values: nothing to sweep");
        return out;
    }

    std::vector<SweepPoint> sweep(const ExperimentConfig &base, const std::string &axis,
                                  const std::vector<std::string> &values, const std::string &out_dir, int workers)
    {
        const std::string key = sweep_axis_key(axis);
        std::vector<SweepPoint> points(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            points[i].axis = axis;
            points[i].value = values[i];
            points[i].cfg = base;
            set_key(points[i].cfg, key, values[i]);
            points[i].cfg.validate();
        }

        auto run_point = [&](std::size_t i) {
            RunOptions ro;
            if (!out_dir.empty())
            {
                char name[32];
                std::snprintf(name, sizeof name, "point_%03zu", i);
                ro.out_dir = (fs::path(out_dir) / name).string();
            }
            points[i].result = run_experiment(points[i].cfg, ro);
        };
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < points.size(); i = next++)
                run_point(i);
        };
        const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(points.size())));
        std::vector<std::future<void>> futs;
        for (int w = 1; w < n_workers; ++w)
            futs.push_back(std::async(std::launch::async, worker));
        worker();
        for (auto &f : futs)
            f.get();

        if (!out_dir.empty())
        {
            std::ostringstream os;
            os << "point,axis,value,seed,config_hash,final_sum_se,mc_sum_se_mean,mc_sum_se_std,fractional_sum_se,"
                  "reference_sum_se,convergence_episode\n";
            for (std::size_t i = 0; i < points.size(); ++i)
            {
                const auto &r = points[i].result;
                os << i << ',' << axis << ',' << points[i].value << ',' << r.seed << ',' << r.config_hash << ','
                   << num(r.final_eval.sum_se) << ',' << num(r.final_eval.mc_mean) << ','
                   << num(r.final_eval.mc_std) << ',' << num(r.fractional_sum_se) << ','
                   << num(r.reference_sum_se) << ','
                   << (r.convergence_episode ? std::to_string(*r.convergence_episode) : std::string()) << '\n';
            }
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "sweep.csv", os.str());
        }
        return points;
    }
} // namespace cfxl::harness
