#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "accerl/accept.hpp"
#include "accerl/bench.hpp"
#include "accerl/config.hpp"
#include "accerl/runtime.hpp"

namespace {

// 0 success, 1 runtime failure, 2 config error
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::vector<int> parse_input_shape(const std::string& s) {
    std::vector<int> shape;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, 'x')) shape.push_back(std::stoi(item));
    if (shape.empty()) throw accerl::Error("empty input shape (want CxHxW or D)");
    return shape;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    accerl::CliConfig cli;
    try {
        if (!config_path.empty()) cli = accerl::parse_config_file(config_path);
        if (overrides.size() % 2 != 0)
            throw accerl::Error("overrides must come in --key value pairs");
        for (size_t i = 0; i < overrides.size(); i += 2) {
            std::string key = overrides[i];
            if (key.rfind("--", 0) == 0) key.erase(0, 2);
            cli.set(key, overrides[i + 1]);
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    accerl::RunConfig cfg;
    try {
        cfg = accerl::make_run_config(cli);
        cfg.learner.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        accerl::RunResult r = accerl::run_train(cfg);
        std::cout << "metrics: " << r.metrics_path << "\ncheckpoint: " << r.checkpoint_path
                  << "\nsummary: " << r.summary_path << "\nmean_episode_return "
                  << r.final_episode_return << "\n";
        if (!r.error.empty()) std::cerr << "worker failure: " << r.error << "\n";
        return r.exit_code == 0 ? kExitOk : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_eval(const std::string& checkpoint, const std::string& env_name, int episodes,
             bool greedy, uint64_t seed) {
    try {
        accerl::PolicySnapshot snap = accerl::load_snapshot(checkpoint);
        accerl::EnvConfig env_cfg;
        env_cfg.kind = env_name;
        auto env = accerl::make_env(env_cfg);
        if (env->observation_shape() != snap.spec.input_shape ||
            env->action_count() != snap.spec.action_count)
            throw accerl::Error("checkpoint shape does not match env '" + env_name + "'");
        accerl::EvalStats stats = accerl::evaluate_policy(snap, env_cfg, episodes, greedy, seed);
        std::cout << "return " << stats.mean << " +- " << stats.stddev << " over " << episodes
                  << " episodes\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "eval error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_bench(const std::string& arch, const std::string& input, const std::string& chain,
              int iters) {
    try {
        accerl::BenchResult r = accerl::run_bench(arch, parse_input_shape(input), iters, chain);
        std::cout << accerl::render_bench(r);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "bench error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_accept(const std::string& suite) {
    try {
        std::vector<std::string> names;
        bool all = suite.empty();
        if (!all) names = accerl::load_suite(suite);
        const int failed = accerl::run_acceptance(names, std::cout, all);
        return failed == 0 ? kExitOk : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "accept error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asynchronous actor-learner training with policy compression"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "run training from a key=value config");
    std::string config_path;
    std::vector<std::string> overrides;
    train->add_option("--config", config_path, "config file (key=value lines)");
    train->allow_extras();  // --key value overrides, validated against known keys

    auto* eval = app.add_subcommand("eval", "episodic return of a checkpoint");
    std::string checkpoint, env_name = "chain";
    int episodes = 100;
    bool greedy = false;
    uint64_t eval_seed = 1;
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--env", env_name);
    eval->add_option("--episodes", episodes);
    eval->add_flag("--greedy", greedy);
    eval->add_option("--seed", eval_seed);

    auto* bench = app.add_subcommand("bench", "per-inference latency of the execution variants");
    std::string arch = "Net3", input = "4x84x84", chain;
    int iters = 100;
    bench->add_option("--arch", arch);
    bench->add_option("--input", input, "input shape, e.g. 4x84x84 or 16");
    bench->add_option("--chain", chain, "extra compression chain variant");
    bench->add_option("--iters", iters);

    auto* accept = app.add_subcommand("accept", "run the acceptance suite");
    std::string suite;
    accept->add_option("--suite", suite, "case list file; omit to run everything");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*train) return cmd_train(config_path, train->remaining());
    if (*eval) return cmd_eval(checkpoint, env_name, episodes, greedy, eval_seed);
    if (*bench) return cmd_bench(arch, input, chain, iters);
    return cmd_accept(suite);
}
