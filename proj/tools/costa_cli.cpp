#include "costa/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<Eigen::Index> steps;
    std::optional<double> dt;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::optional<int> instances;
    std::vector<Eigen::Index> horizons;
    std::optional<std::string> out;
    std::optional<int> n_train;
    std::optional<int> n_test;
    std::size_t workers = 1;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--steps", o.steps, "steps per trajectory");
    cmd->add_option("--dt", o.dt, "sampling time (s)");
    cmd->add_option("--lambda", o.lambda, "L1 coefficient of sparse models");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--instances", o.instances, "instances per model type");
    cmd->add_option("--horizons", o.horizons, "forecast horizons in steps")->delimiter(',');
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--n-train", o.n_train, "training trajectories");
    cmd->add_option("--n-test", o.n_test, "test trajectories");
    cmd->add_option("--workers", o.workers, "worker threads (does not change outputs)");
}

costa::ExperimentConfig resolve(const Overrides& o) {
    costa::ExperimentConfig c;
    if (!o.config_path.empty()) c = costa::config_from_json(costa::read_json(o.config_path), c);
    if (o.seed) c.seed = *o.seed;
    if (o.steps) c.corpus.steps = *o.steps;
    if (o.dt) c.corpus.dt = *o.dt;
    if (o.lambda) c.sparse_lambda = *o.lambda;
    if (o.epochs) c.training.epochs = *o.epochs;
    if (o.instances) c.instances = *o.instances;
    if (!o.horizons.empty()) c.horizons = o.horizons;
    if (o.out) c.out_dir = *o.out;
    if (o.n_train) c.corpus.n_train = *o.n_train;
    if (o.n_test) c.corpus.n_test = *o.n_test;
    c.corpus.seed = c.seed;
    c.workers = o.workers;
    costa::validate(c);
    return c;
}

void print_summary(const costa::ForecastReport& r) {
    std::cout << "model_type,horizon,n,blowups,median,q1,q3\n";
    for (const auto& t : r.types) {
        for (const auto& h : t.horizons) {
            std::cout << t.type << ',' << h.horizon << ',' << h.n << ',' << h.blowup_count << ','
                      << costa::format_double(h.stats.median) << ',' << costa::format_double(h.stats.q1) << ','
                      << costa::format_double(h.stats.q3) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ablated aluminium-cell model, data-driven and corrective-source-term predictors"};
    app.require_subcommand(1);
    Overrides o;

    auto* gen = app.add_subcommand("gen-data", "simulate trajectories and build regression datasets");
    auto* train = app.add_subcommand("train", "train model instances");
    auto* eval = app.add_subcommand("eval", "rolling-forecast evaluation of all models");
    auto* report = app.add_subcommand("report", "write plot-ready CSV from the report");
    auto* run = app.add_subcommand("run", "gen-data, train, eval and report in sequence");
    auto* dump = app.add_subcommand("config", "print the resolved config as JSON");
    for (auto* cmd : {gen, train, eval, report, run, dump}) add_common(cmd, o);

    std::string model_type;
    std::optional<int> instance;
    train->add_option("--model-type", model_type, "one of ddm_dense, ddm_sparse, costa_dense, costa_sparse");
    train->add_option("--instance", instance, "instance index; all instances when omitted with --model-type");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto c = resolve(o);
        const auto start = std::chrono::steady_clock::now();
        if (*gen) {
            costa::cmd_gen_data(c);
        } else if (*train) {
            if (model_type.empty()) {
                costa::cmd_train_all(c);
            } else if (instance) {
                costa::cmd_train(c, model_type, *instance);
            } else {
                for (int i = 0; i < c.instances; ++i) costa::cmd_train(c, model_type, i);
            }
        } else if (*eval) {
            print_summary(costa::cmd_eval(c));
        } else if (*report) {
            costa::cmd_report(c);
        } else if (*run) {
            costa::cmd_gen_data(c);
            costa::cmd_train_all(c);
            const auto r = costa::cmd_eval(c);
            costa::cmd_report(c);
            print_summary(r);
        } else if (*dump) {
            std::cout << costa::config_to_json(c).dump(2) << '\n';
            return 0;
        }
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        std::cerr << "done in " << took.count() << " s, outputs under " << c.out_dir.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
