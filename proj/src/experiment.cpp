#include "costa/experiment.hpp"

#include "costa/parallel.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace costa {

namespace fs = std::filesystem;

ModelTypeConfig model_type_from_name(const std::string& name) {
    const auto sep = name.find('_');
    if (sep == std::string::npos) throw ConfigError("model type '" + name + "' must be <ddm|costa>_<dense|sparse>");
    ModelTypeConfig t;
    t.name = name;
    t.kind = model_kind_from_string(name.substr(0, sep));
    const std::string density = name.substr(sep + 1);
    if (t.kind == ModelKind::PBM) throw ConfigError("the PBM has no trained instances");
    if (density == "sparse") {
        t.sparse = true;
    } else if (density != "dense") {
        throw ConfigError("model type '" + name + "' must end in _dense or _sparse");
    }
    return t;
}

// ============================================================================
// Config serialization
// ============================================================================

namespace {

Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Interval interval_from(const Json& j, const char* key, Interval fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw ConfigError(std::string("'") + key + "' must be [lo, hi]");
    return {a[0].get<double>(), a[1].get<double>()};
}

template <typename T>
void read_field(const Json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

Json channel_json(const FeedChannel& ch) {
    Json j;
    j["gain"] = ch.gain;
    j["setpoint"] = ch.setpoint;
    j["noise"] = interval_json(ch.noise);
    j["period"] = ch.period;
    j["max_rate"] = std::isfinite(ch.max_rate) ? Json(ch.max_rate) : Json(nullptr);
    return j;
}

FeedChannel channel_from(const Json& j, FeedChannel ch) {
    read_field(j, "gain", ch.gain);
    read_field(j, "setpoint", ch.setpoint);
    ch.noise = interval_from(j, "noise", ch.noise);
    read_field(j, "period", ch.period);
    if (j.contains("max_rate")) {
        ch.max_rate = j.at("max_rate").is_null() ? std::numeric_limits<double>::infinity()
                                                 : j.at("max_rate").get<double>();
    }
    return ch;
}

#define COSTA_PLANT_FIELDS(X)                                                                                     \
    X(k0) X(k1) X(k2) X(k3) X(k4) X(k5) X(k6) X(k7) X(k8) X(k9) X(k10) X(k11) X(k12) X(k13) X(k14) X(k15) X(k16) \
        X(k17) X(k18) X(alpha) X(beta) X(c_x2_crit) X(g1_ablated) X(ledge_wall_area)

Json plant_json(const PlantConstants<double>& k) {
    Json j;
#define X(name) j[#name] = k.name;
    COSTA_PLANT_FIELDS(X)
#undef X
    return j;
}

PlantConstants<double> plant_from(const Json& j, PlantConstants<double> k) {
#define X(name) read_field(j, #name, k.name);
    COSTA_PLANT_FIELDS(X)
#undef X
    return k;
}

Json init_json(const InitRanges& r) {
    Json j;
    j["x1"] = interval_json(r.x1);
    j["c_x2"] = interval_json(r.c_x2);
    j["c_x3"] = interval_json(r.c_x3);
    j["x4"] = interval_json(r.x4);
    j["x5"] = interval_json(r.x5);
    j["x6"] = interval_json(r.x6);
    j["x7"] = interval_json(r.x7);
    j["x8"] = interval_json(r.x8);
    j["x6_floor"] = r.x6_floor;
    j["superheat_only"] = r.superheat_only;
    return j;
}

InitRanges init_from(const Json& j, InitRanges r) {
    r.x1 = interval_from(j, "x1", r.x1);
    r.c_x2 = interval_from(j, "c_x2", r.c_x2);
    r.c_x3 = interval_from(j, "c_x3", r.c_x3);
    r.x4 = interval_from(j, "x4", r.x4);
    r.x5 = interval_from(j, "x5", r.x5);
    r.x6 = interval_from(j, "x6", r.x6);
    r.x7 = interval_from(j, "x7", r.x7);
    r.x8 = interval_from(j, "x8", r.x8);
    read_field(j, "x6_floor", r.x6_floor);
    read_field(j, "superheat_only", r.superheat_only);
    return r;
}

Json policy_json(const InputPolicyConfig& p) {
    Json j;
    j["u1"] = channel_json(p.u1);
    j["u3"] = channel_json(p.u3);
    j["u4"] = channel_json(p.u4);
    j["u2_nominal"] = p.u2_nominal;
    j["u2_amplitude"] = interval_json(p.u2_amplitude);
    j["u5_nominal"] = p.u5_nominal;
    j["u5_amplitude"] = interval_json(p.u5_amplitude);
    j["hold_min"] = p.hold_min;
    j["hold_max"] = p.hold_max;
    return j;
}

InputPolicyConfig policy_from(const Json& j, InputPolicyConfig p) {
    if (j.contains("u1")) p.u1 = channel_from(j.at("u1"), p.u1);
    if (j.contains("u3")) p.u3 = channel_from(j.at("u3"), p.u3);
    if (j.contains("u4")) p.u4 = channel_from(j.at("u4"), p.u4);
    read_field(j, "u2_nominal", p.u2_nominal);
    p.u2_amplitude = interval_from(j, "u2_amplitude", p.u2_amplitude);
    read_field(j, "u5_nominal", p.u5_nominal);
    p.u5_amplitude = interval_from(j, "u5_amplitude", p.u5_amplitude);
    read_field(j, "hold_min", p.hold_min);
    read_field(j, "hold_max", p.hold_max);
    return p;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string indexed_name(const char* prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d.csv", prefix, index);
    return buf;
}

}  // namespace

Json config_to_json(const ExperimentConfig& c) {
    Json j;
    j["seed"] = c.seed;
    j["corpus"] = {{"n_train", c.corpus.n_train}, {"n_test", c.corpus.n_test}, {"steps", c.corpus.steps},
                   {"dt", c.corpus.dt}};
    j["plant"] = plant_json(c.corpus.consts);
    j["init_ranges"] = init_json(c.corpus.init);
    j["input_policy"] = policy_json(c.corpus.policy);
    Json t = train_config_to_json(c.training);
    t.erase("lambda");
    t.erase("seed");
    t["dense_lambda"] = c.dense_lambda;
    t["sparse_lambda"] = c.sparse_lambda;
    j["training"] = std::move(t);
    j["layer_sizes"] = c.layer_sizes;
    j["model_types"] = c.model_types;
    j["instances"] = c.instances;
    j["horizons"] = c.horizons;
    j["include_pbm"] = c.include_pbm;
    return j;
}

ExperimentConfig config_from_json(const Json& j, ExperimentConfig c) {
    read_field(j, "seed", c.seed);
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    if (j.contains("corpus")) {
        const auto& cj = j.at("corpus");
        read_field(cj, "n_train", c.corpus.n_train);
        read_field(cj, "n_test", c.corpus.n_test);
        read_field(cj, "steps", c.corpus.steps);
        read_field(cj, "dt", c.corpus.dt);
    }
    if (j.contains("plant")) c.corpus.consts = plant_from(j.at("plant"), c.corpus.consts);
    if (j.contains("init_ranges")) c.corpus.init = init_from(j.at("init_ranges"), c.corpus.init);
    if (j.contains("input_policy")) c.corpus.policy = policy_from(j.at("input_policy"), c.corpus.policy);
    if (j.contains("training")) {
        const auto& tj = j.at("training");
        read_field(tj, "learning_rate", c.training.learning_rate);
        read_field(tj, "beta1", c.training.beta1);
        read_field(tj, "beta2", c.training.beta2);
        read_field(tj, "epsilon", c.training.epsilon);
        read_field(tj, "epochs", c.training.epochs);
        read_field(tj, "batch_size", c.training.batch_size);
        read_field(tj, "validation_fraction", c.training.validation_fraction);
        read_field(tj, "prune", c.training.prune);
        read_field(tj, "prune_threshold", c.training.prune_threshold);
        read_field(tj, "dense_lambda", c.dense_lambda);
        read_field(tj, "sparse_lambda", c.sparse_lambda);
    }
    read_field(j, "layer_sizes", c.layer_sizes);
    read_field(j, "model_types", c.model_types);
    read_field(j, "instances", c.instances);
    read_field(j, "horizons", c.horizons);
    read_field(j, "include_pbm", c.include_pbm);
    c.corpus.seed = c.seed;
    return c;
}

void validate(const ExperimentConfig& c) {
    if (c.corpus.seed != c.seed) throw ConfigError("corpus seed must equal the master seed");
    if (c.corpus.n_train < 1 || c.corpus.n_test < 1) throw ConfigError("corpus sizes must be at least 1");
    if (c.corpus.steps < 1) throw ConfigError("steps must be at least 1");
    if (!(c.corpus.dt > 0)) throw ConfigError("dt must be positive");
    if (c.instances < 1) throw ConfigError("instances must be at least 1");
    if (c.horizons.empty()) throw ConfigError("at least one horizon is required");
    for (const auto h : c.horizons) {
        if (h < 1 || h > c.corpus.steps) throw ConfigError("horizon " + std::to_string(h) + " outside [1, steps]");
    }
    if (c.layer_sizes.size() < 2 || c.layer_sizes.front() != kFeatureDim || c.layer_sizes.back() != kStateDim) {
        throw ConfigError("layer sizes must start at 13 and end at 8");
    }
    for (const auto& t : c.model_types) (void)model_type_from_name(t);
    validate(c.corpus.init);
    validate(c.corpus.policy);
}

TrainConfig instance_train_config(const ExperimentConfig& c, const ModelTypeConfig& type, int instance) {
    TrainConfig t = c.training;
    t.lambda = type.sparse ? c.sparse_lambda : c.dense_lambda;
    Rng r = make_stream(c.seed, fnv1a(type.name), static_cast<std::uint64_t>(instance), StreamRole::Training);
    t.seed = r();
    return t;
}

// ============================================================================
// Layout
// ============================================================================

fs::path train_trajectory_path(const ExperimentConfig& c, int index) {
    return c.out_dir / "data" / "train" / indexed_name("traj", index);
}

fs::path test_trajectory_path(const ExperimentConfig& c, int index) {
    return c.out_dir / "data" / "test" / indexed_name("traj", index);
}

fs::path dataset_path(const ExperimentConfig& c, TargetKind kind) {
    return c.out_dir / "data" / ("dataset_" + to_string(kind) + ".csv");
}

fs::path model_path(const ExperimentConfig& c, const std::string& type, int instance) {
    return c.out_dir / "models" / (type + "_" + std::to_string(instance) + ".json");
}

fs::path report_path(const ExperimentConfig& c) { return c.out_dir / "report" / "report.json"; }
fs::path runs_path(const ExperimentConfig& c) { return c.out_dir / "report" / "runs.csv"; }
fs::path plots_dir(const ExperimentConfig& c) { return c.out_dir / "plots"; }

// ============================================================================
// Commands
// ============================================================================

namespace {

void echo_config(const ExperimentConfig& c, const fs::path& dir) { write_json(dir / "config.json", config_to_json(c)); }

TargetKind target_kind_for(ModelKind kind) {
    return kind == ModelKind::CoSTA ? TargetKind::Residual : TargetKind::StateDerivative;
}

void require_files(const std::vector<fs::path>& paths, const std::string& what) {
    std::string missing;
    for (const auto& p : paths) {
        if (!fs::exists(p)) missing += "\n  " + p.string();
    }
    if (!missing.empty()) throw IoError("missing " + what + ":" + missing);
}

Json model_json(const ExperimentConfig& c, const ModelTypeConfig& type, int instance, const TrainConfig& tc,
                const TrainResult<double>& r) {
    Json j = mlp_to_json(r.params);
    j["model_type"] = type.name;
    j["kind"] = to_string(type.kind);
    j["instance"] = instance;
    j["master_seed"] = c.seed;
    j["train_config"] = train_config_to_json(tc);
    const auto sp = sparsity_metrics(r.params);
    j["sparsity"] = {{"l0", sp.l0}, {"l1", sp.l1}, {"pruned_fraction", r.pruned_fraction}};
    const EpochLoss last = r.history.empty() ? EpochLoss{0.0, 0.0} : r.history.back();
    j["final_losses"] = {{"train", last.train}, {"validation", last.validation}};
    Json hist = Json::array();
    for (const auto& e : r.history) hist.push_back({{"train", e.train}, {"validation", e.validation}});
    j["loss_history"] = std::move(hist);
    return j;
}

void train_one(const ExperimentConfig& c, const ModelTypeConfig& type, int instance, const RegressionDataset& ds) {
    const TrainConfig tc = instance_train_config(c, type, instance);
    const auto r = train_model(ds, tc, c.layer_sizes);
    write_json(model_path(c, type.name, instance), model_json(c, type, instance, tc, r));
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& c) {
    validate(c);
    const Corpus corpus = generate_corpus(c.corpus, c.workers);
    const std::size_t total = corpus.train.size() + corpus.test.size();
    parallel_for(total, c.workers, [&](std::size_t i) {
        if (i < corpus.train.size()) {
            write_trajectory_csv(train_trajectory_path(c, static_cast<int>(i)), corpus.train[i]);
        } else {
            const std::size_t j = i - corpus.train.size();
            write_trajectory_csv(test_trajectory_path(c, static_cast<int>(j)), corpus.test[j]);
        }
    });
    const std::vector<TargetKind> kinds{TargetKind::StateDerivative, TargetKind::Residual};
    parallel_for(kinds.size(), c.workers, [&](std::size_t i) {
        write_dataset(dataset_path(c, kinds[i]), build_dataset(corpus.train, kinds[i], c.corpus.consts));
    });
    echo_config(c, c.out_dir / "data");
}

void cmd_train(const ExperimentConfig& c, const std::string& type_name, int instance) {
    validate(c);
    const auto type = model_type_from_name(type_name);
    if (instance < 0) throw ConfigError("instance index must be non-negative");
    const auto path = dataset_path(c, target_kind_for(type.kind));
    require_files({path}, "dataset (run gen-data first)");
    train_one(c, type, instance, read_dataset(path));
    echo_config(c, c.out_dir / "models");
}

void cmd_train_all(const ExperimentConfig& c) {
    validate(c);
    std::vector<ModelTypeConfig> types;
    for (const auto& name : c.model_types) types.push_back(model_type_from_name(name));
    std::map<TargetKind, RegressionDataset> datasets;
    for (const auto& t : types) {
        const auto kind = target_kind_for(t.kind);
        if (datasets.count(kind)) continue;
        require_files({dataset_path(c, kind)}, "dataset (run gen-data first)");
        datasets.emplace(kind, read_dataset(dataset_path(c, kind)));
    }
    const auto per_type = static_cast<std::size_t>(c.instances);
    parallel_for(types.size() * per_type, c.workers, [&](std::size_t i) {
        const auto& t = types[i / per_type];
        train_one(c, t, static_cast<int>(i % per_type), datasets.at(target_kind_for(t.kind)));
    });
    echo_config(c, c.out_dir / "models");
}

ForecastReport cmd_eval(const ExperimentConfig& c) {
    validate(c);
    std::vector<fs::path> needed{dataset_path(c, TargetKind::StateDerivative)};
    needed.back().replace_extension(".json");
    for (int j = 0; j < c.corpus.n_test; ++j) needed.push_back(test_trajectory_path(c, j));
    for (const auto& t : c.model_types) {
        for (int i = 0; i < c.instances; ++i) needed.push_back(model_path(c, t, i));
    }
    require_files(needed, "artifacts");

    const NormStats norm = norm_from_json(read_json(needed.front()));
    std::vector<Trajectory> testset(static_cast<std::size_t>(c.corpus.n_test));
    parallel_for(testset.size(), c.workers,
                 [&](std::size_t j) { testset[j] = read_trajectory_csv(test_trajectory_path(c, static_cast<int>(j))); });

    std::vector<ModelEntry> models;
    if (c.include_pbm) models.push_back({"pbm", 0, make_pbm(c.corpus.consts)});
    for (const auto& name : c.model_types) {
        const auto type = model_type_from_name(name);
        for (int i = 0; i < c.instances; ++i) {
            auto net = mlp_from_json(read_json(model_path(c, name, i)));
            models.push_back({name, i,
                              type.kind == ModelKind::DDM ? make_ddm(std::move(net))
                                                          : make_costa(std::move(net), c.corpus.consts)});
        }
    }

    auto report = evaluate_experiment(models, testset, c.horizons, norm.state_std, c.workers);
    Json j = report_to_json(report);
    j["state_std"] = Json::array();
    for (int i = 0; i < kStateDim; ++i) j["state_std"].push_back(norm.state_std(i));
    j["config"] = config_to_json(c);
    write_json(report_path(c), j);
    write_text(runs_path(c), runs_csv(report));
    echo_config(c, c.out_dir / "report");
    return report;
}

void cmd_report(const ExperimentConfig& c) {
    require_files({report_path(c)}, "report (run eval first)");
    const Json r = read_json(report_path(c));
    std::string bars = "model_type,horizon,blowup_count,n\n";
    for (const auto& t : r.at("model_types")) {
        const auto type = t.at("model_type").get<std::string>();
        std::string violin = "horizon,an_rfmse\n";
        for (const auto& h : t.at("horizons")) {
            const auto horizon = h.at("horizon").get<Eigen::Index>();
            for (const auto& v : h.at("values")) {
                violin += std::to_string(horizon) + "," + format_double(v.get<double>()) + "\n";
            }
            bars += type + "," + std::to_string(horizon) + "," +
                    std::to_string(h.at("blowup_count").get<std::size_t>()) + "," +
                    std::to_string(h.at("n").get<std::size_t>()) + "\n";
        }
        write_text(plots_dir(c) / ("violin_" + type + ".csv"), violin);
    }
    write_text(plots_dir(c) / "blowups.csv", bars);
    echo_config(c, plots_dir(c));
}

void run_pipeline(const ExperimentConfig& c) {
    cmd_gen_data(c);
    cmd_train_all(c);
    (void)cmd_eval(c);
    cmd_report(c);
}

std::vector<ReportedSeries> read_plot_data(const ExperimentConfig& c) {
    std::vector<ReportedSeries> out;
    std::istringstream bars(read_text(plots_dir(c) / "blowups.csv"));
    std::string line;
    std::getline(bars, line);
    while (std::getline(bars, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ReportedSeries s;
        std::string cell;
        std::getline(ls, s.type, ',');
        std::getline(ls, cell, ',');
        s.horizon = std::stoll(cell);
        std::getline(ls, cell, ',');
        s.blowup_count = std::stoull(cell);
        std::getline(ls, cell, ',');
        s.n = std::stoull(cell);
        out.push_back(std::move(s));
    }
    for (auto& s : out) {
        std::istringstream violin(read_text(plots_dir(c) / ("violin_" + s.type + ".csv")));
        std::getline(violin, line);
        while (std::getline(violin, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (std::stoll(line.substr(0, comma)) == s.horizon) s.values.push_back(parse_double(line.substr(comma + 1)));
        }
    }
    return out;
}

}  // namespace costa
