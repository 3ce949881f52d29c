#include "costa/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace costa {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw IoError("malformed number '" + s + "'");
    return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

/// Parses a headered numeric CSV into rows.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, const std::string& header) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != header) {
        throw IoError("unexpected header in '" + path.string() + "'");
    }
    const std::size_t width = split(header).size();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != width) throw IoError("row width mismatch in '" + path.string() + "'");
        std::vector<double> row;
        row.reserve(width);
        for (const auto& c : cells) row.push_back(parse_double(c));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string numbered_header(const char* prefix, int n) {
    std::string h;
    for (int i = 1; i <= n; ++i) {
        if (i > 1) h += ',';
        h += prefix + std::to_string(i);
    }
    return h;
}

std::string trajectory_header() {
    return "t," + numbered_header("x", kStateDim) + "," + numbered_header("u", kInputDim) + ",g1";
}

std::string dataset_header() { return numbered_header("f", kFeatureDim) + "," + numbered_header("t", kStateDim); }

template <typename Derived>
Json to_array(const Eigen::MatrixBase<Derived>& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_from_json(const Json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != static_cast<std::size_t>(N)) {
        throw IoError(std::string("field '") + key + "' must have " + std::to_string(N) + " entries");
    }
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace

std::string trajectory_csv(const Trajectory& t) {
    std::string out = trajectory_header() + "\n";
    for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
        out += format_double(static_cast<double>(k) * t.dt);
        for (int i = 0; i < kStateDim; ++i) out += "," + format_double(t.states(k, i));
        for (int i = 0; i < kInputDim; ++i) out += "," + format_double(t.inputs(k, i));
        out += "," + format_double(t.g1(k)) + "\n";
    }
    return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t) {
    write_text(path, trajectory_csv(t));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    const auto rows = read_numeric_csv(path, trajectory_header());
    if (rows.empty()) throw IoError("empty trajectory '" + path.string() + "'");
    Trajectory t;
    const auto n = static_cast<Eigen::Index>(rows.size());
    t.states.resize(n, kStateDim);
    t.inputs.resize(n, kInputDim);
    t.g1.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& r = rows[static_cast<std::size_t>(k)];
        for (int i = 0; i < kStateDim; ++i) t.states(k, i) = r[1 + static_cast<std::size_t>(i)];
        for (int i = 0; i < kInputDim; ++i) t.inputs(k, i) = r[1 + kStateDim + static_cast<std::size_t>(i)];
        t.g1(k) = r.back();
    }
    t.dt = n > 1 ? rows[1][0] - rows[0][0] : 1.0;
    if (!(t.dt > 0)) throw IoError("non-increasing time column in '" + path.string() + "'");
    return t;
}

Json norm_to_json(const NormStats& n) {
    Json j;
    j["feature_mean"] = to_array(n.feature_mean);
    j["feature_std"] = to_array(n.feature_std);
    j["target_mean"] = to_array(n.target_mean);
    j["target_std"] = to_array(n.target_std);
    j["state_std"] = to_array(n.state_std);
    j["target_kind"] = to_string(n.target_kind);
    return j;
}

NormStats norm_from_json(const Json& j) {
    NormStats n;
    n.feature_mean = fixed_from_json<kFeatureDim>(j, "feature_mean");
    n.feature_std = fixed_from_json<kFeatureDim>(j, "feature_std");
    n.target_mean = fixed_from_json<kStateDim>(j, "target_mean");
    n.target_std = fixed_from_json<kStateDim>(j, "target_std");
    n.state_std = fixed_from_json<kStateDim>(j, "state_std");
    n.target_kind = target_kind_from_string(j.at("target_kind").get<std::string>());
    return n;
}

void write_dataset(const std::filesystem::path& csv_path, const RegressionDataset& ds) {
    std::string out = dataset_header() + "\n";
    out.reserve(static_cast<std::size_t>(ds.size()) * 21 * 22);
    for (Eigen::Index c = 0; c < ds.size(); ++c) {
        for (int i = 0; i < kFeatureDim; ++i) {
            if (i > 0) out += ',';
            out += format_double(ds.features(i, c));
        }
        for (int i = 0; i < kStateDim; ++i) out += "," + format_double(ds.targets(i, c));
        out += '\n';
    }
    write_text(csv_path, out);
    auto sidecar = csv_path;
    write_json(sidecar.replace_extension(".json"), norm_to_json(ds.norm));
}

RegressionDataset read_dataset(const std::filesystem::path& csv_path) {
    auto sidecar = csv_path;
    RegressionDataset ds;
    ds.norm = norm_from_json(read_json(sidecar.replace_extension(".json")));
    const auto rows = read_numeric_csv(csv_path, dataset_header());
    const auto n = static_cast<Eigen::Index>(rows.size());
    ds.features.resize(kFeatureDim, n);
    ds.targets.resize(kStateDim, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& r = rows[static_cast<std::size_t>(c)];
        for (int i = 0; i < kFeatureDim; ++i) ds.features(i, c) = r[static_cast<std::size_t>(i)];
        for (int i = 0; i < kStateDim; ++i) ds.targets(i, c) = r[static_cast<std::size_t>(kFeatureDim + i)];
    }
    return ds;
}

Json train_config_to_json(const TrainConfig& c) {
    Json j;
    j["lambda"] = c.lambda;
    j["learning_rate"] = c.learning_rate;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["epsilon"] = c.epsilon;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["validation_fraction"] = c.validation_fraction;
    j["prune"] = c.prune;
    j["prune_threshold"] = c.prune_threshold;
    return j;
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    c.lambda = j.value("lambda", c.lambda);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.prune = j.value("prune", c.prune);
    c.prune_threshold = j.value("prune_threshold", c.prune_threshold);
    return c;
}

Json mlp_to_json(const MlpParameters<double>& p) {
    Json j;
    j["layer_sizes"] = p.layer_sizes;
    Json weights = Json::array();
    Json biases = Json::array();
    for (std::size_t l = 0; l < p.layers(); ++l) {
        Json w = Json::array();
        for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) w.push_back(p.weights[l](r, c));
        }
        weights.push_back(std::move(w));
        biases.push_back(to_array(p.biases[l]));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["norm_stats"] = norm_to_json(p.norm);
    j["target_kind"] = to_string(p.target_kind());
    return j;
}

MlpParameters<double> mlp_from_json(const Json& j) {
    auto p = zero_mlp<double>(j.at("layer_sizes").get<std::vector<int>>());
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != p.layers() || biases.size() != p.layers()) throw IoError("model layer count mismatch");
    for (std::size_t l = 0; l < p.layers(); ++l) {
        auto& w = p.weights[l];
        if (weights[l].size() != static_cast<std::size_t>(w.size())) throw IoError("model weight size mismatch");
        std::size_t idx = 0;
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = weights[l][idx++].get<double>();
        }
        if (biases[l].size() != static_cast<std::size_t>(p.biases[l].size())) {
            throw IoError("model bias size mismatch");
        }
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) {
            p.biases[l](i) = biases[l][static_cast<std::size_t>(i)].get<double>();
        }
    }
    p.norm = norm_from_json(j.at("norm_stats"));
    if (j.contains("target_kind")) p.norm.target_kind = target_kind_from_string(j.at("target_kind"));
    check_shapes(p);
    return p;
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json report_to_json(const ForecastReport& r) {
    Json j;
    j["horizons"] = r.horizons;
    j["trajectories"] = r.trajectories;
    Json types = Json::array();
    for (const auto& t : r.types) {
        Json jt;
        jt["model_type"] = t.type;
        jt["instances"] = t.instances;
        Json hs = Json::array();
        for (const auto& h : t.horizons) {
            Json jh;
            jh["horizon"] = h.horizon;
            jh["n"] = h.n;
            jh["n_valid"] = h.stats.count;
            jh["blowup_count"] = h.blowup_count;
            jh["mean"] = number_or_null(h.stats.mean);
            jh["median"] = number_or_null(h.stats.median);
            jh["q1"] = number_or_null(h.stats.q1);
            jh["q3"] = number_or_null(h.stats.q3);
            jh["min"] = number_or_null(h.stats.min);
            jh["max"] = number_or_null(h.stats.max);
            jh["values"] = h.values;
            hs.push_back(std::move(jh));
        }
        jt["horizons"] = std::move(hs);
        types.push_back(std::move(jt));
    }
    j["model_types"] = std::move(types);
    return j;
}

std::string runs_csv(const ForecastReport& r) {
    std::string out = "model_type,instance,trajectory,horizon,an_rfmse,blowup\n";
    for (const auto& run : r.runs) {
        out += run.type + "," + std::to_string(run.instance) + "," + std::to_string(run.trajectory) + "," +
               std::to_string(run.horizon) + "," + format_double(run.an_rfmse) + "," + (run.blowup ? "1" : "0") +
               "\n";
    }
    return out;
}

}  // namespace costa
