#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkernel/data.hpp"
#include "qkernel/format.hpp"
#include "qkernel/kernel.hpp"
#include "qkernel/model_io.hpp"
#include "qkernel/pipeline.hpp"
#include "qkernel/svm.hpp"

namespace qkernel {

// Fully-resolved experiment description. Serialized next to every output so
// runs are self-describing and reproducible byte for byte.
struct ExperimentConfig {
    // task
    std::string task = "svc"; // svc | svr

    // dataset
    std::string dataset_source = "csv"; // csv | financial
    std::string dataset_path;
    std::string dataset_test_path; // optional explicit test file
    std::string target_column = "target";
    std::vector<std::string> feature_columns; // empty = all non-target columns
    std::string label_a = "0";                // svc: mapped to +1
    std::string label_b = "1";                // svc: mapped to -1

    // preprocessing
    std::string scaler_method = "minmax"; // minmax | standard
    double scaler_lo = 0.0;
    double scaler_hi = std::numbers::pi;
    int pca_dim = 0; // 0 = off
    bool pca_standardize = false;
    std::optional<double> boxcox_xi;      // svr target transform
    std::string target_scaler = "minmax01"; // minmax01 | none
    double lambda = 1.0;

    // backend
    std::string backend_mode = "exact"; // exact | sampled | noisy
    long long shots = 500;
    double p1 = 0.0;
    double p2 = 0.0;
    std::uint64_t base_seed = 0;

    // model
    double C = 1.0;
    double epsilon = 0.1;
    double gamma = 0.25; // gaussian baseline only
    bool tune = false;
    bool score_on_test = false; // tune scores on the test kernel (leaks test data)
    double kkt_tolerance = 1e-3;
    bool clip_psd = false;

    // split
    long long n_train = 0; // 0 = take the file split as-is
    long long n_test = 0;
    std::uint64_t split_seed = 1;
    bool stratified = true;

    // denoise
    bool denoise = false;
    std::string reference_kernel; // path; empty = compute the exact reference

    // output
    std::string output_dir = "out";

    void validate() const {
        if (task != "svc" && task != "svr")
            throw std::invalid_argument("config: task must be svc or svr");
        if (dataset_source != "csv" && dataset_source != "financial")
            throw std::invalid_argument("config: dataset_source must be csv or financial");
        if (dataset_source == "csv" && dataset_path.empty())
            throw std::invalid_argument("config: dataset_path required for csv source");
        if (scaler_method != "minmax" && scaler_method != "standard")
            throw std::invalid_argument("config: scaler_method must be minmax or standard");
        if (!(scaler_hi > scaler_lo))
            throw std::invalid_argument("config: scaler range is empty");
        if (pca_dim < 0) throw std::invalid_argument("config: pca_dim must be >= 0");
        if (target_scaler != "minmax01" && target_scaler != "none")
            throw std::invalid_argument("config: target_scaler must be minmax01 or none");
        backend_mode_from_string(backend_mode);
        if (backend_mode != "exact" && shots < 1)
            throw std::invalid_argument("config: shots must be >= 1 for sampled backends");
        if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
            throw std::invalid_argument("config: error rates must lie in [0, 1]");
        if (!(C > 0.0)) throw std::invalid_argument("config: C must be positive");
        if (epsilon < 0.0) throw std::invalid_argument("config: epsilon must be >= 0");
        if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
        if (n_train < 0 || n_test < 0)
            throw std::invalid_argument("config: split sizes must be >= 0");
        if (output_dir.empty()) throw std::invalid_argument("config: output_dir required");
    }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{
        {"task", c.task},
        {"dataset",
         {{"source", c.dataset_source},
          {"path", c.dataset_path},
          {"test_path", c.dataset_test_path},
          {"target", c.target_column},
          {"features", c.feature_columns},
          {"label_a", c.label_a},
          {"label_b", c.label_b}}},
        {"preprocessing",
         {{"scaler", {{"method", c.scaler_method}, {"lo", c.scaler_lo}, {"hi", c.scaler_hi}}},
          {"pca_dim", c.pca_dim},
          {"pca_standardize", c.pca_standardize},
          {"boxcox_xi", c.boxcox_xi ? nlohmann::json(*c.boxcox_xi) : nlohmann::json(nullptr)},
          {"target_scaler", c.target_scaler},
          {"lambda", c.lambda}}},
        {"backend",
         {{"mode", c.backend_mode},
          {"shots", c.shots},
          {"p1", c.p1},
          {"p2", c.p2},
          {"base_seed", c.base_seed},
          {"estimator", c.backend_mode == "noisy" ? "trajectory" : "binomial"}}},
        {"model",
         {{"C", c.C},
          {"epsilon", c.epsilon},
          {"gamma", c.gamma},
          {"tune", c.tune},
          {"score_on_test", c.score_on_test},
          {"kkt_tolerance", c.kkt_tolerance},
          {"clip_psd", c.clip_psd}}},
        {"split",
         {{"n_train", c.n_train},
          {"n_test", c.n_test},
          {"seed", c.split_seed},
          {"stratified", c.stratified}}},
        {"denoise", {{"enabled", c.denoise}, {"reference", c.reference_kernel}}},
        {"output_dir", c.output_dir}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    const auto get = [](const nlohmann::json& obj, const char* key, auto& into) {
        if (obj.contains(key)) obj.at(key).get_to(into);
    };
    get(j, "task", c.task);
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        get(d, "source", c.dataset_source);
        get(d, "path", c.dataset_path);
        get(d, "test_path", c.dataset_test_path);
        get(d, "target", c.target_column);
        get(d, "features", c.feature_columns);
        get(d, "label_a", c.label_a);
        get(d, "label_b", c.label_b);
    }
    if (j.contains("preprocessing")) {
        const auto& p = j.at("preprocessing");
        if (p.contains("scaler")) {
            const auto& s = p.at("scaler");
            get(s, "method", c.scaler_method);
            get(s, "lo", c.scaler_lo);
            get(s, "hi", c.scaler_hi);
        }
        get(p, "pca_dim", c.pca_dim);
        get(p, "pca_standardize", c.pca_standardize);
        if (p.contains("boxcox_xi") && !p.at("boxcox_xi").is_null())
            c.boxcox_xi = p.at("boxcox_xi").get<double>();
        get(p, "target_scaler", c.target_scaler);
        get(p, "lambda", c.lambda);
    }
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        get(b, "mode", c.backend_mode);
        get(b, "shots", c.shots);
        get(b, "p1", c.p1);
        get(b, "p2", c.p2);
        get(b, "base_seed", c.base_seed);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        get(m, "C", c.C);
        get(m, "epsilon", c.epsilon);
        get(m, "gamma", c.gamma);
        get(m, "tune", c.tune);
        get(m, "score_on_test", c.score_on_test);
        get(m, "kkt_tolerance", c.kkt_tolerance);
        get(m, "clip_psd", c.clip_psd);
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        get(s, "n_train", c.n_train);
        get(s, "n_test", c.n_test);
        get(s, "seed", c.split_seed);
        get(s, "stratified", c.stratified);
    }
    if (j.contains("denoise")) {
        const auto& d = j.at("denoise");
        get(d, "enabled", c.denoise);
        get(d, "reference", c.reference_kernel);
    }
    get(j, "output_dir", c.output_dir);
}

inline std::string config_digest(const ExperimentConfig& c) {
    return to_hex(fnv1a64(nlohmann::json(c).dump()));
}

// ---------------------------------------------------------------------------
// Data preparation

struct PreparedData {
    Matrix x_train; // scaled, circuit-ready features
    Matrix x_test;
    std::vector<int> y_train_label;
    std::vector<int> y_test_label;
    std::vector<double> y_train; // regression targets on the model scale
    std::vector<double> y_test;
    int n_features = 0;
    std::size_t clamped_test_values = 0;
};

namespace detail {

inline Dataset load_configured_dataset(const ExperimentConfig& cfg, const std::string& path) {
    CsvSchema schema;
    schema.target_column = cfg.target_column;
    schema.feature_columns = cfg.feature_columns;
    schema.task = cfg.task == "svc" ? Task::Classification : Task::Regression;
    if (cfg.task == "svc")
        schema.label_map = std::map<std::string, int>{{cfg.label_a, 1}, {cfg.label_b, -1}};
    return load_csv_file(path, schema);
}

} // namespace detail

// Loads, splits, projects, and scales per the config. Feature scaling, PCA,
// and the target transform are fitted on the training rows only.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset train;
    Dataset test;
    if (cfg.dataset_source == "financial") {
        const auto fin = embedded_financial();
        train = fin.train;
        test = fin.test;
        if (cfg.n_train > 0 || cfg.n_test > 0) {
            if (cfg.n_train > 0) train = subsample(train, static_cast<std::size_t>(cfg.n_train),
                                                   cfg.split_seed);
            if (cfg.n_test > 0) test = subsample(test, static_cast<std::size_t>(cfg.n_test),
                                                 cfg.split_seed + 1);
        }
    } else if (!cfg.dataset_test_path.empty()) {
        train = detail::load_configured_dataset(cfg, cfg.dataset_path);
        test = detail::load_configured_dataset(cfg, cfg.dataset_test_path);
        if (cfg.n_train > 0) train = subsample(train, static_cast<std::size_t>(cfg.n_train),
                                               cfg.split_seed, cfg.task == "svc" && cfg.stratified);
        if (cfg.n_test > 0) test = subsample(test, static_cast<std::size_t>(cfg.n_test),
                                             cfg.split_seed + 1, cfg.task == "svc" && cfg.stratified);
    } else {
        const Dataset all = detail::load_configured_dataset(cfg, cfg.dataset_path);
        if (cfg.n_train <= 0 || cfg.n_test <= 0)
            throw std::invalid_argument(
                "config: single-file datasets need positive n_train and n_test");
        if (cfg.task == "svc" && cfg.stratified) {
            const auto split = stratified_split(all, static_cast<std::size_t>(cfg.n_train),
                                                static_cast<std::size_t>(cfg.n_test), cfg.split_seed);
            train = split.train;
            test = split.test;
        } else {
            const auto split = random_split(all, static_cast<std::size_t>(cfg.n_train),
                                            static_cast<std::size_t>(cfg.n_test), cfg.split_seed);
            train = split.train;
            test = split.test;
        }
    }
    if (cfg.task == "svc") {
        bool pos = false;
        bool neg = false;
        for (double v : train.y) (v >= 0.0 ? pos : neg) = true;
        if (!pos || !neg) throw data_error("split produced a single-class training set");
    }

    Matrix xtr = train.x;
    Matrix xte = test.x;
    if (cfg.pca_dim > 0) {
        const auto pca = pca_fit(xtr, static_cast<std::size_t>(cfg.pca_dim), cfg.pca_standardize);
        xtr = pca_apply(pca, xtr);
        xte = pca_apply(pca, xte);
    }
    const auto scaler =
        scaler_fit(xtr, cfg.scaler_method == "minmax" ? ScalerMethod::MinMax : ScalerMethod::Standard,
                   cfg.scaler_lo, cfg.scaler_hi);
    PreparedData out;
    out.x_train = scaler_apply(scaler, xtr);
    out.x_test = scaler_apply(scaler, xte, &out.clamped_test_values);
    out.n_features = static_cast<int>(out.x_train.cols);

    if (cfg.task == "svc") {
        out.y_train_label = train.labels();
        out.y_test_label = test.labels();
    } else {
        std::vector<double> ytr = train.y;
        std::vector<double> yte = test.y;
        if (cfg.boxcox_xi) {
            ytr = boxcox(ytr, *cfg.boxcox_xi);
            yte = boxcox(yte, *cfg.boxcox_xi);
        }
        if (cfg.target_scaler == "minmax01") {
            Matrix col(ytr.size(), 1);
            for (std::size_t i = 0; i < ytr.size(); ++i) col(i, 0) = ytr[i];
            const auto ysc = scaler_fit(col, ScalerMethod::MinMax, 0.0, 1.0);
            const auto apply = [&](std::vector<double>& y) {
                Matrix q(y.size(), 1);
                for (std::size_t i = 0; i < y.size(); ++i) q(i, 0) = y[i];
                const Matrix s = scaler_apply(ysc, q);
                for (std::size_t i = 0; i < y.size(); ++i) y[i] = s(i, 0);
            };
            apply(ytr);
            // test targets are transformed with the train-fitted map but not
            // clamped: metrics must see genuine out-of-range targets
            for (auto& v : yte)
                v = ysc.spread[0] > 0.0 ? (v - ysc.center[0]) / ysc.spread[0] : 0.5;
        }
        out.y_train = std::move(ytr);
        out.y_test = std::move(yte);
    }
    return out;
}

inline KernelBackend backend_from_config(const ExperimentConfig& cfg, int n_features,
                                         std::uint64_t seed_offset = 0) {
    KernelBackend backend;
    backend.mode = backend_mode_from_string(cfg.backend_mode);
    backend.spec = FeatureMapSpec{n_features, cfg.lambda};
    if (backend.mode != BackendMode::Exact)
        backend.plan = ShotPlan{cfg.shots, cfg.base_seed + seed_offset};
    if (backend.mode == BackendMode::Noisy) backend.noise = NoiseParams{cfg.p1, cfg.p2};
    backend.validate();
    return backend;
}

// ---------------------------------------------------------------------------
// Output helpers

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open for writing: " + path);
    f << text;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline std::string file_digest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot reopen for digest: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return to_hex(fnv1a64(os.str()));
}

inline void ensure_output_dir(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    write_json_file(cfg.output_dir + "/config.json", nlohmann::json(cfg));
}

} // namespace detail

// ---------------------------------------------------------------------------
// kernel: write the train Gram and train-test cross matrices

struct KernelCommandResult {
    std::string train_path;
    std::string cross_path;
    unsigned long long train_total_shots = 0;
    unsigned long long cross_total_shots = 0;
};

inline KernelCommandResult cmd_kernel(const ExperimentConfig& cfg) {
    const PreparedData data = prepare_data(cfg);
    const KernelBackend backend = backend_from_config(cfg, data.n_features);
    const KernelMatrix ktrain = gram(data.x_train, backend);
    const CrossKernelMatrix kcross = cross(data.x_test, data.x_train, backend);

    detail::ensure_output_dir(cfg);
    KernelCommandResult res;
    res.train_path = cfg.output_dir + "/train_kernel.csv";
    res.cross_path = cfg.output_dir + "/cross_kernel.csv";
    res.train_total_shots = ktrain.meta.total_shots;
    res.cross_total_shots = kcross.meta.total_shots;
    save_kernel_csv_file(ktrain, res.train_path);
    save_kernel_csv_file(kcross, res.cross_path);

    detail::write_json_file(cfg.output_dir + "/kernel_meta.json",
                            {{"config_digest", config_digest(cfg)},
                             {"train",
                              {{"path", "train_kernel.csv"},
                               {"total_shots", ktrain.meta.total_shots},
                               {"digest", detail::file_digest(res.train_path)}}},
                             {"cross",
                              {{"path", "cross_kernel.csv"},
                               {"total_shots", kcross.meta.total_shots},
                               {"digest", detail::file_digest(res.cross_path)}}},
                             {"clamped_test_values", data.clamped_test_values}});
    return res;
}

// ---------------------------------------------------------------------------
// train-eval: kernels, optional denoising, optional tuning, report

struct TrainEvalResult {
    double train_score = 0.0; // accuracy or rmse
    double test_score = 0.0;
    double r2 = 0.0;         // svr only
    std::size_t n_sv = 0;
    std::optional<double> alignment_vs_reference;
    double best_C = 0.0;
    double best_epsilon = 0.0; // svr only
    std::optional<std::size_t> denoise_rank;
};

namespace detail {

inline Matrix slice(const Matrix& k, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = k(rows[i], cols[j]);
    return out;
}

// Deterministic tuning split over training indices; classification keeps the
// classes balanced across both parts.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
tuning_split(std::size_t m, const std::vector<int>* labels, std::uint64_t seed) {
    const std::size_t n_val = std::max<std::size_t>(2, m / 4);
    Rng rng(mix_seed(seed, 0x74756e65ULL)); // "tune"
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    if (labels) {
        std::vector<std::size_t> pos;
        std::vector<std::size_t> neg;
        for (std::size_t i = 0; i < m; ++i) ((*labels)[i] > 0 ? pos : neg).push_back(i);
        for (std::size_t i = pos.size(); i > 1; --i) std::swap(pos[i - 1], pos[rng.next_below(i)]);
        for (std::size_t i = neg.size(); i > 1; --i) std::swap(neg[i - 1], neg[rng.next_below(i)]);
        const std::size_t vp = std::max<std::size_t>(1, n_val / 2);
        const std::size_t vn = std::max<std::size_t>(1, n_val - vp);
        if (vp >= pos.size() || vn >= neg.size())
            throw std::invalid_argument("tuning split: class too small to hold out validation");
        std::vector<std::size_t> val(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(vp));
        val.insert(val.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(vn));
        std::vector<std::size_t> fit(pos.begin() + static_cast<std::ptrdiff_t>(vp), pos.end());
        fit.insert(fit.end(), neg.begin() + static_cast<std::ptrdiff_t>(vn), neg.end());
        std::sort(val.begin(), val.end());
        std::sort(fit.begin(), fit.end());
        return {fit, val};
    }
    for (std::size_t i = m; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
    std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(val.begin(), val.end());
    std::sort(fit.begin(), fit.end());
    return {fit, val};
}

inline std::vector<std::size_t> iota_vec(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

struct EvaluatedKernels {
    Matrix train;          // possibly denoised
    Matrix cross;          // possibly denoised
    KernelMeta train_meta;
    KernelMeta cross_meta;
    std::optional<double> alignment_vs_reference;
    std::optional<std::size_t> denoise_rank;
};

// Computes train/cross kernels for the configured backend; when denoising is
// on, reconstructs the train kernel at the alignment-optimal rank (the cross
// kernel gets the SVD truncation at the same rank).
inline EvaluatedKernels evaluate_kernels(const ExperimentConfig& cfg, const PreparedData& data,
                                         std::uint64_t seed_offset = 0) {
    const KernelBackend backend = backend_from_config(cfg, data.n_features, seed_offset);
    const KernelMatrix ktrain = gram(data.x_train, backend);
    const CrossKernelMatrix kcross = cross(data.x_test, data.x_train, backend);

    EvaluatedKernels out;
    out.train = ktrain.entries;
    out.cross = kcross.entries;
    out.train_meta = ktrain.meta;
    out.cross_meta = kcross.meta;

    const bool want_reference = cfg.denoise || backend.mode != BackendMode::Exact;
    Matrix reference;
    if (cfg.denoise && !cfg.reference_kernel.empty()) {
        reference = load_kernel_csv_file(cfg.reference_kernel).entries;
    } else if (want_reference && backend.mode != BackendMode::Exact) {
        ExperimentConfig exact_cfg = cfg;
        exact_cfg.backend_mode = "exact";
        const KernelBackend exact = backend_from_config(exact_cfg, data.n_features);
        reference = gram(data.x_train, exact).entries;
    }
    if (reference.rows > 0) out.alignment_vs_reference = alignment(reference, out.train);

    if (cfg.denoise) {
        if (reference.rows == 0) reference = out.train;
        const RankSelection sel = select_rank(out.train, reference);
        out.denoise_rank = sel.r_star;
        out.train = low_rank_reconstruct(out.train, sel.r_star, cfg.clip_psd);
        if (sel.r_star <= std::min(out.cross.rows, out.cross.cols))
            out.cross = svd_low_rank(out.cross, sel.r_star);
    }
    return out;
}

} // namespace detail

inline TrainEvalResult run_train_eval(const ExperimentConfig& cfg, const PreparedData& data,
                                      std::uint64_t seed_offset = 0) {
    const detail::EvaluatedKernels kernels = detail::evaluate_kernels(cfg, data, seed_offset);
    const SolverConfig solver{cfg.kkt_tolerance, std::nullopt, 1e-8};

    TrainEvalResult res;
    res.alignment_vs_reference = kernels.alignment_vs_reference;
    res.denoise_rank = kernels.denoise_rank;
    res.best_C = cfg.C;
    res.best_epsilon = cfg.epsilon;

    if (cfg.task == "svc") {
        if (cfg.tune) {
            const auto grid = default_c_grid();
            if (cfg.score_on_test) {
                const auto gs = grid_search_svc(kernels.train, data.y_train_label, kernels.cross,
                                                data.y_test_label, grid, solver);
                res.best_C = gs.best_C;
            } else {
                const auto [fit, val] =
                    detail::tuning_split(kernels.train.rows, &data.y_train_label, cfg.split_seed);
                std::vector<int> yfit;
                std::vector<int> yval;
                for (auto i : fit) yfit.push_back(data.y_train_label[i]);
                for (auto i : val) yval.push_back(data.y_train_label[i]);
                const auto gs = grid_search_svc(detail::slice(kernels.train, fit, fit), yfit,
                                                detail::slice(kernels.train, val, fit), yval, grid,
                                                solver);
                res.best_C = gs.best_C;
            }
        }
        const SVCModel model = train_svc(kernels.train, data.y_train_label, res.best_C, solver);
        res.n_sv = model.sv_indices.size();
        res.train_score = accuracy(data.y_train_label, predict_svc(model, kernels.train));
        res.test_score = accuracy(data.y_test_label, predict_svc(model, kernels.cross));
    } else {
        if (cfg.tune) {
            const auto eps_grid = default_epsilon_grid();
            const auto c_grid = default_c_grid();
            if (cfg.score_on_test) {
                const auto gs = grid_search_svr(kernels.train, data.y_train, kernels.cross,
                                                data.y_test, eps_grid, c_grid, solver);
                res.best_C = gs.best_C;
                res.best_epsilon = gs.best_epsilon;
            } else {
                const auto [fit, val] =
                    detail::tuning_split(kernels.train.rows, nullptr, cfg.split_seed);
                std::vector<double> yfit;
                std::vector<double> yval;
                for (auto i : fit) yfit.push_back(data.y_train[i]);
                for (auto i : val) yval.push_back(data.y_train[i]);
                const auto gs = grid_search_svr(detail::slice(kernels.train, fit, fit), yfit,
                                                detail::slice(kernels.train, val, fit), yval,
                                                eps_grid, c_grid, solver);
                res.best_C = gs.best_C;
                res.best_epsilon = gs.best_epsilon;
            }
        }
        const SVRModel model =
            train_svr(kernels.train, data.y_train, res.best_C, res.best_epsilon, solver);
        res.n_sv = model.sv_indices.size();
        res.train_score = rmse(data.y_train, predict_svr(model, kernels.train));
        const auto pred = predict_svr(model, kernels.cross);
        res.test_score = rmse(data.y_test, pred);
        res.r2 = r_squared(data.y_test, pred);
    }
    return res;
}

inline TrainEvalResult cmd_train_eval(const ExperimentConfig& cfg) {
    const PreparedData data = prepare_data(cfg);
    const TrainEvalResult res = run_train_eval(cfg, data);

    detail::ensure_output_dir(cfg);
    nlohmann::json report{{"task", cfg.task},
                          {"n_sv", res.n_sv},
                          {"config_digest", config_digest(cfg)},
                          {"C", res.best_C}};
    if (cfg.task == "svc") {
        report["train_accuracy"] = res.train_score;
        report["test_accuracy"] = res.test_score;
    } else {
        report["train_rmse"] = res.train_score;
        report["test_rmse"] = res.test_score;
        report["r_squared"] = res.r2;
        report["epsilon"] = res.best_epsilon;
    }
    if (res.alignment_vs_reference) report["alignment_vs_reference"] = *res.alignment_vs_reference;
    if (res.denoise_rank) report["denoise_rank"] = *res.denoise_rank;
    detail::write_json_file(cfg.output_dir + "/report.json", report);
    return res;
}

// ---------------------------------------------------------------------------
// sweeps: one row per grid cell and seed, plot-ready CSV

struct SweepRow {
    double p1 = 0.0;
    double p2 = 0.0;
    long long shots = 0;
    int n_qubits = 0;
    std::uint64_t seed = 0;
    double alignment = 0.0;
    double test_accuracy = 0.0;
    double noiseless_accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<double> noiseless_accuracy_per_seed;
};

namespace detail {

// One seed of a QSVC comparison: exact-backend kernels vs the configured
// backend, both evaluated with the same split and C.
struct SeedOutcome {
    double alignment = 0.0;
    double accuracy = 0.0;
    double noiseless_accuracy = 0.0;
};

inline SeedOutcome run_seed(const ExperimentConfig& base, std::uint64_t seed_index) {
    ExperimentConfig cfg = base;
    cfg.split_seed = base.split_seed + seed_index;
    const PreparedData data = prepare_data(cfg);
    const SolverConfig solver{cfg.kkt_tolerance, std::nullopt, 1e-8};

    ExperimentConfig exact_cfg = cfg;
    exact_cfg.backend_mode = "exact";
    const KernelBackend exact = backend_from_config(exact_cfg, data.n_features);
    const Matrix ref_train = gram(data.x_train, exact).entries;
    const Matrix ref_cross = cross(data.x_test, data.x_train, exact).entries;

    SeedOutcome out;
    {
        const SVCModel model = train_svc(ref_train, data.y_train_label, cfg.C, solver);
        out.noiseless_accuracy =
            accuracy(data.y_test_label, predict_svc(model, ref_cross));
    }
    if (cfg.backend_mode == "exact") {
        out.alignment = 1.0;
        out.accuracy = out.noiseless_accuracy;
        return out;
    }
    const KernelBackend backend = backend_from_config(cfg, data.n_features, seed_index);
    const Matrix ktrain = gram(data.x_train, backend).entries;
    const Matrix kcross = cross(data.x_test, data.x_train, backend).entries;
    out.alignment = alignment(ref_train, ktrain);
    const SVCModel model = train_svc(ktrain, data.y_train_label, cfg.C, solver);
    out.accuracy = accuracy(data.y_test_label, predict_svc(model, kcross));
    return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& kind) {
    std::ostringstream os;
    if (kind == "noise") os << "p1,p2,seed,alignment,test_accuracy\n";
    else if (kind == "shots") os << "shots,seed,alignment,test_accuracy\n";
    else os << "n_qubits,seed,alignment,test_accuracy,noiseless_accuracy\n";
    for (const auto& r : rows) {
        if (kind == "noise") os << format_double(r.p1) << ',' << format_double(r.p2) << ',';
        else if (kind == "shots") os << r.shots << ',';
        else os << r.n_qubits << ',';
        os << r.seed << ',' << format_double(r.alignment) << ',' << format_double(r.test_accuracy);
        if (kind == "qubits") os << ',' << format_double(r.noiseless_accuracy);
        os << '\n';
    }
    return os.str();
}

inline void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& res,
                                const std::string& kind, const std::string& filename) {
    detail::ensure_output_dir(cfg);
    detail::write_text_file(cfg.output_dir + "/" + filename,
                            "# config_digest=" + config_digest(cfg) + "\n" +
                                sweep_csv(res.rows, kind));
    nlohmann::json meta{{"config_digest", config_digest(cfg)},
                        {"noiseless_accuracy_per_seed", res.noiseless_accuracy_per_seed}};
    detail::write_json_file(cfg.output_dir + "/sweep_meta.json", meta);
}

} // namespace detail

inline SweepResult run_sweep_noise(const ExperimentConfig& base, std::span<const double> p1_list,
                                   std::span<const double> p2_list, std::size_t n_seeds) {
    if (base.backend_mode != "noisy")
        throw std::invalid_argument("sweep-noise: backend mode must be noisy");
    std::vector<double> p1s(p1_list.begin(), p1_list.end());
    std::vector<double> p2s(p2_list.begin(), p2_list.end());
    std::sort(p1s.begin(), p1s.end());
    std::sort(p2s.begin(), p2s.end());

    SweepResult out;
    out.noiseless_accuracy_per_seed.resize(n_seeds, 0.0);
    for (double p1 : p1s)
        for (double p2 : p2s)
            for (std::size_t s = 0; s < n_seeds; ++s) {
                ExperimentConfig cfg = base;
                cfg.p1 = p1;
                cfg.p2 = p2;
                const detail::SeedOutcome r = detail::run_seed(cfg, s);
                out.noiseless_accuracy_per_seed[s] = r.noiseless_accuracy;
                SweepRow row;
                row.p1 = p1;
                row.p2 = p2;
                row.seed = s;
                row.alignment = r.alignment;
                row.test_accuracy = r.accuracy;
                row.noiseless_accuracy = r.noiseless_accuracy;
                out.rows.push_back(row);
            }
    return out;
}

inline SweepResult cmd_sweep_noise(const ExperimentConfig& cfg, std::span<const double> p1_list,
                                   std::span<const double> p2_list, std::size_t n_seeds) {
    const SweepResult res = run_sweep_noise(cfg, p1_list, p2_list, n_seeds);
    detail::write_sweep_outputs(cfg, res, "noise", "sweep_noise.csv");
    return res;
}

inline SweepResult run_sweep_shots(const ExperimentConfig& base, std::span<const long long> shots,
                                   std::size_t n_seeds) {
    if (base.backend_mode == "exact")
        throw std::invalid_argument("sweep-shots: backend mode must be sampled or noisy");
    std::vector<long long> list(shots.begin(), shots.end());
    std::sort(list.begin(), list.end());

    SweepResult out;
    out.noiseless_accuracy_per_seed.resize(n_seeds, 0.0);
    for (long long s_count : list)
        for (std::size_t s = 0; s < n_seeds; ++s) {
            ExperimentConfig cfg = base;
            cfg.shots = s_count;
            const detail::SeedOutcome r = detail::run_seed(cfg, s);
            out.noiseless_accuracy_per_seed[s] = r.noiseless_accuracy;
            SweepRow row;
            row.shots = s_count;
            row.seed = s;
            row.alignment = r.alignment;
            row.test_accuracy = r.accuracy;
            row.noiseless_accuracy = r.noiseless_accuracy;
            out.rows.push_back(row);
        }
    return out;
}

inline SweepResult cmd_sweep_shots(const ExperimentConfig& cfg, std::span<const long long> shots,
                                   std::size_t n_seeds) {
    const SweepResult res = run_sweep_shots(cfg, shots, n_seeds);
    detail::write_sweep_outputs(cfg, res, "shots", "sweep_shots.csv");
    return res;
}

inline SweepResult run_sweep_qubits(const ExperimentConfig& base, std::span<const int> qubit_list,
                                    std::size_t n_seeds) {
    std::vector<int> list(qubit_list.begin(), qubit_list.end());
    std::sort(list.begin(), list.end());

    SweepResult out;
    out.noiseless_accuracy_per_seed.resize(n_seeds, 0.0);
    for (int n : list) {
        if (n < 1) throw std::invalid_argument("sweep-qubits: qubit counts must be >= 1");
        for (std::size_t s = 0; s < n_seeds; ++s) {
            ExperimentConfig cfg = base;
            cfg.pca_dim = n;
            const detail::SeedOutcome r = detail::run_seed(cfg, s);
            out.noiseless_accuracy_per_seed[s] = r.noiseless_accuracy;
            SweepRow row;
            row.n_qubits = n;
            row.seed = s;
            row.alignment = r.alignment;
            row.test_accuracy = r.accuracy;
            row.noiseless_accuracy = r.noiseless_accuracy;
            out.rows.push_back(row);
        }
    }
    return out;
}

inline SweepResult cmd_sweep_qubits(const ExperimentConfig& cfg, std::span<const int> qubit_list,
                                    std::size_t n_seeds) {
    const SweepResult res = run_sweep_qubits(cfg, qubit_list, n_seeds);
    detail::write_sweep_outputs(cfg, res, "qubits", "sweep_qubits.csv");
    return res;
}

// ---------------------------------------------------------------------------
// denoise: low-rank reconstruction of a stored kernel against a reference

struct DenoiseResult {
    std::size_t r_star = 0;
    double alignment_unfiltered = 0.0;
    double alignment_at_r_star = 0.0;
    std::string method; // "eig" or "svd"
};

inline DenoiseResult cmd_denoise(const ExperimentConfig& cfg, const std::string& noisy_path,
                                 const std::string& reference_path) {
    const LoadedKernel noisy = load_kernel_csv_file(noisy_path);
    const LoadedKernel reference = load_kernel_csv_file(reference_path);
    if (!noisy.entries.same_shape(reference.entries))
        throw data_error("denoise: noisy and reference kernel shapes differ");

    DenoiseResult res;
    res.alignment_unfiltered = alignment(reference.entries, noisy.entries);

    Matrix reconstructed;
    std::vector<double> spectrum;
    std::vector<double> curve;
    const bool square_symmetric = [&] {
        if (noisy.is_cross || noisy.entries.rows != noisy.entries.cols) return false;
        const double scale = std::max(1.0, max_abs(noisy.entries));
        for (std::size_t i = 0; i < noisy.entries.rows; ++i)
            for (std::size_t j = i + 1; j < noisy.entries.cols; ++j)
                if (std::abs(noisy.entries(i, j) - noisy.entries(j, i)) > 1e-10 * scale)
                    return false;
        return true;
    }();

    if (square_symmetric) {
        res.method = "eig";
        const RankSelection sel = select_rank(noisy.entries, reference.entries);
        res.r_star = sel.r_star;
        curve = sel.alignment_curve;
        reconstructed = low_rank_reconstruct(noisy.entries, sel.r_star, cfg.clip_psd);
        spectrum = sym_eig(noisy.entries).eigenvalues;
    } else {
        res.method = "svd";
        const std::size_t rmax = std::min(noisy.entries.rows, noisy.entries.cols);
        std::size_t best_r = 1;
        for (std::size_t r = 1; r <= rmax; ++r) {
            const double a = alignment(reference.entries, svd_low_rank(noisy.entries, r));
            curve.push_back(a);
            if (a > curve[best_r - 1]) best_r = r;
        }
        res.r_star = best_r;
        reconstructed = svd_low_rank(noisy.entries, best_r);
        const bool tall = noisy.entries.rows >= noisy.entries.cols;
        const Matrix g = tall ? matmul(transpose(noisy.entries), noisy.entries)
                              : matmul(noisy.entries, transpose(noisy.entries));
        for (double mu : sym_eig(g).eigenvalues) spectrum.push_back(std::sqrt(std::max(mu, 0.0)));
    }
    res.alignment_at_r_star = curve[res.r_star - 1];

    detail::ensure_output_dir(cfg);
    {
        std::ostringstream os;
        os << detail::kernel_header(noisy.meta, reconstructed, !square_symmetric) << '\n';
        detail::write_matrix_rows(os, reconstructed);
        detail::write_text_file(cfg.output_dir + "/denoised_kernel.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "r,alignment\n";
        for (std::size_t r = 1; r <= curve.size(); ++r)
            os << r << ',' << format_double(curve[r - 1]) << '\n';
        detail::write_text_file(cfg.output_dir + "/alignment_curve.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "k,value\n";
        for (std::size_t k = 0; k < spectrum.size(); ++k)
            os << k + 1 << ',' << format_double(spectrum[k]) << '\n';
        detail::write_text_file(cfg.output_dir + "/spectrum.csv", os.str());
    }
    detail::write_json_file(cfg.output_dir + "/denoise_report.json",
                            {{"config_digest", config_digest(cfg)},
                             {"method", res.method},
                             {"r_star", res.r_star},
                             {"alignment_unfiltered", res.alignment_unfiltered},
                             {"alignment_at_r_star", res.alignment_at_r_star},
                             {"psd_clip", cfg.clip_psd}});
    return res;
}

// ---------------------------------------------------------------------------
// tune: grid search surface

struct TuneResult {
    double best_C = 0.0;
    double best_epsilon = 0.0;
    double best_score = 0.0;
};

inline TuneResult cmd_tune(const ExperimentConfig& cfg) {
    const PreparedData data = prepare_data(cfg);
    const detail::EvaluatedKernels kernels = detail::evaluate_kernels(cfg, data);
    const SolverConfig solver{cfg.kkt_tolerance, std::nullopt, 1e-8};

    detail::ensure_output_dir(cfg);
    TuneResult res;
    std::ostringstream os;
    if (cfg.task == "svc") {
        const auto grid = default_c_grid();
        SvcGridResult gs;
        if (cfg.score_on_test) {
            gs = grid_search_svc(kernels.train, data.y_train_label, kernels.cross,
                                 data.y_test_label, grid, solver);
        } else {
            const auto [fit, val] =
                detail::tuning_split(kernels.train.rows, &data.y_train_label, cfg.split_seed);
            std::vector<int> yfit;
            std::vector<int> yval;
            for (auto i : fit) yfit.push_back(data.y_train_label[i]);
            for (auto i : val) yval.push_back(data.y_train_label[i]);
            gs = grid_search_svc(detail::slice(kernels.train, fit, fit), yfit,
                                 detail::slice(kernels.train, val, fit), yval, grid, solver);
        }
        res.best_C = gs.best_C;
        res.best_score = gs.best_score;
        os << "C,accuracy,n_sv\n";
        for (const auto& cell : gs.surface) {
            if (cell.failed) continue;
            os << format_double(cell.C) << ',' << format_double(cell.score) << ',' << cell.n_sv
               << '\n';
        }
    } else {
        const auto eps_grid = default_epsilon_grid();
        const auto c_grid = default_c_grid();
        SvrGridResult gs;
        if (cfg.score_on_test) {
            gs = grid_search_svr(kernels.train, data.y_train, kernels.cross, data.y_test, eps_grid,
                                 c_grid, solver);
        } else {
            const auto [fit, val] = detail::tuning_split(kernels.train.rows, nullptr, cfg.split_seed);
            std::vector<double> yfit;
            std::vector<double> yval;
            for (auto i : fit) yfit.push_back(data.y_train[i]);
            for (auto i : val) yval.push_back(data.y_train[i]);
            gs = grid_search_svr(detail::slice(kernels.train, fit, fit), yfit,
                                 detail::slice(kernels.train, val, fit), yval, eps_grid, c_grid,
                                 solver);
        }
        res.best_C = gs.best_C;
        res.best_epsilon = gs.best_epsilon;
        res.best_score = gs.best_score;
        os << "epsilon,C,rmse,n_sv\n";
        for (const auto& cell : gs.surface) {
            if (cell.failed) continue;
            os << format_double(cell.epsilon) << ',' << format_double(cell.C) << ','
               << format_double(cell.score) << ',' << cell.n_sv << '\n';
        }
    }
    detail::write_text_file(cfg.output_dir + "/grid_surface.csv", os.str());
    nlohmann::json best{{"config_digest", config_digest(cfg)},
                        {"best_C", res.best_C},
                        {"best_score", res.best_score},
                        {"score_on_test", cfg.score_on_test}};
    if (cfg.task == "svr") best["best_epsilon"] = res.best_epsilon;
    detail::write_json_file(cfg.output_dir + "/best_params.json", best);
    return res;
}

// ---------------------------------------------------------------------------
// baseline-gaussian: the classical RBF-kernel counterpart

inline TrainEvalResult cmd_baseline_gaussian(const ExperimentConfig& cfg) {
    const PreparedData data = prepare_data(cfg);
    const SolverConfig solver{cfg.kkt_tolerance, std::nullopt, 1e-8};

    const Matrix ktrain = gaussian_kernel_matrix(data.x_train, data.x_train, cfg.gamma);
    const Matrix kcross = gaussian_kernel_matrix(data.x_test, data.x_train, cfg.gamma);

    TrainEvalResult res;
    res.best_C = cfg.C;
    res.best_epsilon = cfg.epsilon;
    if (cfg.task == "svc") {
        if (cfg.tune) {
            const auto grid = default_c_grid();
            const auto [fit, val] =
                detail::tuning_split(ktrain.rows, &data.y_train_label, cfg.split_seed);
            std::vector<int> yfit;
            std::vector<int> yval;
            for (auto i : fit) yfit.push_back(data.y_train_label[i]);
            for (auto i : val) yval.push_back(data.y_train_label[i]);
            const auto gs = grid_search_svc(detail::slice(ktrain, fit, fit), yfit,
                                            detail::slice(ktrain, val, fit), yval, grid, solver);
            res.best_C = gs.best_C;
        }
        const SVCModel model = train_svc(ktrain, data.y_train_label, res.best_C, solver);
        res.n_sv = model.sv_indices.size();
        res.train_score = accuracy(data.y_train_label, predict_svc(model, ktrain));
        res.test_score = accuracy(data.y_test_label, predict_svc(model, kcross));
    } else {
        const SVRModel model = train_svr(ktrain, data.y_train, cfg.C, cfg.epsilon, solver);
        res.n_sv = model.sv_indices.size();
        res.train_score = rmse(data.y_train, predict_svr(model, ktrain));
        const auto pred = predict_svr(model, kcross);
        res.test_score = rmse(data.y_test, pred);
        res.r2 = r_squared(data.y_test, pred);
    }

    detail::ensure_output_dir(cfg);
    nlohmann::json report{{"task", cfg.task},
                          {"model", "gaussian"},
                          {"gamma", cfg.gamma},
                          {"C", res.best_C},
                          {"n_sv", res.n_sv},
                          {"config_digest", config_digest(cfg)}};
    if (cfg.task == "svc") {
        report["train_accuracy"] = res.train_score;
        report["test_accuracy"] = res.test_score;
    } else {
        report["epsilon"] = res.best_epsilon;
        report["train_rmse"] = res.train_score;
        report["test_rmse"] = res.test_score;
        report["r_squared"] = res.r2;
    }
    detail::write_json_file(cfg.output_dir + "/baseline_report.json", report);
    return res;
}

} // namespace qkernel
