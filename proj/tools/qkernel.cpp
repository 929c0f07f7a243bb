// Batch experiment runner for quantum-kernel SVC/SVR studies. Every
// subcommand reads an optional JSON config, applies flag overrides, writes
// its artifacts plus the fully-resolved config into --out, and exits with
// 0 (ok), 2 (config error), 3 (data error), or 4 (capacity refusal).

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qkernel/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCapacity = 4;

qkernel::ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    nlohmann::json j;
    f >> j;
    return j.get<qkernel::ExperimentConfig>();
}

struct CliOptions {
    std::string config_path;
    qkernel::ExperimentConfig cfg;

    // sweep inputs
    std::vector<double> p1_list;
    std::vector<double> p2_list;
    std::vector<long long> shot_list;
    std::vector<int> qubit_list;
    std::size_t n_seeds = 5;

    // denoise inputs
    std::string noisy_path;
    std::string reference_path;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "JSON experiment config; flags override it");
    cmd->add_option("--out", opt.cfg.output_dir, "output directory");
    cmd->add_option("--task", opt.cfg.task, "svc | svr");
    cmd->add_option("--dataset", opt.cfg.dataset_path, "training CSV path");
    cmd->add_option("--test-dataset", opt.cfg.dataset_test_path, "separate test CSV path");
    cmd->add_option("--source", opt.cfg.dataset_source, "csv | financial");
    cmd->add_option("--target", opt.cfg.target_column, "target column name");
    cmd->add_option("--features", opt.cfg.feature_columns, "feature column names");
    cmd->add_option("--label-a", opt.cfg.label_a, "raw label mapped to +1");
    cmd->add_option("--label-b", opt.cfg.label_b, "raw label mapped to -1");
    cmd->add_option("--scaler", opt.cfg.scaler_method, "minmax | standard");
    cmd->add_option("--scaler-lo", opt.cfg.scaler_lo, "scaled feature range low end");
    cmd->add_option("--scaler-hi", opt.cfg.scaler_hi, "scaled feature range high end");
    cmd->add_option("--pca-dim", opt.cfg.pca_dim, "PCA target dimension (0 = off)");
    cmd->add_flag("--pca-standardize", opt.cfg.pca_standardize,
                  "use the correlation matrix for PCA");
    cmd->add_option("--boxcox-xi",
                    [&opt](const std::vector<std::string>& vals) {
                        opt.cfg.boxcox_xi = std::stod(vals.back());
                        return true;
                    },
                    "Box-Cox parameter for the regression target");
    cmd->add_option("--target-scaler", opt.cfg.target_scaler, "minmax01 | none");
    cmd->add_option("--lambda", opt.cfg.lambda, "feature-map angle scale");
    cmd->add_option("--mode", opt.cfg.backend_mode, "exact | sampled | noisy");
    cmd->add_option("--shots", opt.cfg.shots, "shots per kernel entry");
    cmd->add_option("--p1", opt.cfg.p1, "single-qubit gate error rate");
    cmd->add_option("--p2", opt.cfg.p2, "two-qubit gate error rate");
    cmd->add_option("--base-seed", opt.cfg.base_seed, "kernel sampling base seed");
    cmd->add_option("--c", opt.cfg.C, "SVM regularization C");
    cmd->add_option("--epsilon", opt.cfg.epsilon, "epsilon-SVR tube half-width");
    cmd->add_option("--gamma", opt.cfg.gamma, "gaussian baseline kernel width");
    cmd->add_flag("--tune", opt.cfg.tune, "grid-search hyperparameters before training");
    cmd->add_flag("--score-on-test", opt.cfg.score_on_test,
                  "score the grid on the test kernel (leaks test data into tuning)");
    cmd->add_option("--kkt-tol", opt.cfg.kkt_tolerance, "solver KKT tolerance");
    cmd->add_flag("--clip-psd", opt.cfg.clip_psd, "zero negative eigenvalues when denoising");
    cmd->add_option("--n-train", opt.cfg.n_train, "training rows");
    cmd->add_option("--n-test", opt.cfg.n_test, "test rows");
    cmd->add_option("--split-seed", opt.cfg.split_seed, "train/test split seed");
    cmd->add_option("--stratified", opt.cfg.stratified, "stratify classification splits");
    cmd->add_flag("--denoise", opt.cfg.denoise, "low-rank denoise the train kernel");
    cmd->add_option("--reference", opt.cfg.reference_kernel,
                    "reference kernel CSV for alignment/denoising");
}

// config file first, then flag overrides win
void finalize(CLI::App* cmd, CliOptions& opt) {
    if (opt.config_path.empty()) return;
    qkernel::ExperimentConfig merged = load_config_file(opt.config_path);
    const CliOptions defaults{};
    nlohmann::json patch = nlohmann::json(opt.cfg);
    nlohmann::json base = nlohmann::json(defaults.cfg);
    // apply only the fields the user actually set on the command line
    for (const auto* o : cmd->get_options()) {
        (void)o;
    }
    // simpler and robust: re-parse into the merged config by overlaying any
    // field whose CLI value differs from the default-constructed config
    nlohmann::json merged_json = nlohmann::json(merged);
    const std::function<void(nlohmann::json&, const nlohmann::json&, const nlohmann::json&)>
        overlay = [&](nlohmann::json& into, const nlohmann::json& flags,
                      const nlohmann::json& def) {
            for (auto it = flags.begin(); it != flags.end(); ++it) {
                const auto& key = it.key();
                if (it->is_object()) {
                    overlay(into[key], *it, def.contains(key) ? def.at(key) : nlohmann::json{});
                } else if (!def.contains(key) || *it != def.at(key)) {
                    into[key] = *it;
                }
            }
        };
    overlay(merged_json, patch, base);
    opt.cfg = merged_json.get<qkernel::ExperimentConfig>();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-kernel SVC/SVR experiment runner"};
    app.require_subcommand(1);

    CliOptions opt;

    auto* c_kernel = app.add_subcommand("kernel", "compute and store train/cross kernel matrices");
    auto* c_train = app.add_subcommand("train-eval", "train a model and report metrics");
    auto* c_noise = app.add_subcommand("sweep-noise", "alignment/accuracy over gate error rates");
    auto* c_shots = app.add_subcommand("sweep-shots", "alignment/accuracy over shot budgets");
    auto* c_qubits = app.add_subcommand("sweep-qubits", "alignment/accuracy over qubit counts");
    auto* c_denoise = app.add_subcommand("denoise", "low-rank reconstruction of a stored kernel");
    auto* c_tune = app.add_subcommand("tune", "hyperparameter grid search surface");
    auto* c_base = app.add_subcommand("baseline-gaussian", "classical RBF-kernel baseline");

    for (CLI::App* cmd : {c_kernel, c_train, c_noise, c_shots, c_qubits, c_denoise, c_tune, c_base})
        add_common_flags(cmd, opt);

    c_noise->add_option("--p1-list", opt.p1_list, "single-qubit error rates to sweep")->required();
    c_noise->add_option("--p2-list", opt.p2_list, "two-qubit error rates to sweep")->required();
    c_noise->add_option("--seeds", opt.n_seeds, "number of independent seeds");
    c_shots->add_option("--shot-list", opt.shot_list, "shot budgets to sweep")->required();
    c_shots->add_option("--seeds", opt.n_seeds, "number of independent seeds");
    c_qubits->add_option("--qubit-list", opt.qubit_list, "qubit counts to sweep")->required();
    c_qubits->add_option("--seeds", opt.n_seeds, "number of independent seeds");
    c_denoise->add_option("--noisy", opt.noisy_path, "noisy kernel CSV")->required();
    c_denoise->add_option("--reference-kernel", opt.reference_path, "reference kernel CSV")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        finalize(active, opt);
        opt.cfg.validate();

        if (active == c_kernel) {
            const auto res = qkernel::cmd_kernel(opt.cfg);
            std::cout << "wrote " << res.train_path << " (total_shots=" << res.train_total_shots
                      << ") and " << res.cross_path << " (total_shots=" << res.cross_total_shots
                      << ")\n";
        } else if (active == c_train) {
            const auto res = qkernel::cmd_train_eval(opt.cfg);
            std::cout << "report written to " << opt.cfg.output_dir << "/report.json"
                      << " (test score " << res.test_score << ")\n";
        } else if (active == c_noise) {
            qkernel::cmd_sweep_noise(opt.cfg, opt.p1_list, opt.p2_list, opt.n_seeds);
            std::cout << "wrote " << opt.cfg.output_dir << "/sweep_noise.csv\n";
        } else if (active == c_shots) {
            qkernel::cmd_sweep_shots(opt.cfg, opt.shot_list, opt.n_seeds);
            std::cout << "wrote " << opt.cfg.output_dir << "/sweep_shots.csv\n";
        } else if (active == c_qubits) {
            qkernel::cmd_sweep_qubits(opt.cfg, opt.qubit_list, opt.n_seeds);
            std::cout << "wrote " << opt.cfg.output_dir << "/sweep_qubits.csv\n";
        } else if (active == c_denoise) {
            const auto res = qkernel::cmd_denoise(opt.cfg, opt.noisy_path, opt.reference_path);
            std::cout << "r*=" << res.r_star << " (" << res.method << "), alignment "
                      << res.alignment_unfiltered << " -> " << res.alignment_at_r_star << "\n";
        } else if (active == c_tune) {
            const auto res = qkernel::cmd_tune(opt.cfg);
            std::cout << "best C=" << res.best_C;
            if (opt.cfg.task == "svr") std::cout << " epsilon=" << res.best_epsilon;
            std::cout << " score=" << res.best_score << "\n";
        } else if (active == c_base) {
            const auto res = qkernel::cmd_baseline_gaussian(opt.cfg);
            std::cout << "baseline report written to " << opt.cfg.output_dir
                      << "/baseline_report.json (test score " << res.test_score << ")\n";
        }
    } catch (const qkernel::capacity_error& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const qkernel::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
