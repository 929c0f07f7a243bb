#pragma once

#include <string>

#include <json.hpp>

#include "qkernel/kernel.hpp"
#include "qkernel/svm.hpp"

namespace qkernel {

inline nlohmann::json kernel_meta_to_json(const KernelMeta& meta) {
    return {
        {"mode", to_string(meta.mode)},
        {"n_qubits", meta.n_qubits},
        {"lambda", meta.lambda},
        {"shots", meta.shots},
        {"base_seed", meta.base_seed},
        {"total_shots", meta.total_shots},
    };
}

inline KernelMeta kernel_meta_from_json(const nlohmann::json& j) {
    KernelMeta meta;
    meta.mode = backend_mode_from_string(j.at("mode").get<std::string>());
    meta.n_qubits = j.at("n_qubits").get<int>();
    meta.lambda = j.at("lambda").get<double>();
    meta.shots = j.at("shots").get<long long>();
    meta.base_seed = j.at("base_seed").get<std::uint64_t>();
    meta.total_shots = j.at("total_shots").get<unsigned long long>();
    return meta;
}

inline nlohmann::json model_to_json(const SVCModel& m, const KernelMeta& kernel_meta) {
    return {
        {"type", "svc"},
        {"alpha", m.alpha},
        {"b", m.b},
        {"sv_indices", m.sv_indices},
        {"y", m.y},
        {"C", m.C},
        {"kernel_meta", kernel_meta_to_json(kernel_meta)},
    };
}

inline nlohmann::json model_to_json(const SVRModel& m, const KernelMeta& kernel_meta) {
    return {
        {"type", "svr"},
        {"beta", m.beta},
        {"b", m.b},
        {"sv_indices", m.sv_indices},
        {"C", m.C},
        {"epsilon", m.epsilon},
        {"kernel_meta", kernel_meta_to_json(kernel_meta)},
    };
}

inline SVCModel svc_from_json(const nlohmann::json& j) {
    if (j.at("type").get<std::string>() != "svc")
        throw std::invalid_argument("svc_from_json: not an svc model");
    SVCModel m;
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.b = j.at("b").get<double>();
    m.sv_indices = j.at("sv_indices").get<std::vector<std::size_t>>();
    m.y = j.at("y").get<std::vector<int>>();
    m.C = j.at("C").get<double>();
    return m;
}

inline SVRModel svr_from_json(const nlohmann::json& j) {
    if (j.at("type").get<std::string>() != "svr")
        throw std::invalid_argument("svr_from_json: not an svr model");
    SVRModel m;
    m.beta = j.at("beta").get<std::vector<double>>();
    m.b = j.at("b").get<double>();
    m.sv_indices = j.at("sv_indices").get<std::vector<std::size_t>>();
    m.C = j.at("C").get<double>();
    m.epsilon = j.at("epsilon").get<double>();
    return m;
}

} // namespace qkernel
