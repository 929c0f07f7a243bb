#pragma once

#include <stdexcept>
#include <string>

namespace qkernel {

// Malformed or unreadable input data (CSV parse failures, bad labels, ...).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds a documented capacity limit (e.g. density oracle qubit cap).
class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qkernel
