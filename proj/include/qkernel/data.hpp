#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkernel/errors.hpp"
#include "qkernel/financial_data.hpp"
#include "qkernel/format.hpp"
#include "qkernel/matrix.hpp"
#include "qkernel/rng.hpp"

namespace qkernel {

enum class Task { Classification, Regression };

struct Dataset {
    Matrix x;
    std::vector<double> y; // +-1 after mapping for classification, targets for regression
    std::vector<std::string> feature_names;
    Task task = Task::Classification;

    std::size_t size() const { return x.rows; }

    std::vector<int> labels() const {
        std::vector<int> out(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] >= 0.0 ? 1 : -1;
        return out;
    }
};

// Column selection and label mapping for CSV ingestion. Feature columns
// default to every non-target column.
struct CsvSchema {
    std::string target_column;
    std::vector<std::string> feature_columns;
    std::optional<std::map<std::string, int>> label_map; // raw value -> +-1
    Task task = Task::Regression;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

inline Dataset load_csv(std::istream& is, const CsvSchema& schema,
                        const std::string& origin = "<stream>") {
    std::string header_line;
    if (!std::getline(is, header_line)) throw data_error(origin + ": empty file");
    const auto header = detail::split_csv_line(header_line);
    if (header.empty()) throw data_error(origin + ": empty header row");

    std::map<std::string, std::size_t> col_index;
    for (std::size_t j = 0; j < header.size(); ++j) col_index[detail::trim(header[j])] = j;

    const auto target_it = col_index.find(schema.target_column);
    if (target_it == col_index.end())
        throw data_error(origin + ": target column '" + schema.target_column + "' not found");
    const std::size_t target_col = target_it->second;

    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    if (schema.feature_columns.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (j != target_col) {
                feature_cols.push_back(j);
                feature_names.push_back(detail::trim(header[j]));
            }
    } else {
        for (const auto& name : schema.feature_columns) {
            const auto it = col_index.find(name);
            if (it == col_index.end())
                throw data_error(origin + ": feature column '" + name + "' not found");
            feature_cols.push_back(it->second);
            feature_names.push_back(name);
        }
    }
    if (feature_cols.empty()) throw data_error(origin + ": no feature columns");

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    std::string line;
    std::size_t row_number = 1;
    while (std::getline(is, line)) {
        ++row_number;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw data_error(origin + ": row " + std::to_string(row_number) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        std::vector<double> row(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            double v;
            try {
                v = parse_double(cells[feature_cols[f]]);
            } catch (const std::exception&) {
                throw data_error(origin + ": row " + std::to_string(row_number) + ", column '" +
                                 feature_names[f] + "': non-numeric cell '" +
                                 cells[feature_cols[f]] + "'");
            }
            if (!std::isfinite(v))
                throw data_error(origin + ": row " + std::to_string(row_number) + ", column '" +
                                 feature_names[f] + "': non-finite value");
            row[f] = v;
        }
        const std::string raw_target = detail::trim(cells[target_col]);
        double target;
        if (schema.label_map) {
            const auto it = schema.label_map->find(raw_target);
            if (it == schema.label_map->end())
                throw data_error(origin + ": row " + std::to_string(row_number) +
                                 ": unknown label '" + raw_target + "'");
            target = static_cast<double>(it->second);
        } else {
            try {
                target = parse_double(raw_target);
            } catch (const std::exception&) {
                throw data_error(origin + ": row " + std::to_string(row_number) +
                                 ": non-numeric target '" + raw_target + "'");
            }
            if (!std::isfinite(target))
                throw data_error(origin + ": row " + std::to_string(row_number) +
                                 ": non-finite target");
        }
        xs.push_back(std::move(row));
        ys.push_back(target);
    }
    if (xs.empty()) throw data_error(origin + ": zero data rows");

    Dataset ds;
    ds.task = schema.task;
    ds.feature_names = std::move(feature_names);
    ds.x = Matrix(xs.size(), feature_cols.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < feature_cols.size(); ++j) ds.x(i, j) = xs[i][j];
    ds.y = std::move(ys);
    return ds;
}

inline Dataset load_csv_file(const std::string& path, const CsvSchema& schema) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open dataset file: " + path);
    return load_csv(f, schema, path);
}

inline void save_csv(const Dataset& ds, std::ostream& os, const std::string& target_name = "target") {
    for (const auto& name : ds.feature_names) os << name << ',';
    os << target_name << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols; ++j) os << format_double(ds.x(i, j)) << ',';
        os << format_double(ds.y[i]) << '\n';
    }
}

// The 40-train / 40-test nickel-price dataset, embedded so regression runs
// need no external files.
struct FinancialData {
    Dataset train;
    Dataset test;
};

inline FinancialData embedded_financial() {
    const std::vector<std::string> names = {"sse_index", "wti_crude_oil", "us_dollar_index"};
    const auto build = [&](const auto& rows) {
        Dataset ds;
        ds.task = Task::Regression;
        ds.feature_names = names;
        ds.x = Matrix(rows.size(), 3);
        ds.y.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < 3; ++j) ds.x(i, j) = rows[i][j];
            ds.y[i] = rows[i][3];
        }
        return ds;
    };
    return {build(embedded::kFinancialTrain), build(embedded::kFinancialTest)};
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.task = ds.task;
    out.feature_names = ds.feature_names;
    out.x = Matrix(rows.size(), ds.x.cols);
    out.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols; ++j) out.x(i, j) = ds.x(rows[i], j);
        out.y[i] = ds.y[rows[i]];
    }
    return out;
}

// seeded Fisher-Yates; first n entries are the sample
inline std::vector<std::size_t> shuffled_indices(std::size_t m, Rng& rng) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = m; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);
    return idx;
}

} // namespace detail

// Deterministic subsample of n rows. Selected rows keep their original
// order; stratified sampling balances the two classes within one row.
inline Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed,
                         bool stratified = false) {
    if (n > ds.size()) throw std::invalid_argument("subsample: n exceeds dataset size");
    if (stratified && ds.task != Task::Classification)
        throw std::invalid_argument("subsample: stratified sampling requires classification");

    Rng rng(mix_seed(seed, 0x737562ULL)); // "sub"
    std::vector<std::size_t> chosen;
    if (!stratified) {
        auto idx = detail::shuffled_indices(ds.size(), rng);
        chosen.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        std::vector<std::size_t> pos;
        std::vector<std::size_t> neg;
        for (std::size_t i = 0; i < ds.size(); ++i)
            (ds.y[i] >= 0.0 ? pos : neg).push_back(i);
        // the larger class absorbs the odd row
        std::size_t n_pos = n / 2;
        std::size_t n_neg = n / 2;
        if (n % 2 == 1) (pos.size() >= neg.size() ? n_pos : n_neg) += 1;
        if (n_pos > pos.size() || n_neg > neg.size())
            throw std::invalid_argument("subsample: class too small for a balanced sample");
        for (std::size_t i = pos.size(); i > 1; --i) std::swap(pos[i - 1], pos[rng.next_below(i)]);
        for (std::size_t i = neg.size(); i > 1; --i) std::swap(neg[i - 1], neg[rng.next_below(i)]);
        chosen.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
        chosen.insert(chosen.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
    }
    std::sort(chosen.begin(), chosen.end());
    return detail::take_rows(ds, chosen);
}

// Keeps rows whose target equals label_a (-> +1) or label_b (-> -1).
inline Dataset binary_filter(const Dataset& ds, double label_a, double label_b) {
    if (label_a == label_b) throw std::invalid_argument("binary_filter: labels must differ");
    std::vector<std::size_t> rows;
    bool saw_a = false;
    bool saw_b = false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.y[i] == label_a) { rows.push_back(i); saw_a = true; }
        else if (ds.y[i] == label_b) { rows.push_back(i); saw_b = true; }
    }
    if (!saw_a || !saw_b)
        throw std::invalid_argument("binary_filter: a requested label is absent");
    Dataset out = detail::take_rows(ds, rows);
    out.task = Task::Classification;
    for (double& v : out.y) v = v == label_a ? 1.0 : -1.0;
    return out;
}

// Balanced train/test split for classification experiments: each class is
// shuffled with the seed, the first half of each quota goes to train.
struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

inline TrainTestSplit stratified_split(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                                       std::uint64_t seed) {
    if (ds.task != Task::Classification)
        throw std::invalid_argument("stratified_split: requires classification dataset");
    if (n_train + n_test > ds.size())
        throw std::invalid_argument("stratified_split: split larger than dataset");
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.y[i] >= 0.0 ? pos : neg).push_back(i);

    Rng rng(mix_seed(seed, 0x73706c6974ULL)); // "split"
    for (std::size_t i = pos.size(); i > 1; --i) std::swap(pos[i - 1], pos[rng.next_below(i)]);
    for (std::size_t i = neg.size(); i > 1; --i) std::swap(neg[i - 1], neg[rng.next_below(i)]);

    const std::size_t tr_pos = n_train / 2;
    const std::size_t tr_neg = n_train - tr_pos;
    const std::size_t te_pos = n_test / 2;
    const std::size_t te_neg = n_test - te_pos;
    if (tr_pos + te_pos > pos.size() || tr_neg + te_neg > neg.size())
        throw std::invalid_argument("stratified_split: class too small for requested split");

    std::vector<std::size_t> train_rows(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(tr_pos));
    train_rows.insert(train_rows.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(tr_neg));
    std::vector<std::size_t> test_rows(pos.begin() + static_cast<std::ptrdiff_t>(tr_pos),
                                       pos.begin() + static_cast<std::ptrdiff_t>(tr_pos + te_pos));
    test_rows.insert(test_rows.end(), neg.begin() + static_cast<std::ptrdiff_t>(tr_neg),
                     neg.begin() + static_cast<std::ptrdiff_t>(tr_neg + te_neg));
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {detail::take_rows(ds, train_rows), detail::take_rows(ds, test_rows)};
}

// Seeded unstratified split for regression datasets loaded from one file.
inline TrainTestSplit random_split(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                                   std::uint64_t seed) {
    if (n_train + n_test > ds.size())
        throw std::invalid_argument("random_split: split larger than dataset");
    Rng rng(mix_seed(seed, 0x73706c6974ULL));
    auto idx = detail::shuffled_indices(ds.size(), rng);
    std::vector<std::size_t> train_rows(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test_rows(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                       idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {detail::take_rows(ds, train_rows), detail::take_rows(ds, test_rows)};
}

} // namespace qkernel
