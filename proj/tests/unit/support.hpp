#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "policy_forge/policy.hpp"

namespace pf_test {

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline std::vector<policy_forge::ParameterPath> one(policy_forge::ParameterPath p) {
    std::vector<policy_forge::ParameterPath> v;
    v.push_back(std::move(p));
    return v;
}

// Forecast share 0.25 on a T = 10 grid; history only when asked.
inline policy_forge::ParameterPath toy_forecast(int n_steps = 1000, int history = 0,
                                                double t_end = 10.0) {
    return policy_forge::ParameterPath::constant(policy_forge::TimeGrid(t_end, n_steps, history),
                                                 0.25);
}

inline std::string slurp(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Rows of a CSV file split on commas; the header is row 0.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(file));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("policy_forge_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path data_file(const std::string& name) {
    return std::filesystem::path(PF_TEST_DATA_DIR) / name;
}

}  // namespace pf_test
