#pragma once

// Scenario files: a strict JSON description of a grid, the parameters with
// their forecasts and kernels, one policy and a list of perturbations.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "policy_forge/policy.hpp"
#include "policy_forge/robustness.hpp"

namespace policy_forge {

// Malformed or inconsistent scenario. `key` is the dotted path of the culprit.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : message + " at '" + key + "'"),
          key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct ForecastSpec {
    enum class Family { Constant, Linear, Table };
    Family family = Family::Constant;
    double value = 0.0;      // constant
    double intercept = 0.0;  // linear
    double slope = 0.0;
    std::vector<double> values;  // table, one per node of [t_start, T]
};

struct ParameterEntry {
    std::string name;
    Kernel kernel = IdentityKernel{};
    ForecastSpec forecast;
};

struct ToySSPolicySpec {
    double c_in = 1.0;
    double c_out = 3.0;
    bool robust = false;
};

// Q = coeff_const + sum_j coeff_time[j] t'^(j+1) + sum_k coeff_q[k] q_k + sum_k coeff_qdot[k] q_dot_k
struct LinearFormSpec {
    double coeff_const = 0.0;
    std::vector<double> coeff_time;
    std::vector<double> coeff_q;     // indexed like the parameter list
    std::vector<double> coeff_qdot;
};

// One term coeff * P(t') * prod_k (q_k - shift_k)^power_k of a generating function.
struct PolynomialTerm {
    double coeff = 1.0;
    std::vector<double> time_poly{1.0};  // ascending powers of t'
    std::vector<int> powers;             // indexed like the parameter list
    std::vector<double> shifts;
};

// Policy Q = dL/dt' for L the sum of the terms.
struct GeneratingPolynomialSpec {
    std::vector<PolynomialTerm> terms;
};

using PolicySpec = std::variant<ToySSPolicySpec, LinearFormSpec, GeneratingPolynomialSpec>;

struct Scenario {
    double t_end = 0.0;
    int n_steps = 1000;
    std::optional<int> history_steps;
    double growth_rate = 0.0;
    std::vector<ParameterEntry> parameters;
    PolicySpec policy;
    std::vector<PerturbationFamily> perturbations;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& file);

// Everything a command needs, materialized on the grid.
struct PreparedScenario {
    TimeGrid grid;
    ValuationConfig config;
    std::vector<std::string> names;
    std::vector<ParameterPath> raw_forecast;
    std::vector<GeneralizedParameterSpec> specs;
    std::vector<ParameterPath> forecast;  // generalized
    CashflowPolicy policy;
};

// History steps the kernels need on a grid with step h (at least one node
// beyond the memory so truncation stays below the kernel tolerance).
int required_history_steps(const std::vector<ParameterEntry>& parameters, double step);

PreparedScenario prepare(const Scenario& scenario);

CashflowPolicy make_policy(const PolicySpec& spec, const TimeGrid& grid,
                           const ValuationConfig& config,
                           const std::vector<ParameterPath>& forecast);

}  // namespace policy_forge
