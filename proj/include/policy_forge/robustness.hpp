#pragma once

// Robustness of a policy against forecasting errors.
//
// Two complementary views are offered:
//  * the local view: the Euler-Lagrange residual dQ/dq - d/dt' dQ/dq_dot along
//    the forecast, plus the terminal boundary term dQ/dq_dot at T;
//  * the empirical view: perturb the raw forecast by a family of errors, revalue
//    exactly, and fit the order of |dV(T)| in the error amplitude.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "policy_forge/policy.hpp"

namespace policy_forge {

enum class PerturbationShape { Linear, Sinusoid, Bump };

std::string_view to_string(PerturbationShape shape);
std::optional<PerturbationShape> parse_perturbation_shape(std::string_view name);

// A forecasting error dp(t'), zero for t' <= 0.
//   Linear:   epsilon * t'
//   Sinusoid: epsilon * sin(omega t')      (omega <= 0 selects pi / (2T))
//   Bump:     epsilon * 16 t'^2 (T - t')^2 / T^4, peak epsilon at T/2
struct PerturbationFamily {
    PerturbationShape shape = PerturbationShape::Linear;
    double epsilon = 0.0;
    double omega = 0.0;

    double value(double t, double t_end) const;
    double deriv(double t, double t_end) const;
    double angular_frequency(double t_end) const;
    PerturbationFamily with_epsilon(double eps) const;
};

std::vector<PerturbationFamily> default_families();
std::vector<double> default_epsilon_ladder();

// forecast + dp on [0, T]; the history is left untouched.
ParameterPath perturb(const ParameterPath& forecast, const PerturbationFamily& family);

std::vector<double> el_residual(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                                int param_index);

double boundary_residual(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                         int param_index);

// Natural magnitude of a policy along the forecast:
// sup_t ( |Q| + sum_k |dQ/dq_k| + sum_k |dQ/dq_dot_k| / T ) + 1e-30.
double policy_scale(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths);

struct SweepPoint {
    double epsilon;
    double delta_v;
};

// dV(T) = V_observed(T) - V_forecast(T) for each epsilon, by full revaluation.
// `forecast_paths` are raw parameters; `specs` turn them into generalized ones.
// With `target` set only that parameter is perturbed, otherwise all are.
std::vector<SweepPoint> perturbation_sweep(const CashflowPolicy& policy,
                                           std::span<const ParameterPath> forecast_paths,
                                           const PerturbationFamily& family,
                                           std::span<const GeneralizedParameterSpec> specs,
                                           const ValuationConfig& config,
                                           std::span<const double> epsilons,
                                           std::optional<int> target = std::nullopt);

struct ScalingFit {
    double slope;  // +inf: response numerically zero
    double r2;     // NaN when slope is +inf
    int points_used;

    bool zero_response() const;
};

// Least-squares slope of log|dV| against log(epsilon). Points with
// |dV| <= floor are dropped; fewer than two survivors give the +inf sentinel.
ScalingFit fit_scaling_exponent(std::span<const SweepPoint> pairs, double floor = 1e-13);

enum class Verdict { NonRobust, RobustFirstOrder, SuperRobustEmpirical };

std::string_view to_string(Verdict verdict);

struct FamilyResult {
    PerturbationFamily family;
    int param_index = 0;
    std::vector<SweepPoint> sweep;
    ScalingFit fit{};
    double large_epsilon = 0.0;
    double large_delta_v = 0.0;
};

struct RobustnessReport {
    double el_residual_sup = 0.0;
    double boundary_residual = 0.0;
    double scaling_exponent = 0.0;
    double scaling_r2 = 0.0;
    Verdict verdict = Verdict::NonRobust;
    // max(policy_scale on the forecast, sup |Q| on the large-amplitude paths)
    double policy_scale = 0.0;
    double noise_floor = 0.0;
    std::vector<FamilyResult> per_family;

    bool zero_response() const;
};

struct ClassifyOptions {
    std::vector<double> epsilons = default_epsilon_ladder();
    double amplitude_scale = 1.0;
    double large_epsilon_factor = 0.5;
    double residual_tolerance = 1e-5;      // relative to policy_scale
    double super_robust_tolerance = 1e-6;  // relative to policy_scale * T
    double slope_threshold = 1.9;
    // dV below this fraction of policy_scale * T is treated as discretization noise.
    double noise_floor = 1e-10;
};

RobustnessReport classify(const CashflowPolicy& policy, std::span<const ParameterPath> forecast_paths,
                          std::span<const GeneralizedParameterSpec> specs,
                          const ValuationConfig& config,
                          std::span<const PerturbationFamily> families,
                          const ClassifyOptions& options = {});

}  // namespace policy_forge
