#pragma once

// Builders for robust and super-robust policies.
//
//  * Total-derivative policies Q = dL/dt' from a generating function L(q, t')
//    whose q-gradient vanishes at T.
//  * The super-robust ansatz Q = (1/T) d/dt'[(T - t') M(q, t')] + C(t'), whose
//    terminal value only depends on q(0).
//  * Robust extensions Q~ + A(t') q_dot + C of a policy Q~(q, t'), with
//    dA/dt' = dQ~/dq along the forecast and A(T) = 0.

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "policy_forge/policy.hpp"

namespace policy_forge {

using StateFunction = std::function<double(std::span<const double> q, double t)>;
using StateGradient = std::function<double(std::span<const double> q, double t, int k)>;

class GeneratingFunction {
public:
    // Analytic partials are optional; missing ones are taken numerically.
    struct Partials {
        StateGradient dl_dq;
        StateFunction dl_dt;
    };

    // Checks dL/dq_k(q(T), T) = 0 on the forecast at construction.
    GeneratingFunction(StateFunction l_eval, std::vector<double> forecast_initial,
                       std::vector<double> forecast_terminal, double t_end, Partials partials = {});

    double value(std::span<const double> q, double t) const { return l_(q, t); }
    double dq(std::span<const double> q, double t, int k) const;
    double dt(std::span<const double> q, double t) const;

    int n_params() const noexcept { return static_cast<int>(initial_.size()); }
    double t_end() const noexcept { return t_end_; }
    std::span<const double> forecast_initial() const noexcept { return initial_; }
    std::span<const double> forecast_terminal() const noexcept { return terminal_; }

    // d^n L / dq_k^n at (q(T), T) for n = 1, 2, 3.
    std::array<double, 3> terminal_q_derivatives(int k) const;

private:
    StateFunction l_;
    std::vector<double> initial_;
    std::vector<double> terminal_;
    double t_end_;
    Partials partials_;
};

CashflowPolicy from_generating_function(const GeneratingFunction& gen);
CashflowPolicy from_generating_function(const GeneratingFunction& gen, int n_params);

// All-order super-robust condition, checked for n <= 3 on every parameter.
bool satisfies_super_robust_boundary(const GeneratingFunction& gen, double tolerance = 1e-6);

struct SuperRobustSpec {
    StateFunction m_eval;
    std::function<double(double)> c_profile;  // empty means C = 0
};

CashflowPolicy from_super_robust_spec(const SuperRobustSpec& spec, int n_params, double t_end);

// Constant C = M(q(0), 0) / T, which makes V(T) = 0 on every path sharing q(0).
double balance_c_profile(const StateFunction& m_eval, std::span<const double> forecast_initial,
                         double t_end);

struct RobustExtension {
    CashflowPolicy base;
    TimeGrid grid;
    std::vector<double> a_profile;  // A at the nodes of [0, T]; frozen from the forecast
    double c_constant = 0.0;

    // A(t), linearly interpolated between nodes (exact at nodes).
    double a_at(double t) const;
};

// `forecast` is the generalized forecast path q of the single parameter.
std::pair<CashflowPolicy, RobustExtension> robust_extension(const CashflowPolicy& base,
                                                            const ParameterPath& forecast,
                                                            const ValuationConfig& config);

}  // namespace policy_forge
