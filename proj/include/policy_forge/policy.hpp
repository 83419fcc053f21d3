#pragma once

// Parameter paths, generalized parameters and cashflow policies.
//
// A policy is described by its adjusted net cashflow Q(q, q_dot, t'), i.e. the
// net in-minus-out cashflow already carried forward to the termination time T
// at the growth rate r. The terminal value is then V(T) = int_0^T Q dt'.

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "policy_forge/numerics.hpp"

namespace policy_forge {

enum class PathKind { Forecast, Observed };

// A raw or generalized parameter sampled on [0, T], plus its pre-inception
// history on [t_start, 0]. Node 0 appears in both segments with one value.
class ParameterPath {
public:
    ParameterPath(SampledFunction samples, SampledFunction history, PathKind kind);

    // Analytic family over the whole lattice [t_start, T].
    template <class F, class DF>
    static ParameterPath from_analytic(const TimeGrid& grid, F&& f, DF&& df,
                                       PathKind kind = PathKind::Forecast) {
        auto main = SampledFunction::from_analytic(grid, 0, grid.n_steps(), f, df);
        auto hist = SampledFunction::from_analytic(grid, -grid.history_steps(), 0, f, df);
        return ParameterPath(std::move(main), std::move(hist), kind);
    }

    static ParameterPath constant(const TimeGrid& grid, double value);

    // Tabulated values for every node of [t_start, T]; derivatives by finite
    // differences over the whole span.
    static ParameterPath from_table(const TimeGrid& grid, std::vector<double> values,
                                    PathKind kind = PathKind::Forecast);

    // Observed path: this path plus a correction on the main segment. The
    // history is copied unchanged; delta must vanish at node 0.
    ParameterPath with_offset(std::span<const double> delta_values,
                              std::span<const double> delta_derivs) const;

    const TimeGrid& grid() const noexcept { return samples_.grid(); }
    const SampledFunction& samples() const noexcept { return samples_; }
    const SampledFunction& history() const noexcept { return history_; }
    PathKind kind() const noexcept { return kind_; }

    // Value / derivative at any node of [t_start, T].
    double value(int node) const;
    double deriv(int node) const;

private:
    SampledFunction samples_;
    SampledFunction history_;
    PathKind kind_;
};

struct IdentityKernel {};

// Uniform average over the trailing window [t' - window, t'].
struct MovingAverageKernel {
    double window;
};

// rate * exp(-rate (t' - t'')), truncated at the start of the history.
struct ExponentialKernel {
    double rate;
};

using Kernel = std::variant<IdentityKernel, MovingAverageKernel, ExponentialKernel>;

// History length a kernel needs. Exponential kernels need e^{-rate*H} < 1e-6.
double kernel_memory(const Kernel& kernel);

struct GeneralizedParameterSpec {
    Kernel kernel = IdentityKernel{};
    // Pointwise map applied to the raw parameter; empty means identity.
    std::function<double(double)> f_map;
};

// q(t') = int_{t_start}^{t'} f_map(p(t'')) g(t', t'') dt''.
ParameterPath build_generalized_path(const ParameterPath& p, const GeneralizedParameterSpec& spec);

using Evaluator =
    std::function<double(std::span<const double> q, std::span<const double> q_dot, double t)>;

class CashflowPolicy {
public:
    CashflowPolicy(Evaluator evaluator, int n_params, bool uses_derivatives);

    double operator()(std::span<const double> q, std::span<const double> q_dot, double t) const {
        return evaluator_(q, q_dot, t);
    }

    int n_params() const noexcept { return n_params_; }
    bool uses_derivatives() const noexcept { return uses_derivatives_; }
    const Evaluator& evaluator() const noexcept { return evaluator_; }

    CashflowPolicy scaled(double factor) const;

private:
    Evaluator evaluator_;
    int n_params_;
    bool uses_derivatives_;
};

struct ValuationConfig {
    double growth_rate = 0.0;

    void validate() const;
};

// Q at every node of [0, T] along the given generalized paths.
std::vector<double> cashflow_series(const CashflowPolicy& policy,
                                    std::span<const ParameterPath> q_paths);

// V(t) = e^{r(t-T)} int_0^t Q dt' at a node `at` of [0, T].
double policy_value(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                    const ValuationConfig& config, double at);

// V at every node of [0, T], using the same quadrature as policy_value.
std::vector<double> running_value(const CashflowPolicy& policy,
                                  std::span<const ParameterPath> q_paths,
                                  const ValuationConfig& config);
std::vector<double> running_value(std::span<const double> cashflows, const TimeGrid& grid,
                                  const ValuationConfig& config);

// True when the evaluator ignores q_dot at `probes` random nodes.
bool check_derivative_independence(const CashflowPolicy& policy,
                                   std::span<const ParameterPath> q_paths, int probes,
                                   std::uint64_t seed = 0x5eed);

}  // namespace policy_forge
