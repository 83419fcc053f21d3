#include "policy_forge/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace policy_forge {

namespace {

struct Partials {
    std::vector<double> dq;   // dQ/dq_k per node
    std::vector<double> dqd;  // dQ/dq_dot_k per node
};

void check_paths(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths) {
    if (static_cast<int>(q_paths.size()) != policy.n_params()) {
        throw PreconditionError("parameter path count does not match the policy");
    }
    for (const auto& p : q_paths) {
        if (!(p.grid() == q_paths.front().grid())) {
            throw PreconditionError("parameter paths must share one grid");
        }
    }
}

Partials partial_series(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                        int k) {
    check_paths(policy, q_paths);
    if (k < 0 || k >= policy.n_params()) throw PreconditionError("parameter index out of range");
    const TimeGrid& grid = q_paths.front().grid();
    const std::size_t n = q_paths.size();
    std::vector<double> q(n), qd(n);
    Partials out{std::vector<double>(grid.n_steps() + 1), std::vector<double>(grid.n_steps() + 1)};
    for (int i = 0; i <= grid.n_steps(); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            q[j] = q_paths[j].samples().value(i);
            qd[j] = q_paths[j].samples().deriv(i);
        }
        const double t = grid.time(i);
        auto probe_q = [&](double x) {
            auto local = q;
            local[k] = x;
            return policy(local, qd, t);
        };
        auto probe_qd = [&](double x) {
            auto local = qd;
            local[k] = x;
            return policy(q, local, t);
        };
        try {
            out.dq[i] = partial_derivative(probe_q, q[k]);
            out.dqd[i] = partial_derivative(probe_qd, qd[k]);
        } catch (const NumericalError&) {
            std::ostringstream msg;
            msg << "non-finite partial derivative at node " << i << " (t' = " << t << ")";
            throw NumericalError(msg.str());
        }
    }
    return out;
}

std::vector<ParameterPath> generalize(std::span<const ParameterPath> raw,
                                      std::span<const GeneralizedParameterSpec> specs) {
    if (raw.size() != specs.size()) {
        throw PreconditionError("one generalized-parameter spec per raw parameter is required");
    }
    std::vector<ParameterPath> out;
    out.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) out.push_back(build_generalized_path(raw[k], specs[k]));
    return out;
}

}  // namespace

std::string_view to_string(PerturbationShape shape) {
    switch (shape) {
        case PerturbationShape::Linear: return "linear";
        case PerturbationShape::Sinusoid: return "sinusoid";
        case PerturbationShape::Bump: return "bump";
    }
    return "unknown";
}

std::optional<PerturbationShape> parse_perturbation_shape(std::string_view name) {
    if (name == "linear") return PerturbationShape::Linear;
    if (name == "sinusoid") return PerturbationShape::Sinusoid;
    if (name == "bump") return PerturbationShape::Bump;
    return std::nullopt;
}

double PerturbationFamily::angular_frequency(double t_end) const {
    return omega > 0.0 ? omega : std::numbers::pi / (2.0 * t_end);
}

double PerturbationFamily::value(double t, double t_end) const {
    if (t <= 0.0) return 0.0;
    switch (shape) {
        case PerturbationShape::Linear: return epsilon * t;
        case PerturbationShape::Sinusoid: return epsilon * std::sin(angular_frequency(t_end) * t);
        case PerturbationShape::Bump: {
            const double s = t * (t_end - t);
            return epsilon * 16.0 * s * s / std::pow(t_end, 4);
        }
    }
    return 0.0;
}

double PerturbationFamily::deriv(double t, double t_end) const {
    if (t < 0.0) return 0.0;
    switch (shape) {
        case PerturbationShape::Linear: return epsilon;
        case PerturbationShape::Sinusoid: {
            const double w = angular_frequency(t_end);
            return epsilon * w * std::cos(w * t);
        }
        case PerturbationShape::Bump:
            return epsilon * 32.0 * t * (t_end - t) * (t_end - 2.0 * t) / std::pow(t_end, 4);
    }
    return 0.0;
}

PerturbationFamily PerturbationFamily::with_epsilon(double eps) const {
    PerturbationFamily copy = *this;
    copy.epsilon = eps;
    return copy;
}

std::vector<PerturbationFamily> default_families() {
    return {{PerturbationShape::Linear, 1.0, 0.0},
            {PerturbationShape::Sinusoid, 1.0, 0.0},
            {PerturbationShape::Bump, 1.0, 0.0}};
}

std::vector<double> default_epsilon_ladder() {
    return {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
}

ParameterPath perturb(const ParameterPath& forecast, const PerturbationFamily& family) {
    const TimeGrid& grid = forecast.grid();
    std::vector<double> dv(grid.n_steps() + 1), dd(grid.n_steps() + 1);
    for (int i = 0; i <= grid.n_steps(); ++i) {
        const double t = grid.time(i);
        dv[i] = family.value(t, grid.t_end());
        dd[i] = family.deriv(t, grid.t_end());
    }
    return forecast.with_offset(dv, dd);
}

std::vector<double> el_residual(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                                int param_index) {
    auto partials = partial_series(policy, q_paths, param_index);
    const auto d_dt = differentiate_path(partials.dqd, q_paths.front().grid());
    std::vector<double> out(partials.dq.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = partials.dq[i] - d_dt[i];
    return out;
}

double boundary_residual(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                         int param_index) {
    check_paths(policy, q_paths);
    if (param_index < 0 || param_index >= policy.n_params()) {
        throw PreconditionError("parameter index out of range");
    }
    const TimeGrid& grid = q_paths.front().grid();
    const int last = grid.n_steps();
    std::vector<double> q, qd;
    for (const auto& p : q_paths) {
        q.push_back(p.samples().value(last));
        qd.push_back(p.samples().deriv(last));
    }
    auto probe = [&](double x) {
        auto local = qd;
        local[param_index] = x;
        return policy(q, local, grid.t_end());
    };
    try {
        return std::abs(partial_derivative(probe, qd[param_index]));
    } catch (const NumericalError&) {
        throw NumericalError("non-finite partial derivative at the terminal node");
    }
}

double policy_scale(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths) {
    const auto cashflows = cashflow_series(policy, q_paths);
    const double t_end = q_paths.front().grid().t_end();
    std::vector<double> node_scale(cashflows.size());
    for (std::size_t i = 0; i < cashflows.size(); ++i) node_scale[i] = std::abs(cashflows[i]);
    for (int k = 0; k < policy.n_params(); ++k) {
        const auto partials = partial_series(policy, q_paths, k);
        for (std::size_t i = 0; i < node_scale.size(); ++i) {
            node_scale[i] += std::abs(partials.dq[i]) + std::abs(partials.dqd[i]) / t_end;
        }
    }
    return *std::max_element(node_scale.begin(), node_scale.end()) + 1e-30;
}

std::vector<SweepPoint> perturbation_sweep(const CashflowPolicy& policy,
                                           std::span<const ParameterPath> forecast_paths,
                                           const PerturbationFamily& family,
                                           std::span<const GeneralizedParameterSpec> specs,
                                           const ValuationConfig& config,
                                           std::span<const double> epsilons,
                                           std::optional<int> target) {
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw PreconditionError("sweep epsilons must be positive");
        if (i > 0 && !(epsilons[i] > epsilons[i - 1])) {
            throw PreconditionError("sweep epsilons must be sorted ascending");
        }
    }
    if (target && (*target < 0 || *target >= static_cast<int>(forecast_paths.size()))) {
        throw PreconditionError("perturbed parameter index out of range");
    }
    const auto forecast_q = generalize(forecast_paths, specs);
    const double t_end = forecast_paths.front().grid().t_end();
    const double baseline = policy_value(policy, forecast_q, config, t_end);

    std::vector<SweepPoint> out;
    out.reserve(epsilons.size());
    for (double eps : epsilons) {
        const auto shaped = family.with_epsilon(eps);
        std::vector<ParameterPath> observed;
        observed.reserve(forecast_paths.size());
        for (std::size_t k = 0; k < forecast_paths.size(); ++k) {
            const bool hit = !target || *target == static_cast<int>(k);
            observed.push_back(hit ? perturb(forecast_paths[k], shaped) : forecast_paths[k]);
        }
        const auto observed_q = generalize(observed, specs);
        out.push_back({eps, policy_value(policy, observed_q, config, t_end) - baseline});
    }
    return out;
}

bool ScalingFit::zero_response() const { return std::isinf(slope) && slope > 0.0; }

ScalingFit fit_scaling_exponent(std::span<const SweepPoint> pairs, double floor) {
    if (pairs.size() < 4) throw PreconditionError("scaling fit needs at least 4 (epsilon, dV) pairs");
    std::vector<double> xs, ys;
    for (const auto& p : pairs) {
        if (!(p.epsilon > 0.0)) throw PreconditionError("scaling fit needs positive epsilons");
        if (std::abs(p.delta_v) > floor) {
            xs.push_back(std::log(p.epsilon));
            ys.push_back(std::log(std::abs(p.delta_v)));
        }
    }
    if (xs.size() < 2) {
        return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN(),
                static_cast<int>(xs.size())};
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw PreconditionError("scaling fit needs distinct epsilons");
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (my + slope * (xs[i] - mx));
        ss_res += r * r;
    }
    const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return {slope, r2, static_cast<int>(xs.size())};
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::NonRobust: return "NonRobust";
        case Verdict::RobustFirstOrder: return "RobustFirstOrder";
        case Verdict::SuperRobustEmpirical: return "SuperRobustEmpirical";
    }
    return "unknown";
}

bool RobustnessReport::zero_response() const {
    return std::isinf(scaling_exponent) && scaling_exponent > 0.0;
}

RobustnessReport classify(const CashflowPolicy& policy, std::span<const ParameterPath> forecast_paths,
                          std::span<const GeneralizedParameterSpec> specs,
                          const ValuationConfig& config,
                          std::span<const PerturbationFamily> families,
                          const ClassifyOptions& options) {
    if (families.size() < 2) {
        throw PreconditionError("classification needs at least two perturbation families");
    }
    config.validate();
    const auto q_paths = generalize(forecast_paths, specs);
    const double t_end = q_paths.front().grid().t_end();

    RobustnessReport report;
    for (int k = 0; k < policy.n_params(); ++k) {
        for (double r : el_residual(policy, q_paths, k)) {
            report.el_residual_sup = std::max(report.el_residual_sup, std::abs(r));
        }
        report.boundary_residual =
            std::max(report.boundary_residual, boundary_residual(policy, q_paths, k));
    }

    std::vector<double> ladder = options.epsilons;
    for (double& e : ladder) e *= options.amplitude_scale;
    const double large = options.large_epsilon_factor * options.amplitude_scale;

    // The scale also looks at |Q| on the large-amplitude observed paths, so a
    // forecast on which Q and its gradient all vanish still gets a magnitude.
    double scale = policy_scale(policy, q_paths);
    double worst_large = 0.0;
    for (const auto& family : families) {
        for (int k = 0; k < policy.n_params(); ++k) {
            FamilyResult result;
            result.family = family;
            result.param_index = k;
            result.sweep =
                perturbation_sweep(policy, forecast_paths, family, specs, config, ladder, k);
            const double large_eps[] = {large};
            result.large_epsilon = large;
            result.large_delta_v =
                perturbation_sweep(policy, forecast_paths, family, specs, config, large_eps, k)
                    .front()
                    .delta_v;
            worst_large = std::max(worst_large, std::abs(result.large_delta_v));

            std::vector<ParameterPath> observed(forecast_paths.begin(), forecast_paths.end());
            observed[k] = perturb(forecast_paths[k], family.with_epsilon(large));
            for (double flow : cashflow_series(policy, generalize(observed, specs))) {
                scale = std::max(scale, std::abs(flow));
            }
            report.per_family.push_back(std::move(result));
        }
    }
    report.policy_scale = scale;
    report.noise_floor = std::max(1e-13, options.noise_floor * scale * t_end);

    report.scaling_exponent = std::numeric_limits<double>::infinity();
    report.scaling_r2 = std::numeric_limits<double>::quiet_NaN();
    for (auto& result : report.per_family) {
        result.fit = fit_scaling_exponent(result.sweep, report.noise_floor);
        if (result.fit.slope < report.scaling_exponent) {
            report.scaling_exponent = result.fit.slope;
            report.scaling_r2 = result.fit.r2;
        }
    }

    const double residual_tol = options.residual_tolerance * report.policy_scale;
    const bool first_order = report.el_residual_sup < residual_tol &&
                             report.boundary_residual < residual_tol &&
                             report.scaling_exponent >= options.slope_threshold;
    const bool super_robust =
        first_order && worst_large < options.super_robust_tolerance * report.policy_scale * t_end;
    report.verdict = super_robust ? Verdict::SuperRobustEmpirical
                     : first_order ? Verdict::RobustFirstOrder
                                   : Verdict::NonRobust;
    return report;
}

}  // namespace policy_forge
