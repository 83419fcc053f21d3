#include "policy_forge/constructors.hpp"

#include <cmath>
#include <memory>

namespace policy_forge {

GeneratingFunction::GeneratingFunction(StateFunction l_eval, std::vector<double> forecast_initial,
                                       std::vector<double> forecast_terminal, double t_end,
                                       Partials partials)
    : l_(std::move(l_eval)),
      initial_(std::move(forecast_initial)),
      terminal_(std::move(forecast_terminal)),
      t_end_(t_end),
      partials_(std::move(partials)) {
    if (!l_) throw PreconditionError("generating function must be callable");
    if (initial_.empty() || initial_.size() != terminal_.size()) {
        throw PreconditionError("forecast endpoints must name every parameter once");
    }
    if (!(t_end_ > 0.0)) throw PreconditionError("termination time must be positive");

    double scale = std::abs(value(initial_, 0.0)) + std::abs(value(terminal_, t_end_));
    for (int k = 0; k < n_params(); ++k) scale += std::abs(dq(initial_, 0.0, k));
    const double tolerance = 1e-6 * scale + 1e-12;
    for (int k = 0; k < n_params(); ++k) {
        if (std::abs(dq(terminal_, t_end_, k)) > tolerance) {
            throw PreconditionError("generating function violates dL/dq(T) = 0");
        }
    }
}

double GeneratingFunction::dq(std::span<const double> q, double t, int k) const {
    if (partials_.dl_dq) return partials_.dl_dq(q, t, k);
    std::vector<double> local(q.begin(), q.end());
    return five_point_derivative(
        [&](double x) {
            local[k] = x;
            return l_(local, t);
        },
        q[k]);
}

double GeneratingFunction::dt(std::span<const double> q, double t) const {
    if (partials_.dl_dt) return partials_.dl_dt(q, t);
    return five_point_derivative([&](double s) { return l_(q, s); }, t);
}

std::array<double, 3> GeneratingFunction::terminal_q_derivatives(int k) const {
    if (k < 0 || k >= n_params()) throw PreconditionError("parameter index out of range");
    std::vector<double> local = terminal_;
    const double x = terminal_[k];
    const double h = 1e-2 * std::max(1.0, std::abs(x));
    auto f = [&](double v) {
        local[k] = v;
        return l_(local, t_end_);
    };
    const double f0 = f(x), f1 = f(x + h), m1 = f(x - h), f2 = f(x + 2 * h), m2 = f(x - 2 * h);
    return {(-f2 + 8 * f1 - 8 * m1 + m2) / (12 * h), (f1 - 2 * f0 + m1) / (h * h),
            (f2 - 2 * f1 + 2 * m1 - m2) / (2 * h * h * h)};
}

CashflowPolicy from_generating_function(const GeneratingFunction& gen) {
    return CashflowPolicy(
        [gen](std::span<const double> q, std::span<const double> qd, double t) {
            double total = gen.dt(q, t);
            for (int k = 0; k < gen.n_params(); ++k) total += gen.dq(q, t, k) * qd[k];
            return total;
        },
        gen.n_params(), true);
}

CashflowPolicy from_generating_function(const GeneratingFunction& gen, int n_params) {
    if (n_params != gen.n_params()) {
        throw PreconditionError("generating function parameter count mismatch");
    }
    return from_generating_function(gen);
}

bool satisfies_super_robust_boundary(const GeneratingFunction& gen, double tolerance) {
    double scale = std::abs(gen.value(gen.forecast_initial(), 0.0)) + 1e-12;
    for (int k = 0; k < gen.n_params(); ++k) {
        for (double d : gen.terminal_q_derivatives(k)) {
            if (std::abs(d) > tolerance * scale) return false;
        }
    }
    return true;
}

CashflowPolicy from_super_robust_spec(const SuperRobustSpec& spec, int n_params, double t_end) {
    if (!(t_end > 0.0)) throw PreconditionError("termination time must be positive");
    if (!spec.m_eval) throw PreconditionError("super-robust spec needs M");
    auto m = spec.m_eval;
    auto c = spec.c_profile;
    return CashflowPolicy(
        [m, c, n_params, t_end](std::span<const double> q, std::span<const double> qd, double t) {
            // (1/T) [ -M + (T - t)(dM/dt + sum_k dM/dq_k q_dot_k) ] + C(t)
            double total_derivative = five_point_derivative([&](double s) { return m(q, s); }, t);
            std::vector<double> local(q.begin(), q.end());
            for (int k = 0; k < n_params; ++k) {
                const double dm = five_point_derivative(
                    [&](double x) {
                        local[k] = x;
                        const double v = m(local, t);
                        local[k] = q[k];
                        return v;
                    },
                    q[k]);
                total_derivative += dm * qd[k];
            }
            const double flow = (-m(q, t) + (t_end - t) * total_derivative) / t_end;
            return flow + (c ? c(t) : 0.0);
        },
        n_params, true);
}

double balance_c_profile(const StateFunction& m_eval, std::span<const double> forecast_initial,
                         double t_end) {
    if (!(t_end > 0.0)) throw PreconditionError("termination time must be positive");
    return m_eval(forecast_initial, 0.0) / t_end;
}

double RobustExtension::a_at(double t) const {
    const double x = t / grid.step();
    const double r = std::round(x);
    const int last = static_cast<int>(a_profile.size()) - 1;
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(r))) {
        return a_profile[std::clamp(static_cast<int>(r), 0, last)];
    }
    if (x <= 0.0) return a_profile.front();
    if (x >= last) return a_profile.back();
    const int i = static_cast<int>(std::floor(x));
    const double frac = x - i;
    return a_profile[i] + (a_profile[i + 1] - a_profile[i]) * frac;
}

std::pair<CashflowPolicy, RobustExtension> robust_extension(const CashflowPolicy& base,
                                                            const ParameterPath& forecast,
                                                            const ValuationConfig& config) {
    config.validate();
    if (base.n_params() != 1) throw PreconditionError("extension recipe defined for one parameter");
    if (base.uses_derivatives()) {
        throw PreconditionError("extension recipe needs a base policy without q_dot dependence");
    }
    const TimeGrid& grid = forecast.grid();
    const int n = grid.n_steps();
    const double h = grid.step();

    // g = dQ~/dq, centred on the forecast (never on observed paths).
    std::vector<double> slope(n + 1), base_flow(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double t = grid.time(i);
        const double qd[] = {forecast.samples().deriv(i)};
        const double q_i = forecast.samples().value(i);
        slope[i] = partial_derivative(
            [&](double x) {
                const double q[] = {x};
                return base(q, qd, t);
            },
            q_i);
        const double q[] = {q_i};
        base_flow[i] = base(q, qd, t);
    }

    // A(t_i) = -int_{t_i}^T g, Simpson on each suffix with the odd panel at the left.
    std::vector<double> a(n + 1);
    for (int i = 0; i <= n; ++i) {
        a[i] = -simpson(std::span(slope).subspan(i), h, PadSide::Left);
    }
    a[n] = 0.0;

    std::vector<double> extended(n + 1);
    for (int i = 0; i <= n; ++i) extended[i] = base_flow[i] + a[i] * forecast.samples().deriv(i);
    const double c = -simpson(extended, h) / grid.t_end();

    auto ext = std::make_shared<const RobustExtension>(RobustExtension{base, grid, std::move(a), c});
    CashflowPolicy policy(
        [ext](std::span<const double> q, std::span<const double> qd, double t) {
            return ext->base(q, qd, t) + ext->a_at(t) * qd[0] + ext->c_constant;
        },
        1, true);
    return {std::move(policy), *ext};
}

}  // namespace policy_forge
