#include "policy_forge/toy_ss.hpp"

#include <cmath>

namespace policy_forge::toy_ss {

namespace {

// (e^{x} - 1 - x) / x^2, stable near x = 0.
double second_order_growth(double x) {
    if (std::abs(x) < 1e-3) {
        return 0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0 + x * x * x * x / 720.0;
    }
    return (std::expm1(x) - x) / (x * x);
}

// (e^{r s} - 1) / r, with the r -> 0 limit s.
double growth_annuity(double rate, double s) {
    const double x = rate * s;
    if (std::abs(x) < 1e-8) return s * (1.0 + 0.5 * x);
    return std::expm1(x) / rate;
}

}  // namespace

void ToySSParams::validate() const {
    if (!(c_in > 0.0) || !(c_out > 0.0)) throw PreconditionError("c_in and c_out must be positive");
    if (!(t_end > 0.0)) throw PreconditionError("termination time must be positive");
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw PreconditionError("rate must be non-negative");
    if (!std::isfinite(epsilon)) throw PreconditionError("epsilon must be finite");
}

double forecast_share(const ToySSParams& params) {
    params.validate();
    return params.c_in / params.total();
}

double deficit_closed_form(const ToySSParams& params, double t) {
    params.validate();
    if (t < 0.0 || t > params.t_end * (1.0 + 1e-12)) {
        throw PreconditionError("deficit time must lie in [0, T]");
    }
    // -eps (c_in + c_out) / r^2 [e^{rt} - 1 - rt] = -eps (c_in + c_out) t^2 g(rt)
    return -params.epsilon * params.total() * t * t * second_order_growth(params.rate * t);
}

CashflowPolicy base_policy(const ToySSParams& params) {
    params.validate();
    const ToySSParams p = params;
    return CashflowPolicy(
        [p](std::span<const double> q, std::span<const double>, double t) {
            const double share = q[0];
            return (p.c_in * (1.0 - share) - p.c_out * share) * std::exp(p.rate * (p.t_end - t));
        },
        1, false);
}

double robust_coefficient(const ToySSParams& params, double t) {
    return params.total() * growth_annuity(params.rate, params.t_end - t);
}

CashflowPolicy robust_policy_closed_form(const ToySSParams& params) {
    params.validate();
    const ToySSParams p = params;
    return CashflowPolicy(
        [p](std::span<const double> q, std::span<const double> qd, double t) {
            const double share = q[0];
            const double growth = std::exp(p.rate * (p.t_end - t));
            return (p.c_in * (1.0 - share) - p.c_out * share) * growth +
                   robust_coefficient(p, t) * qd[0];
        },
        1, true);
}

PayIn pay_in_pg(const ToySSParams& params, double delta_p) {
    const double share = forecast_share(params) + delta_p;
    if (share >= 1.0) throw PreconditionError("retiree share saturated");
    const double leading = params.c_in + params.total() * params.total() / params.c_out * delta_p;
    return {leading, params.c_out * share / (1.0 - share)};
}

double pay_in_robust(const ToySSParams& params, double delta_p_dot, double t) {
    params.validate();
    return params.c_in +
           params.total() * params.total() / params.c_out * (params.t_end - t) * delta_p_dot;
}

}  // namespace policy_forge::toy_ss
