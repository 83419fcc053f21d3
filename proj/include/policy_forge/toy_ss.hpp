#pragma once

// Toy Social Security model: a constant population in which retirees (share p)
// receive c_out and everybody else pays c_in. The forecast share is the
// Pay-As-You-Go balance p* = c_in / (c_in + c_out).

#include "policy_forge/policy.hpp"

namespace policy_forge::toy_ss {

struct ToySSParams {
    double c_in = 1.0;
    double c_out = 3.0;
    double t_end = 10.0;
    double rate = 0.0;
    double epsilon = 0.01;  // drift of the observed share, dp = epsilon * t'

    void validate() const;
    double total() const noexcept { return c_in + c_out; }
};

double forecast_share(const ToySSParams& params);

// V(t) under p = p* + epsilon t':  -epsilon (c_in + c_out) (e^{rt} - 1 - rt) / r^2.
double deficit_closed_form(const ToySSParams& params, double t);

// Q~ = (c_in (1 - p) - c_out p) e^{r(T - t')}, one parameter, no q_dot.
CashflowPolicy base_policy(const ToySSParams& params);

// Q = [c_in (1 - p) - c_out p] e^{r(T-t')} + (c_in + c_out) (e^{r(T-t')} - 1) / r * p_dot
CashflowPolicy robust_policy_closed_form(const ToySSParams& params);

// The A(t') of the closed-form robust extension.
double robust_coefficient(const ToySSParams& params, double t);

struct PayIn {
    double leading;  // c_in + (c_in + c_out)^2 / c_out * dp
    double exact;    // c_out * p / (1 - p) with p = p* + dp
};

PayIn pay_in_pg(const ToySSParams& params, double delta_p);

// c_in + (c_in + c_out)^2 / c_out * (T - t) * dp_dot
double pay_in_robust(const ToySSParams& params, double delta_p_dot, double t);

}  // namespace policy_forge::toy_ss
