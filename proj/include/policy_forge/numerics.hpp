#pragma once

/**
 * @file numerics.hpp
 * @brief Shared lattice, quadrature and finite-difference kernels.
 *
 * Everything in the library is sampled on one uniform lattice: nodes
 * t_i = i*h for i in [-history_steps, n_steps], with h = t_end / n_steps.
 * Node 0 is the inception of the policy, node n_steps its termination.
 *
 * Quadrature is composite Simpson on that lattice. A node span with an odd
 * number of panels gets one trapezoid panel on the side chosen by the caller.
 */

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "policy_forge/errors.hpp"

namespace policy_forge {

class TimeGrid {
public:
    TimeGrid(double t_end, int n_steps, int history_steps = 0);

    double t_end() const noexcept { return t_end_; }
    double t_start() const noexcept { return -history_steps_ * step_; }
    double step() const noexcept { return step_; }
    int n_steps() const noexcept { return n_steps_; }
    int history_steps() const noexcept { return history_steps_; }

    // Time of node i, i in [-history_steps, n_steps].
    double time(int node) const noexcept { return node * step_; }

    // Node index of t, or nullopt when t is not (to 1e-9 of a step) a node.
    std::optional<int> find_node(double t) const noexcept;

    // As find_node, but throws PreconditionError("bounds must be grid nodes").
    int node_of(double t) const;

    bool operator==(const TimeGrid&) const = default;

private:
    double t_end_;
    int n_steps_;
    int history_steps_;
    double step_;
};

// Values and time-derivative samples on the contiguous node range
// [first_node, last_node] of a grid.
class SampledFunction {
public:
    SampledFunction(TimeGrid grid, int first_node, std::vector<double> values,
                    std::vector<double> derivs);

    // Derivative samples from the finite-difference stencils of differentiate_path.
    static SampledFunction from_values(TimeGrid grid, int first_node, std::vector<double> values);

    // Samples of an analytic family f with derivative df on [first_node, last_node].
    template <class F, class DF>
    static SampledFunction from_analytic(const TimeGrid& grid, int first_node, int last_node,
                                         F&& f, DF&& df) {
        std::vector<double> v, d;
        v.reserve(last_node - first_node + 1);
        d.reserve(last_node - first_node + 1);
        for (int i = first_node; i <= last_node; ++i) {
            const double t = grid.time(i);
            v.push_back(f(t));
            d.push_back(df(t));
        }
        return SampledFunction(grid, first_node, std::move(v), std::move(d));
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    int first_node() const noexcept { return first_node_; }
    int last_node() const noexcept { return first_node_ + static_cast<int>(values_.size()) - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    bool contains(int node) const noexcept { return node >= first_node() && node <= last_node(); }

    double value(int node) const { return values_.at(node - first_node_); }
    double deriv(int node) const { return derivs_.at(node - first_node_); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> derivs() const noexcept { return derivs_; }

private:
    TimeGrid grid_;
    int first_node_;
    std::vector<double> values_;
    std::vector<double> derivs_;
};

enum class PadSide { Left, Right };

// Composite Simpson over all panels of `values` (spacing h). An odd panel
// count is completed with one trapezoid panel on `pad`.
double simpson(std::span<const double> values, double h, PadSide pad = PadSide::Right);

// out[i] = simpson(values[0..i], h) with right padding, for every i.
std::vector<double> cumulative_simpson(std::span<const double> values, double h);

// Integral of f over [from, to]; both bounds must be nodes inside f's range.
double integrate(const SampledFunction& f, double from, double to);

// Central differences inside, second-order one-sided stencils at both ends.
std::vector<double> differentiate_path(std::span<const double> values, double h);
std::vector<double> differentiate_path(std::span<const double> values, const TimeGrid& grid);

inline double fd_step(double scale) { return std::max(1e-6, 1e-6 * std::abs(scale)); }

// Central difference (f(at+h) - f(at-h)) / 2h with h = max(1e-6, 1e-6*|scale|).
// scale defaults to |at|.
template <class F>
double partial_derivative(F&& f, double at, std::optional<double> scale = std::nullopt) {
    const double h = fd_step(scale.value_or(at));
    const double hi = at + h;
    const double lo = at - h;
    const double up = f(hi);
    const double down = f(lo);
    if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericalError("non-finite evaluation near " + std::to_string(at));
    }
    // hi - lo is the step actually taken once at +/- h is rounded.
    return (up - down) / (hi - lo);
}

// Five-point stencil with h = 1e-3 * max(1, |scale|); scale defaults to |at|.
// Truncation is O(h^4) and the rounding floor ~eps/h stays far below that of
// partial_derivative, so its output can itself be differentiated numerically.
template <class F>
double five_point_derivative(F&& f, double at, std::optional<double> scale = std::nullopt) {
    const double h = 1e-3 * std::max(1.0, std::abs(scale.value_or(at)));
    const double f2 = f(at + 2.0 * h);
    const double f1 = f(at + h);
    const double m1 = f(at - h);
    const double m2 = f(at - 2.0 * h);
    if (!std::isfinite(f2) || !std::isfinite(f1) || !std::isfinite(m1) || !std::isfinite(m2)) {
        throw NumericalError("non-finite evaluation near " + std::to_string(at));
    }
    return (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h);
}

}  // namespace policy_forge
