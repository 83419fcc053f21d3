#include "policy_forge/numerics.hpp"

#include <cmath>

namespace policy_forge {

TimeGrid::TimeGrid(double t_end, int n_steps, int history_steps)
    : t_end_(t_end), n_steps_(n_steps), history_steps_(history_steps), step_(0.0) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw PreconditionError("grid t_end must be positive and finite");
    }
    if (n_steps <= 0 || n_steps % 2 != 0) {
        throw PreconditionError("grid n_steps must be a positive even integer");
    }
    if (history_steps < 0) {
        throw PreconditionError("grid history_steps must be non-negative");
    }
    step_ = t_end / n_steps;
}

std::optional<int> TimeGrid::find_node(double t) const noexcept {
    if (!std::isfinite(t)) return std::nullopt;
    const double x = t / step_;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(r))) return std::nullopt;
    const int node = static_cast<int>(r);
    if (node < -history_steps_ || node > n_steps_) return std::nullopt;
    return node;
}

int TimeGrid::node_of(double t) const {
    if (auto node = find_node(t)) return *node;
    throw PreconditionError("bounds must be grid nodes");
}

SampledFunction::SampledFunction(TimeGrid grid, int first_node, std::vector<double> values,
                                 std::vector<double> derivs)
    : grid_(grid), first_node_(first_node), values_(std::move(values)), derivs_(std::move(derivs)) {
    if (values_.size() != derivs_.size()) {
        throw PreconditionError("values and derivs must have one entry per node");
    }
    if (values_.empty()) {
        throw PreconditionError("sampled function needs at least one node");
    }
    if (first_node_ < -grid_.history_steps() || last_node() > grid_.n_steps()) {
        throw PreconditionError("sampled node range exceeds the grid");
    }
}

SampledFunction SampledFunction::from_values(TimeGrid grid, int first_node, std::vector<double> values) {
    auto derivs = differentiate_path(values, grid.step());
    return SampledFunction(grid, first_node, std::move(values), std::move(derivs));
}

namespace {

double simpson_even(std::span<const double> v, double h) {
    // v.size() - 1 panels, even.
    const std::size_t n = v.size() - 1;
    if (n == 0) return 0.0;
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += v[i];
    for (std::size_t i = 2; i < n; i += 2) even += v[i];
    return h / 3.0 * (v.front() + 4.0 * odd + 2.0 * even + v.back());
}

}  // namespace

double simpson(std::span<const double> values, double h, PadSide pad) {
    if (values.size() < 2) return 0.0;
    const std::size_t panels = values.size() - 1;
    if (panels % 2 == 0) return simpson_even(values, h);
    if (pad == PadSide::Left) {
        return 0.5 * h * (values[0] + values[1]) + simpson_even(values.subspan(1), h);
    }
    const std::size_t last = values.size() - 1;
    return simpson_even(values.first(last), h) + 0.5 * h * (values[last - 1] + values[last]);
}

std::vector<double> cumulative_simpson(std::span<const double> values, double h) {
    std::vector<double> out(values.size(), 0.0);
    double even_total = 0.0;  // integral up to the last even node
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (i % 2 == 0) {
            even_total += h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
            out[i] = even_total;
        } else {
            out[i] = even_total + 0.5 * h * (values[i - 1] + values[i]);
        }
    }
    return out;
}

double integrate(const SampledFunction& f, double from, double to) {
    const TimeGrid& grid = f.grid();
    const int a = grid.node_of(from);
    const int b = grid.node_of(to);
    if (a > b) throw PreconditionError("reversed bounds");
    if (!f.contains(a) || !f.contains(b)) throw PreconditionError("bounds must be grid nodes");
    const auto span = f.values().subspan(a - f.first_node(), b - a + 1);
    return simpson(span, grid.step());
}

std::vector<double> differentiate_path(std::span<const double> v, double h) {
    const std::size_t n = v.size();
    if (n < 3) throw PreconditionError("grid too coarse");
    std::vector<double> d(n);
    const double inv2h = 1.0 / (2.0 * h);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) * inv2h;
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2h;
    return d;
}

std::vector<double> differentiate_path(std::span<const double> values, const TimeGrid& grid) {
    return differentiate_path(values, grid.step());
}

}  // namespace policy_forge
