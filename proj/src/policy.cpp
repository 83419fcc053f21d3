#include "policy_forge/policy.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace policy_forge {

namespace {

constexpr double kExponentialTruncation = 1e-6;

void require_same_grid(std::span<const ParameterPath> paths) {
    for (const auto& p : paths) {
        if (!(p.grid() == paths.front().grid())) {
            throw PreconditionError("parameter paths must share one grid");
        }
    }
}

// f_map applied to every node of [t_start, T], indexed from t_start.
std::vector<double> mapped_values(const ParameterPath& p, const std::function<double(double)>& f_map) {
    const TimeGrid& grid = p.grid();
    std::vector<double> out;
    out.reserve(grid.history_steps() + grid.n_steps() + 1);
    for (int i = -grid.history_steps(); i <= grid.n_steps(); ++i) {
        const double v = p.value(i);
        out.push_back(f_map ? f_map(v) : v);
    }
    return out;
}

ParameterPath identity_path(const ParameterPath& p, const std::function<double(double)>& f_map) {
    if (!f_map) return p;
    // Dirac weight: q = F(p), q_dot = F'(p) p_dot.
    auto map_segment = [&](const SampledFunction& s) {
        std::vector<double> v, d;
        v.reserve(s.size());
        d.reserve(s.size());
        for (int i = s.first_node(); i <= s.last_node(); ++i) {
            const double x = s.value(i);
            v.push_back(f_map(x));
            d.push_back(partial_derivative(f_map, x) * s.deriv(i));
        }
        return SampledFunction(s.grid(), s.first_node(), std::move(v), std::move(d));
    };
    return ParameterPath(map_segment(p.samples()), map_segment(p.history()), p.kind());
}

ParameterPath assemble(const ParameterPath& p, std::vector<double> q, std::vector<double> q_dot) {
    const TimeGrid& grid = p.grid();
    SampledFunction hist(grid, 0, {q.front()}, {q_dot.front()});
    SampledFunction main(grid, 0, std::move(q), std::move(q_dot));
    return ParameterPath(std::move(main), std::move(hist), p.kind());
}

ParameterPath moving_average_path(const ParameterPath& p, const GeneralizedParameterSpec& spec,
                                  double window) {
    const TimeGrid& grid = p.grid();
    const double h = grid.step();
    const int history = grid.history_steps();
    if (!(window > 0.0)) throw PreconditionError("moving-average window must be positive");
    if (history * h < window * (1.0 - 1e-12)) {
        throw PreconditionError("history shorter than kernel memory");
    }
    const double panels = window / h;
    int whole = static_cast<int>(std::floor(panels + 1e-9));
    double frac = panels - whole;
    if (frac < 1e-9) frac = 0.0;
    whole = std::min(whole, history);

    const auto f = mapped_values(p, spec.f_map);
    auto at = [&](int node) { return f[node + history]; };

    std::vector<double> q(grid.n_steps() + 1), q_dot(grid.n_steps() + 1);
    for (int i = 0; i <= grid.n_steps(); ++i) {
        const int lo = i - whole;
        double integral = simpson(std::span(f).subspan(lo + history, whole + 1), h, PadSide::Left);
        double tail = at(lo);
        if (frac > 0.0) {
            tail = at(lo) + (at(lo - 1) - at(lo)) * frac;
            integral += 0.5 * frac * h * (tail + at(lo));
        }
        q[i] = integral / window;
        q_dot[i] = (at(i) - tail) / window;
    }
    return assemble(p, std::move(q), std::move(q_dot));
}

ParameterPath exponential_path(const ParameterPath& p, const GeneralizedParameterSpec& spec,
                               double rate) {
    const TimeGrid& grid = p.grid();
    const double h = grid.step();
    const int history = grid.history_steps();
    if (!(rate > 0.0)) throw PreconditionError("exponential kernel rate must be positive");
    if (!(std::exp(-rate * history * h) < kExponentialTruncation)) {
        throw PreconditionError("history shorter than kernel memory");
    }
    const auto f = mapped_values(p, spec.f_map);
    const int total = static_cast<int>(f.size());
    std::vector<double> decay(total);
    for (int k = 0; k < total; ++k) decay[k] = rate * std::exp(-rate * k * h);

    std::vector<double> q(grid.n_steps() + 1), q_dot(grid.n_steps() + 1);
    std::vector<double> integrand;
    integrand.reserve(total);
    for (int i = 0; i <= grid.n_steps(); ++i) {
        const int top = i + history;  // index of node i in f
        integrand.assign(top + 1, 0.0);
        for (int j = 0; j <= top; ++j) integrand[j] = decay[top - j] * f[j];
        q[i] = simpson(integrand, h, PadSide::Left);
        // Leibniz rule on the truncated kernel.
        q_dot[i] = rate * (f[top] - q[i]);
    }
    return assemble(p, std::move(q), std::move(q_dot));
}

}  // namespace

ParameterPath::ParameterPath(SampledFunction samples, SampledFunction history, PathKind kind)
    : samples_(std::move(samples)), history_(std::move(history)), kind_(kind) {
    const TimeGrid& grid = samples_.grid();
    if (!(history_.grid() == grid)) throw PreconditionError("history and samples must share a grid");
    if (samples_.first_node() != 0 || samples_.last_node() != grid.n_steps()) {
        throw PreconditionError("path samples must cover [0, T]");
    }
    if (history_.last_node() != 0) throw PreconditionError("path history must end at inception");
    if (history_.value(0) != samples_.value(0)) {
        throw PreconditionError("history and samples disagree at inception");
    }
}

ParameterPath ParameterPath::constant(const TimeGrid& grid, double value) {
    return from_analytic(grid, [value](double) { return value; }, [](double) { return 0.0; });
}

ParameterPath ParameterPath::from_table(const TimeGrid& grid, std::vector<double> values,
                                       PathKind kind) {
    const int history = grid.history_steps();
    const std::size_t expected = static_cast<std::size_t>(history + grid.n_steps() + 1);
    if (values.size() != expected) {
        throw PreconditionError("table needs " + std::to_string(expected) + " node values, got " +
                                std::to_string(values.size()));
    }
    const auto derivs = differentiate_path(values, grid);
    auto split = [&](int first, int last) {
        const auto a = values.begin() + (first + history);
        const auto b = values.begin() + (last + history + 1);
        const auto da = derivs.begin() + (first + history);
        const auto db = derivs.begin() + (last + history + 1);
        return SampledFunction(grid, first, std::vector<double>(a, b), std::vector<double>(da, db));
    };
    return ParameterPath(split(0, grid.n_steps()), split(-history, 0), kind);
}

ParameterPath ParameterPath::with_offset(std::span<const double> delta_values,
                                         std::span<const double> delta_derivs) const {
    const std::size_t n = samples_.size();
    if (delta_values.size() != n || delta_derivs.size() != n) {
        throw PreconditionError("offset must have one entry per node of [0, T]");
    }
    if (delta_values[0] != 0.0) {
        throw PreconditionError("forecasting error must vanish at inception");
    }
    std::vector<double> v(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = samples_.values()[i] + delta_values[i];
        d[i] = samples_.derivs()[i] + delta_derivs[i];
    }
    return ParameterPath(SampledFunction(grid(), 0, std::move(v), std::move(d)), history_,
                         PathKind::Observed);
}

double ParameterPath::value(int node) const {
    return node >= 0 ? samples_.value(node) : history_.value(node);
}

double ParameterPath::deriv(int node) const {
    return node >= 0 ? samples_.deriv(node) : history_.deriv(node);
}

double kernel_memory(const Kernel& kernel) {
    struct Visitor {
        double operator()(const IdentityKernel&) const { return 0.0; }
        double operator()(const MovingAverageKernel& k) const { return k.window; }
        double operator()(const ExponentialKernel& k) const {
            return -std::log(kExponentialTruncation) / k.rate;
        }
    };
    return std::visit(Visitor{}, kernel);
}

ParameterPath build_generalized_path(const ParameterPath& p, const GeneralizedParameterSpec& spec) {
    struct Visitor {
        const ParameterPath& p;
        const GeneralizedParameterSpec& spec;
        ParameterPath operator()(const IdentityKernel&) const { return identity_path(p, spec.f_map); }
        ParameterPath operator()(const MovingAverageKernel& k) const {
            return moving_average_path(p, spec, k.window);
        }
        ParameterPath operator()(const ExponentialKernel& k) const {
            return exponential_path(p, spec, k.rate);
        }
    };
    return std::visit(Visitor{p, spec}, spec.kernel);
}

CashflowPolicy::CashflowPolicy(Evaluator evaluator, int n_params, bool uses_derivatives)
    : evaluator_(std::move(evaluator)), n_params_(n_params), uses_derivatives_(uses_derivatives) {
    if (!evaluator_) throw PreconditionError("policy evaluator must be callable");
    if (n_params_ <= 0) throw PreconditionError("policy needs at least one parameter");
}

CashflowPolicy CashflowPolicy::scaled(double factor) const {
    auto base = evaluator_;
    return CashflowPolicy(
        [base, factor](std::span<const double> q, std::span<const double> qd, double t) {
            return factor * base(q, qd, t);
        },
        n_params_, uses_derivatives_);
}

void ValuationConfig::validate() const {
    if (!(growth_rate >= 0.0) || !std::isfinite(growth_rate)) {
        throw PreconditionError("growth_rate must be finite and non-negative");
    }
}

std::vector<double> cashflow_series(const CashflowPolicy& policy,
                                    std::span<const ParameterPath> q_paths) {
    if (static_cast<int>(q_paths.size()) != policy.n_params()) {
        throw PreconditionError("policy expects " + std::to_string(policy.n_params()) +
                                " parameter paths, got " + std::to_string(q_paths.size()));
    }
    require_same_grid(q_paths);
    const TimeGrid& grid = q_paths.front().grid();
    const std::size_t k = q_paths.size();
    std::vector<double> q(k), qd(k), out(grid.n_steps() + 1);
    for (int i = 0; i <= grid.n_steps(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            q[j] = q_paths[j].samples().value(i);
            qd[j] = q_paths[j].samples().deriv(i);
        }
        const double t = grid.time(i);
        const double value = policy(q, qd, t);
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg << "policy evaluation non-finite at t' = " << t;
            throw NumericalError(msg.str());
        }
        out[i] = value;
    }
    return out;
}

double policy_value(const CashflowPolicy& policy, std::span<const ParameterPath> q_paths,
                    const ValuationConfig& config, double at) {
    config.validate();
    if (q_paths.empty()) throw PreconditionError("policy_value needs parameter paths");
    const TimeGrid& grid = q_paths.front().grid();
    const int node = grid.node_of(at);
    if (node < 0) throw PreconditionError("valuation time must lie in [0, T]");
    const auto cashflows = cashflow_series(policy, q_paths);
    const double integral = simpson(std::span(cashflows).first(node + 1), grid.step());
    return std::exp(config.growth_rate * (grid.time(node) - grid.t_end())) * integral;
}

std::vector<double> running_value(std::span<const double> cashflows, const TimeGrid& grid,
                                  const ValuationConfig& config) {
    config.validate();
    auto v = cumulative_simpson(cashflows, grid.step());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= std::exp(config.growth_rate * (grid.time(static_cast<int>(i)) - grid.t_end()));
    }
    return v;
}

std::vector<double> running_value(const CashflowPolicy& policy,
                                  std::span<const ParameterPath> q_paths,
                                  const ValuationConfig& config) {
    const auto cashflows = cashflow_series(policy, q_paths);
    return running_value(cashflows, q_paths.front().grid(), config);
}

bool check_derivative_independence(const CashflowPolicy& policy,
                                   std::span<const ParameterPath> q_paths, int probes,
                                   std::uint64_t seed) {
    if (probes < 3) throw PreconditionError("derivative independence needs at least 3 probes");
    if (static_cast<int>(q_paths.size()) != policy.n_params()) {
        throw PreconditionError("parameter path count does not match the policy");
    }
    require_same_grid(q_paths);
    const TimeGrid& grid = q_paths.front().grid();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_node(0, grid.n_steps());
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const std::size_t k = q_paths.size();
    std::vector<double> q(k), qd(k), qd_probe(k);
    for (int probe = 0; probe < probes; ++probe) {
        const int node = pick_node(rng);
        for (std::size_t j = 0; j < k; ++j) {
            q[j] = q_paths[j].samples().value(node);
            qd[j] = q_paths[j].samples().deriv(node);
            const double magnitude = std::max({1.0, std::abs(q[j]), std::abs(qd[j])});
            qd_probe[j] = qd[j] + magnitude * unit(rng);
        }
        const double t = grid.time(node);
        const double base = policy(q, qd, t);
        const double probed = policy(q, qd_probe, t);
        if (std::abs(probed - base) > 1e-12 * std::max(std::abs(base), std::abs(probed))) {
            return false;
        }
    }
    return true;
}

}  // namespace policy_forge
