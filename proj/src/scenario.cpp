#include "policy_forge/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "policy_forge/constructors.hpp"
#include "policy_forge/toy_ss.hpp"

namespace policy_forge {

namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

std::string index_key(const std::string& prefix, std::size_t i) {
    return prefix + "[" + std::to_string(i) + "]";
}

// Reads the members of one JSON object and rejects whatever was not read.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ScenarioError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key) {
        if (!node_.contains(key)) throw ScenarioError(join(path_, key), "missing key");
        seen_.insert(key);
        return node_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ScenarioError(join(path_, key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ScenarioError(join(path_, key), "expected a finite number");
        return x;
    }

    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    int integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ScenarioError(join(path_, key), "expected an integer");
        const auto x = v.get<long long>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
            throw ScenarioError(join(path_, key), "integer out of range");
        }
        return static_cast<int>(x);
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ScenarioError(join(path_, key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ScenarioError(join(path_, key), "expected an array of numbers");
        std::vector<double> out;
        out.reserve(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                throw ScenarioError(index_key(join(path_, key), i), "expected a finite number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    const json& array(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ScenarioError(join(path_, key), "expected an array");
        return v;
    }

    std::string child(const std::string& key) const { return join(path_, key); }
    const std::string& path() const { return path_; }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.contains(key)) throw ScenarioError(join(path_, key), "unknown key");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

ForecastSpec parse_forecast(const json& node, const std::string& path) {
    ObjectReader r(node, path);
    ForecastSpec out;
    const std::string family = r.string("family");
    if (family == "constant") {
        out.family = ForecastSpec::Family::Constant;
        out.value = r.number("value");
    } else if (family == "linear") {
        out.family = ForecastSpec::Family::Linear;
        out.intercept = r.number("intercept");
        out.slope = r.number("slope");
    } else if (family == "table") {
        out.family = ForecastSpec::Family::Table;
        out.values = r.numbers("values");
    } else {
        throw ScenarioError(r.child("family"), "unknown forecast family \"" + family + "\"");
    }
    r.finish();
    return out;
}

ParameterEntry parse_parameter(const json& node, const std::string& path) {
    ObjectReader r(node, path);
    ParameterEntry out;
    out.name = r.string("name");
    if (out.name.empty()) throw ScenarioError(r.child("name"), "empty parameter name");
    const std::string kernel = r.has("kernel") ? r.string("kernel") : "identity";
    if (kernel == "identity") {
        out.kernel = IdentityKernel{};
    } else if (kernel == "moving_average") {
        const double w = r.number("kernel_arg");
        if (!(w > 0.0)) throw ScenarioError(r.child("kernel_arg"), "window must be positive");
        out.kernel = MovingAverageKernel{w};
    } else if (kernel == "exponential") {
        const double rate = r.number("kernel_arg");
        if (!(rate > 0.0)) throw ScenarioError(r.child("kernel_arg"), "rate must be positive");
        out.kernel = ExponentialKernel{rate};
    } else {
        throw ScenarioError(r.child("kernel"), "unknown kernel \"" + kernel + "\"");
    }
    out.forecast = parse_forecast(r.raw("forecast"), r.child("forecast"));
    r.finish();
    return out;
}

int resolve(const std::map<std::string, int>& index, const std::string& name,
            const std::string& path) {
    auto it = index.find(name);
    if (it == index.end()) throw ScenarioError(path, "unknown parameter \"" + name + "\"");
    return it->second;
}

std::vector<double> per_parameter(const json& node, const std::string& path,
                                  const std::map<std::string, int>& index) {
    if (!node.is_object()) throw ScenarioError(path, "expected an object keyed by parameter");
    std::vector<double> out(index.size(), 0.0);
    for (const auto& [name, value] : node.items()) {
        const std::string key = join(path, name);
        const int k = resolve(index, name, key);
        if (!value.is_number() || !std::isfinite(value.get<double>())) {
            throw ScenarioError(key, "expected a finite number");
        }
        out[k] = value.get<double>();
    }
    return out;
}

LinearFormSpec parse_linear_form(const json& node, const std::string& path,
                                 const std::map<std::string, int>& index) {
    ObjectReader r(node, path);
    LinearFormSpec out;
    out.coeff_const = r.number_or("coeff_const", 0.0);
    if (r.has("coeff_time")) out.coeff_time = r.numbers("coeff_time");
    out.coeff_q = r.has("coeff_q") ? per_parameter(r.raw("coeff_q"), r.child("coeff_q"), index)
                                   : std::vector<double>(index.size(), 0.0);
    out.coeff_qdot = r.has("coeff_qdot")
                         ? per_parameter(r.raw("coeff_qdot"), r.child("coeff_qdot"), index)
                         : std::vector<double>(index.size(), 0.0);
    r.finish();
    return out;
}

GeneratingPolynomialSpec parse_generating(const json& node, const std::string& path,
                                          const std::map<std::string, int>& index) {
    ObjectReader r(node, path);
    GeneratingPolynomialSpec out;
    const json& terms = r.array("terms");
    if (terms.empty()) throw ScenarioError(r.child("terms"), "at least one term required");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tp = index_key(r.child("terms"), i);
        ObjectReader t(terms[i], tp);
        PolynomialTerm term;
        term.coeff = t.number_or("coeff", 1.0);
        if (t.has("time_poly")) term.time_poly = t.numbers("time_poly");
        term.powers.assign(index.size(), 0);
        term.shifts.assign(index.size(), 0.0);
        if (t.has("powers")) {
            const json& powers = t.raw("powers");
            if (!powers.is_object()) throw ScenarioError(t.child("powers"), "expected an object");
            for (const auto& [name, value] : powers.items()) {
                const std::string key = join(t.child("powers"), name);
                const int k = resolve(index, name, key);
                if (!value.is_number_integer() || value.get<long long>() < 0 ||
                    value.get<long long>() > 64) {
                    throw ScenarioError(key, "expected a power between 0 and 64");
                }
                term.powers[k] = value.get<int>();
            }
        }
        if (t.has("shifts")) term.shifts = per_parameter(t.raw("shifts"), t.child("shifts"), index);
        t.finish();
        out.terms.push_back(std::move(term));
    }
    r.finish();
    return out;
}

PolicySpec parse_policy(const json& node, const std::string& path,
                        const std::map<std::string, int>& index) {
    if (!node.is_object()) throw ScenarioError(path, "expected an object");
    for (const auto& [kind, body] : node.items()) {
        if (kind != "toy_ss" && kind != "toy_ss_robust" && kind != "linear_form" &&
            kind != "generating_polynomial") {
            throw ScenarioError(join(path, kind), "unknown key");
        }
    }
    if (node.size() != 1) {
        throw ScenarioError(path, "policy must hold exactly one of toy_ss, toy_ss_robust, "
                                  "linear_form, generating_polynomial");
    }
    const auto& [kind, body] = *node.items().begin();
    const std::string sub = join(path, kind);
    if (kind == "toy_ss" || kind == "toy_ss_robust") {
        ObjectReader r(body, sub);
        ToySSPolicySpec out;
        out.c_in = r.number_or("c_in", 1.0);
        out.c_out = r.number_or("c_out", 3.0);
        out.robust = kind == "toy_ss_robust";
        r.finish();
        if (index.size() != 1) throw ScenarioError(sub, "toy model takes exactly one parameter");
        return out;
    }
    if (kind == "linear_form") return parse_linear_form(body, sub, index);
    return parse_generating(body, sub, index);
}

PerturbationFamily parse_perturbation(const json& node, const std::string& path) {
    ObjectReader r(node, path);
    PerturbationFamily out;
    const std::string shape = r.string("shape");
    const auto parsed = parse_perturbation_shape(shape);
    if (!parsed) throw ScenarioError(r.child("shape"), "unknown shape \"" + shape + "\"");
    out.shape = *parsed;
    out.epsilon = r.number("epsilon");
    out.omega = r.number_or("omega", 0.0);
    if (out.omega < 0.0) throw ScenarioError(r.child("omega"), "omega must be non-negative");
    r.finish();
    return out;
}

ParameterPath forecast_path(const ForecastSpec& spec, const TimeGrid& grid) {
    switch (spec.family) {
        case ForecastSpec::Family::Constant:
            return ParameterPath::constant(grid, spec.value);
        case ForecastSpec::Family::Linear: {
            const double a = spec.intercept, b = spec.slope;
            return ParameterPath::from_analytic(
                grid, [a, b](double t) { return a + b * t; }, [b](double) { return b; });
        }
        case ForecastSpec::Family::Table:
            return ParameterPath::from_table(grid, spec.values);
    }
    throw PreconditionError("unknown forecast family");
}

double horner(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
}

double horner_deriv(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (std::size_t j = c.size(); j-- > 1;) acc = acc * t + static_cast<double>(j) * c[j];
    return acc;
}

// coeff * P(t) * prod (q_k - s_k)^n_k, with d/dq_k when k >= 0.
double term_value(const PolynomialTerm& term, std::span<const double> q, double time_factor,
                  int k_diff) {
    double v = term.coeff * time_factor;
    for (std::size_t k = 0; k < term.powers.size(); ++k) {
        const int n = term.powers[k];
        const double x = q[k] - term.shifts[k];
        if (static_cast<int>(k) == k_diff) {
            if (n == 0) return 0.0;
            v *= n * std::pow(x, n - 1);
        } else if (n > 0) {
            v *= std::pow(x, n);
        }
    }
    return v;
}

CashflowPolicy generating_policy(const GeneratingPolynomialSpec& spec, const TimeGrid& grid,
                                 const std::vector<ParameterPath>& forecast) {
    auto terms = std::make_shared<const std::vector<PolynomialTerm>>(spec.terms);
    StateFunction l = [terms](std::span<const double> q, double t) {
        double total = 0.0;
        for (const auto& term : *terms) total += term_value(term, q, horner(term.time_poly, t), -1);
        return total;
    };
    GeneratingFunction::Partials partials;
    partials.dl_dq = [terms](std::span<const double> q, double t, int k) {
        double total = 0.0;
        for (const auto& term : *terms) total += term_value(term, q, horner(term.time_poly, t), k);
        return total;
    };
    partials.dl_dt = [terms](std::span<const double> q, double t) {
        double total = 0.0;
        for (const auto& term : *terms) {
            total += term_value(term, q, horner_deriv(term.time_poly, t), -1);
        }
        return total;
    };
    std::vector<double> q0, qT;
    for (const auto& path : forecast) {
        q0.push_back(path.value(0));
        qT.push_back(path.value(grid.n_steps()));
    }
    GeneratingFunction gen(std::move(l), std::move(q0), std::move(qT), grid.t_end(),
                           std::move(partials));
    return from_generating_function(gen);
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", std::string("invalid JSON: ") + e.what());
    }
    ObjectReader root(doc, "");
    Scenario out;

    {
        ObjectReader grid(root.raw("grid"), "grid");
        out.t_end = grid.number("t_end");
        if (!(out.t_end > 0.0)) throw ScenarioError("grid.t_end", "must be positive");
        if (grid.has("n_steps")) out.n_steps = grid.integer("n_steps");
        if (out.n_steps < 2 || out.n_steps % 2 != 0) {
            throw ScenarioError("grid.n_steps", "must be a positive even integer");
        }
        if (grid.has("history_steps")) {
            out.history_steps = grid.integer("history_steps");
            if (*out.history_steps < 0) {
                throw ScenarioError("grid.history_steps", "must be non-negative");
            }
        }
        grid.finish();
    }

    if (root.has("valuation")) {
        ObjectReader val(root.raw("valuation"), "valuation");
        out.growth_rate = val.number_or("growth_rate", 0.0);
        val.finish();
    }

    const json& params = root.array("parameters");
    if (params.empty()) throw ScenarioError("parameters", "at least one parameter required");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string path = index_key("parameters", i);
        auto entry = parse_parameter(params[i], path);
        if (!index.emplace(entry.name, static_cast<int>(i)).second) {
            throw ScenarioError(path + ".name", "duplicate parameter \"" + entry.name + "\"");
        }
        out.parameters.push_back(std::move(entry));
    }

    out.policy = parse_policy(root.raw("policy"), "policy", index);

    if (root.has("perturbations")) {
        const json& list = root.array("perturbations");
        for (std::size_t i = 0; i < list.size(); ++i) {
            out.perturbations.push_back(parse_perturbation(list[i], index_key("perturbations", i)));
        }
    }
    root.finish();
    return out;
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ScenarioError("", "cannot read scenario file '" + file.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

int required_history_steps(const std::vector<ParameterEntry>& parameters, double step) {
    double memory = 0.0;
    for (const auto& p : parameters) memory = std::max(memory, kernel_memory(p.kernel));
    if (memory == 0.0) return 0;
    return static_cast<int>(std::ceil(memory / step - 1e-9)) + 1;
}

PreparedScenario prepare(const Scenario& scenario) {
    const double step = scenario.t_end / scenario.n_steps;
    int history = 0;
    if (scenario.history_steps) {
        history = *scenario.history_steps;
    } else {
        history = required_history_steps(scenario.parameters, step);
        // A table fixes the history length itself.
        for (std::size_t i = 0; i < scenario.parameters.size(); ++i) {
            const auto& f = scenario.parameters[i].forecast;
            if (f.family != ForecastSpec::Family::Table) continue;
            const int implied = static_cast<int>(f.values.size()) - scenario.n_steps - 1;
            if (implied < 0) {
                throw ScenarioError(index_key("parameters", i) + ".forecast.values",
                                    "table shorter than the grid");
            }
            history = implied;
        }
    }
    TimeGrid grid(scenario.t_end, scenario.n_steps, history);
    for (std::size_t i = 0; i < scenario.parameters.size(); ++i) {
        const auto& f = scenario.parameters[i].forecast;
        if (f.family == ForecastSpec::Family::Table &&
            f.values.size() != static_cast<std::size_t>(history + scenario.n_steps + 1)) {
            throw ScenarioError(index_key("parameters", i) + ".forecast.values",
                                "table needs history_steps + n_steps + 1 values");
        }
    }

    ValuationConfig config{scenario.growth_rate};
    config.validate();

    std::vector<std::string> names;
    std::vector<ParameterPath> raw, generalized;
    std::vector<GeneralizedParameterSpec> specs;
    for (const auto& p : scenario.parameters) {
        names.push_back(p.name);
        raw.push_back(forecast_path(p.forecast, grid));
        specs.push_back(GeneralizedParameterSpec{p.kernel, {}});
        generalized.push_back(build_generalized_path(raw.back(), specs.back()));
    }
    CashflowPolicy policy = make_policy(scenario.policy, grid, config, generalized);
    return PreparedScenario{grid,           config,         std::move(names),      std::move(raw),
                            std::move(specs), std::move(generalized), std::move(policy)};
}

CashflowPolicy make_policy(const PolicySpec& spec, const TimeGrid& grid,
                           const ValuationConfig& config,
                           const std::vector<ParameterPath>& forecast) {
    const int n_params = static_cast<int>(forecast.size());
    if (const auto* toy = std::get_if<ToySSPolicySpec>(&spec)) {
        toy_ss::ToySSParams params;
        params.c_in = toy->c_in;
        params.c_out = toy->c_out;
        params.t_end = grid.t_end();
        params.rate = config.growth_rate;
        return toy->robust ? toy_ss::robust_policy_closed_form(params) : toy_ss::base_policy(params);
    }
    if (const auto* lin = std::get_if<LinearFormSpec>(&spec)) {
        const LinearFormSpec f = *lin;
        bool uses_qdot = false;
        for (double b : f.coeff_qdot) uses_qdot = uses_qdot || b != 0.0;
        return CashflowPolicy(
            [f](std::span<const double> q, std::span<const double> qd, double t) {
                double total = f.coeff_const;
                double power = t;
                for (double a : f.coeff_time) {
                    total += a * power;
                    power *= t;
                }
                for (std::size_t k = 0; k < f.coeff_q.size(); ++k) {
                    total += f.coeff_q[k] * q[k] + f.coeff_qdot[k] * qd[k];
                }
                return total;
            },
            n_params, uses_qdot);
    }
    return generating_policy(std::get<GeneratingPolynomialSpec>(spec), grid, forecast);
}

}  // namespace policy_forge
