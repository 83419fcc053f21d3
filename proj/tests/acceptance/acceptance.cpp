// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Every criterion that depends on the grid is evaluated at n_steps = 1000 and
// again at 2000; criterion 9 compares the two runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "policy_forge/commands.hpp"
#include "policy_forge/constructors.hpp"
#include "policy_forge/numerics.hpp"
#include "policy_forge/robustness.hpp"
#include "policy_forge/toy_ss.hpp"

using namespace policy_forge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    // name -> (measured value, tolerance) for the refinement comparison
    std::map<std::string, std::pair<double, double>> metrics;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void metric(const std::string& name, double value, double tolerance) {
        metrics[name] = {value, tolerance};
    }
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::vector<ParameterPath> one(ParameterPath p) {
    std::vector<ParameterPath> v;
    v.push_back(std::move(p));
    return v;
}

const std::vector<GeneralizedParameterSpec> kIdentity(1);

toy_ss::ToySSParams toy(double rate = 0.0, double eps = 0.01, double T = 10.0) {
    toy_ss::ToySSParams p;
    p.rate = rate;
    p.epsilon = eps;
    p.t_end = T;
    return p;
}

// 1. V(T) of the base toy policy under dp = eps t matches the closed form.
Outcome deficit_reproduction(int n) {
    Outcome o;
    double worst = 0.0;
    for (double r : {0.0, 0.01, 0.05}) {
        for (double eps : {0.001, 0.01}) {
            for (double T : {5.0, 10.0}) {
                auto params = toy(r, eps, T);
                TimeGrid g(T, n);
                auto observed = perturb(ParameterPath::constant(g, toy_ss::forecast_share(params)),
                                        {PerturbationShape::Linear, eps, 0.0});
                const double v = policy_value(toy_ss::base_policy(params), one(observed), {r}, T);
                const double want = toy_ss::deficit_closed_form(params, T);
                const double e = rel(v, want);
                worst = std::max(worst, e);
                o.metric("r=" + fmt(r) + " eps=" + fmt(eps) + " T=" + fmt(T), v, 1e-8 * std::abs(want));
            }
        }
    }
    o.require(worst < 1e-8, "worst relative error " + fmt(worst));
    o.detail = o.pass ? "worst rel err " + fmt(worst) + " < 1e-08" : o.detail;
    return o;
}

// 2. Base toy policy: slope 1.00 +/- 0.05 with R^2 > 0.999 for every family.
Outcome non_robust_scaling(int n) {
    Outcome o;
    auto forecast = ParameterPath::constant(TimeGrid(10.0, n), 0.25);
    std::string summary;
    for (const auto& family : default_families()) {
        auto sweep = perturbation_sweep(toy_ss::base_policy(toy()), one(forecast), family, kIdentity,
                                        {}, default_epsilon_ladder());
        auto fit = fit_scaling_exponent(sweep);
        const std::string name(to_string(family.shape));
        o.require(std::abs(fit.slope - 1.0) <= 0.05, name + " slope " + fmt(fit.slope));
        o.require(fit.r2 > 0.999, name + " R2 " + fmt(fit.r2));
        o.metric(name + " slope", fit.slope, 0.05);
        summary += name + " " + fmt(fit.slope) + " ";
    }
    if (o.pass) o.detail = "slopes " + summary + "(R2 > 0.999)";
    return o;
}

// 3. robust_extension reproduces the closed-form A; residuals of the extension vanish.
Outcome extension_correctness(int n) {
    Outcome o;
    double worst = 0.0;
    for (double r : {0.0, 0.05}) {
        auto params = toy(r);
        auto forecast = ParameterPath::constant(TimeGrid(10.0, n), 0.25);
        auto [policy, ext] = robust_extension(toy_ss::base_policy(params), forecast, {r});
        const auto& g = forecast.grid();
        for (int i = 0; i < g.n_steps(); ++i) {
            worst = std::max(worst, rel(ext.a_profile[i], toy_ss::robust_coefficient(params, g.time(i))));
        }
        o.require(ext.a_profile.back() == 0.0, "A(T) != 0 at r=" + fmt(r));
        o.metric("A(0) r=" + fmt(r), ext.a_profile.front(), 1e-6 * ext.a_profile.front());

        const double scale = policy_scale(policy, one(forecast));
        double el = 0.0;
        for (double x : el_residual(policy, one(forecast), 0)) el = std::max(el, std::abs(x));
        const double bd = boundary_residual(policy, one(forecast), 0);
        o.require(el < 1e-5 * scale, "EL residual " + fmt(el) + " at r=" + fmt(r));
        o.require(bd < 1e-6 * scale, "boundary residual " + fmt(bd) + " at r=" + fmt(r));
    }
    o.require(worst < 1e-6, "worst relative A error " + fmt(worst));
    if (o.pass) o.detail = "A rel err " + fmt(worst) + " < 1e-06, A(T) = 0, residuals below tolerance";
    return o;
}

// 4. The extended toy policy keeps V(T) = 0 for every family up to eps = 0.5.
Outcome linear_super_robustness(int n) {
    Outcome o;
    auto params = toy();
    auto forecast = ParameterPath::constant(TimeGrid(10.0, n), 0.25);
    auto [policy, ext] = robust_extension(toy_ss::base_policy(params), forecast, {});
    const double bound = 1e-8 * params.total() * params.t_end;
    double worst = 0.0;
    std::vector<double> eps = default_epsilon_ladder();
    eps.insert(eps.end(), {0.2, 0.3, 0.5});
    for (const auto& family : default_families()) {
        for (double e : eps) {
            auto observed = perturb(forecast, family.with_epsilon(e));
            bool inside = true;
            for (int i = 0; i <= n; ++i) {
                inside = inside && observed.value(i) > 0.0 && observed.value(i) < 1.0;
            }
            // p-hat must stay a share; the linear family leaves (0, 1) before 0.5
            if (!inside) continue;
            const double v = policy_value(policy, one(observed), {}, params.t_end);
            worst = std::max(worst, std::abs(v));
            if (family.shape == PerturbationShape::Bump && e == 0.5) {
                o.metric("bump 0.5", v, bound);
            }
        }
    }
    o.require(worst < bound, "max |V(T)| " + fmt(worst) + " >= " + fmt(bound));
    if (o.pass) o.detail = "max |V(T)| " + fmt(worst) + " < " + fmt(bound);
    return o;
}

// 5. Q = dL/dt' integrates to L(T) - L(0) on forecast and perturbed paths.
Outcome total_derivative_identity(int n) {
    Outcome o;
    const double T = 10.0;
    auto forecast = ParameterPath::constant(TimeGrid(T, n), 0.25);
    struct Case {
        std::string name;
        StateFunction l;
        bool nonlinear;
    };
    std::vector<Case> cases{
        {"(T-t)q^2/T", [T](std::span<const double> q, double t) { return (T - t) * q[0] * q[0] / T; },
         false},
        {"(T-t)(2q+1)e^{-t/5}",
         [T](std::span<const double> q, double t) { return (T - t) * (2 * q[0] + 1) * std::exp(-t / 5); },
         false},
        {"T(q-1/4)^2 + (T-t)q e^{-t/10} + t(q-1/4)^3",
         [T](std::span<const double> q, double t) {
             const double x = q[0] - 0.25;
             return T * x * x + (T - t) * q[0] * std::exp(-0.1 * t) + t * x * x * x;
         },
         true},
    };
    double worst = 0.0;
    for (const auto& c : cases) {
        GeneratingFunction gen(c.l, {0.25}, {0.25}, T);
        auto policy = from_generating_function(gen);
        std::vector<ParameterPath> paths{forecast};
        for (const auto& f : default_families()) paths.push_back(perturb(forecast, f.with_epsilon(0.1)));
        for (const auto& q : paths) {
            const double q0[] = {q.value(0)}, qT[] = {q.value(n)};
            const double want = gen.value(qT, T) - gen.value(q0, 0.0);
            const double got = policy_value(policy, one(q), {}, T);
            worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
        }
        if (c.nonlinear) {
            auto report = classify(policy, one(forecast), kIdentity, {}, default_families());
            o.require(report.zero_response() || report.scaling_exponent >= 1.9,
                      "nonlinear slope " + fmt(report.scaling_exponent));
            o.metric("nonlinear slope", report.zero_response() ? 1e9 : report.scaling_exponent, 0.1);
            o.detail = "nonlinear slope " + fmt(report.scaling_exponent);
        }
    }
    o.require(worst < 1e-7, "worst relative mismatch " + fmt(worst));
    o.metric("worst identity error", worst, 1e-7);
    if (o.pass) o.detail = "identity rel err " + fmt(worst) + " < 1e-07, " + o.detail + " >= 1.9";
    return o;
}

// 6. The (T - t)M ansatz: V(T) = -M(q(0), 0) + int C; the balanced C zeroes V(T).
Outcome super_robust_ansatz(int n) {
    Outcome o;
    const double T = 10.0;
    auto forecast = ParameterPath::constant(TimeGrid(T, n), 0.25);
    std::vector<std::pair<std::string, StateFunction>> ms{
        {"M=q", [](std::span<const double> q, double) { return q[0]; }},
        {"M=q^2", [](std::span<const double> q, double) { return q[0] * q[0]; }},
    };
    double worst_identity = 0.0, worst_balance = 0.0, scale_max = 0.0;
    for (const auto& [name, m] : ms) {
        const double q0[] = {0.25};
        const double c_arbitrary = 0.013;
        auto policy = from_super_robust_spec({m, [=](double) { return c_arbitrary; }}, 1, T);
        const double want = -m(q0, 0.0) + c_arbitrary * T;
        worst_identity = std::max(worst_identity, rel(policy_value(policy, one(forecast), {}, T), want));

        const double c = balance_c_profile(m, q0, T);
        auto balanced = from_super_robust_spec({m, [=](double) { return c; }}, 1, T);
        for (const auto& f : default_families()) {
            for (double e : {0.01, 0.1, 0.5, 2.0}) {
                auto observed = perturb(forecast, f.with_epsilon(e));
                const double scale = policy_scale(balanced, one(observed));
                scale_max = std::max(scale_max, scale);
                worst_balance =
                    std::max(worst_balance, std::abs(policy_value(balanced, one(observed), {}, T)) / scale);
            }
        }
    }
    o.require(worst_identity < 1e-8, "identity rel err " + fmt(worst_identity));
    o.require(worst_balance < 1e-8, "balanced |V(T)|/scale " + fmt(worst_balance));
    o.metric("identity", worst_identity, 1e-8);
    if (o.pass) {
        o.detail = "identity rel err " + fmt(worst_identity) + ", balanced |V|/scale " +
                   fmt(worst_balance) + " < 1e-08";
    }
    return o;
}

// 7. Pay-in series against hand arithmetic and the second-order gap bound.
Outcome pay_in_comparison(int) {
    Outcome o;
    auto p = toy();
    // (t, D_PG leading, D_R) for dp = 0.01 t, dp_dot = 0.01, worked by hand:
    // D_PG = 1 + (16/3)(0.01 t), D_R = 1 + (16/3)(10 - t)(0.01)
    const double hand[5][3] = {{0.0, 1.0, 1.5333333333},
                               {2.5, 1.1333333333, 1.4},
                               {5.0, 1.2666666667, 1.2666666667},
                               {7.5, 1.4, 1.1333333333},
                               {10.0, 1.5333333333, 1.0}};
    double worst = 0.0;
    for (const auto& row : hand) {
        const double t = row[0];
        worst = std::max(worst, std::abs(toy_ss::pay_in_pg(p, 0.01 * t).leading - row[1]));
        worst = std::max(worst, std::abs(toy_ss::pay_in_robust(p, 0.01, t) - row[2]));
    }
    o.require(worst < 1e-5, "hand arithmetic mismatch " + fmt(worst));
    const double total = p.total();
    double worst_ratio = 0.0;
    for (int i = -100; i <= 100; ++i) {
        const double dp = 0.001 * i;
        const auto pay = toy_ss::pay_in_pg(p, dp);
        const double bound = 2.0 * total * total * total / (p.c_out * p.c_out) * dp * dp;
        if (dp != 0.0) worst_ratio = std::max(worst_ratio, std::abs(pay.exact - pay.leading) / bound);
        o.require(std::abs(pay.exact - pay.leading) <= bound + 1e-15, "gap bound broken at dp=" + fmt(dp));
    }
    if (o.pass) {
        o.detail = "max err " + fmt(worst) + " < 1e-05, gap/bound <= " + fmt(worst_ratio);
    }
    return o;
}

// 8. cmd_check verdicts over the built-in suite, and byte-stable JSON.
Outcome classifier_discrimination(int n) {
    Outcome o;
    const fs::path data = PF_TEST_DATA_DIR;
    const fs::path scratch = fs::temp_directory_path() / "policy_forge_acceptance";
    // toy base, toy extension and every L-generated policy
    const std::vector<std::pair<std::string, std::vector<std::string>>> suite{
        {"toy_ss.json", {"NonRobust"}},
        {"toy_ss_robust.json", {"SuperRobustEmpirical"}},
        {"gen_quadratic_decay.json", {"RobustFirstOrder", "SuperRobustEmpirical"}},
        {"gen_stationary.json", {"RobustFirstOrder", "SuperRobustEmpirical"}},
        {"gen_cubic.json", {"RobustFirstOrder", "SuperRobustEmpirical"}},
    };
    int agree = 0;
    for (const auto& [file, accepted] : suite) {
        // scenario copy with the requested grid
        auto doc = nlohmann::json::parse(std::ifstream(data / file));
        doc["grid"]["n_steps"] = n;
        fs::create_directories(scratch);
        const fs::path scenario = scratch / file;
        std::ofstream(scenario) << doc.dump();

        std::ostringstream out, err;
        const fs::path a = scratch / ("a_" + file), b = scratch / ("b_" + file);
        const int code_a = cmd_check(scenario, a, out, err);
        const int code_b = cmd_check(scenario, b, out, err);
        if (code_a != 0 || code_b != 0) {
            o.require(false, file + " exit " + std::to_string(code_a) + ": " + err.str());
            continue;
        }
        auto read = [](const fs::path& p) {
            std::ifstream in(p / "report.json", std::ios::binary);
            std::ostringstream s;
            s << in.rdbuf();
            return s.str();
        };
        const std::string ja = read(a), jb = read(b);
        o.require(ja == jb, file + " JSON differs between runs");
        const std::string verdict = nlohmann::json::parse(ja)["verdict"];
        bool ok = false;
        for (const auto& v : accepted) ok = ok || v == verdict;
        o.require(ok, file + " -> " + verdict);
        agree += ok;
    }
    const double pct = 100.0 * agree / static_cast<double>(suite.size());
    o.metric("agreement", pct, 0.0);
    if (o.pass) o.detail = std::to_string(agree) + "/" + std::to_string(suite.size()) + " verdicts agree, JSON byte-stable";
    return o;
}

}  // namespace

int main() {
    using Criterion = std::function<Outcome(int)>;
    const std::vector<std::pair<std::string, Criterion>> criteria{
        {"1 toy deficit reproduction", deficit_reproduction},
        {"2 non-robustness scaling", non_robust_scaling},
        {"3 robust-extension correctness", extension_correctness},
        {"4 super-robust linear extension", linear_super_robustness},
        {"5 total-derivative identity", total_derivative_identity},
        {"6 super-robust ansatz identity", super_robust_ansatz},
        {"7 pay-in comparison", pay_in_comparison},
        {"8 classifier discrimination", classifier_discrimination},
    };

    bool all = true;
    std::vector<Outcome> coarse, fine;
    double slowest = 0.0;
    for (const auto& [name, run] : criteria) {
        Outcome c, f;
        const auto start = std::chrono::steady_clock::now();
        try {
            c = run(1000);
        } catch (const std::exception& e) {
            c.pass = false;
            c.detail = std::string("exception: ") + e.what();
        }
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        try {
            f = run(2000);
        } catch (const std::exception& e) {
            f.pass = false;
            f.detail = std::string("exception: ") + e.what();
        }
        all = all && c.pass;
        std::printf("%s  %-34s %s\n", c.pass ? "PASS" : "FAIL", name.c_str(), c.detail.c_str());
        coarse.push_back(std::move(c));
        fine.push_back(std::move(f));
    }

    // 9. Simpson on cubics, differentiation on linears, and grid refinement.
    Outcome nine;
    {
        TimeGrid g(7.0, 1000);
        auto cubic = SampledFunction::from_analytic(
            g, 0, 1000, [](double t) { return 2 * t * t * t - 3 * t * t + t - 5; },
            [](double t) { return 6 * t * t - 6 * t + 1; });
        const double exact = 0.5 * std::pow(7.0, 4) - std::pow(7.0, 3) + 0.5 * 49.0 - 35.0;
        const double simpson_err = rel(integrate(cubic, 0.0, 7.0), exact);
        nine.require(simpson_err < 1e-12, "cubic rel err " + fmt(simpson_err));

        std::vector<double> ramp;
        for (int i = 0; i <= 1000; ++i) ramp.push_back(3.0 * g.time(i) - 2.0);
        double diff_err = 0.0;
        for (double d : differentiate_path(ramp, g)) diff_err = std::max(diff_err, std::abs(d - 3.0));
        nine.require(diff_err < 1e-12, "linear derivative err " + fmt(diff_err));

        int shifted = 0, compared = 0;
        for (std::size_t i = 0; i < coarse.size(); ++i) {
            nine.require(coarse[i].pass == fine[i].pass,
                         "criterion " + std::to_string(i + 1) + " changes outcome when n_steps doubles");
            for (const auto& [key, m] : coarse[i].metrics) {
                auto it = fine[i].metrics.find(key);
                if (it == fine[i].metrics.end()) continue;
                ++compared;
                const double shift = std::abs(m.first - it->second.first);
                if (shift >= 10.0 * m.second && !(m.second == 0.0 && shift == 0.0)) {
                    ++shifted;
                    nine.require(false, "criterion " + std::to_string(i + 1) + " '" + key +
                                            "' shifts by " + fmt(shift));
                }
            }
        }
        if (nine.pass) {
            nine.detail = "cubic rel err " + fmt(simpson_err) + ", linear d/dt err " + fmt(diff_err) +
                          ", " + std::to_string(compared) + " metrics stable under n_steps x2";
        }
    }
    all = all && nine.pass;
    std::printf("%s  %-34s %s\n", nine.pass ? "PASS" : "FAIL", "9 numerics floor", nine.detail.c_str());
    std::printf("slowest criterion at n_steps=1000: %.2f s\n", slowest);
    return all ? 0 : 1;
}
