#include "policy_forge/commands.hpp"

#include <ostream>
#include <sstream>

#include "json.hpp"
#include "policy_forge/constructors.hpp"
#include "policy_forge/errors.hpp"
#include "policy_forge/format.hpp"
#include "policy_forge/scenario.hpp"
#include "policy_forge/toy_ss.hpp"

namespace policy_forge {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return round_significant(x);
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
    }
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) text_ << ',';
            text_ << header[i];
        }
        text_ << '\n';
    }

    Csv& cell(const std::string& s) {
        if (!first_) text_ << ',';
        first_ = false;
        text_ << s;
        return *this;
    }
    Csv& cell(double x) { return cell(format_number(x)); }
    void end_row() {
        text_ << '\n';
        first_ = true;
    }
    std::string str() const { return text_.str(); }

private:
    std::ostringstream text_;
    bool first_ = true;
};

std::vector<PerturbationFamily> check_families(const Scenario& scenario) {
    if (scenario.perturbations.size() >= 2) return scenario.perturbations;
    return default_families();
}

bool at_least_first_order(Verdict v) { return v != Verdict::NonRobust; }

}  // namespace

std::string report_to_json(const RobustnessReport& report, const std::vector<std::string>& names,
                           double t_end) {
    Json doc;
    doc["el_residual_sup"] = number(report.el_residual_sup);
    doc["boundary_residual"] = number(report.boundary_residual);
    doc["scaling_exponent"] = number(report.scaling_exponent);
    doc["scaling_r2"] = number(report.scaling_r2);
    doc["zero_response"] = report.zero_response();
    doc["verdict"] = std::string(to_string(report.verdict));
    doc["policy_scale"] = number(report.policy_scale);
    doc["noise_floor"] = number(report.noise_floor);
    Json families = Json::array();
    for (const auto& fr : report.per_family) {
        Json f;
        f["shape"] = std::string(to_string(fr.family.shape));
        f["omega"] = fr.family.shape == PerturbationShape::Sinusoid
                         ? number(fr.family.angular_frequency(t_end))
                         : Json(nullptr);
        f["parameter"] = names.at(fr.param_index);
        f["scaling_exponent"] = number(fr.fit.slope);
        f["scaling_r2"] = number(fr.fit.r2);
        f["zero_response"] = fr.fit.zero_response();
        f["points_used"] = fr.fit.points_used;
        f["large_epsilon"] = number(fr.large_epsilon);
        f["large_delta_v"] = number(fr.large_delta_v);
        Json sweep = Json::array();
        for (const auto& p : fr.sweep) {
            sweep.push_back(Json{{"epsilon", number(p.epsilon)}, {"delta_v", number(p.delta_v)}});
        }
        f["sweep"] = std::move(sweep);
        families.push_back(std::move(f));
    }
    doc["per_family"] = std::move(families);
    return doc.dump(2) + "\n";
}

int cmd_simulate(const fs::path& scenario_file, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        const Scenario scenario = load_scenario(scenario_file);
        const PreparedScenario prep = prepare(scenario);
        ensure_dir(out_dir);

        std::vector<std::string> header{"series", "t"};
        for (const auto& n : prep.names) header.push_back("q_" + n);
        for (const auto& n : prep.names) header.push_back("qdot_" + n);
        header.insert(header.end(), {"Q", "V_running"});
        Csv csv(header);

        auto emit = [&](const std::string& label, const std::vector<ParameterPath>& q) {
            const auto flow = cashflow_series(prep.policy, q);
            const auto value = running_value(flow, prep.grid, prep.config);
            for (int i = 0; i <= prep.grid.n_steps(); ++i) {
                csv.cell(label).cell(prep.grid.time(i));
                for (const auto& path : q) csv.cell(path.value(i));
                for (const auto& path : q) csv.cell(path.deriv(i));
                csv.cell(flow[i]).cell(value[i]);
                csv.end_row();
            }
            return value.back();
        };

        const double v_forecast = emit("forecast", prep.forecast);
        out << "forecast V(T) = " << format_number(v_forecast) << '\n';
        for (std::size_t j = 0; j < scenario.perturbations.size(); ++j) {
            const auto& family = scenario.perturbations[j];
            std::vector<ParameterPath> observed;
            for (std::size_t k = 0; k < prep.raw_forecast.size(); ++k) {
                observed.push_back(
                    build_generalized_path(perturb(prep.raw_forecast[k], family), prep.specs[k]));
            }
            const std::string label =
                std::string(to_string(family.shape)) + "_" + std::to_string(j + 1);
            const double v = emit(label, observed);
            out << label << " V(T) = " << format_number(v) << '\n';
        }
        write_file(out_dir / "simulate.csv", csv.str());
        return static_cast<int>(kExitOk);
    });
}

int cmd_check(const fs::path& scenario_file, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
    return guarded(err, [&] {
        const Scenario scenario = load_scenario(scenario_file);
        const PreparedScenario prep = prepare(scenario);
        ensure_dir(out_dir);
        const auto families = check_families(scenario);
        const auto report =
            classify(prep.policy, prep.raw_forecast, prep.specs, prep.config, families);
        write_file(out_dir / "report.json", report_to_json(report, prep.names, prep.grid.t_end()));
        out << "verdict: " << to_string(report.verdict) << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_extend(const fs::path& scenario_file, const fs::path& out_dir, std::ostream& out,
               std::ostream& err) {
    return guarded(err, [&] {
        const Scenario scenario = load_scenario(scenario_file);
        const PreparedScenario prep = prepare(scenario);
        if (prep.policy.n_params() != 1) {
            throw PreconditionError("extension requires single parameter");
        }
        ensure_dir(out_dir);
        auto [policy, ext] = robust_extension(prep.policy, prep.forecast.front(), prep.config);

        Csv csv({"t", "A", "C"});
        for (int i = 0; i <= prep.grid.n_steps(); ++i) {
            csv.cell(prep.grid.time(i)).cell(ext.a_profile[i]).cell(ext.c_constant);
            csv.end_row();
        }
        write_file(out_dir / "extension.csv", csv.str());

        const auto families = check_families(scenario);
        const auto report = classify(policy, prep.raw_forecast, prep.specs, prep.config, families);
        Json doc;
        doc["c_constant"] = number(ext.c_constant);
        doc["a_initial"] = number(ext.a_profile.front());
        doc["a_terminal"] = number(ext.a_profile.back());
        doc["verification"] =
            Json::parse(report_to_json(report, prep.names, prep.grid.t_end()));
        write_file(out_dir / "extension.json", doc.dump(2) + "\n");

        out << "extended verdict: " << to_string(report.verdict) << '\n';
        if (!at_least_first_order(report.verdict)) {
            err << "error: extended policy is still NonRobust\n";
            return static_cast<int>(kExitNumerical);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_toy_ss(const ToySSOptions& options, const fs::path& out_dir, std::ostream& out,
               std::ostream& err) {
    return guarded(err, [&] {
        toy_ss::ToySSParams params;
        int n_steps = 1000;
        if (options.scenario) {
            const Scenario scenario = load_scenario(*options.scenario);
            const auto* toy = std::get_if<ToySSPolicySpec>(&scenario.policy);
            if (!toy) throw ScenarioError("policy", "toy-ss needs a toy_ss policy");
            params.c_in = toy->c_in;
            params.c_out = toy->c_out;
            params.t_end = scenario.t_end;
            params.rate = scenario.growth_rate;
            n_steps = scenario.n_steps;
            for (const auto& f : scenario.perturbations) {
                if (f.shape == PerturbationShape::Linear) {
                    params.epsilon = f.epsilon;
                    break;
                }
            }
        }
        if (options.c_in) params.c_in = *options.c_in;
        if (options.c_out) params.c_out = *options.c_out;
        if (options.t_end) params.t_end = *options.t_end;
        if (options.rate) params.rate = *options.rate;
        if (options.epsilon) params.epsilon = *options.epsilon;
        if (options.n_steps) n_steps = *options.n_steps;
        params.validate();

        const TimeGrid grid(params.t_end, n_steps);
        const ValuationConfig config{params.rate};
        const double p_star = toy_ss::forecast_share(params);
        const std::vector<ParameterPath> observed{
            perturb(ParameterPath::constant(grid, p_star),
                    PerturbationFamily{PerturbationShape::Linear, params.epsilon, 0.0})};
        const auto v_base = running_value(toy_ss::base_policy(params), observed, config);
        const auto v_robust =
            running_value(toy_ss::robust_policy_closed_form(params), observed, config);

        Csv csv({"t", "p_forecast", "p_observed", "D_PG_leading", "D_PG_exact", "D_R",
                 "V_base_running", "V_robust_running"});
        for (int i = 0; i <= grid.n_steps(); ++i) {
            const double t = grid.time(i);
            const double dp = params.epsilon * t;
            const auto pg = toy_ss::pay_in_pg(params, dp);
            csv.cell(t).cell(p_star).cell(observed.front().value(i));
            csv.cell(pg.leading).cell(pg.exact);
            csv.cell(toy_ss::pay_in_robust(params, params.epsilon, t));
            csv.cell(v_base[i]).cell(v_robust[i]);
            csv.end_row();
        }
        ensure_dir(out_dir);
        write_file(out_dir / "toy_ss.csv", csv.str());
        out << "V_base(T) = " << format_number(v_base.back())
            << ", V_robust(T) = " << format_number(v_robust.back()) << '\n';
        return static_cast<int>(kExitOk);
    });
}

}  // namespace policy_forge
