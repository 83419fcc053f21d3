// policy-forge: value, check and extend cashflow policies from scenario files.

#include <iostream>

#include "CLI11.hpp"
#include "policy_forge/commands.hpp"

int main(int argc, char** argv) {
    using namespace policy_forge;

    CLI::App app{"Value cashflow policies over forecast paths and test their robustness"};
    app.require_subcommand(1);

    std::string scenario, out_dir;
    auto add_common = [&](CLI::App* cmd, bool scenario_required) {
        auto* opt = cmd->add_option("--scenario", scenario, "scenario JSON file");
        if (scenario_required) opt->required();
        cmd->add_option("--out", out_dir, "output directory")->required();
    };

    auto* simulate = app.add_subcommand("simulate", "write the forecast and perturbed time series");
    add_common(simulate, true);
    auto* check = app.add_subcommand("check", "classify the policy and write report.json");
    add_common(check, true);
    auto* extend = app.add_subcommand("extend", "build and verify the robust extension");
    add_common(extend, true);
    auto* toy = app.add_subcommand("toy-ss", "toy Social Security comparison table");
    add_common(toy, false);

    ToySSOptions toy_options;
    double c_in = 0, c_out = 0, t_end = 0, rate = 0, epsilon = 0;
    int n_steps = 0;
    auto* o_cin = toy->add_option("--c-in", c_in, "per-capita pay-in");
    auto* o_cout = toy->add_option("--c-out", c_out, "per-capita payout");
    auto* o_t = toy->add_option("--t-end", t_end, "termination time T");
    auto* o_r = toy->add_option("--rate", rate, "growth rate r");
    auto* o_eps = toy->add_option("--epsilon", epsilon, "drift of the retiree share");
    auto* o_n = toy->add_option("--n-steps", n_steps, "grid steps (even)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    if (simulate->parsed()) return cmd_simulate(scenario, out_dir, std::cout, std::cerr);
    if (check->parsed()) return cmd_check(scenario, out_dir, std::cout, std::cerr);
    if (extend->parsed()) return cmd_extend(scenario, out_dir, std::cout, std::cerr);

    if (!scenario.empty()) toy_options.scenario = scenario;
    if (o_cin->count()) toy_options.c_in = c_in;
    if (o_cout->count()) toy_options.c_out = c_out;
    if (o_t->count()) toy_options.t_end = t_end;
    if (o_r->count()) toy_options.rate = rate;
    if (o_eps->count()) toy_options.epsilon = epsilon;
    if (o_n->count()) toy_options.n_steps = n_steps;
    return cmd_toy_ss(toy_options, out_dir, std::cout, std::cerr);
}
