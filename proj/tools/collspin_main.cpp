// Command line front end: run scenarios, sweep relaxation times, print the
// sector-decomposition steady-state oracle.
//
// Exit codes: 0 success, 2 validation error, 3 integration failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "collspin/experiments.hpp"
#include "collspin/scenario_io.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIntegration = 3;

collspin::Scenario load_scenario(const std::string& path,
                                 const std::vector<std::string>& overrides)
{
    collspin::Scenario sc = collspin::parse_scenario_file(path);
    for (const auto& kv : overrides) collspin::apply_override(sc, kv);
    collspin::validate(sc);
    return sc;
}

void write_series_file(const std::string& prefix, const collspin::TimeSeries& series)
{
    const std::string path = prefix + "." + series.method + ".csv";
    std::ofstream out(path);
    if (!out) throw collspin::ScenarioError("cannot write " + path);
    collspin::write_timeseries_csv(out, series);
    std::cout << path << "\n";
}

int cmd_run(const std::string& scenario_path, const std::string& output_prefix,
            const std::vector<std::string>& overrides)
{
    const collspin::Scenario sc = load_scenario(scenario_path, overrides);
    const auto results = collspin::run(sc);
    for (const auto& series : results) write_series_file(output_prefix, series);
    return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::string& output_dir,
              const std::vector<std::string>& overrides)
{
    const collspin::Scenario base = load_scenario(scenario_path, overrides);
    if (!base.sweep) {
        throw collspin::ScenarioError("sweep.n_start: missing required key "
                                      "(scenario has no [sweep] section)");
    }
    std::vector<int> ns;
    for (int n = base.sweep->n_start; n <= base.sweep->n_stop;
         n += std::max(1, base.sweep->n_step)) {
        ns.push_back(n);
    }
    if (ns.size() < 3) {
        throw collspin::ScenarioError("sweep.n_stop: fit underdetermined, need "
                                      "at least 3 N values");
    }

    std::vector<std::pair<int, double>> done;
    collspin::SweepResult result;
    try {
        result = collspin::sweep(base, ns);
        done = result.taus;
    } catch (const collspin::IntegrationError&) {
        // Partial results are still written below before exiting 3.
        throw;
    }

    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    const std::string tau_path = output_dir + "/tau.csv";
    std::ofstream tau_out(tau_path);
    if (!tau_out) throw collspin::ScenarioError("cannot write " + tau_path);
    tau_out << "N,tau_s\n";
    for (const auto& [n, tau] : done) {
        tau_out << n << ',' << collspin::format_double(tau) << "\n";
    }

    const std::string fit_path = output_dir + "/fit.txt";
    std::ofstream fit_out(fit_path);
    if (!fit_out) throw collspin::ScenarioError("cannot write " + fit_path);
    fit_out << "a = " << collspin::format_double(result.fit.a) << "\n";
    fit_out << "b = " << collspin::format_double(result.fit.b) << "\n";
    fit_out << "residual_norm = " << collspin::format_double(result.fit.residual_norm)
            << "\n";
    fit_out << "r_squared = " << collspin::format_double(result.fit.r_squared) << "\n";
    fit_out << "tau_definition = " << collspin::tau_definition() << "\n";

    std::cout << tau_path << "\n" << fit_path << "\n";
    return 0;
}

int cmd_oracle(const std::string& scenario_path, bool csv,
               const std::vector<std::string>& overrides)
{
    const collspin::Scenario sc = load_scenario(scenario_path, overrides);
    collspin::write_oracle_report(std::cout, sc.domain1(), sc.domain2(), sc.init,
                                  sc.reservoir(), csv);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Collective spin relaxation of two domains sharing a bosonic "
                 "reservoir"};
    app.require_subcommand(1);

    std::string scenario_path, output = "out";
    std::vector<std::string> overrides;
    bool oracle_csv = false;

    auto* run = app.add_subcommand("run", "integrate a scenario and write CSV");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("-o,--output", output, "output path prefix");
    run->add_option("--override", overrides, "key=value override, repeatable");

    auto* sweep = app.add_subcommand("sweep", "relaxation-time sweep over N");
    sweep->add_option("scenario", scenario_path, "base scenario file")->required();
    sweep->add_option("-o,--output", output, "output directory");
    sweep->add_option("--override", overrides, "key=value override, repeatable");

    auto* oracle = app.add_subcommand("oracle", "sector steady-state table");
    oracle->add_option("scenario", scenario_path, "scenario file")->required();
    oracle->add_flag("--csv", oracle_csv, "machine-readable output");
    oracle->add_option("--override", overrides, "key=value override, repeatable");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) return cmd_run(scenario_path, output, overrides);
        if (app.got_subcommand(sweep)) return cmd_sweep(scenario_path, output, overrides);
        if (app.got_subcommand(oracle)) {
            return cmd_oracle(scenario_path, oracle_csv, overrides);
        }
    } catch (const collspin::IntegrationError& e) {
        std::cerr << "integration failure: " << e.what() << "\n";
        return kExitIntegration;
    } catch (const collspin::ScenarioError& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
