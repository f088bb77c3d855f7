#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tapfw/bench.hpp"

namespace {

struct BudgetFlags {
    long max_iter = 100000;
    double time_budget = std::numeric_limits<double>::infinity();
    double rgap_tol = 1e-6;
};

void add_budget_flags(CLI::App* cmd, BudgetFlags& budget) {
    cmd->add_option("--max-iter", budget.max_iter, "Iteration cap");
    cmd->add_option("--time-budget", budget.time_budget, "Wall-clock budget in seconds");
    cmd->add_option("--rgap-tol", budget.rgap_tol, "Stop once the relative gap drops below this");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibrium traffic assignment benchmark (Frank-Wolfe family)"};
    app.require_subcommand(1);

    std::string net_path, trips_path, out_path;

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Run one algorithm and write its trace CSV");
    std::string alg_name = "fw";
    int opt_n = 3, opt_l = 3;
    double opt_gamma_max = 0.99, opt_w = 0.15;
    std::string opt_step = "linesearch";
    BudgetFlags solve_budget;
    solve_cmd->add_option("--net", net_path, "TNTP network file")->required();
    solve_cmd->add_option("--trips", trips_path, "TNTP trips file")->required();
    solve_cmd->add_option("--alg", alg_name, "Algorithm: fw|cfw|ffw|wffw|nfw")
        ->check(CLI::IsMember({"fw", "cfw", "ffw", "wffw", "nfw"}));
    solve_cmd->add_option("--n", opt_n, "NFW: number of conjugate directions");
    solve_cmd->add_option("--gamma-max", opt_gamma_max, "NFW: history reset threshold");
    solve_cmd->add_option("--w", opt_w, "WFFW: smoothing weight in (0,1]");
    solve_cmd->add_option("--l", opt_l, "FFW: averaging memory");
    solve_cmd->add_option("--step", opt_step, "Step rule for fw: linesearch|harmonic")
        ->check(CLI::IsMember({"linesearch", "harmonic"}));
    add_budget_flags(solve_cmd, solve_budget);
    solve_cmd->add_option("--out", out_path, "Trace CSV path")->required();

    // compare
    auto* compare_cmd =
        app.add_subcommand("compare", "Run several algorithms and plot their convergence");
    std::string algs_list;
    bool parallel = false;
    BudgetFlags compare_budget;
    compare_cmd->add_option("--net", net_path, "TNTP network file")->required();
    compare_cmd->add_option("--trips", trips_path, "TNTP trips file")->required();
    compare_cmd
        ->add_option("--algs", algs_list,
                     "Comma list with inline parameters, e.g. fw,cfw,nfw:n=3,wffw:w=0.15")
        ->required();
    add_budget_flags(compare_cmd, compare_budget);
    compare_cmd->add_option("--out", out_path, "Output directory")->required();
    compare_cmd->add_flag("--parallel", parallel,
                          "Run algorithms concurrently (per-run timings become approximate)");

    // validate
    auto* validate_cmd =
        app.add_subcommand("validate", "Check that every demand pair can be routed");
    validate_cmd->add_option("--net", net_path, "TNTP network file")->required();
    validate_cmd->add_option("--trips", trips_path, "TNTP trips file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(solve_cmd)) {
            tapfw::RunSpec spec;
            spec.net_path = net_path;
            spec.trips_path = trips_path;
            spec.dataset = tapfw::detail::dataset_name(net_path);
            spec.out_path = out_path;
            spec.max_iter = solve_budget.max_iter;
            spec.time_budget_sec = solve_budget.time_budget;
            spec.rgap_tol = solve_budget.rgap_tol;

            std::string alg_spec = alg_name;
            if (alg_name == "nfw") alg_spec += ":n=" + std::to_string(opt_n) +
                                               ":gamma_max=" + std::to_string(opt_gamma_max);
            if (alg_name == "wffw") alg_spec += ":w=" + std::to_string(opt_w);
            if (alg_name == "ffw") alg_spec += ":l=" + std::to_string(opt_l);
            if (alg_name == "fw" && opt_step == "harmonic") alg_spec += ":step=harmonic";
            spec.algorithms.push_back(tapfw::parse_algorithm_spec(alg_spec, tapfw::SolverConfig{}));
            return tapfw::run_solve(spec, std::cout, std::cerr);
        }
        if (app.got_subcommand(compare_cmd)) {
            tapfw::RunSpec spec;
            spec.net_path = net_path;
            spec.trips_path = trips_path;
            spec.dataset = tapfw::detail::dataset_name(net_path);
            spec.out_path = out_path;
            spec.max_iter = compare_budget.max_iter;
            spec.time_budget_sec = compare_budget.time_budget;
            spec.rgap_tol = compare_budget.rgap_tol;

            std::size_t start = 0;
            while (start <= algs_list.size()) {
                std::size_t comma = algs_list.find(',', start);
                std::string one = algs_list.substr(
                    start, comma == std::string::npos ? std::string::npos : comma - start);
                if (!one.empty())
                    spec.algorithms.push_back(
                        tapfw::parse_algorithm_spec(one, tapfw::SolverConfig{}));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            if (spec.algorithms.empty()) {
                std::cerr << "--algs must name at least one algorithm\n";
                return 1;
            }
            return tapfw::run_compare(spec, parallel, std::cout, std::cerr);
        }
        if (app.got_subcommand(validate_cmd))
            return tapfw::run_validate(net_path, trips_path, std::cout, std::cerr);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
