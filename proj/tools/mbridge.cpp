// mbridge: entropy-minimal martingale coupling solver for discrete marginals.
//
// Exit codes: 0 success, 2 infeasible, 3 non-convergence, 5 oracle
// mismatch, 64 parse error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbridge/bridge.hpp"
#include "mbridge/errors.hpp"
#include "mbridge/io.hpp"
#include "mbridge/measures.hpp"
#include "mbridge/oracle.hpp"
#include "mbridge/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitMismatch = 5;
constexpr int kExitParse = 64;

struct SolveOptions {
    std::string path;
    double tol = 1e-9;
    int max_iter = 10000;
    double h_max = 1e3;
    std::string mode = "martingale";
    std::string coupling_path;
    std::string trace_path;
    std::string out_path;
};

struct CrosscheckOptions {
    std::string path;
    std::vector<std::int64_t> generate;  // SEED NMU NNU
    double xtol = 1e-6;
    std::string emit_path;
};

int run_check(const std::string& path) {
    mbridge::InstanceFile file = mbridge::load_instance(path);
    mbridge::ProblemInstance instance = mbridge::make_instance(file.mu, file.nu);
    std::cout << mbridge::feasibility_to_text(instance.feasibility);
    std::cout << mbridge::feasibility_to_json(instance.feasibility);
    return instance.feasibility.convex_order ? kExitOk : kExitInfeasible;
}

int run_solve(const SolveOptions& opt) {
    mbridge::InstanceFile file = mbridge::load_instance(opt.path);
    mbridge::ProblemInstance instance = mbridge::make_instance(file.mu, file.nu);

    mbridge::SolverConfig config;
    config.tol = opt.tol;
    config.max_iter = opt.max_iter;
    config.h_max = opt.h_max;

    mbridge::SolveReport report;
    if (opt.mode == "relaxed") {
        report = mbridge::solve_relaxed(instance, config);
    } else {
        config.mode = mbridge::SolveMode::Martingale;
        report = mbridge::solve(instance, config);
    }

    const std::string json = mbridge::report_to_json(report, instance, file.name);
    if (opt.out_path.empty())
        std::cout << json;
    else
        mbridge::write_text_file(opt.out_path, json);
    if (!opt.coupling_path.empty())
        mbridge::write_coupling_csv(opt.coupling_path, report.coupling, instance);
    if (!opt.trace_path.empty())
        mbridge::write_trace_csv(opt.trace_path, report);
    for (const std::string& w : report.warnings)
        std::cerr << "warning: " << w << "\n";
    return report.converged ? kExitOk : kExitNonConvergence;
}

bool is_symmetric_two_point(const mbridge::DiscreteMeasure& nu) {
    return nu.size() == 2 && std::abs(nu.atom(0) + nu.atom(1)) <= 1e-12 &&
           std::abs(nu.weight(0) - 0.5) <= 1e-12;
}

int run_crosscheck(const CrosscheckOptions& opt) {
    std::optional<std::string> name;
    mbridge::ProblemInstance instance;

    if (!opt.generate.empty()) {
        mbridge::GeneratorSpec spec;
        spec.seed = static_cast<std::uint64_t>(opt.generate[0]);
        spec.n_mu = static_cast<std::size_t>(opt.generate[1]);
        spec.n_nu = static_cast<std::size_t>(opt.generate[2]);
        instance = mbridge::generate_instance(spec);
        name = "generated-" + std::to_string(spec.seed);
    } else {
        mbridge::InstanceFile file = mbridge::load_instance(opt.path);
        instance = mbridge::make_instance(file.mu, file.nu);
        name = file.name;
    }

    if (!opt.emit_path.empty())
        mbridge::write_text_file(
            opt.emit_path,
            mbridge::instance_to_json(instance.mu, instance.nu, name));

    if (!instance.feasibility.convex_order) {
        std::cout << mbridge::feasibility_to_text(instance.feasibility);
        std::cerr << "error: instance is not in convex order\n";
        return kExitInfeasible;
    }

    mbridge::SolveReport martingale = mbridge::solve(instance);
    mbridge::SolveReport relaxed = mbridge::solve_relaxed(instance);
    mbridge::DykstraRun dykstra = mbridge::dykstra_run(instance);

    bool all_converged =
        martingale.converged && relaxed.converged && dykstra.converged;

    std::cout.precision(6);
    std::cout << std::scientific;
    std::vector<double> distances;
    auto report_tv = [&](const std::string& label, double tv) {
        distances.push_back(tv);
        std::cout << "tv " << label << ": " << tv << "\n";
    };
    report_tv("solve/relaxed  ", mbridge::coupling_distance(
                                     martingale.coupling, relaxed.coupling));
    report_tv("solve/dykstra  ", mbridge::coupling_distance(
                                     martingale.coupling, dykstra.coupling));
    report_tv("relaxed/dykstra", mbridge::coupling_distance(
                                     relaxed.coupling, dykstra.coupling));

    if (is_symmetric_two_point(instance.nu)) {
        const double b = instance.nu.atom(1);
        auto [cf_coupling, cf_potentials] =
            mbridge::two_point_closed_form(instance.mu, b);
        report_tv("solve/closed   ",
                  mbridge::coupling_distance(martingale.coupling, cf_coupling));
        report_tv("dykstra/closed ",
                  mbridge::coupling_distance(dykstra.coupling, cf_coupling));

        double df = 0.0, dg = 0.0, dh = 0.0;
        const mbridge::Potentials& sp = martingale.potentials;
        for (std::size_t i = 0; i < sp.f.size(); ++i) {
            df = std::max(df, std::abs(sp.f[i] - cf_potentials.f[i]));
            dh = std::max(dh, std::abs(sp.h[i] - cf_potentials.h[i]));
        }
        for (std::size_t j = 0; j < sp.g.size(); ++j)
            dg = std::max(dg, std::abs(sp.g[j] - cf_potentials.g[j]));
        std::cout << "potentials vs closed form (canonical gauge): max|df|=" << df
                  << " max|dg|=" << dg << " max|dh|=" << dh << "\n";
    }

    if (!all_converged) {
        std::cerr << "error: a component failed to converge\n";
        return kExitNonConvergence;
    }
    for (double tv : distances)
        if (!(tv <= opt.xtol)) {
            std::cerr << "error: distance " << tv << " exceeds xtol " << opt.xtol
                      << "\n";
            return kExitMismatch;
        }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-minimal martingale coupling (martingale Schroedinger "
                 "bridge) between two discrete measures"};
    app.require_subcommand(1);

    std::string check_path;
    CLI::App* check = app.add_subcommand(
        "check", "Validate an instance and report feasibility");
    check->add_option("file", check_path, "instance JSON")->required();

    SolveOptions sopt;
    CLI::App* solve = app.add_subcommand(
        "solve", "Compute the entropy-minimal martingale coupling");
    solve->add_option("file", sopt.path, "instance JSON")->required();
    solve->add_option("--tol", sopt.tol, "stopping tolerance on residuals")
        ->check(CLI::PositiveNumber);
    solve->add_option("--max-iter", sopt.max_iter, "maximum sweeps")
        ->check(CLI::PositiveNumber);
    solve->add_option("--h-max", sopt.h_max, "multiplier cap")
        ->check(CLI::PositiveNumber);
    solve->add_option("--mode", sopt.mode, "martingale or relaxed")
        ->check(CLI::IsMember({"martingale", "relaxed"}));
    solve->add_option("--coupling", sopt.coupling_path, "write coupling CSV");
    solve->add_option("--trace", sopt.trace_path, "write per-sweep trace CSV");
    solve->add_option("--out", sopt.out_path, "write report JSON to a file");

    CrosscheckOptions copt;
    CLI::App* crosscheck = app.add_subcommand(
        "crosscheck", "Cross-validate solver, relaxed solver and oracles");
    CLI::Option* cc_file =
        crosscheck->add_option("file", copt.path, "instance JSON");
    CLI::Option* cc_gen = crosscheck
                              ->add_option("--generate", copt.generate,
                                           "SEED NMU NNU for a seeded instance")
                              ->expected(3);
    cc_file->excludes(cc_gen);
    crosscheck->add_option("--xtol", copt.xtol, "max allowed TV distance");
    crosscheck->add_option("--emit", copt.emit_path, "write the instance JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (check->parsed()) return run_check(check_path);
        if (solve->parsed()) return run_solve(sopt);
        if (crosscheck->parsed()) {
            if (copt.path.empty() && copt.generate.empty()) {
                std::cerr << "error: crosscheck needs a file or --generate\n";
                return kExitParse;
            }
            return run_crosscheck(copt);
        }
    } catch (const mbridge::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const mbridge::Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const mbridge::MeanMismatch& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const mbridge::NonConvergence& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const mbridge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
