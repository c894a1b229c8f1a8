// Command-line front end. Exit codes:
//   0 success, 2 validation failure, 3 non-convergence or blow-up, 4 I/O or format error.

#include "ghch/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitIo = 4;

std::filesystem::path output_dir(const std::string& flag, const ghch::Scenario& sc) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("GHCH_OUTPUT_DIR"); env && *env) return env;
    return sc.output_dir;
}

void print_energy(const ghch::EnergySummary& e) {
    std::printf("lambda_fit=%.6g bound_ok=%d w1=%.6g w2=%.6g sandwich_ok=%d\n", e.trace.lambda_fit,
                e.trace.bound_ok ? 1 : 0, e.trace.w1, e.trace.w2, e.sandwich_ok ? 1 : 0);
}

int trajectory_status(const ghch::Trajectory& traj) {
    if (traj.blowup_time) {
        std::printf("blow-up at t=%.17g\n", *traj.blowup_time);
        return kExitNonConvergence;
    }
    return kExitOk;
}

std::vector<double> split_numbers(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(ghch::parse(item, {}).eval(std::span<const double>{}));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudospectral solver and verification lab for generalized higher-order Camassa-Holm equations"};
    app.require_subcommand(1);
    std::string out_flag;
    std::uint64_t seed = 0;
    app.add_option("--out", out_flag, "Output directory (overrides GHCH_OUTPUT_DIR and the scenario)");
    app.add_option("--seed", seed, "Reserved; the pipeline is deterministic and ignores it");

    std::string scenario_path;
    auto with_scenario = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario_path, "Scenario file")->required();
    };

    auto* ops = app.add_subcommand("verify-ops", "Operator bound suite for the Lambda_m^0 family");
    std::string ops_N = "64,256", ops_m = "0.1,0.25,1,2,10", ops_s = "0,1,2.7";
    std::size_t ops_samples = 100;
    ops->add_option("--N", ops_N, "Comma-separated grid sizes");
    ops->add_option("--m", ops_m, "Comma-separated m values");
    ops->add_option("--s", ops_s, "Comma-separated Sobolev indices");
    ops->add_option("--samples", ops_samples, "Random fields per configuration");

    auto* weight = app.add_subcommand("weight", "Emit w, g and the cancellation residual");
    with_scenario(weight);
    double weight_t = 0.0;
    weight->add_option("--t", weight_t, "Time at which the weight is built");

    auto* linear = app.add_subcommand("run-linear", "Solve the linearized problem about run.v");
    with_scenario(linear);
    auto* pic = app.add_subcommand("picard", "Picard iteration with energy trace");
    with_scenario(pic);
    auto* direct = app.add_subcommand("direct", "Direct nonlinear method-of-lines solve");
    with_scenario(direct);
    auto* sweep = app.add_subcommand("sweep", "Amplitude sweep over u0 scale factors");
    with_scenario(sweep);
    unsigned sweep_threads = 0;
    sweep->add_option("--threads", sweep_threads, "Concurrent instances (0: hardware concurrency)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ops) {
            bool ok = true;
            std::printf("%6s %8s %6s %12s %12s %12s %12s %6s %12s\n", "N", "m", "s", "|L0|", "max(1/m,1)",
                        "|L0^-1|", "max(m,1)", "est1", "commute");
            for (double Nd : split_numbers(ops_N)) {
                const auto N = static_cast<std::size_t>(Nd);
                for (double m : split_numbers(ops_m))
                    for (double s : split_numbers(ops_s)) {
                        const ghch::OpsCase c = ghch::verify_ops_case(N, m, s, ops_samples, 1);
                        std::printf("%6zu %8.4g %6.3g %12.6g %12.6g %12.6g %12.6g %6zu %12.3e\n", c.N, c.m, c.s,
                                    c.norm_m0, c.bound_m0, c.norm_m0_inv, c.bound_m0_inv, c.est1_violations,
                                    c.commutation_error);
                        ok = ok && c.norms_ok() && c.est1_violations == 0 && c.commutation_error <= 1e-12;
                    }
            }
            std::printf("%s\n", ok ? "all operator bounds hold" : "operator bound violated");
            return ok ? kExitOk : kExitValidation;
        }

        const ghch::Scenario sc = ghch::load_scenario(scenario_path);
        const std::filesystem::path dir = output_dir(out_flag, sc);

        if (*weight) {
            const ghch::WeightReport r = ghch::run_weight_scenario(sc, weight_t, dir);
            std::printf("variant=%s w1=%.17g w2=%.17g residual=%.6e max_g=%.6e\n", ghch::to_string(sc.variant),
                        r.weight.w1, r.weight.w2, r.residual, r.max_g);
            return kExitOk;
        }
        if (*linear) {
            const ghch::DirectRun r = ghch::run_linear_scenario(sc, dir);
            print_energy(r.energy);
            return trajectory_status(r.trajectory);
        }
        if (*direct) {
            const ghch::DirectRun r = ghch::run_direct_scenario(sc, dir);
            print_energy(r.energy);
            return trajectory_status(r.trajectory);
        }
        if (*pic) {
            const ghch::PicardRun r = ghch::run_picard_scenario(sc, dir);
            for (std::size_t n = 0; n < r.result.distances.size(); ++n)
                std::printf("d_%zu = %.6e\n", n, r.result.distances[n]);
            print_energy(r.energy);
            if (r.result.blowup_time) {
                std::printf("blow-up at t=%.17g\n", *r.result.blowup_time);
                return kExitNonConvergence;
            }
            std::printf("%s after %zu iterations\n", r.result.converged ? "converged" : "not converged",
                        r.result.n_final);
            return r.result.converged ? kExitOk : kExitNonConvergence;
        }
        if (*sweep) {
            const ghch::SweepReport r = ghch::run_sweep_scenario(sc, dir, sweep_threads);
            bool all_converged = true;
            for (const auto& p : r.points) {
                std::printf("amplitude=%.6g status=%s iterations=%zu blowup=%s lambda=%.6g bound_ok=%d%s%s\n",
                            p.amplitude, p.status.c_str(), p.iterations,
                            p.blowup_time ? ghch::format_double(*p.blowup_time).c_str() : "none", p.lambda_fit,
                            p.bound_ok ? 1 : 0, p.message.empty() ? "" : " : ", p.message.c_str());
                all_converged = all_converged && p.status == "converged";
            }
            std::printf("blowup_monotone=%d lambda_monotone=%d\n", r.blowup_monotone ? 1 : 0,
                        r.lambda_monotone ? 1 : 0);
            return all_converged ? kExitOk : kExitNonConvergence;
        }
    } catch (const ghch::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kExitIo;
    } catch (const ghch::FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kExitIo;
    } catch (const ghch::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
