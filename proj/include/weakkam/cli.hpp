#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "io.hpp"

namespace weakkam {

/** One invocation of the tool: which computation to run on which model,
 *  where to put the artifacts, and the optional numeric overrides. */
struct RunConfig {
    std::string command;
    std::string model_path;
    std::string out_dir = ".";
    double lambda = -1.0;      // required by solve and uniqueness
    double grid_start = -1.0;  // sweep only; negative means the default grid
    double grid_ratio = 0.5;
    int grid_steps = 20;
    double tol = defaults::tol_fp;
};

namespace detail {

inline void print_potential(std::ostream& out, const FiniteSpace& space, const Potential& u) {
    for (std::size_t i = 0; i < space.size(); ++i)
        out << "  " << space.labels[i] << "  " << format_double(u[i]) << "\n";
}

}  // namespace detail

/** Executes one configured command and writes its artifacts.
 *
 * Exit status: 0 on success, 2 for validation problems (bad arguments,
 * malformed or inconsistent model files), 3 when a mathematical hypothesis
 * fails or an iteration does not converge.  Diagnostics go to err; results
 * and tables go to out.
 */
inline int run(const RunConfig& cfg, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    try {
        const CostModel model = load_model(cfg.model_path);
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path dir(cfg.out_dir);

        if (cfg.command == "critical") {
            const MatherValue mv = mather_value_lp(model.l0);
            const double c0 = critical_constant_cross_checked(model.l0);
            write_c0_artifact(dir, c0, mv.value);
            out << "critical constant " << format_double(c0) << "\n";
        } else if (cfg.command == "barrier") {
            const BarrierTable bt = peierls_barrier(model.l0);
            write_barrier_artifacts(dir, model.space, bt);
            out << "critical constant " << format_double(bt.c0) << "\n";
            out << "projected set:";
            for (std::size_t a : aubry_set(bt)) out << " " << model.space.labels[a];
            out << "\nbarrier rows:\n";
            for (std::size_t z = 0; z < model.size(); ++z) {
                out << "  " << model.space.labels[z];
                for (std::size_t x = 0; x < model.size(); ++x)
                    out << "  " << format_double(bt.h(z, x));
                out << "\n";
            }
        } else if (cfg.command == "mather") {
            const MatherPolytope poly = mather_vertices(model.l0);
            write_mather_artifacts(dir, model.space, poly);
            out << "minimizing value " << format_double(poly.value) << " over "
                << poly.vertices.size() << " vertex measure(s)\n";
        } else if (cfg.command == "check") {
            const double c0 = critical_constant_cross_checked(model.l0);
            const CostModel norm = normalize_critical(model, c0);
            const MatherPolytope poly = mather_vertices(norm.l0);
            const AssumptionReport rep = check_assumptions(norm, poly.vertices);
            write_assumptions_artifact(dir, rep);
            out << "kappa_u " << format_double(rep.kappa_u) << ", kappa_v "
                << format_double(rep.kappa_v) << "\n";
            for (std::size_t i = 0; i < rep.l4_values.size(); ++i)
                out << "  vertex " << i << " coupling integral "
                    << format_double(rep.l4_values[i]) << "\n";
            if (!rep.l2_ok || !rep.l4_ok) {
                for (const std::string& m : rep.messages) err << "error: " << m << "\n";
                return 3;
            }
            out << "all hypotheses hold\n";
        } else if (cfg.command == "solve") {
            if (!(cfg.lambda > 0.0))
                throw std::invalid_argument("solve requires --lambda greater than zero");
            const double c0 = critical_constant_cross_checked(model.l0);
            const CostModel norm = normalize_critical(model, c0);
            const DiscountedSolution sol = solve_discounted(norm, cfg.lambda, cfg.tol);
            write_solution_artifact(dir, model.space, sol);
            out << "critical constant " << format_double(c0) << "\n";
            out << "fixed point at lambda " << format_double(cfg.lambda) << " (residual "
                << format_double(sol.residual) << ", " << sol.iterations << " iterations):\n";
            detail::print_potential(out, model.space, sol.u);
            if (!sol.unique_within_tol)
                err << "note: the two bracketing runs disagree beyond tolerance\n";
        } else if (cfg.command == "limit") {
            const LimitReport rep = u0_detailed(model);
            write_limit_artifact(dir, model.space, rep);
            out << "critical constant " << format_double(rep.c0) << "\n";
            out << "limit potential (formula gap " << format_double(rep.gap) << "):\n";
            detail::print_potential(out, model.space, rep.u0);
        } else if (cfg.command == "sweep") {
            std::vector<double> grid;
            if (cfg.grid_start > 0.0) {
                if (!(cfg.grid_ratio > 0.0) || !(cfg.grid_ratio < 1.0))
                    throw std::invalid_argument("--grid-ratio must lie in (0, 1)");
                if (cfg.grid_steps < 1)
                    throw std::invalid_argument("--grid-steps must be at least 1");
                double lambda = cfg.grid_start;
                for (int k = 0; k < cfg.grid_steps; ++k, lambda *= cfg.grid_ratio)
                    grid.push_back(lambda);
            }
            const SweepReport rep = vanishing_discount_sweep(model, grid);
            write_sweep_artifacts(dir, rep);
            out << "critical constant " << format_double(rep.c0) << "\n";
            out << "swept " << rep.grid.size() << " discount factors, final error "
                << format_double(rep.sup_errors.back()) << ", "
                << (rep.converged ? "converged" : "not converged") << "\n";
        } else if (cfg.command == "uniqueness") {
            if (!(cfg.lambda > 0.0))
                throw std::invalid_argument("uniqueness requires --lambda greater than zero");
            const double c0 = critical_constant_cross_checked(model.l0);
            const CostModel norm = normalize_critical(model, c0);
            const MatherPolytope poly = mather_vertices(norm.l0);
            const AssumptionReport rep = check_assumptions(norm, poly.vertices);
            if (!rep.l2_ok || !rep.l4_ok) {
                std::string joined;
                for (const std::string& m : rep.messages) {
                    if (!joined.empty()) joined += "; ";
                    joined += m;
                }
                throw HypothesisError(joined);
            }
            const UniquenessReport ur = uniqueness_probe(model, cfg.lambda, {}, cfg.tol);
            write_uniqueness_artifact(dir, model.space, ur);
            out << "max pairwise gap " << format_double(ur.max_pairwise_gap) << ", "
                << (ur.unique ? "unique within tolerance" : "uniqueness not confirmed") << "\n";
        } else {
            throw std::invalid_argument("unknown command '" + cfg.command + "'");
        }
        return 0;
    } catch (const HypothesisError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace weakkam
