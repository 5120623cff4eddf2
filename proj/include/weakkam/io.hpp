#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "experiments.hpp"
#include "model.hpp"
#include "types.hpp"

namespace weakkam {

/// Shortest faithful decimal form used by every CSV artifact.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline double number_at(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) throw std::invalid_argument("model: " + where + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw std::invalid_argument("model: " + where + " must be finite");
    return v;
}

inline Matrix parse_matrix(const nlohmann::json& j, std::size_t n, const std::string& name) {
    if (!j.is_array() || j.size() != n)
        throw std::invalid_argument("model: " + name + " must be an array of " +
                                    std::to_string(n) + " rows");
    Matrix m(n, n);
    for (std::size_t z = 0; z < n; ++z) {
        const nlohmann::json& row = j[z];
        if (!row.is_array() || row.size() != n)
            throw std::invalid_argument("model: " + name + " row " + std::to_string(z) +
                                        " must hold " + std::to_string(n) + " numbers");
        for (std::size_t x = 0; x < n; ++x)
            m(z, x) = number_at(row[x], name + "[" + std::to_string(z) + "][" +
                                            std::to_string(x) + "]");
    }
    return m;
}

inline std::vector<double> parse_vector(const nlohmann::json& j, std::size_t n,
                                        const std::string& name) {
    if (!j.is_array() || j.size() != n)
        throw std::invalid_argument("model: " + name + " must be an array of " +
                                    std::to_string(n) + " numbers");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = number_at(j[i], name + "[" + std::to_string(i) + "]");
    return v;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t z = 0; z < m.rows(); ++z) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t x = 0; x < m.cols(); ++x) row.push_back(m(z, x));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& allowed,
                                const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const std::string& k : allowed)
            if (item.key() == k) known = true;
        if (!known)
            throw std::invalid_argument("model: unknown key '" + item.key() + "' in " + where);
    }
}

}  // namespace detail

/** Builds a model from its JSON description.
 *
 * Schema: {"labels": [strings], "l0": [[numbers]], "coupling": {"variant":
 * "affine" | "saturating", "A": [[..]] or "alpha": [..], "B": [[..]] or
 * "beta": [..], "scale": number}}.  The vector forms expand as
 * A(z, x) = alpha[z] and B(z, x) = beta[x]; omitted weights are zero; scale
 * is required for the saturating variant and rejected otherwise.  Unknown
 * keys anywhere are errors.
 */
inline CostModel parse_model(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("model: top level must be an object");
    detail::reject_unknown_keys(j, {"labels", "l0", "coupling"}, "the model object");
    if (!j.contains("labels") || !j.contains("l0") || !j.contains("coupling"))
        throw std::invalid_argument("model: keys labels, l0 and coupling are all required");

    const nlohmann::json& jl = j.at("labels");
    if (!jl.is_array() || jl.empty())
        throw std::invalid_argument("model: labels must be a non-empty array of strings");
    FiniteSpace space;
    for (const nlohmann::json& item : jl) {
        if (!item.is_string())
            throw std::invalid_argument("model: labels must be a non-empty array of strings");
        space.labels.push_back(item.get<std::string>());
    }
    validate_space(space);
    const std::size_t n = space.size();

    Matrix l0 = detail::parse_matrix(j.at("l0"), n, "l0");

    const nlohmann::json& jc = j.at("coupling");
    if (!jc.is_object()) throw std::invalid_argument("model: coupling must be an object");
    detail::reject_unknown_keys(jc, {"variant", "A", "alpha", "B", "beta", "scale"},
                                "the coupling object");
    if (!jc.contains("variant") || !jc.at("variant").is_string())
        throw std::invalid_argument("model: coupling.variant must be a string");
    const std::string variant = jc.at("variant").get<std::string>();
    CouplingSpec coupling;
    if (variant == "affine")
        coupling.variant = CouplingVariant::Affine;
    else if (variant == "saturating")
        coupling.variant = CouplingVariant::Saturating;
    else
        throw std::invalid_argument("model: coupling.variant must be 'affine' or 'saturating'");

    if (jc.contains("A") && jc.contains("alpha"))
        throw std::invalid_argument("model: give either coupling.A or coupling.alpha, not both");
    if (jc.contains("A")) {
        coupling.A = detail::parse_matrix(jc.at("A"), n, "coupling.A");
    } else if (jc.contains("alpha")) {
        const std::vector<double> alpha = detail::parse_vector(jc.at("alpha"), n, "coupling.alpha");
        coupling.A = Matrix(n, n);
        for (std::size_t z = 0; z < n; ++z)
            for (std::size_t x = 0; x < n; ++x) coupling.A(z, x) = alpha[z];
    }
    if (jc.contains("B") && jc.contains("beta"))
        throw std::invalid_argument("model: give either coupling.B or coupling.beta, not both");
    if (jc.contains("B")) {
        coupling.B = detail::parse_matrix(jc.at("B"), n, "coupling.B");
    } else if (jc.contains("beta")) {
        const std::vector<double> beta = detail::parse_vector(jc.at("beta"), n, "coupling.beta");
        coupling.B = Matrix(n, n);
        for (std::size_t z = 0; z < n; ++z)
            for (std::size_t x = 0; x < n; ++x) coupling.B(z, x) = beta[x];
    }
    if (coupling.variant == CouplingVariant::Saturating) {
        if (!jc.contains("scale"))
            throw std::invalid_argument("model: coupling.scale is required for saturating models");
        coupling.scale = detail::number_at(jc.at("scale"), "coupling.scale");
    } else if (jc.contains("scale")) {
        throw std::invalid_argument("model: coupling.scale is only valid for saturating models");
    }
    return make_model(std::move(space), std::move(l0), std::move(coupling));
}

/// Loads a model from a JSON file; parse problems become invalid_argument.
inline CostModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open model file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("model file " + path + ": " + e.what());
    }
    return parse_model(j);
}

/// Serializes a model (full weight tables) so a reload reproduces it bit for bit.
inline void save_model(const std::string& path, const CostModel& m) {
    nlohmann::json j;
    j["labels"] = m.space.labels;
    j["l0"] = detail::matrix_to_json(m.l0);
    nlohmann::json c;
    const bool saturating = m.coupling.variant == CouplingVariant::Saturating;
    c["variant"] = saturating ? "saturating" : "affine";
    c["A"] = detail::matrix_to_json(m.coupling.A);
    c["B"] = detail::matrix_to_json(m.coupling.B);
    if (saturating) c["scale"] = m.coupling.scale;
    j["coupling"] = std::move(c);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace detail

/// c0.json: critical constant with its linear-programming cross-check.
inline void write_c0_artifact(const std::filesystem::path& dir, double c0, double lp_value) {
    nlohmann::json j;
    j["c0"] = c0;
    j["lp_value"] = lp_value;
    j["cross_check_gap"] = std::abs(lp_value + c0);
    detail::write_json_file(dir / "c0.json", j);
}

/// h.csv (labeled barrier table) and aubry.json (projected set plus c0).
inline void write_barrier_artifacts(const std::filesystem::path& dir, const FiniteSpace& space,
                                    const BarrierTable& bt,
                                    double tol_aubry = defaults::tol_aubry) {
    const std::size_t n = space.size();
    std::string csv = "state";
    for (const std::string& l : space.labels) csv += "," + l;
    csv += "\n";
    for (std::size_t z = 0; z < n; ++z) {
        csv += space.labels[z];
        for (std::size_t x = 0; x < n; ++x) csv += "," + format_double(bt.h(z, x));
        csv += "\n";
    }
    detail::write_text_file(dir / "h.csv", csv);

    nlohmann::json j;
    j["c0"] = bt.c0;
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t a : aubry_set(bt, tol_aubry)) names.push_back(space.labels[a]);
    j["aubry"] = std::move(names);
    detail::write_json_file(dir / "aubry.json", j);
}

/// vertices.json (weight tables of the polytope corners) and value.json.
inline void write_mather_artifacts(const std::filesystem::path& dir, const FiniteSpace& space,
                                   const MatherPolytope& poly) {
    nlohmann::json verts = nlohmann::json::array();
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
        nlohmann::json v;
        v["weights"] = detail::matrix_to_json(poly.vertices[i].weights);
        if (i < poly.cycles.size()) {
            nlohmann::json states = nlohmann::json::array();
            for (std::size_t s : poly.cycles[i]) states.push_back(space.labels[s]);
            v["cycle"] = std::move(states);
        }
        verts.push_back(std::move(v));
    }
    nlohmann::json j;
    j["vertices"] = std::move(verts);
    detail::write_json_file(dir / "vertices.json", j);

    nlohmann::json jv;
    jv["value"] = poly.value;
    detail::write_json_file(dir / "value.json", jv);
}

/// assumptions.json: the full hypothesis report.
inline void write_assumptions_artifact(const std::filesystem::path& dir,
                                       const AssumptionReport& rep) {
    nlohmann::json j;
    j["kappa_u"] = rep.kappa_u;
    j["kappa_v"] = rep.kappa_v;
    j["l2_ok"] = rep.l2_ok;
    j["l4_ok"] = rep.l4_ok;
    j["l4_values"] = rep.l4_values;
    j["messages"] = rep.messages;
    detail::write_json_file(dir / "assumptions.json", j);
}

/// u_lambda.csv: the discounted fixed point with its certified residual.
inline void write_solution_artifact(const std::filesystem::path& dir, const FiniteSpace& space,
                                    const DiscountedSolution& sol) {
    std::string csv = "state,u,residual\n";
    for (std::size_t i = 0; i < space.size(); ++i)
        csv += space.labels[i] + "," + format_double(sol.u[i]) + "," +
               format_double(sol.residual) + "\n";
    detail::write_text_file(dir / "u_lambda.csv", csv);
}

/// u0.csv: the limit potential with the gap between its two characterizations.
inline void write_limit_artifact(const std::filesystem::path& dir, const FiniteSpace& space,
                                 const LimitReport& rep) {
    std::string csv = "state,u0,gap\n";
    for (std::size_t i = 0; i < space.size(); ++i)
        csv += space.labels[i] + "," + format_double(rep.u0[i]) + "," + format_double(rep.gap) +
               "\n";
    detail::write_text_file(dir / "u0.csv", csv);
}

/// sweep.csv plus a small gnuplot script to view it.
inline void write_sweep_artifacts(const std::filesystem::path& dir, const SweepReport& rep) {
    std::string csv = "lambda,sup_error,residual,iterations\n";
    for (std::size_t i = 0; i < rep.grid.size(); ++i)
        csv += format_double(rep.grid[i]) + "," + format_double(rep.sup_errors[i]) + "," +
               format_double(rep.residuals[i]) + "," + std::to_string(rep.iterations[i]) + "\n";
    detail::write_text_file(dir / "sweep.csv", csv);

    const std::string gp =
        "# Plots the vanishing-discount sweep written next to this script.\n"
        "set datafile separator \",\"\n"
        "set logscale xy\n"
        "set xlabel \"lambda\"\n"
        "set ylabel \"sup distance to the limit\"\n"
        "set key left top\n"
        "plot \"sweep.csv\" every ::1 using 1:2 with linespoints title \"sup error\", \\\n"
        "     \"sweep.csv\" every ::1 using 1:3 with linespoints title \"residual\"\n";
    detail::write_text_file(dir / "sweep.gp", gp);
}

/// uniqueness.json: per-start fixed points and the pairwise agreement verdict.
inline void write_uniqueness_artifact(const std::filesystem::path& dir, const FiniteSpace& space,
                                      const UniquenessReport& rep) {
    nlohmann::json j;
    j["lambda"] = rep.lambda;
    j["starts"] = rep.start_names;
    nlohmann::json pts = nlohmann::json::array();
    for (const Potential& u : rep.fixed_points) {
        nlohmann::json p = nlohmann::json::object();
        for (std::size_t i = 0; i < space.size(); ++i) p[space.labels[i]] = u[i];
        pts.push_back(std::move(p));
    }
    j["fixed_points"] = std::move(pts);
    j["residuals"] = rep.residuals;
    j["converged"] = rep.converged;
    j["max_pairwise_gap"] = rep.max_pairwise_gap;
    j["unique"] = rep.unique;
    detail::write_json_file(dir / "uniqueness.json", j);
}

}  // namespace weakkam
