#include <string>

#include "CLI11.hpp"

#include "weakkam/weakkam.hpp"

int main(int argc, char** argv) {
    CLI::App app{"finite-state weak KAM and discounted approximation toolkit"};
    app.require_subcommand(1);

    weakkam::RunConfig cfg;
    struct Entry {
        const char* name;
        const char* help;
        bool lambda;
        bool grid;
    };
    const Entry entries[] = {
        {"critical", "critical constant of the base cost, cross-checked", false, false},
        {"barrier", "pairwise barrier and the projected set", false, false},
        {"mather", "minimizing measures: value and polytope vertices", false, false},
        {"check", "verify the structural hypotheses", false, false},
        {"solve", "discounted fixed point at one discount factor", true, false},
        {"limit", "vanishing-discount limit potential", false, false},
        {"sweep", "solve along a discount grid and track the limit error", false, true},
        {"uniqueness", "compare fixed points reached from several starts", true, false},
    };
    for (const Entry& e : entries) {
        CLI::App* cmd = app.add_subcommand(e.name, e.help);
        cmd->add_option("model", cfg.model_path, "model JSON file")->required();
        cmd->add_option("--out", cfg.out_dir, "directory for artifact files");
        cmd->add_option("--tol", cfg.tol, "fixed point tolerance");
        if (e.lambda) cmd->add_option("--lambda", cfg.lambda, "discount factor");
        if (e.grid) {
            cmd->add_option("--grid-start", cfg.grid_start, "largest discount factor");
            cmd->add_option("--grid-ratio", cfg.grid_ratio, "geometric ratio between factors");
            cmd->add_option("--grid-steps", cfg.grid_steps, "number of grid points");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    return weakkam::run(cfg);
}
