// mgidx: scenario runner.
//
//   mgidx <subcommand> [--config PATH] [--out DIR] [--seed INT] [--size INT]
//                      [--flavor z|z2] [--allow-unreliable]
//
// Exit status: 0 when every output row is reliable (or --allow-unreliable),
// 1 when some row is flagged unreliable, 2 on usage or input errors.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mgidx/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Flux-insertion and edge indices of disordered lattice insulators"};
    app.set_version_flag("--version", std::string(mgidx::kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "out", flavor;
    std::optional<std::uint64_t> seed;
    std::optional<int> size;
    bool allow_unreliable = false, with_homotopy = false;
    app.add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "single disorder seed (overrides seeds)");
    app.add_option("--size", size, "linear size L (overrides geometry.L)");
    app.add_option("--flavor", flavor, "index flavor")->check(CLI::IsMember({"z", "z2"}));
    app.add_flag("--allow-unreliable", allow_unreliable, "exit 0 even when rows are flagged unreliable");

    const std::map<std::string, std::string> help{
        {"phase-diagram", "bulk index over the model.a grid"},
        {"fermi-sweep", "bulk index over mu_grid, checking constancy"},
        {"bec", "bulk index against edge index per seed"},
        {"kitaev-check", "flux index against the Kitaev winding"},
        {"locality", "decay envelopes, quasi-projection defect, Schatten norm"},
        {"sule", "localized eigenbasis extraction and (U - V)Q compactness"},
        {"homotopy-check", "f_N table, Fredholm bounds, flux-to-Kitaev stages"}};
    for (const auto& name : mgidx::scenario_names()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        if (name == "kitaev-check") sub->add_flag("--homotopy", with_homotopy, "also run the homotopy stages");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string name = app.get_subcommands().front()->get_name();

    mgidx::ScenarioConfig cfg;
    try {
        cfg.scenario = name;
        if (!config_path.empty()) {
            cfg = mgidx::load_config(config_path, cfg);
            if (cfg.scenario != name)
                throw std::invalid_argument("config scenario '" + cfg.scenario + "' does not match subcommand '" +
                                            name + "'");
        }
        if (seed) cfg.seeds = {*seed};
        if (size) mgidx::set_config_value(cfg, "geometry.L", std::to_string(*size));
        if (!flavor.empty()) cfg.flavor = mgidx::parse_flavor(flavor);
        mgidx::validate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "mgidx: " << e.what() << "\n";
        return 2;
    }

    mgidx::RunResult result;
    try {
        result = mgidx::run_scenario(cfg, {with_homotopy});
        mgidx::write_run(result, cfg, out_dir);
    } catch (const std::invalid_argument& e) {
        std::cerr << "mgidx: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mgidx: " << name << " failed: " << e.what() << "\n";
        return 2;
    }

    const std::size_t bad = result.unreliable_rows();
    for (const auto& t : result.tables)
        std::printf("%-18s %5zu rows  %zu unreliable\n", t.name.c_str(), t.rows.size(), t.unreliable());
    std::printf("config %s -> %s\n", mgidx::config_hash(cfg).c_str(), out_dir.c_str());
    if (bad && !allow_unreliable) {
        std::fprintf(stderr, "mgidx: %zu unreliable rows\n", bad);
        return 1;
    }
    return 0;
}
