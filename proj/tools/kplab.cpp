#include "kplab/commands.hpp"
#include "kplab/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
    CLI::App app{"kplab: framed elastic rods spanned by anisotropic soap films"};
    app.require_subcommand(1);

    std::string config, out;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<std::string> curves;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config, "experiment configuration (JSON)")->required();
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "random seed for the volume estimator");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    };
    auto *check = app.add_subcommand("check", "evaluate the admissibility constraints of the seed configuration");
    auto *minimize = app.add_subcommand("minimize", "alternating film / rod descent");
    auto *dimred = app.add_subcommand("dimred", "thin-rod sweep over eps");
    auto *link = app.add_subcommand("link", "linking numbers and global radii of CSV curves");
    for (auto *sub : {check, minimize, dimred}) add_common(sub);
    link->add_option("--curve", curves, "curve CSV (x,y,z rows); repeat for several curves")->required();
    link->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : kplab::exit_config;
    }
    kplab::parallel::set_thread_count(threads);

    if (link->parsed()) {
        return kplab::cmd_link({curves.begin(), curves.end()}, std::cout, std::cerr);
    }
    kplab::RunOverrides ov;
    if (!out.empty()) ov.out = out;
    for (auto *sub : {check, minimize, dimred})
        if (sub->parsed() && sub->count("--seed") > 0) ov.seed = seed;
    if (check->parsed()) return kplab::run_check(config, ov, std::cout);
    if (minimize->parsed()) return kplab::run_minimize(config, ov, std::cout);
    return kplab::run_dimred(config, ov, std::cout);
}
