#include <cstdint>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "bioinverse/cli.hpp"

int main(int argc, char** argv) {
    using namespace bioinverse;

    CLI::App app{"synthetic-measurement inverse analysis of biofilm interfaces"};
    app.name("bioinverse");
    app.require_subcommand(0, 1);

    CliOptions options;
    std::vector<double> theta;
    std::uint64_t seed = 0;
    int rc = kExitOk;

    auto bind_common = [&](CLI::App* sub) {
        sub->add_option("--config", options.config, "run configuration JSON")
            ->required();
        sub->add_option("--out", options.out, "output directory")->required();
        return sub->add_option("--seed", seed, "override the config seed");
    };

    auto* forward = app.add_subcommand(
        "forward", "write the model interface at a parameter point");
    auto* fwd_seed = bind_common(forward);
    auto* fwd_theta = forward
                          ->add_option("--theta", theta,
                                       "comma-separated parameter values")
                          ->delimiter(',')
                          ->required();
    forward->callback([&, fwd_seed, fwd_theta] {
        if (fwd_seed->count() > 0) options.seed = seed;
        if (fwd_theta->count() > 0) options.theta = theta;
        rc = cmd_forward(options);
    });

    auto* synth = app.add_subcommand(
        "synth", "generate one noisy observation per configured noise level");
    auto* synth_seed = bind_common(synth);
    synth->callback([&, synth_seed] {
        if (synth_seed->count() > 0) options.seed = seed;
        rc = cmd_synth(options);
    });

    auto* invert = app.add_subcommand(
        "invert", "fit the model parameters to one observation");
    auto* inv_seed = bind_common(invert);
    invert->add_option("--obs", options.observation, "observation JSON")->required();
    auto* inv_theta = invert
                          ->add_option("--theta", theta,
                                       "initial guess (defaults to the config's first)")
                          ->delimiter(',');
    invert->callback([&, inv_seed, inv_theta] {
        if (inv_seed->count() > 0) options.seed = seed;
        if (inv_theta->count() > 0) options.theta = theta;
        rc = cmd_invert(options);
    });

    auto* campaign = app.add_subcommand(
        "campaign", "run every (noise level, initial guess) inversion");
    auto* camp_seed = bind_common(campaign);
    campaign->callback([&, camp_seed] {
        if (camp_seed->count() > 0) options.seed = seed;
        rc = cmd_campaign(options);
    });

    auto* report = app.add_subcommand(
        "report", "tidy the traces of an inversion or campaign directory");
    report->add_option("--run-dir", options.run_dir, "directory holding trace.csv files")
        ->required();
    report->add_option("--out", options.out, "output directory")->required();
    report->add_option("--config", options.config, "run configuration JSON");
    report->callback([&] { rc = cmd_report(options); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return kExitValidation;
    }
    return rc;
}
