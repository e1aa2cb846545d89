// twinbeam: simulate and analyze transverse hitching of twin beams in a
// traveling-wave optical parametric amplifier.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twinbeam/commands.hpp"
#include "twinbeam/config.hpp"

namespace {

std::string defaults_footer() {
  std::string text = "Configuration defaults (override via --config JSON):\n";
  for (const auto& [key, value] : twinbeam::RunConfig{}.flat())
    text += "  " + key + " = " + (value.empty() ? "(empty)" : value) + "\n";
  text += "Presets: fig1, free, fig2-loss, experiment\n";
  return text;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-beam OPA transverse dynamics: spectral propagation, "
               "trajectory scans, exit-position sweeps and model fits"};
  app.footer(defaults_footer());
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", preset, "named parameter preset");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* pm = app.add_subcommand("phasematch",
                                "print the phase-matched seed angle, or the "
                                "Re(a1) implied by a requested angle");
  std::optional<double> pm_angle, pm_a2;
  pm->add_option("--angle", pm_angle, "requested angle [rad]; prints implied a1_re");
  pm->add_option("--a2", pm_a2, "override Re(a2) [rad/lambda]");

  auto* prop = app.add_subcommand("propagate",
                                  "trajectory diagnostics plus intensity maps "
                                  "(PGM) of both modes");
  auto* traj = app.add_subcommand("trajectory",
                                  "trajectory diagnostics only (no maps)");
  std::optional<std::size_t> nz_override;
  prop->add_option("--nz", nz_override, "number of z samples");
  traj->add_option("--nz", nz_override, "number of z samples");

  auto* sweep = app.add_subcommand("sweep", "exit positions vs coupling/net gain");
  std::vector<double> sweep_b, sweep_gains, sweep_ims;
  sweep->add_option("--b-values", sweep_b, "cross couplings to sweep [rad/lambda]");
  sweep->add_option("--gains", sweep_gains,
                    "target net gains to sweep (b solved per point)");
  sweep->add_option("--a1-im", sweep_ims,
                    "one curve file per Im(a1) value [rad/lambda]");

  auto* fitc = app.add_subcommand("fit", "fit the hitching model to a dataset CSV");
  std::string data_path;
  bool no_im_a1 = false, shared_offset = false, unweighted = false;
  fitc->add_option("data", data_path, "dataset CSV (see README for the schema)")
      ->required()
      ->check(CLI::ExistingFile);
  fitc->add_flag("--no-im-a1", no_im_a1, "hold Im(a1) fixed at 0");
  fitc->add_flag("--shared-offset", shared_offset,
                 "use one common vertical offset for both beams");
  fitc->add_flag("--unweighted", unweighted, "ignore the dataset uncertainties");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e); // prints help or the usage error
    return code == 0 ? 0 : 1;
  }

  try {
    twinbeam::RunConfig config;
    if (!preset.empty()) config = twinbeam::preset_config(preset);
    if (!config_path.empty()) config = twinbeam::load_config(config_path, config);
    if (!out_dir.empty()) config.output.directory = out_dir;
    if (nz_override) config.scan.nz = *nz_override;
    if (!sweep_b.empty()) config.scan.b_values = sweep_b;
    if (!sweep_gains.empty()) {
      config.scan.gain_values = sweep_gains;
      if (!sweep_b.empty())
        throw twinbeam::data_error("sweep: give either --b-values or --gains, not both");
    }
    if (no_im_a1) config.fit.fit_im_a1 = false;
    if (shared_offset) config.fit.shared_offset = true;
    if (unweighted) config.fit.weighted = false;

    if (pm->parsed()) return twinbeam::cmd_phasematch(config, pm_angle, pm_a2, std::cout);
    if (prop->parsed()) return twinbeam::cmd_propagate(config, true, std::cout);
    if (traj->parsed()) return twinbeam::cmd_propagate(config, false, std::cout);
    if (sweep->parsed()) return twinbeam::cmd_sweep(config, sweep_ims, std::cout);
    if (fitc->parsed()) return twinbeam::cmd_fit(config, data_path, std::cout);
  } catch (const twinbeam::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const twinbeam::parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const twinbeam::guard_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
