#include "pnpmri_cli/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

void add_common(CLI::App *sub, pnpmri::cli::Invocation &inv, std::uint64_t &seed, std::string &out_dir,
                std::string &method, double &lambda, std::size_t &iters) {
  sub->add_option("--config", inv.config_path, "experiment configuration (JSON)");
  sub->add_option("--seed", seed, "override the experiment seed");
  sub->add_option("--out-dir", out_dir, "override the output directory");
  sub->add_option("--method", method, "zero-filled, grappa or pnp");
  sub->add_option("--lambda", lambda, "override the pnp data-consistency weight");
  sub->add_option("--iters", iters, "override the number of ADMM iterations");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Plug-and-play ADMM reconstruction for undersampled multi-coil MRI"};
  app.require_subcommand(1);
  pnpmri::cli::Invocation inv;
  std::uint64_t seed = 0;
  std::string out_dir, method;
  double lambda = 0.0;
  std::size_t iters = 0;

  for (const auto &[name, help] : std::vector<std::pair<std::string, std::string>>{
           {"simulate", "simulate an undersampled acquisition and its ground truth"},
           {"train", "train the CNN denoiser on synthetic pairs"},
           {"reconstruct", "reconstruct an acquisition with one method"},
           {"compare", "run every method on a set of test phantoms and tabulate PSNR/SSIM"}}) {
    CLI::App *sub = app.add_subcommand(name, help);
    add_common(sub, inv, seed, out_dir, method, lambda, iters);
  }
  CLI::App *eval = app.add_subcommand("evaluate", "PSNR/SSIM of a test image against a reference");
  eval->add_option("files", inv.positional, "reference image, test image and optional maps file")
      ->required()
      ->expected(2, 3);
  eval->add_option("--config", inv.config_path, "configuration providing out_dir");
  eval->add_option("--out-dir", out_dir, "directory for report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pnpmri::cli::kExitConfig;
  }

  CLI::App *chosen = app.get_subcommands().front();
  inv.command = chosen->get_name();
  auto given = [&](const char *opt) { return chosen->get_option_no_throw(opt) && chosen->count(opt) > 0; };
  if (given("--seed")) inv.overrides.seed = seed;
  if (given("--out-dir")) inv.overrides.out_dir = out_dir;
  if (given("--method")) inv.overrides.method = method;
  if (given("--lambda")) inv.overrides.lambda = lambda;
  if (given("--iters")) inv.overrides.iters = iters;
  return pnpmri::cli::dispatch(inv, std::cout, std::cerr);
}
