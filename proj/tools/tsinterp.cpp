#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "tsinterp/config.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-agnostic attribution and faithfulness evaluation for multivariate forecasters"};
  app.set_version_flag("--version", std::string("tsinterp ") + tsinterp::kEngineVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string output;
  app.add_option("--config", config_path, "Run configuration (INI)");
  app.add_option("--seed", seed, "Base random seed (overrides run.seed)");
  app.add_option("--workers", workers, "Worker threads for interpretation (overrides run.workers)");
  app.add_option("--output", output, "Run directory (overrides run.output)");

  auto* preprocess = app.add_subcommand("preprocess", "Clip, interpolate, split and standardize the raw panel");
  auto* interpret = app.add_subcommand("interpret", "Fit or attach the model and compute attributions");
  auto* evaluate = app.add_subcommand("evaluate", "Faithfulness, forecast accuracy and ground-truth comparison");
  auto* report = app.add_subcommand("report", "Write a text summary of a run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    auto load = [&] {
      if (config_path.empty()) throw tsinterp::ValidationError("--config is required for this command");
      tsinterp::RunConfig config = tsinterp::load_config(config_path);
      if (seed) config.seed = *seed;
      if (workers) config.workers = *workers;
      if (!output.empty()) config.output = output;
      return config;
    };
    if (preprocess->parsed()) {
      tsinterp::cmd_preprocess(load());
    } else if (interpret->parsed()) {
      tsinterp::cmd_interpret(load());
    } else if (evaluate->parsed()) {
      tsinterp::cmd_evaluate(load());
    } else if (report->parsed()) {
      const std::string dir = !output.empty() ? output : load().output.string();
      std::cout << tsinterp::cmd_report(dir).string() << '\n';
    }
  } catch (const tsinterp::ValidationError& e) {
    std::cerr << "tsinterp: error: " << e.what() << '\n';
    return kValidation;
  } catch (const tsinterp::ProtocolError& e) {
    std::cerr << "tsinterp: protocol error: " << e.what() << '\n';
    return kRuntime;
  } catch (const tsinterp::NumericError& e) {
    std::cerr << "tsinterp: numeric error: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "tsinterp: runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
