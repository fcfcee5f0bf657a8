#include "slhf/config.hpp"
#include "slhf/errors.hpp"
#include "slhf/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Photoionization cross sections from linear response on a spin-dependent local exchange potential"};
  std::string mode, config_path;
  int threads = -1;
  bool no_cache = false;
  app.add_option("mode", mode, "scf | scan-ti | scan-td | fit | tables")->required();
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--threads", threads, "worker threads (0: all cores; default: config value)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--no-cache", no_cache, "ignore and do not write the SCF cache");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : slhf::exit_code::config;
  }

  try {
    const auto run_mode = slhf::parse_run_mode(mode);
    const auto config = slhf::load_config(config_path);
    slhf::RunContext context;
    context.threads = threads;
    context.use_cache = !no_cache;
    context.log = &std::cerr;
    const auto result = slhf::run(config, run_mode, context);
    for (const auto& f : result.files) std::cout << f << "\n";
    if (result.exit_code != 0) std::cerr << "error: " << result.message << "\n";
    return result.exit_code;
  } catch (const slhf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return slhf::exit_code::config;
  }
}
