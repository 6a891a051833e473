// sparsedyn command-line harness.
//
//   sparsedyn <simulate|identify|bootstrap|lobes|bench> [--config file] [--key value ...]
//
// Every configuration key is also a flag; flags win over the file.
// Exit codes: 0 success, 1 invalid configuration or input, 2 numerical failure.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "sparsedyn/errors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace sparsedyn;
  CLI::App app{"Sparse identification of nonlinear dynamics with the trimmed lasso"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app = nullptr;
    std::string config;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Sub> subs;
  for (const auto& name : cli::command_names()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name);
    s.app->add_option("--config", s.config, "key = value configuration file");
    for (const auto& k : cli::command_schema(name)) {
      std::string help = k.help;
      if (!k.fallback.empty()) help += " [" + k.fallback + "]";
      s.app->add_option("--" + k.name, s.flags[k.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    try {
      cli::Config config(cli::command_schema(name));
      if (!s.config.empty()) config.load_file(s.config);
      for (const auto& [key, value] : s.flags)
        if (s.app->count("--" + key) > 0) config.set(key, value, "--" + key);
      cli::run_command(name, config, std::cerr);
      return kOk;
    } catch (const cli::ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kValidation;
    } catch (const InvalidArgument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kValidation;
    } catch (const NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return kNumerical;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kNumerical;
    }
  }
  return kValidation;
}
