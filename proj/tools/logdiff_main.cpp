// logdiff: desk-scale laboratory for the logarithmic diffusion equation
// u_t = Delta log u near extinction.
//
//   logdiff <command> --config <path> [--out <dir>] [--seed <int>] [--threads <int>]
//
// Commands: simulate, barenblatt-table, match-k0, verify, theorem1, theorem2.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "logdiff/run.hpp"

namespace {

logdiff::Command command_from_name(const std::string& name) {
  using logdiff::Command;
  for (Command c : {Command::simulate, Command::barenblatt_table, Command::match_k0,
                    Command::verify, Command::theorem1, Command::theorem2})
    if (name == logdiff::command_name(c)) return c;
  throw logdiff::ConfigError("unknown command '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logarithmic diffusion extinction-profile laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  logdiff::RunOptions options;
  int seed = -1;

  for (const char* name : {"simulate", "barenblatt-table", "match-k0", "verify",
                           "theorem1", "theorem2"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (key = value document)")
        ->required();
    sub->add_option("--out", options.out_dir, "output directory");
    sub->add_option("--seed", seed, "seed for randomized checks");
    sub->add_option("--threads", options.threads, "worker threads for sweep commands")
        ->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    std::ifstream in(config_path);
    if (!in) throw logdiff::ConfigError("cannot open config file '" + config_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();

    logdiff::RunConfig config =
        logdiff::parse_config(buffer.str(), command_from_name(name));
    if (seed >= 0) {
      options.seed_override = true;
      options.seed = static_cast<unsigned>(seed);
    }
    return logdiff::run_command(config, options);
  } catch (const logdiff::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
