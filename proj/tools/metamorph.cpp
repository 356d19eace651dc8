// metamorph simulate|match|uq|verify --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

#include "metamorph/commands.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

namespace {

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("METAMORPH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<int>(v);
    throw metamorph::InputError("METAMORPH_THREADS must be a positive integer");
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metamorph: deterministic and stochastic metamorphosis for landmarks and images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", metamorph::version_string);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (config_required) opt->required();
    opt->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "master seed (overrides seed)");
    sub->add_option("--threads", threads, "worker threads (default: METAMORPH_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* simulate = app.add_subcommand("simulate", "integrate one trajectory");
  CLI::App* match = app.add_subcommand("match", "shooting-based endpoint matching");
  CLI::App* uq = app.add_subcommand("uq", "Monte Carlo ensemble and statistics");
  CLI::App* verify = app.add_subcommand("verify", "run the invariant checks");
  add_common(simulate, true);
  add_common(match, true);
  add_common(uq, true);
  add_common(verify, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : metamorph::exit_invalid_input;
  }

  try {
    std::optional<metamorph::RunConfig> config;
    if (!config_path.empty()) {
      config = metamorph::load_config(config_path);
      for (auto* sub : {simulate, match, uq, verify})
        if (sub->parsed() && sub->count("--seed") > 0) config->seed = seed;
    }
    const int nthreads = thread_count(threads);
    auto out_path = [&]() -> std::filesystem::path { return out_dir.empty() ? config->output_dir : out_dir; };

    if (simulate->parsed()) return metamorph::cmd_simulate(*config, out_path(), std::cout);
    if (match->parsed()) return metamorph::cmd_match(*config, out_path(), nthreads, std::cout);
    if (uq->parsed()) return metamorph::cmd_uq(*config, out_path(), nthreads, std::cout);
    std::optional<std::filesystem::path> verify_out;
    if (!out_dir.empty()) verify_out = out_dir;
    return metamorph::cmd_verify(config, verify_out, std::cout);
  } catch (const metamorph::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return metamorph::exit_invalid_input;
  } catch (const metamorph::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return metamorph::exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return metamorph::exit_numerical;
  }
}
