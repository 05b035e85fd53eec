#include "fblab/commands.hpp"
#include "fblab/config.hpp"
#include "fblab/errors.hpp"
#include "fblab/parallel.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

using namespace fblab;

namespace {

// --threads wins over FBLAB_THREADS; both must be positive integers.
int resolve_threads(const std::optional<int>& flag) {
  if (flag) {
    if (*flag < 1) throw InputError("--threads must be at least 1");
    return *flag;
  }
  const char* env = std::getenv("FBLAB_THREADS");
  if (!env || !*env) return 1;
  int value = 0;
  const std::string s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 1) {
    throw InputError("FBLAB_THREADS must be a positive integer, got '" + s + "'");
  }
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fblab: numerical laboratory for sublinear free-boundary minimizers"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> out;
  std::optional<unsigned long long> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "experiment config (key = value lines)");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads (default: FBLAB_THREADS or 1)");

  std::string gen_kind;
  auto* gen = app.add_subcommand("generate", "write a field: halfspace, minimizer or drift");
  gen->add_option("kind", gen_kind, "halfspace | minimizer | drift")->required();

  std::string an_kind;
  std::string field;
  auto* an = app.add_subcommand("analyze", "analyze a field: weiss, blowup, fb, epi or gauge");
  an->add_option("kind", an_kind, "weiss | blowup | fb | epi | gauge")->required();
  an->add_option("field", field, "FBLAB1 field file (not needed for epi)");

  auto* ver = app.add_subcommand("verify", "run the invariant suite");

  // Global flags are accepted after the subcommand too.
  for (auto* sub : {gen, an, ver}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kInputError);
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (out) cfg.out = *out;
    if (seed) cfg.seed = *seed;
    validate(cfg);
    set_thread_count(resolve_threads(threads));
    if (*gen) return cmd_generate(gen_kind, cfg);
    if (*an) return cmd_analyze(an_kind, field, cfg);
    return cmd_verify(cfg);
  } catch (const Error& e) {
    std::cerr << "fblab: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "fblab: internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInvariantFailure);
  }
}
