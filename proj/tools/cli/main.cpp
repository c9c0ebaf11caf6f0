// soda: directed-information analysis of part-based detection sequences.

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "soda/error.hpp"

namespace {

using soda::cli::Config;

// Flag values are applied on top of the config file once parsing is done.
struct Overrides {
  std::vector<std::function<void(Config&)>> apply;

  template <typename T, typename Field>
  void add(CLI::App* app, const std::string& flag, Field Config::*field, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(flag, *value, help);
    apply.push_back([value, opt, field](Config& c) {
      if (opt->count() > 0) c.*field = *value;
    });
  }
};

void fail_line(const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed-information analysis of multi-person detection sequences"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::size_t threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  app.add_option("--config", config_path, "Flat JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory");
  app.add_option("--threads", threads, "Worker threads, 0 = all cores (never changes results)");

  Overrides ov;

  auto* infer = app.add_subcommand("infer", "Detections -> Gibbs samples -> codebook -> symbol files");
  std::string detections;
  bool save_samples = false;
  infer->add_option("detections", detections, "Directory of .jsonl detection files")->required();
  infer->add_flag("--save-samples", save_samples, "Also write the Gibbs samples");
  ov.add<int>(infer, "--arity", &Config::arity, "3- or 5-part model");
  ov.add<std::uint32_t>(infer, "--p", &Config::p, "Codebook size");
  ov.add<std::size_t>(infer, "--gibbs-burnin", &Config::gibbs_burnin, "Burn-in sweeps");
  ov.add<std::size_t>(infer, "--gibbs-samples", &Config::gibbs_samples, "Kept sweeps per frame");
  ov.add<double, std::optional<double>>(infer, "--gamma1", &Config::gamma1, "Fixed intra-person weight");
  ov.add<double, std::optional<double>>(infer, "--gamma2", &Config::gamma2, "Fixed inter-person weight");

  auto* surface = app.add_subcommand("surface", "Local DI surface, null calibration and FDR peaks");
  std::string x_path, y_path;
  surface->add_option("x", x_path, "Driving symbol file")->required()->check(CLI::ExistingFile);
  surface->add_option("y", y_path, "Driven symbol file")->required()->check(CLI::ExistingFile);
  ov.add<std::size_t>(surface, "--window", &Config::window, "Window width T");
  ov.add<std::size_t>(surface, "--stride", &Config::stride, "Shift step");
  ov.add<double>(surface, "--fdr", &Config::fdr, "FDR level q");
  ov.add<std::string>(surface, "--fdr-method", &Config::fdr_method, "by or bh");
  ov.add<std::size_t>(surface, "--null-reps", &Config::null_reps, "Circular-shift replicates");
  ov.add<std::string>(surface, "--null", &Config::null_mode, "pooled or percell");
  ov.add<std::size_t>(surface, "--top-n", &Config::top_n, "Peaks kept");

  auto* classify = app.add_subcommand("classify", "Pairwise symmetrized DI and nearest-neighbor classification");
  std::string symbols;
  std::size_t repeats = 1;
  bool interactions = false;
  classify->add_option("symbols", symbols, "Directory of .sym files (or an infer output directory)")->required();
  classify->add_option("--repeats", repeats, "Re-split with derived seeds and report every accuracy");
  classify->add_flag("--interactions", interactions, "Also run the per-pair max-statistic test");
  ov.add<std::size_t>(classify, "--k-neighbors", &Config::k_neighbors, "Neighbors voting");
  ov.add<double>(classify, "--split-ratio", &Config::split_ratio, "Training share");

  for (auto* sub : {infer, surface, classify}) {
    ov.add<int>(sub, "--order-k", &Config::order_k, "Markov order of the DI estimator");
    ov.add<std::string>(sub, "--lambda", &Config::lambda, "closed, cv or none");
  }

  auto* synth = app.add_subcommand("synth", "Synthetic coupled detection sequences with ground truth");
  std::string spec_path, mode = "pair";
  std::size_t per_class = 10;
  bool reversed = false;
  synth->add_option("--spec", spec_path, "Coupling spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--mode", mode, "pair or corpus")->check(CLI::IsMember({"pair", "corpus"}));
  synth->add_option("--per-class", per_class, "Sequences per class in corpus mode");
  synth->add_flag("--reversed", reversed, "Also write time-reversed copies");

  auto* validate = app.add_subcommand("validate", "Check detection files");
  std::vector<std::string> inputs;
  validate->add_option("inputs", inputs, "Files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail_line("UsageError", e.what());
    return 2;
  }

  try {
    soda::cli::RunOptions run;
    if (!config_path.empty()) run.config = soda::cli::load_config(config_path);
    for (auto& f : ov.apply) f(run.config);
    if (seed_opt->count() > 0) run.config.seed = seed;
    run.out = out;
    run.threads = threads;

    if (*infer) soda::cli::cmd_infer(detections, run, save_samples);
    if (*surface) soda::cli::cmd_surface(x_path, y_path, run);
    if (*classify) soda::cli::cmd_classify(symbols, run, repeats, interactions);
    if (*synth)
      soda::cli::cmd_synth(spec_path, run, mode == "corpus" ? soda::cli::SynthMode::Corpus : soda::cli::SynthMode::Pair,
                           per_class, reversed);
    if (*validate) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      if (soda::cli::cmd_validate(paths, std::cout) > 0) return 1;
    }
  } catch (const soda::Error& e) {
    fail_line(std::string(soda::to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    fail_line("InternalError", e.what());
    return 1;
  }
  return 0;
}
