// gemix command-line driver. Talks to the library only through gemix.h.

#include <gemix/gemix.h>

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Options {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  bool quiet = false;

  std::optional<int> per_class;
  std::optional<int> steps;
  std::optional<int> count;
  std::optional<int> epochs;
  std::string kind;
  std::string setup;
  std::string model;
  std::vector<std::string> reports;
};

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int report_failure(gemix_status status, const char* stage) {
  std::fprintf(stderr, "gemix %s: %s: %s\n", stage, gemix_status_string(status), gemix_last_error());
  return gemix_status_exit_code(status);
}

struct ConfigHandle {
  gemix_config* ptr = nullptr;
  ~ConfigHandle() { gemix_config_free(ptr); }
};

struct PipelineHandle {
  gemix_pipeline* ptr = nullptr;
  ~PipelineHandle() { gemix_pipeline_free(ptr); }
};

gemix_status apply(gemix_config* cfg, const std::string& key, const std::string& value) {
  return gemix_config_set(cfg, key.c_str(), value.c_str());
}

int run(const std::string& command, const Options& opt) {
  ConfigHandle cfg;
  gemix_status st = opt.config_path.empty() ? gemix_config_new(nullptr, &cfg.ptr)
                                            : gemix_config_load(opt.config_path.c_str(), &cfg.ptr);
  if (st != GEMIX_OK) return report_failure(st, command.c_str());

  std::vector<std::pair<std::string, std::string>> flags;
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "gemix %s: --set expects key=value, got '%s'\n", command.c_str(), kv.c_str());
      return 1;
    }
    flags.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  // Quote the path so values like "123" stay strings.
  if (!opt.output_dir.empty()) flags.emplace_back("output_dir", "\"" + opt.output_dir + "\"");
  if (opt.seed) flags.emplace_back("seed", std::to_string(*opt.seed));
  if (opt.threads) flags.emplace_back("threads", std::to_string(*opt.threads));
  if (opt.per_class) flags.emplace_back("data.per_class", std::to_string(*opt.per_class));
  if (opt.steps) flags.emplace_back("gan.steps", std::to_string(*opt.steps));
  if (opt.count) flags.emplace_back("mixers.count", std::to_string(*opt.count));
  if (opt.epochs) flags.emplace_back("classifier.epochs", std::to_string(*opt.epochs));
  for (const auto& [key, value] : flags)
    if ((st = apply(cfg.ptr, key, value)) != GEMIX_OK) return report_failure(st, command.c_str());

  PipelineHandle pipe;
  st = gemix_pipeline_new(cfg.ptr, opt.quiet ? nullptr : print_line, nullptr, &pipe.ptr);
  if (st != GEMIX_OK) return report_failure(st, command.c_str());

  if (command == "gen-data") {
    st = gemix_pipeline_gen_data(pipe.ptr);
  } else if (command == "train-gan") {
    st = gemix_pipeline_train_gan(pipe.ptr);
  } else if (command == "augment") {
    st = gemix_pipeline_augment(pipe.ptr, opt.kind.c_str());
  } else if (command == "train-clf") {
    st = gemix_pipeline_train_clf(pipe.ptr, opt.setup.c_str());
  } else if (command == "eval") {
    st = gemix_pipeline_eval(pipe.ptr, opt.setup.c_str(), opt.model.empty() ? nullptr : opt.model.c_str());
  } else if (command == "report") {
    std::vector<const char*> paths;
    for (const auto& p : opt.reports) paths.push_back(p.c_str());
    st = gemix_pipeline_report(pipe.ptr, paths.data(), paths.size());
  } else if (command == "features") {
    st = gemix_pipeline_features(pipe.ptr, opt.setup.c_str());
  }
  if (st != GEMIX_OK) return report_failure(st, command.c_str());
  std::cout << gemix_pipeline_last_output(pipe.ptr);
  if (command != "report") std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemix: conditional-GAN mixup augmentation pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gemix_version());
  Options opt;

  app.add_option("-c,--config", opt.config_path, "JSON run configuration");
  app.add_option("-o,--out", opt.output_dir, "Output root (default: $GEMIX_OUTPUT_ROOT or ./gemix-run)");
  app.add_option("--seed", opt.seed, "Run seed");
  app.add_option("--threads", opt.threads, "Compute threads (1 = deterministic reference)");
  app.add_option("--set", opt.overrides, "Config override key=value (repeatable), e.g. gan.steps=200");
  app.add_flag("-q,--quiet", opt.quiet, "Suppress progress output");

  const std::vector<std::string> kinds{"mixup", "mmixup", "gemix"};
  const std::vector<std::string> setups{"Real",       "Mixup",       "MMixup",     "GeMix",
                                        "Real+Mixup", "Real+MMixup", "Real+GeMix", "Real+MMixup+GeMix"};

  auto* gen = app.add_subcommand("gen-data", "Write the procedural shape dataset (class folders)");
  gen->add_option("--per-class", opt.per_class, "Images per class");

  auto* gan = app.add_subcommand("train-gan", "Train the conditional GAN on the GAN pool");
  gan->add_option("--steps", opt.steps, "Training steps");

  auto* aug = app.add_subcommand("augment", "Produce an augmented dataset");
  aug->add_option("-k,--kind", opt.kind, "mixup, mmixup or gemix")->required()->check(CLI::IsMember(kinds));
  aug->add_option("-n,--count", opt.count, "Number of samples");

  auto* clf = app.add_subcommand("train-clf", "Train a classifier for one training setup");
  clf->add_option("-s,--setup", opt.setup, "Training setup")->required()->check(CLI::IsMember(setups));
  clf->add_option("--epochs", opt.epochs, "Epochs");

  auto* ev = app.add_subcommand("eval", "Evaluate a trained classifier on the test pool");
  ev->add_option("-s,--setup", opt.setup, "Training setup")->required()->check(CLI::IsMember(setups));
  ev->add_option("-m,--model", opt.model, "Model file (default: models/<setup>/model.gmx)");

  auto* rep = app.add_subcommand("report", "Render a comparison table from metric reports");
  rep->add_option("reports", opt.reports, "Report files (default: all under reports/)");

  auto* feat = app.add_subcommand("features", "Export penultimate features for external embedding");
  feat->add_option("-s,--setup", opt.setup, "Model setup")->default_val("Real")->check(CLI::IsMember(setups));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (auto* sub : app.get_subcommands()) return run(sub->get_name(), opt);
  return 1;
}
