// relclass: command-line front end over the C API.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relclass/relclass.h"

namespace {

struct Common {
  std::string config_file;
  std::string out;
  std::vector<std::string> sets;
  long long seed = 0;
  bool seed_given = false;
  double threshold = 0.5;
  bool threshold_given = false;
};

// File first, then flags, so flags win.
rc_config* build_config(const Common& c,
                        const std::vector<std::pair<std::string, std::string>>& extra) {
  rc_config* cfg = nullptr;
  if (rc_config_new(&cfg) != RC_OK) return nullptr;
  auto bail = [&] {
    std::fprintf(stderr, "relclass: %s\n", rc_last_error());
    rc_config_free(cfg);
    return nullptr;
  };
  if (!c.config_file.empty() && rc_config_load(cfg, c.config_file.c_str()) != RC_OK) return bail();
  for (const auto& kv : c.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "relclass: --set expects key=value, got '%s'\n", kv.c_str());
      rc_config_free(cfg);
      return nullptr;
    }
    if (rc_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) != RC_OK) {
      return bail();
    }
  }
  for (const auto& [k, v] : extra) {
    if (rc_config_set(cfg, k.c_str(), v.c_str()) != RC_OK) return bail();
  }
  if (c.seed_given && rc_config_set(cfg, "seed", std::to_string(c.seed).c_str()) != RC_OK) {
    return bail();
  }
  if (c.threshold_given) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", c.threshold);
    if (rc_config_set(cfg, "threshold", buf) != RC_OK) return bail();
  }
  return cfg;
}

int finish(rc_status status, rc_report* report) {
  if (report) {
    for (size_t i = 0; i < rc_report_warning_count(report); ++i) {
      std::fprintf(stderr, "warning: %s\n", rc_report_warning(report, i));
    }
    for (size_t i = 0; i < rc_report_error_count(report); ++i) {
      std::fprintf(stderr, "error: %s\n", rc_report_error(report, i));
    }
    rc_report_free(report);
  } else if (status != RC_OK) {
    std::fprintf(stderr, "error: %s\n", rc_last_error());
  }
  return status == RC_OK ? 0 : 1;
}

std::vector<const char*> c_strings(const std::vector<std::string>& items) {
  std::vector<const char*> out;
  for (const auto& s : items) out.push_back(s.c_str());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relation classification experiments"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_file, "key = value settings file")->check(CLI::ExistingFile);
  app.add_option("--set", common.sets, "Override a setting (key=value), repeatable");
  auto* seed_opt = app.add_option("--seed", common.seed, "Root random seed");
  auto* th_opt = app.add_option("--threshold", common.threshold, "Decision threshold");

  std::string kb, templates, model, data, patterns, grid, e2e, models_dir;
  std::vector<std::string> list;
  long long epochs = -1;
  std::vector<std::pair<std::string, std::string>> extra;

  auto out_opt = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Output directory")->required();
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a distantly supervised corpus");
  gen->add_option("--kb", kb, "Knowledge-base tuples")->required()->check(CLI::ExistingFile);
  gen->add_option("--templates", templates, "Sentence templates")->required()->check(CLI::ExistingFile);
  out_opt(gen);

  auto* train = app.add_subcommand("train", "Train one model per slot");
  train->add_option("--model", model, "pat, svm-bow, svm-skip, cnn-context, cnn-piece, cnn-piece-ext")
      ->required();
  train->add_option("--data", data, "Directory with train.tsv (and dev.tsv)");
  train->add_option("--patterns", patterns, "Pattern file (model pat)");
  train->add_option("--epochs", epochs, "CNN training epochs");
  out_opt(train);

  auto* eval = app.add_subcommand("eval", "Score dev/eval data and report per-slot metrics");
  eval->add_option("--models", models_dir, "Directory written by train")->required();
  eval->add_option("--data", data, "Directory with dev.tsv and/or eval.tsv")->required();
  out_opt(eval);

  auto* comb = app.add_subcommand("combine", "Grid-search per-slot score combinations");
  comb->add_option("scores", list, "Directories written by eval")->required()->expected(2, -1);
  out_opt(comb);

  auto* tune = app.add_subcommand("tune", "Grid-search hyperparameters per slot on dev");
  tune->add_option("--model", model, "Model name")->required();
  tune->add_option("--data", data, "Directory with train.tsv and dev.tsv")->required();
  tune->add_option("--grid", grid, "Grid file: key = v1, v2, ...")->required()->check(CLI::ExistingFile);
  tune->add_option("--patterns", patterns, "Pattern file (model pat)");
  out_opt(tune);

  auto* genre = app.add_subcommand("genre-matrix", "Train/test across news and web genres");
  genre->add_option("--data", data, "Directory with the corpus splits")->required();
  genre->add_option("--models", list, "Model names")->required()->delimiter(',');
  genre->add_option("--patterns", patterns, "Pattern file (model pat)");
  out_opt(genre);

  auto* corr = app.add_subcommand("correlate", "Pearson r of component and end-to-end scores");
  corr->add_option("--e2e", e2e, "Lines of: config component_f1 end_to_end_f1")
      ->required()
      ->check(CLI::ExistingFile);
  corr->add_option("reports", list, "metrics.tsv files; parent directory names the config");
  out_opt(corr);

  CLI11_PARSE(app, argc, argv);
  common.seed_given = seed_opt->count() > 0;
  common.threshold_given = th_opt->count() > 0;
  if (!patterns.empty()) extra.emplace_back("patterns", patterns);
  if (epochs >= 0) extra.emplace_back("epochs", std::to_string(epochs));

  rc_config* cfg = build_config(common, extra);
  if (!cfg) return 2;
  rc_report* report = nullptr;
  rc_status status = RC_OK;
  const char* out = common.out.c_str();

  if (app.got_subcommand(gen)) {
    status = rc_gen_data(cfg, kb.c_str(), templates.c_str(), out, &report);
  } else if (app.got_subcommand(train)) {
    status = rc_train(cfg, model.c_str(), data.empty() ? "." : data.c_str(), out, &report);
  } else if (app.got_subcommand(eval)) {
    status = rc_eval(cfg, models_dir.c_str(), data.c_str(), out, &report);
  } else if (app.got_subcommand(comb)) {
    auto dirs = c_strings(list);
    status = rc_combine(cfg, dirs.data(), dirs.size(), out, &report);
  } else if (app.got_subcommand(tune)) {
    status = rc_tune(cfg, model.c_str(), data.c_str(), grid.c_str(), out, &report);
  } else if (app.got_subcommand(genre)) {
    auto names = c_strings(list);
    status = rc_genre_matrix(cfg, data.c_str(), names.data(), names.size(), out, &report);
  } else if (app.got_subcommand(corr)) {
    auto files = c_strings(list);
    status = rc_correlate(cfg, files.data(), files.size(), e2e.c_str(), out, &report);
    if (report && rc_report_ok(report)) std::printf("pearson_r\t%.17g\n", rc_report_value(report));
  }
  rc_config_free(cfg);
  return finish(status, report);
}
