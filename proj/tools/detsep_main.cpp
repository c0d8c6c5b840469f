// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "detsep/evaluate.hpp"
#include "detsep/simulate.hpp"
#include "detsep/training.hpp"

namespace {

using detsep::EvalReport;
using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open file: " + path);
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << text;
}

int run(int argc, char** argv) {
  CLI::App app{
      "Multi-talker keyword-spotting lab: mixture simulation, determinized "
      "separation training, detection and evaluation"};
  app.require_subcommand(1);

  // --- simulate ------------------------------------------------------------
  std::string sim_config, sim_out = "corpus";
  std::optional<uint64_t> seed_override;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic corpus");
  sim->add_option("--config", sim_config, "Simulation config JSON")->required();
  sim->add_option("--out", sim_out, "Output corpus directory");
  sim->add_option("--seed", seed_override, "Override the config seed");

  // --- train-sep -----------------------------------------------------------
  std::string ts_config;
  auto* ts = app.add_subcommand("train-sep", "Train a separator");
  ts->add_option("--config", ts_config, "Separator training config JSON")
      ->required();
  ts->add_option("--seed", seed_override, "Override the config seed");

  // --- train-kws -----------------------------------------------------------
  std::string tk_config;
  auto* tk = app.add_subcommand("train-kws", "Train the keyword detector");
  tk->add_option("--config", tk_config, "Detector training config JSON")
      ->required();
  tk->add_option("--seed", seed_override, "Override the config seed");

  // --- eval ----------------------------------------------------------------
  std::string ev_sep, ev_det, ev_manifest, ev_selection = "both";
  std::string ev_out, ev_config;
  double ev_target = 0.5;
  auto* ev = app.add_subcommand("eval", "Evaluate the separation+KWS pipeline");
  ev->add_option("--config", ev_config, "Optional eval config JSON");
  ev->add_option("--separator", ev_sep, "Separator checkpoint")->required();
  ev->add_option("--detector", ev_det, "Detector checkpoint")->required();
  ev->add_option("--manifest", ev_manifest, "Eval manifest JSONL")->required();
  ev->add_option("--selection", ev_selection, "max | ch1 | both");
  ev->add_option("--target-fa", ev_target, "Target false alarms per hour");
  ev->add_option("--out", ev_out, "Report JSON output path");
  ev->add_option("--seed", seed_override, "Unused; accepted for uniformity");

  // --- finetune ------------------------------------------------------------
  std::string ft_det, ft_sep, ft_pool, ft_general, ft_eval, ft_out;
  std::string ft_selection = "ch1";
  double ft_target = 0.5;
  int ft_epochs = 4;
  double ft_lr = 3e-4;
  std::string ft_report_out;
  auto* ft =
      app.add_subcommand("finetune", "Fine-tune the detector on separated audio");
  ft->add_option("--detector", ft_det, "Detector checkpoint")->required();
  ft->add_option("--separator", ft_sep, "Separator checkpoint")->required();
  ft->add_option("--pool", ft_pool, "Keyword-mixture manifest for positives")
      ->required();
  ft->add_option("--general", ft_general,
                 "General-mixture manifest for negatives")
      ->required();
  ft->add_option("--eval-manifest", ft_eval, "Manifest for before/after recall")
      ->required();
  ft->add_option("--out", ft_out, "Fine-tuned checkpoint output")->required();
  ft->add_option("--selection", ft_selection, "max | ch1");
  ft->add_option("--target-fa", ft_target, "Target false alarms per hour");
  ft->add_option("--epochs", ft_epochs, "Fine-tuning epochs");
  ft->add_option("--learning-rate", ft_lr, "Fine-tuning learning rate");
  ft->add_option("--report-out", ft_report_out, "Before/after JSON output");
  ft->add_option("--seed", seed_override, "Fine-tuning shuffle seed");

  // --- report --------------------------------------------------------------
  std::string rp_path;
  auto* rp = app.add_subcommand("report", "Render an EvalReport JSON");
  rp->add_option("--report", rp_path, "Report JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    auto cfg = detsep::SimulationConfig::from_json_file(sim_config);
    if (seed_override) cfg.seed = *seed_override;
    auto entries = detsep::simulate_corpus(cfg, sim_out);
    std::cout << "simulated " << entries.size() << " entries into " << sim_out
              << "\n";
    return 0;
  }
  if (ts->parsed()) {
    auto cfg = detsep::SeparatorTrainConfig::from_json_file(ts_config);
    if (seed_override) cfg.seed = *seed_override;
    auto result = detsep::train_separator(cfg);
    std::cout << "trained separator (" << result.log.size()
              << " epochs, best dev loss " << result.best_dev_loss << ") -> "
              << result.checkpoint_path << "\n";
    return 0;
  }
  if (tk->parsed()) {
    auto cfg = detsep::DetectorTrainConfig::from_json_file(tk_config);
    if (seed_override) cfg.seed = *seed_override;
    auto result = detsep::train_detector(cfg);
    std::cout << "trained detector (" << result.log.size()
              << " epochs, final dev AUC "
              << (result.log.empty() ? 0.0 : result.log.back().dev_metric)
              << ") -> " << result.checkpoint_path << "\n";
    return 0;
  }
  if (ev->parsed()) {
    double target = ev_target;
    if (!ev_config.empty()) {
      json j = json::parse(slurp(ev_config));
      target = j.value("target_fa_per_hour", target);
    }
    auto report = detsep::evaluate_pipeline(
        ev_sep, ev_det, ev_manifest,
        detsep::selection_from_string(ev_selection), target);
    const std::string text = report.to_json_text();
    if (!ev_out.empty())
      write_text(ev_out, text);
    else
      std::cout << text << "\n";
    return 0;
  }
  if (ft->parsed()) {
    detsep::FinetuneConfig cfg;
    cfg.epochs = ft_epochs;
    cfg.learning_rate = ft_lr;
    cfg.target_fa_per_hour = ft_target;
    cfg.selection = detsep::selection_from_string(ft_selection);
    if (cfg.selection == detsep::Selection::kBoth)
      throw std::runtime_error("finetune: selection must be max or ch1");
    if (seed_override) cfg.seed = *seed_override;
    auto report = detsep::finetune_detector(ft_det, ft_sep, ft_pool, ft_general,
                                            ft_eval, cfg, ft_out);
    json j;
    j["recall_before"] = report.recall_before;
    j["recall_after"] = report.recall_after;
    j["pool_positives"] = report.pool_positives;
    j["pool_negatives"] = report.pool_negatives;
    if (!ft_report_out.empty()) write_text(ft_report_out, j.dump(2));
    std::cout << "recall " << report.recall_before << " -> "
              << report.recall_after << "\n";
    return 0;
  }
  if (rp->parsed()) {
    auto report = EvalReport::from_json_text(slurp(rp_path));
    std::cout << detsep::render_report(report);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
