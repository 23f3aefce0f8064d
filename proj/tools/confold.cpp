#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "confold/harness.hpp"
#include "confold/knowledge.hpp"
#include "confold/learner.hpp"
#include "confold/metrics.hpp"
#include "confold/model.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kParse = 3 };

struct LearnerFlags {
  confold::LearnerConfig cfg;
  std::size_t max_depth = 0;

  void attach(CLI::App& app) {
    app.add_option("--ratio", cfg.ratio, "exception ratio")->check(CLI::Range(0.0, 1.0));
    app.add_option("--z", cfg.z, "Wilson z")->check(CLI::PositiveNumber);
    app.add_option("--improvement-threshold", cfg.improvement_threshold, "t_imp; 0 keeps every exception")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--confidence-threshold", cfg.confidence_threshold, "t_con; 0 keeps every rule")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--max-exception-depth", max_depth, "0 = unbounded");
    app.add_flag("--confidence-post-pass", cfg.confidence_post_pass,
                 "drop low-confidence rules after training rather than during it");
  }

  confold::LearnerConfig get() const {
    auto out = cfg;
    if (max_depth > 0) out.max_exception_depth = max_depth;
    return out;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw confold::DataError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<confold::KnowledgeRule> knowledge(const std::string& background, const std::string& initial,
                                              const confold::Dataset& data) {
  std::vector<confold::KnowledgeRule> out;
  if (!background.empty())
    for (auto& r : confold::parse_rules(slurp(background), data.schema(), data.label_name(), true))
      out.push_back(std::move(r));
  if (!initial.empty())
    for (auto& r : confold::parse_rules(slurp(initial), data.schema(), data.label_name(), false))
      out.push_back(std::move(r));
  return out;
}

std::vector<std::pair<double, double>> parse_grid(const std::string& spec) {
  std::vector<std::pair<double, double>> grid;
  std::stringstream in(spec);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--grid", "cells look like t_imp:t_con");
    try {
      grid.emplace_back(std::stod(cell.substr(0, colon)), std::stod(cell.substr(colon + 1)));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--grid", "bad cell '" + cell + "'");
    }
  }
  if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rule learner with confidence scores"};
  app.require_subcommand(1);

  std::string data_path, label = "class", out_path, background, initial, model_path, format = "table", grid;
  LearnerFlags flags;
  std::size_t trials = 30;
  double train_frac = 0.8;
  bool stratify_min = false, explain = false, no_timing = false;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  auto* train = app.add_subcommand("train", "learn a program and write it as rule text");
  train->add_option("--data", data_path, "CSV with a header row")->required();
  train->add_option("--label", label, "label column, also the target predicate");
  flags.attach(*train);
  train->add_option("--background", background, "fixed rules");
  train->add_option("--initial", initial, "modifiable rules");
  train->add_option("--out", out_path, "model file (default stdout)");

  auto* predict = app.add_subcommand("predict", "classify rows with a saved model");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--data", data_path)->required();
  predict->add_option("--label", label, "target predicate; scored when the column is present");
  predict->add_flag("--explain", explain, "print the deciding rule");

  auto add_protocol = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_path)->required();
    cmd->add_option("--label", label);
    cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
    cmd->add_option("--train-frac", train_frac)->check(CLI::Range(0.0, 1.0));
    cmd->add_flag("--stratify-min", stratify_min, "at least one training example per class");
    cmd->add_option("--seed", seed);
    cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
    cmd->add_option("--background", background);
    cmd->add_option("--initial", initial);
    flags.attach(*cmd);
  };

  auto* bench = app.add_subcommand("bench", "repeated train/test trials");
  add_protocol(bench);
  bench->add_option("--format", format)->check(CLI::IsMember({"csv", "table"}));
  bench->add_flag("--no-timing", no_timing, "omit wall times so reports are reproducible");

  auto* sweep = app.add_subcommand("sweep", "trials over a grid of pruning thresholds");
  add_protocol(sweep);
  sweep->add_option("--grid", grid, "t_imp:t_con,...")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*train) {
      auto data = confold::load_csv(data_path, label);
      auto cfg = flags.get();
      cfg.validate();
      confold::Experiment experiment;
      experiment.learner = cfg;
      experiment.knowledge = knowledge(background, initial, data);
      auto program = confold::fit(data, experiment);
      const auto text = confold::export_program(program);
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out || !(out << text)) throw confold::DataError("cannot write " + out_path);
      }
    } else if (*predict) {
      const std::string text = slurp(model_path);
      std::ifstream head(data_path);
      std::string header;
      std::getline(head, header);
      const bool labelled = ("," + header + ",").find("," + label + ",") != std::string::npos;
      auto data = confold::load_csv(data_path, labelled ? label : "");
      std::set<std::string> classes(data.classes().begin(), data.classes().end());
      for (const auto& r : confold::parse_rules(text, data.schema(), label)) classes.insert(r.cls);
      classes.erase("");
      auto program = confold::parse_program(text, data.schema(), label, {classes.begin(), classes.end()});
      auto clauses = confold::to_clauses(program);
      confold::Classifier classifier(program);
      confold::ScoredSet scored;
      std::cout << "id,prediction,confidence" << (labelled ? ",truth" : "") << '\n';
      for (const auto& ex : data.examples()) {
        auto verdict = classifier(ex);
        std::cout << ex.id << ',' << (verdict ? verdict->cls : "") << ','
                  << (verdict ? confold::format_number(verdict->confidence) : "");
        if (labelled) std::cout << ',' << ex.label;
        if (explain && verdict)
          std::cout << ",\"" << confold::render_clause(program.schema(), clauses[verdict->rule_index]) << '"';
        std::cout << '\n';
        if (labelled)
          scored.add(verdict ? confold::Prediction::of(verdict->cls, verdict->confidence)
                             : confold::Prediction::abstain(),
                     ex.label);
      }
      if (labelled && !scored.empty())
        std::cerr << "accuracy " << confold::accuracy(scored) << "  ibs " << confold::ibs(scored) << '\n';
    } else {
      auto data = confold::load_csv(data_path, label);
      confold::Experiment experiment;
      experiment.learner = flags.get();
      experiment.trials = trials;
      experiment.train_fraction = train_frac;
      experiment.stratify_min = stratify_min;
      experiment.seed = seed;
      experiment.jobs = jobs;
      experiment.knowledge = knowledge(background, initial, data);
      if (*bench) {
        auto summary = confold::run_trials(data, experiment);
        std::cout << (format == "csv" ? confold::trials_csv(summary, !no_timing)
                                      : confold::trials_table(summary, !no_timing));
      } else {
        const auto cells = parse_grid(grid);
        std::cout << confold::sweep_csv(confold::sweep(data, experiment, cells));
      }
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const confold::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const confold::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const confold::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
