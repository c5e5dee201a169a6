#include <algorithm>
#include <charconv>
#include <sstream>

#include "CLI11.hpp"
#include "logcoral/cli/cli.hpp"

namespace logcoral::cli {

namespace {

double parse_weight_value(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("--weights: value for '" + key + "' is not a number");
  }
  return v;
}

template <typename T>
T parse_enum(const std::string& text, T (*parse)(std::string_view), const char* flag) {
  try {
    return parse(text);
  } catch (const InvalidInput& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

}  // namespace

void apply_weight_list(const std::vector<std::string>& items, LossWeights& weights,
                       std::set<std::string>& keys) {
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--weights: expected key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const double value = parse_weight_value(key, std::string_view(item).substr(eq + 1));
    if (key == "cls") {
      weights.classification = value;
    } else if (key == "coral") {
      weights.coral = value;
    } else if (key == "logcoral") {
      weights.logcoral = value;
    } else if (key == "mean") {
      weights.mean = value;
    } else {
      throw UsageError("--weights: unknown loss '" + key +
                       "' (expected cls, coral, logcoral or mean)");
    }
    keys.insert(key);
  }
  try {
    weights.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(std::string("--weights: ") + e.what());
  }
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.weights = weights;
  c.learning_rate = lr;
  c.optimizer_momentum = opt_momentum;
  c.batch_size = batch;
  c.stats_momentum = momentum;
  c.epsilon = epsilon;
  c.second_order_tap = second_order_tap;
  c.mean_tap = mean_tap;
  c.warmup_steps = warmup;
  c.validate();
  return c;
}

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig rc;
  CLI::App app{"Correlation alignment losses for domain adaptation", "logcoral"};
  app.set_config("--config", "", "key=value file; flags override its values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_help_all_flag("--help-all", "Show every option");

  std::vector<std::string> weight_items;
  std::string format = "text";
  std::string activation = "relu";
  std::vector<std::string> shifts{"affine"};
  std::string source;
  std::string target;
  std::string resume;
  std::string out = rc.out.string();
  double epsilon = 0.0;
  int dim = 0;
  bool json = false;

  app.add_option("--seed", rc.seed, "Seed of model initialization and batch sampling");
  app.add_option("--steps", rc.steps, "Adaptation steps after the warm-up")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--warmup", rc.warmup, "Source-only steps before adaptation")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--batch", rc.batch, "Rows per domain per step")->check(CLI::Range(2, 1 << 20));
  app.add_option("--lr", rc.lr, "Learning rate")->check(CLI::PositiveNumber);
  app.add_option("--opt-momentum", rc.opt_momentum, "SGD momentum")->check(CLI::Range(0.0, 0.999999));
  app.add_option("--momentum", rc.momentum, "Moving-average momentum of the statistics")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  app.add_option("--weights", weight_items, "Loss weights, e.g. cls=1,logcoral=300,mean=20")
      ->delimiter(',');
  auto* eps_opt = app.add_option("--epsilon", epsilon, "Eigenvalue shift before the matrix log")
                      ->check(CLI::PositiveNumber);
  app.add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "json", "csv"}));
  app.add_flag("--json", json, "Same as --format json");
  app.add_option("--out", out, "Output directory");
  app.add_option("--source", source, "Source-domain CSV");
  app.add_option("--target", target, "Target-domain CSV");
  app.add_flag("--labels", rc.labels, "CSV files end with an integer label column");
  app.add_option("--shift", shifts, "Benchmark shift(s): none, translate, scale, rotate, affine")
      ->delimiter(',');
  app.add_option("--data-seed", rc.data_seed, "Seed of the generated benchmark");
  app.add_option("--classes", rc.classes, "Benchmark classes")->check(CLI::Range(2, 1000));
  auto* dim_opt = app.add_option("--dim", dim, "Feature dimension (benchmark or gradcheck)")
                      ->check(CLI::Range(1, 4096));
  app.add_option("--hidden", rc.hidden, "Hidden layer widths")
      ->delimiter(',')
      ->check(CLI::Range(1, 1 << 16));
  app.add_option("--activation", activation, "relu or tanh")
      ->check(CLI::IsMember({"relu", "tanh"}));
  app.add_option("--cov-tap", rc.second_order_tap, "Tap feeding CORAL and LogCORAL");
  app.add_option("--mean-tap", rc.mean_tap, "Tap feeding the mean loss");
  app.add_option("--eval-every", rc.eval_every, "Steps between target evaluations (0: end only)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--checkpoint-every", rc.checkpoint_every, "Steps between checkpoints (0: end only)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--resume", resume, "Continue training from a checkpoint");
  app.add_option("--seeds", rc.seeds, "Seeds per ablation cell")->check(CLI::Range(1, 1000));
  app.add_option("--trials", rc.trials, "Random input pairs per gradient check")
      ->check(CLI::Range(1, 100000));
  app.add_flag("--corrupt-target-sign", rc.corrupt_target_sign,
               "Test hook: negate analytic target gradients");

  app.require_subcommand(1);
  struct Sub {
    const char* name;
    const char* help;
    Command command;
  };
  const Sub subs[] = {
      {"losses", "CORAL, LogCORAL and mean losses between two feature CSVs", Command::kLosses},
      {"gradcheck", "Compare analytic loss gradients with finite differences", Command::kGradcheck},
      {"train", "Train with the weighted objective; writes metrics and a checkpoint",
       Command::kTrain},
      {"ablate", "Final target accuracy of each loss configuration over seeds", Command::kAblate},
  };
  for (const Sub& s : subs) {
    app.add_subcommand(s.name, s.help)->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  for (const Sub& s : subs) {
    if (app.got_subcommand(s.name)) rc.command = s.command;
  }
  apply_weight_list(weight_items, rc.weights, rc.weight_keys);
  if (*eps_opt) rc.epsilon = epsilon;
  if (*dim_opt) rc.dim = dim;
  rc.format = json || format == "json" ? OutputFormat::kJson
              : format == "csv"        ? OutputFormat::kCsv
                                       : OutputFormat::kText;
  rc.activation = parse_enum(activation, &parse_activation, "--activation");
  rc.shifts.clear();
  for (const std::string& s : shifts) rc.shifts.push_back(parse_enum(s, &parse_shift_kind, "--shift"));
  if (rc.shifts.empty()) throw UsageError("--shift: at least one shift kind is required");
  if (!source.empty()) rc.source = source;
  if (!target.empty()) rc.target = target;
  if (!resume.empty()) rc.resume = resume;
  rc.out = out;
  if (rc.source.has_value() != rc.target.has_value()) {
    throw UsageError("--source and --target must be given together");
  }
  if (rc.hidden.empty()) throw UsageError("--hidden: at least one hidden layer is required");

  if (rc.command != Command::kLosses && rc.command != Command::kGradcheck) {
    std::vector<std::string> taps;
    for (std::size_t l = 1; l <= rc.hidden.size(); ++l) taps.push_back("h" + std::to_string(l));
    taps.emplace_back("logits");
    for (const auto& [flag, tap] : {std::pair{"--cov-tap", rc.second_order_tap},
                                    std::pair{"--mean-tap", rc.mean_tap}}) {
      if (std::find(taps.begin(), taps.end(), tap) == taps.end()) {
        throw UsageError(std::string(flag) + ": unknown tap '" + tap + "' (expected h1..h" +
                         std::to_string(rc.hidden.size()) + " or logits)");
      }
    }
    try {
      rc.train_config();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
  }
  return rc;
}

}  // namespace logcoral::cli
