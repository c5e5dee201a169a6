#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "logcoral/checkpoint.hpp"
#include "logcoral/cli/cli.hpp"

namespace logcoral::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

FeatureBatch read_csv(const fs::path& path, bool labels) {
  try {
    return load_csv(path, labels);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream file(path, std::ios::out | mode);
  if (!file) throw UsageError("cannot write '" + path.string() + "'");
  return file;
}

// Where the data of a run comes from; stored in checkpoints so a resumed run
// rebuilds the same dataset.
json data_source(const RunConfig& config, ShiftKind shift) {
  if (config.source) {
    return {{"kind", "csv"},
            {"source", config.source->string()},
            {"target", config.target->string()},
            {"labels", config.labels}};
  }
  return {{"kind", "benchmark"},
          {"shift", to_string(shift)},
          {"data_seed", config.data_seed},
          {"classes", config.classes},
          {"dim", config.dim.value_or(16)}};
}

DatasetPair load_data(const json& source) {
  if (source.at("kind") == "csv") {
    const bool labels = source.at("labels").get<bool>();
    if (!labels) throw UsageError("training needs labeled CSV files (pass --labels)");
    return DatasetPair{read_csv(source.at("source").get<std::string>(), true),
                       read_csv(source.at("target").get<std::string>(), true)};
  }
  return generate(benchmark_spec(parse_shift_kind(source.at("shift").get<std::string>()),
                                 source.at("data_seed").get<std::uint64_t>(),
                                 source.at("classes").get<int>(), source.at("dim").get<int>()));
}

double condition_number(const SymmetricMatrix& m) {
  const Vector values = sym_eig(m).values;
  const double lo = values.minCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return values.maxCoeff() / lo;
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

int cmd_losses(const RunConfig& config, std::ostream& out) {
  if (!config.source) throw UsageError("losses: --source and --target are required");
  const FeatureBatch source = read_csv(*config.source, config.labels);
  const FeatureBatch target = read_csv(*config.target, config.labels);
  if (source.cols() != target.cols()) {
    throw UsageError("losses: source has " + std::to_string(source.cols()) +
                     " feature columns but target has " + std::to_string(target.cols()));
  }
  const SymmetricMatrix cs = batch_covariance(source);
  const SymmetricMatrix ct = batch_covariance(target);
  const double eps = config.epsilon.value_or(default_pair_epsilon(cs, ct));
  const double coral = coral_loss(cs, ct).value;
  const double logc = logcoral_loss(cs, ct, eps).value;
  const double mean = mean_loss(batch_mean(source), batch_mean(target)).value;
  const double cond_s = condition_number(cs);
  const double cond_t = condition_number(ct);
  const double cond_s_reg = condition_number(regularize_psd(cs, eps));
  const double cond_t_reg = condition_number(regularize_psd(ct, eps));

  switch (config.format) {
    case OutputFormat::kJson:
      out << json{{"dim", source.cols()},
                  {"rows_source", source.rows()},
                  {"rows_target", target.rows()},
                  {"epsilon", eps},
                  {"coral", coral},
                  {"logcoral", logc},
                  {"mean", mean},
                  {"cond_source", number_or_string(cond_s)},
                  {"cond_target", number_or_string(cond_t)},
                  {"cond_source_regularized", number_or_string(cond_s_reg)},
                  {"cond_target_regularized", number_or_string(cond_t_reg)}}
                 .dump()
          << "\n";
      break;
    case OutputFormat::kCsv:
      out << "dim,epsilon,coral,logcoral,mean,cond_source,cond_target\n"
          << source.cols() << "," << eps << "," << coral << "," << logc << "," << mean << ","
          << cond_s << "," << cond_t << "\n";
      break;
    case OutputFormat::kText:
      out << std::setprecision(6) << "d = " << source.cols() << ", n_source = " << source.rows()
          << ", n_target = " << target.rows() << ", epsilon = " << eps << "\n"
          << "CORAL     " << coral << "\n"
          << "LogCORAL  " << logc << "\n"
          << "mean      " << mean << "\n"
          << "cond(C_s) " << cond_s << "  (regularized " << cond_s_reg << ")\n"
          << "cond(C_t) " << cond_t << "  (regularized " << cond_t_reg << ")\n";
      break;
  }
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  ensure_dir(config.out);
  const fs::path metrics_path = config.out / "metrics.jsonl";
  const fs::path checkpoint_path = config.out / "checkpoint.json";

  std::optional<DatasetPair> data;
  Checkpoint run = [&] {
    if (config.resume) {
      try {
        Checkpoint restored = load_checkpoint(*config.resume);
        const json meta = json::parse(restored.run_metadata);
        if (!meta.contains("data")) throw UsageError("checkpoint has no data description");
        data = load_data(meta.at("data"));
        return restored;
      } catch (const ParseError& e) {
        throw UsageError(e.what());
      }
    }
    const TrainConfig train = config.train_config();
    const json meta{{"data", data_source(config, config.shifts.front())}};
    data = load_data(meta.at("data"));
    const ModelShape shape{config.hidden, config.activation};
    return Checkpoint{make_initial_state(*data, train, shape, config.seed), train, meta.dump()};
  }();
  const std::int64_t total = run.config.warmup_steps + config.steps;

  std::ofstream metrics =
      open_output(metrics_path, config.resume ? std::ios::app : std::ios::trunc);
  std::optional<double> last_accuracy;
  const auto sink = [&](const MetricsRecord& record) {
    metrics << metrics_to_json_line(record) << "\n";
    if (record.target_accuracy) last_accuracy = record.target_accuracy;
    if (config.checkpoint_every > 0 && record.losses.step % config.checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint-" << std::setw(6) << std::setfill('0') << record.losses.step << ".json";
      save_checkpoint(config.out / name.str(), run);
    }
  };

  try {
    run_training(run.state, *data, run.config, total, config.eval_every, sink);
  } catch (const NumericalFailure& e) {
    metrics.flush();
    save_checkpoint(checkpoint_path, run);
    out << "numerical failure: " << e.what() << "\n"
        << "last good state (step " << run.state.step << ") saved to "
        << checkpoint_path.string() << "\n";
    return kExitFailure;
  }
  metrics.flush();
  if (!metrics) throw UsageError("write failed for '" + metrics_path.string() + "'");
  save_checkpoint(checkpoint_path, run);

  switch (config.format) {
    case OutputFormat::kJson: {
      json summary{{"step", run.state.step},
                   {"metrics", metrics_path.string()},
                   {"checkpoint", checkpoint_path.string()}};
      summary["target_acc"] = last_accuracy ? json(*last_accuracy) : json(nullptr);
      out << summary.dump() << "\n";
      break;
    }
    case OutputFormat::kCsv:
      out << "step,target_acc,metrics,checkpoint\n"
          << run.state.step << "," << (last_accuracy ? std::to_string(*last_accuracy) : "")
          << "," << metrics_path.string() << "," << checkpoint_path.string() << "\n";
      break;
    case OutputFormat::kText:
      out << "trained to step " << run.state.step;
      if (last_accuracy) out << ", target accuracy " << *last_accuracy;
      out << "\nmetrics: " << metrics_path.string() << "\ncheckpoint: "
          << checkpoint_path.string() << "\n";
      break;
  }
  return kExitOk;
}

int cmd_ablate(const RunConfig& config, std::ostream& out) {
  const TrainConfig base = config.train_config();
  const ModelShape shape{config.hidden, config.activation};
  // Arms switch losses on at their configured magnitude. CORAL takes the
  // LogCORAL magnitude unless given explicitly.
  LossWeights magnitude = config.weights;
  if (!config.weight_keys.contains("coral")) magnitude.coral = magnitude.logcoral;
  const std::vector<AblationArm> arms = standard_ablation_arms(magnitude);

  struct Cell {
    std::vector<double> accuracies;
    std::vector<std::string> errors;
  };
  std::vector<std::vector<Cell>> cells(arms.size(), std::vector<Cell>(config.shifts.size()));

  for (std::size_t s = 0; s < config.shifts.size(); ++s) {
    const json source = data_source(config, config.shifts[s]);
    const DatasetPair data = load_data(source);
    for (int k = 0; k < config.seeds; ++k) {
      const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(k);
      const std::vector<ArmOutcome> outcomes =
          run_arms(data, base, shape, arms, seed, config.steps, config.eval_every);
      for (std::size_t a = 0; a < arms.size(); ++a) {
        Cell& cell = cells[a][s];
        if (!outcomes[a].result) {
          cell.errors.push_back("seed " + std::to_string(seed) + ": " + outcomes[a].error);
          continue;
        }
        cell.accuracies.push_back(outcomes[a].result->final_target_accuracy);
        // Per-cell learning curves, ready for plotting.
        const fs::path dir = config.out / to_string(config.shifts[s]) / arms[a].name;
        ensure_dir(dir);
        std::ofstream curve = open_output(dir / ("seed-" + std::to_string(seed) + ".jsonl"));
        for (const MetricsRecord& r : outcomes[a].result->history) {
          curve << metrics_to_json_line(r) << "\n";
        }
      }
    }
  }

  const auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };

  bool any_failed = false;
  switch (config.format) {
    case OutputFormat::kJson: {
      json report{{"seeds", config.seeds}, {"steps", config.steps}, {"warmup", config.warmup}};
      json shifts = json::array();
      for (ShiftKind k : config.shifts) shifts.push_back(to_string(k));
      report["shifts"] = shifts;
      json rows = json::array();
      for (std::size_t a = 0; a < arms.size(); ++a) {
        json row{{"arm", arms[a].name}, {"cells", json::array()}};
        for (std::size_t s = 0; s < config.shifts.size(); ++s) {
          const Cell& cell = cells[a][s];
          json c{{"shift", to_string(config.shifts[s])}, {"accuracies", cell.accuracies}};
          if (!cell.accuracies.empty()) {
            const auto [m, sd] = stats(cell.accuracies);
            c["mean"] = m;
            c["std"] = sd;
            c["median"] = median(cell.accuracies);
          }
          c["failed"] = cell.errors;
          any_failed = any_failed || !cell.errors.empty();
          row["cells"].push_back(c);
        }
        rows.push_back(row);
      }
      report["rows"] = rows;
      out << report.dump() << "\n";
      break;
    }
    case OutputFormat::kCsv:
      out << "arm,shift,mean,std,median,runs,failed\n";
      for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t s = 0; s < config.shifts.size(); ++s) {
          const Cell& cell = cells[a][s];
          out << arms[a].name << "," << to_string(config.shifts[s]) << ",";
          if (cell.accuracies.empty()) {
            out << ",,,";
          } else {
            const auto [m, sd] = stats(cell.accuracies);
            out << m << "," << sd << "," << median(cell.accuracies) << ",";
          }
          out << cell.accuracies.size() << "," << cell.errors.size() << "\n";
          any_failed = any_failed || !cell.errors.empty();
        }
      }
      break;
    case OutputFormat::kText: {
      out << "final target accuracy, mean +- std over " << config.seeds << " seed(s)\n";
      out << std::left << std::setw(16) << "arm";
      for (ShiftKind k : config.shifts) out << std::setw(18) << to_string(k);
      out << "\n" << std::fixed << std::setprecision(2);
      for (std::size_t a = 0; a < arms.size(); ++a) {
        out << std::setw(16) << arms[a].name;
        for (std::size_t s = 0; s < config.shifts.size(); ++s) {
          const Cell& cell = cells[a][s];
          std::ostringstream text;
          text << std::fixed << std::setprecision(2);
          if (cell.accuracies.empty()) {
            text << "FAILED";
          } else {
            const auto [m, sd] = stats(cell.accuracies);
            text << 100.0 * m << " +- " << 100.0 * sd;
            if (!cell.errors.empty()) text << " (" << cell.errors.size() << " failed)";
          }
          out << std::setw(18) << text.str();
          any_failed = any_failed || !cell.errors.empty();
        }
        out << "\n";
      }
      for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t s = 0; s < config.shifts.size(); ++s) {
          for (const std::string& e : cells[a][s].errors) {
            out << "failed: " << arms[a].name << " / " << to_string(config.shifts[s]) << " / "
                << e << "\n";
          }
        }
      }
      out.unsetf(std::ios::floatfield);
      break;
    }
  }
  return any_failed ? kExitFailure : kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = parse_args(args);
    switch (config.command) {
      case Command::kLosses: return cmd_losses(config, out);
      case Command::kGradcheck: return cmd_gradcheck(config, out);
      case Command::kTrain: return cmd_train(config, out);
      case Command::kAblate: return cmd_ablate(config, out);
    }
    return kExitUsage;
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "logcoral: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "logcoral: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidInput& e) {
    err << "logcoral: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "logcoral: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "logcoral: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace logcoral::cli
