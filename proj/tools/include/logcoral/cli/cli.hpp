#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logcoral/data.hpp"
#include "logcoral/error.hpp"
#include "logcoral/experiment.hpp"
#include "logcoral/losses.hpp"
#include "logcoral/network.hpp"
#include "logcoral/trainer.hpp"

namespace logcoral::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // threshold breach or numerical failure
inline constexpr int kExitUsage = 2;    // bad flags, unreadable input, I/O

/// Bad command line, unreadable config file or failed file I/O.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// `--help` was requested; what() holds the help text.
class HelpRequested : public std::exception {
 public:
  explicit HelpRequested(std::string text) : text_(std::move(text)) {}
  const char* what() const noexcept override { return text_.c_str(); }

 private:
  std::string text_;
};

enum class Command { kLosses, kGradcheck, kTrain, kAblate };
enum class OutputFormat { kText, kJson, kCsv };

/// Options of every command, read from an optional key=value file and then
/// from flags (flags win). Keys in the file are the long flag names.
struct RunConfig {
  Command command = Command::kTrain;

  std::uint64_t seed = 1;
  std::int64_t steps = 2000;   // adaptation steps, after the warm-up
  std::int64_t warmup = 1000;  // source-only steps before adaptation
  int batch = 64;
  double lr = 1e-3;
  double opt_momentum = 0.9;
  double momentum = SmoothedStats::kDefaultMomentum;  // moving-average statistics
  LossWeights weights;
  std::set<std::string> weight_keys;  // keys given explicitly in --weights
  std::optional<double> epsilon;
  OutputFormat format = OutputFormat::kText;
  std::filesystem::path out = "logcoral-out";

  // Data: two CSV files, or the built-in benchmark.
  std::optional<std::filesystem::path> source;
  std::optional<std::filesystem::path> target;
  bool labels = false;
  std::vector<ShiftKind> shifts = {ShiftKind::kAffine};
  std::uint64_t data_seed = 2017;
  int classes = 5;
  std::optional<int> dim;

  // Model.
  std::vector<int> hidden = {128, 64};
  Activation activation = Activation::kRelu;
  std::string second_order_tap = TrainConfig{}.second_order_tap;
  std::string mean_tap = TrainConfig{}.mean_tap;

  int eval_every = 100;
  std::int64_t checkpoint_every = 0;
  std::optional<std::filesystem::path> resume;
  int seeds = 5;
  int trials = 10;
  bool corrupt_target_sign = false;  // gradcheck test hook

  /// Training configuration implied by the options. Throws InvalidInput.
  TrainConfig train_config() const;
};

/// Parses arguments (program name excluded). Throws UsageError or
/// HelpRequested; every numeric option is range-checked here.
RunConfig parse_args(const std::vector<std::string>& args);

/// Parses "cls=1,logcoral=0.5" style lists into `weights`, recording the keys.
void apply_weight_list(const std::vector<std::string>& items, LossWeights& weights,
                       std::set<std::string>& keys);

/// Each command returns its exit code and reports on `out`.
int cmd_losses(const RunConfig& config, std::ostream& out);
int cmd_gradcheck(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_ablate(const RunConfig& config, std::ostream& out);

/// Parses, dispatches and maps exceptions to exit codes, writing a one-line
/// cause to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace logcoral::cli
