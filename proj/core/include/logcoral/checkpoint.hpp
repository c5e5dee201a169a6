#pragma once

#include <filesystem>
#include <string>

#include "logcoral/trainer.hpp"

namespace logcoral {

/// Checkpoint container identifier and version written into every file.
inline constexpr const char* kCheckpointFormat = "logcoral-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// A training state plus its configuration and an opaque JSON object the
/// caller can use to describe how the data was produced.
struct Checkpoint {
  TrainState state;
  TrainConfig config;
  std::string run_metadata = "{}";  // JSON object text
};

/// JSON container. Doubles are written in shortest round-trip form, so
/// load(save(x)) restores every parameter bit-exactly, including the RNG.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
/// Throws ParseError on malformed text, unknown format or version mismatch.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// One JSON-lines record:
///   {"step":..,"loss_cls":..,"loss_coral":..,"loss_logcoral":..,"loss_mean":..
///    [,"target_acc":..]}
std::string metrics_to_json_line(const MetricsRecord& record);

}  // namespace logcoral
