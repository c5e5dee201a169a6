#include "logcoral/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace logcoral {

namespace {

using json = nlohmann::ordered_json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows) {
    throw ParseError("checkpoint: matrix shape does not match its data");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = data.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError("checkpoint: ragged matrix row");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json stats_to_json(const SmoothedStats& s) {
  return json{{"cov", matrix_to_json(s.cov().matrix())},
              {"mean", vector_to_json(s.mean())},
              {"momentum", s.momentum()},
              {"initialized", s.initialized()}};
}

SmoothedStats stats_from_json(const json& j) {
  return SmoothedStats(SymmetricMatrix(matrix_from_json(j.at("cov"))),
                       vector_from_json(j.at("mean")), j.at("momentum").get<double>(),
                       j.at("initialized").get<bool>());
}

json domain_to_json(const DomainStats& d) {
  return json{{"second_order", stats_to_json(d.second_order)},
              {"first_order", stats_to_json(d.first_order)}};
}

DomainStats domain_from_json(const json& j) {
  return DomainStats{stats_from_json(j.at("second_order")), stats_from_json(j.at("first_order"))};
}

json gradients_to_json(const Gradients& g) {
  json layers = json::array();
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    layers.push_back(json{{"weight", matrix_to_json(g.weight[l])}, {"bias", vector_to_json(g.bias[l])}});
  }
  return layers;
}

Gradients gradients_from_json(const json& j) {
  Gradients g;
  for (const json& layer : j) {
    g.weight.push_back(matrix_from_json(layer.at("weight")));
    g.bias.push_back(vector_from_json(layer.at("bias")));
  }
  return g;
}

json config_to_json(const TrainConfig& c) {
  json out{{"weights",
            {{"cls", c.weights.classification},
             {"coral", c.weights.coral},
             {"logcoral", c.weights.logcoral},
             {"mean", c.weights.mean}}},
           {"learning_rate", c.learning_rate},
           {"optimizer_momentum", c.optimizer_momentum},
           {"batch_size", c.batch_size},
           {"stats_momentum", c.stats_momentum},
           {"second_order_tap", c.second_order_tap},
           {"mean_tap", c.mean_tap},
           {"warmup_steps", c.warmup_steps}};
  out["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
  return out;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  const json& w = j.at("weights");
  c.weights.classification = w.at("cls").get<double>();
  c.weights.coral = w.at("coral").get<double>();
  c.weights.logcoral = w.at("logcoral").get<double>();
  c.weights.mean = w.at("mean").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.optimizer_momentum = j.at("optimizer_momentum").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.stats_momentum = j.at("stats_momentum").get<double>();
  c.second_order_tap = j.at("second_order_tap").get<std::string>();
  c.mean_tap = j.at("mean_tap").get<std::string>();
  c.warmup_steps = j.at("warmup_steps").get<std::int64_t>();
  if (!j.at("epsilon").is_null()) c.epsilon = j.at("epsilon").get<double>();
  return c;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  const TrainState& s = checkpoint.state;
  json layers = json::array();
  for (const DenseLayer& layer : s.model.layers()) {
    layers.push_back(json{{"weight", matrix_to_json(layer.weight)}, {"bias", vector_to_json(layer.bias)}});
  }
  std::ostringstream rng;
  rng << s.rng;

  json out{{"format", kCheckpointFormat},
           {"version", kCheckpointVersion},
           {"step", s.step},
           {"seed", s.seed},
           {"rng_state", rng.str()},
           {"config", config_to_json(checkpoint.config)},
           {"model", {{"activation", to_string(s.model.activation())}, {"layers", std::move(layers)}}},
           {"velocity", gradients_to_json(s.velocity)},
           {"stats", {{"source", domain_to_json(s.source_stats)}, {"target", domain_to_json(s.target_stats)}}}};
  json metadata = json::parse(checkpoint.run_metadata, nullptr, false);
  if (metadata.is_discarded() || !metadata.is_object()) {
    throw InvalidInput("checkpoint: run metadata must be a JSON object");
  }
  out["run"] = std::move(metadata);
  return out.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("checkpoint: not a JSON object");
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw ParseError("checkpoint: unexpected format tag");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }

    std::vector<DenseLayer> layers;
    for (const json& layer : j.at("model").at("layers")) {
      layers.push_back(DenseLayer{matrix_from_json(layer.at("weight")), vector_from_json(layer.at("bias"))});
    }
    MlpModel model(std::move(layers), parse_activation(j.at("model").at("activation").get<std::string>()));

    std::mt19937_64 rng;
    std::istringstream rng_text(j.at("rng_state").get<std::string>());
    rng_text >> rng;
    if (!rng_text) throw ParseError("checkpoint: malformed rng state");

    const json& stats = j.at("stats");
    TrainState state{std::move(model),
                     gradients_from_json(j.at("velocity")),
                     domain_from_json(stats.at("source")),
                     domain_from_json(stats.at("target")),
                     j.at("step").get<std::int64_t>(),
                     j.at("seed").get<std::uint64_t>(),
                     rng};
    if (state.velocity.weight.size() != state.model.num_layers()) {
      throw ParseError("checkpoint: optimizer state does not match the model");
    }
    for (std::size_t l = 0; l < state.model.num_layers(); ++l) {
      const DenseLayer& layer = state.model.layers()[l];
      if (state.velocity.weight[l].rows() != layer.weight.rows() ||
          state.velocity.weight[l].cols() != layer.weight.cols() ||
          state.velocity.bias[l].size() != layer.bias.size()) {
        throw ParseError("checkpoint: optimizer buffer shape mismatch in layer " + std::to_string(l));
      }
    }
    Checkpoint out{std::move(state), config_from_json(j.at("config")), "{}"};
    if (j.contains("run")) out.run_metadata = j.at("run").dump();
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string text = checkpoint_to_json(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write checkpoint '" + path.string() + "'");
  out << text << '\n';
  if (!out) throw ParseError("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return checkpoint_from_json(text.str());
}

std::string metrics_to_json_line(const MetricsRecord& record) {
  json j{{"step", record.losses.step},
         {"loss_cls", record.losses.classification},
         {"loss_coral", record.losses.coral},
         {"loss_logcoral", record.losses.logcoral},
         {"loss_mean", record.losses.mean}};
  if (record.target_accuracy) j["target_acc"] = *record.target_accuracy;
  return j.dump();
}

}  // namespace logcoral
