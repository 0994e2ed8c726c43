#include <string>

#include <json.hpp>

#include "gcnpsn/embedding_net.hpp"
#include "gcnpsn/error.hpp"

namespace gcnpsn {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error("checkpoint: " + where + " is not a number");
  return j.get<double>();
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) {
    throw Error("checkpoint: " + name + " must be a non-empty nested array");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) {
    throw Error("checkpoint: " + name + " rows must be non-empty arrays");
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error("checkpoint: " + name + " is ragged at row " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number_at(row[static_cast<std::size_t>(c)],
                          name + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw Error("checkpoint: " + name + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number_at(j[i], name + "[" + std::to_string(i) + "]");
  }
  return v;
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw Error("checkpoint: missing field " + where + key);
  return *it;
}

}  // namespace

std::string save_checkpoint(const EmbeddingModel& model) {
  model.validate();
  json activations;
  activations["gcn"] = json::array();
  for (auto a : model.arch.gcn_activations) activations["gcn"].push_back(activation_name(a));
  activations["mlp"] = json::array();
  for (auto a : model.arch.mlp_activations) activations["mlp"].push_back(activation_name(a));

  json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["arch"] = {{"gcn_hidden", model.arch.gcn_hidden},
                 {"flatten_order", model.arch.flatten_order},
                 {"activations", activations},
                 {"variant", variant_name(model.arch.variant)}};
  doc["seed"] = model.arch.seed;
  doc["gcn_w0"] = matrix_to_json(model.params.gcn_w[0]);
  doc["gcn_w1"] = matrix_to_json(model.params.gcn_w[1]);
  doc["mlp"] = json::array();
  for (const auto& layer : model.params.mlp) {
    doc["mlp"].push_back({{"w", matrix_to_json(layer.w)}, {"b", vector_to_json(layer.b)}});
  }
  return doc.dump() + "\n";
}

EmbeddingModel load_checkpoint(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("checkpoint: top level must be an object");

  try {
    const int version = field(doc, "format_version", "").get<int>();
    if (version != kCheckpointVersion) {
      throw Error("checkpoint: unsupported format_version " + std::to_string(version));
    }
    EmbeddingModel model;
    const auto& arch = field(doc, "arch", "");
    model.arch.gcn_hidden = field(arch, "gcn_hidden", "arch.").get<int>();
    model.arch.flatten_order = field(arch, "flatten_order", "arch.").get<std::string>();
    if (auto it = arch.find("variant"); it != arch.end()) {
      model.arch.variant = parse_variant(it->get<std::string>());
    }
    const auto& acts = field(arch, "activations", "arch.");
    const auto& gcn_acts = field(acts, "gcn", "arch.activations.");
    const auto& mlp_acts = field(acts, "mlp", "arch.activations.");
    if (gcn_acts.size() != model.arch.gcn_activations.size() ||
        mlp_acts.size() != model.arch.mlp_activations.size()) {
      throw Error("checkpoint: activation list length mismatch");
    }
    for (std::size_t i = 0; i < gcn_acts.size(); ++i)
      model.arch.gcn_activations[i] = parse_activation(gcn_acts[i].get<std::string>());
    for (std::size_t i = 0; i < mlp_acts.size(); ++i)
      model.arch.mlp_activations[i] = parse_activation(mlp_acts[i].get<std::string>());
    model.arch.seed = field(doc, "seed", "").get<std::uint64_t>();

    model.params.gcn_w[0] = matrix_from_json(field(doc, "gcn_w0", ""), "gcn_w0");
    model.params.gcn_w[1] = matrix_from_json(field(doc, "gcn_w1", ""), "gcn_w1");
    const auto& mlp = field(doc, "mlp", "");
    if (!mlp.is_array() || mlp.size() != model.params.mlp.size()) {
      throw Error("checkpoint: mlp must list exactly 3 layers");
    }
    for (std::size_t l = 0; l < mlp.size(); ++l) {
      const std::string name = "mlp[" + std::to_string(l) + "]";
      model.params.mlp[l].w = matrix_from_json(field(mlp[l], "w", name + "."), name + ".w");
      model.params.mlp[l].b = vector_from_json(field(mlp[l], "b", name + "."), name + ".b");
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace gcnpsn
