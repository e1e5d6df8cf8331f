#pragma once

// Model-agnostic glue used by the CLI: fit a scaler on raw training rows,
// standardize, optionally rebalance, train one of the five classifiers, and
// evaluate on a held-out table.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "scamlens/error.hpp"
#include "scamlens/eval.hpp"
#include "scamlens/features.hpp"
#include "scamlens/neural.hpp"
#include "scamlens/resampling.hpp"
#include "scamlens/table.hpp"
#include "scamlens/trees.hpp"

namespace scamlens::pipeline {

enum class ModelKind { ALstm, Lstm, RF, ET, GB };

inline constexpr std::array<ModelKind, 5> kAllModels = {ModelKind::ALstm, ModelKind::Lstm, ModelKind::RF, ModelKind::ET,
                                                        ModelKind::GB};

inline constexpr std::string_view to_string(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::ALstm: return "alstm";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::RF: return "rf";
    case ModelKind::ET: return "et";
    case ModelKind::GB: return "gb";
  }
  return "alstm";
}

inline std::optional<ModelKind> parse_model(std::string_view name) {
  for (auto k : kAllModels) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct Hyperparameters {
  neural::TrainConfig neural;
  double valid_fraction = 0.1;
  trees::ForestOptions forest;
  trees::GbOptions gb;
  std::uint64_t seed = 0;  // tree ensembles; the neural seed lives in `neural`
};

struct Model {
  ModelKind kind = ModelKind::ALstm;
  features::Scaler scaler;
  std::variant<neural::TrainedModel, trees::ForestModel, trees::GbModel> impl;
};

/// Trains on already-standardized rows.
inline Model fit_standardized(ModelKind kind, const LabeledTable& z_train, const Hyperparameters& hp,
                              features::Scaler scaler) {
  Model m{kind, std::move(scaler), neural::TrainedModel{}};
  switch (kind) {
    case ModelKind::ALstm:
    case ModelKind::Lstm: {
      auto trained = neural::train(z_train, hp.valid_fraction, hp.neural,
                                   kind == ModelKind::ALstm ? neural::Architecture::AttentionLstm
                                                            : neural::Architecture::PlainLstm);
      trained.scaler = m.scaler;
      m.impl = std::move(trained);
      break;
    }
    case ModelKind::RF: m.impl = trees::train_random_forest(z_train, hp.forest, hp.seed); break;
    case ModelKind::ET: m.impl = trees::train_extra_trees(z_train, hp.forest, hp.seed); break;
    case ModelKind::GB: m.impl = trees::train_gradient_boosting(z_train, hp.gb, hp.seed); break;
  }
  return m;
}

struct FitResult {
  Model model;
  std::size_t train_rows = 0;  // after resampling
};

/// Scaler fit on raw training rows, then optional rebalancing in standardized space.
inline FitResult fit(ModelKind kind, const LabeledTable& raw_train, const resampling::ResampleConfig& resample,
                     const Hyperparameters& hp) {
  auto scaler = features::scaler_fit(raw_train);
  auto z = resampling::resample(features::scaler_apply(scaler, raw_train), resample);
  const auto rows = z.size();
  return {fit_standardized(kind, z, hp, std::move(scaler)), rows};
}

inline std::vector<ScamLabel> predict_standardized(const Model& m, const LabeledTable& z) {
  if (auto* nn = std::get_if<neural::TrainedModel>(&m.impl)) return neural::predict(*nn, z).labels;
  std::vector<ScamLabel> out;
  out.reserve(z.size());
  if (auto* forest = std::get_if<trees::ForestModel>(&m.impl)) {
    if (!z.empty() && z.dims() != forest->feature_names.size()) {
      throw Error("trees", ErrorKind::DimensionMismatch, "forest and table disagree on feature count");
    }
    for (const auto& r : z.rows) out.push_back(trees::predict_forest(*forest, r));
  } else {
    const auto& gb = std::get<trees::GbModel>(m.impl);
    if (!z.empty() && z.dims() != gb.dims) throw Error("trees", ErrorKind::DimensionMismatch, "model and table disagree on feature count");
    for (const auto& r : z.rows) out.push_back(trees::gb_predict(gb, r));
  }
  return out;
}

inline std::vector<ScamLabel> predict(const Model& m, const LabeledTable& raw) {
  return predict_standardized(m, features::scaler_apply(m.scaler, raw));
}

struct Evaluation {
  eval::ConfusionMatrix confusion;
  eval::MetricsReport metrics;
  std::vector<ScamLabel> predicted;
};

inline Evaluation evaluate(const Model& m, const LabeledTable& raw_test) {
  Evaluation e;
  e.predicted = predict(m, raw_test);
  e.confusion = eval::confusion(raw_test.labels, e.predicted);
  e.metrics = eval::metrics(e.confusion);
  return e;
}

inline nlohmann::json to_json(const Model& m) {
  nlohmann::json doc;
  if (auto* nn = std::get_if<neural::TrainedModel>(&m.impl)) {
    doc = neural::to_json(*nn);
  } else if (auto* forest = std::get_if<trees::ForestModel>(&m.impl)) {
    doc = trees::to_json(*forest);
  } else {
    doc = trees::to_json(std::get<trees::GbModel>(m.impl));
  }
  doc["scaler"] = neural::scaler_to_json(m.scaler);
  return doc;
}

inline Model model_from_json(const nlohmann::json& doc) {
  try {
    const auto kind = parse_model(doc.at("kind").get<std::string>());
    if (!kind) throw Error("pipeline", ErrorKind::BadInput, "unknown model kind in checkpoint");
    Model m{*kind, neural::scaler_from_json(doc.at("scaler")), neural::TrainedModel{}};
    switch (*kind) {
      case ModelKind::ALstm:
      case ModelKind::Lstm: m.impl = neural::from_json(doc); break;
      case ModelKind::RF:
      case ModelKind::ET: m.impl = trees::forest_from_json(doc); break;
      case ModelKind::GB: m.impl = trees::gb_from_json(doc); break;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error("pipeline", ErrorKind::BadInput, std::string("bad checkpoint: ") + e.what());
  }
}

}  // namespace scamlens::pipeline
