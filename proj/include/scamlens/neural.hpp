#pragma once

// Attention-augmented LSTM classifier.
//
// A standardized feature vector of length T is read as a sequence of T
// scalars. An LSTM produces hidden states Y (T x H); self-attention computes
// Z = softmax(Q K^T) V with Q = Y Wq, K = Y Wk, V = Y Wv; the rows of Z are
// mean-pooled and a dense layer maps the result to 3 class logits.
//
// The plain-LSTM baseline skips attention and feeds h_T to the dense layer.
// Gradients are exact reverse-mode derivatives of mean cross-entropy.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scamlens/error.hpp"
#include "scamlens/features.hpp"
#include "scamlens/rng.hpp"
#include "scamlens/table.hpp"

namespace scamlens::neural {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Architecture { AttentionLstm, PlainLstm };
enum class Optimizer { SGD, Adam };

inline constexpr std::string_view to_string(Architecture a) noexcept {
  return a == Architecture::AttentionLstm ? "alstm" : "lstm";
}
inline constexpr std::string_view to_string(Optimizer o) noexcept { return o == Optimizer::Adam ? "adam" : "sgd"; }

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  int hidden = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int early_stop_patience = 20;
  bool scaled_attention = false;  // divide scores by sqrt(H)
  double init_range = 0.1;

  bool operator==(const TrainConfig&) const = default;
};

// Gate blocks are stacked row-wise in this order inside W, U and b.
enum Gate : int { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };

struct LstmParams {
  Mat W;  // 4H x 1
  Mat U;  // 4H x H
  Mat b;  // 4H x 1

  int hidden() const { return static_cast<int>(U.cols()); }
  auto gate_W(Gate g) const { return W.middleRows(g * hidden(), hidden()); }
  auto gate_U(Gate g) const { return U.middleRows(g * hidden(), hidden()); }
  auto gate_b(Gate g) const { return b.middleRows(g * hidden(), hidden()); }
};

struct AttentionParams {
  Mat query;  // H x H
  Mat key;
  Mat value;
};

struct DenseParams {
  Mat weight;  // 3 x H
  Mat bias;    // 3 x 1
};

inline constexpr std::size_t kNumTensors = 8;
inline constexpr std::array<std::string_view, kNumTensors> kTensorNames = {
    "lstm_W", "lstm_U", "lstm_b", "attention_query", "attention_key", "attention_value", "dense_weight", "dense_bias"};

struct ModelParams {
  LstmParams lstm;
  AttentionParams attention;
  DenseParams dense;

  static ModelParams zeros(int hidden) {
    const int h4 = 4 * hidden;
    return {{Mat::Zero(h4, 1), Mat::Zero(h4, hidden), Mat::Zero(h4, 1)},
            {Mat::Zero(hidden, hidden), Mat::Zero(hidden, hidden), Mat::Zero(hidden, hidden)},
            {Mat::Zero(kNumClasses, hidden), Mat::Zero(kNumClasses, 1)}};
  }

  int hidden() const { return lstm.hidden(); }

  std::array<Mat*, kNumTensors> tensors() {
    return {&lstm.W, &lstm.U, &lstm.b, &attention.query, &attention.key, &attention.value, &dense.weight, &dense.bias};
  }
  std::array<const Mat*, kNumTensors> tensors() const {
    return {&lstm.W, &lstm.U, &lstm.b, &attention.query, &attention.key, &attention.value, &dense.weight, &dense.bias};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Mat* t : tensors()) n += static_cast<std::size_t>(t->size());
    return n;
  }

  bool operator==(const ModelParams& other) const {
    const auto a = tensors();
    const auto b = other.tensors();
    for (std::size_t i = 0; i < kNumTensors; ++i) {
      if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) return false;
    }
    return true;
  }
};

inline ModelParams random_params(int hidden, Rng& rng, double range) {
  ModelParams p = ModelParams::zeros(hidden);
  for (Mat* t : p.tensors()) {
    for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = rng.uniform(-range, range);
  }
  return p;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// LSTM

struct LstmTrace {
  Mat Y;      // T x H hidden states
  Mat C;      // T x H cell states
  Mat gates;  // T x 4H post-activation: i, f, o, c'
};

inline LstmTrace lstm_forward(const LstmParams& p, std::span<const double> sequence) {
  const int H = p.hidden();
  if (p.W.rows() != 4 * H || p.W.cols() != 1 || p.b.rows() != 4 * H || p.U.rows() != 4 * H) {
    throw Error("neural", ErrorKind::ShapeMismatch, "inconsistent LSTM parameter shapes");
  }
  const auto T = static_cast<Eigen::Index>(sequence.size());
  if (T < 1) throw Error("neural", ErrorKind::ShapeMismatch, "sequence must have at least one step");

  LstmTrace tr{Mat(T, H), Mat(T, H), Mat(T, 4 * H)};
  Vec h = Vec::Zero(H);
  Vec c = Vec::Zero(H);
  Vec pre(4 * H);
  for (Eigen::Index t = 0; t < T; ++t) {
    pre.noalias() = p.W.col(0) * sequence[static_cast<std::size_t>(t)] + p.b.col(0);
    pre.noalias() += p.U * h;
    auto act = tr.gates.row(t);
    for (int k = 0; k < 3 * H; ++k) act(k) = sigmoid(pre(k));
    for (int k = 3 * H; k < 4 * H; ++k) act(k) = std::tanh(pre(k));
    for (int k = 0; k < H; ++k) {
      // c_t = i_t * c'_t + f_t * c_{t-1};  h_t = o_t * tanh(c_t)
      c(k) = act(kInput * H + k) * act(kCandidate * H + k) + act(kForget * H + k) * c(k);
      h(k) = act(kOutput * H + k) * std::tanh(c(k));
    }
    tr.C.row(t) = c.transpose();
    tr.Y.row(t) = h.transpose();
  }
  return tr;
}

/// Accumulates parameter gradients given dL/dY; returns nothing else since
/// the input sequence is data.
inline void lstm_backward(const LstmParams& p, std::span<const double> sequence, const LstmTrace& tr, const Mat& dY,
                          LstmParams& grad) {
  const int H = p.hidden();
  const auto T = tr.Y.rows();
  Vec dh_next = Vec::Zero(H);
  Vec dc_next = Vec::Zero(H);
  Vec dpre(4 * H);
  Vec h_prev(H), c_prev(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    if (t > 0) {
      h_prev = tr.Y.row(t - 1).transpose();
      c_prev = tr.C.row(t - 1).transpose();
    } else {
      h_prev.setZero();
      c_prev.setZero();
    }
    const auto act = tr.gates.row(t);
    for (int k = 0; k < H; ++k) {
      const double ig = act(kInput * H + k);
      const double fg = act(kForget * H + k);
      const double og = act(kOutput * H + k);
      const double cand = act(kCandidate * H + k);
      const double tc = std::tanh(tr.C(t, k));
      const double dh = dY(t, k) + dh_next(k);
      const double dc = dh * og * (1.0 - tc * tc) + dc_next(k);
      dpre(kInput * H + k) = dc * cand * ig * (1.0 - ig);
      dpre(kForget * H + k) = dc * c_prev(k) * fg * (1.0 - fg);
      dpre(kOutput * H + k) = dh * tc * og * (1.0 - og);
      dpre(kCandidate * H + k) = dc * ig * (1.0 - cand * cand);
      dc_next(k) = dc * fg;
    }
    grad.W.col(0) += dpre * sequence[static_cast<std::size_t>(t)];
    grad.b.col(0) += dpre;
    grad.U.noalias() += dpre * h_prev.transpose();
    dh_next.noalias() = p.U.transpose() * dpre;
  }
}

// ---------------------------------------------------------------------------
// Self-attention

struct AttentionTrace {
  Mat Q, K, V;
  Mat A;  // T x T row-stochastic weights
  Mat Z;  // T x H
};

/// Row-wise softmax with max subtraction.
inline Mat row_softmax(const Mat& scores) {
  Mat out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) sum += out(r, c) = std::exp(scores(r, c) - m);
    out.row(r) /= sum;
  }
  return out;
}

inline AttentionTrace attention_forward(const AttentionParams& att, const Mat& Y, bool scaled = false) {
  const auto H = Y.cols();
  if (Y.rows() < 1) throw Error("neural", ErrorKind::ShapeMismatch, "attention needs at least one row");
  for (const Mat* w : {&att.query, &att.key, &att.value}) {
    if (w->rows() != H || w->cols() != H) throw Error("neural", ErrorKind::ShapeMismatch, "attention weights must be H x H");
  }
  AttentionTrace tr;
  tr.Q.noalias() = Y * att.query;
  tr.K.noalias() = Y * att.key;
  tr.V.noalias() = Y * att.value;
  Mat scores = tr.Q * tr.K.transpose();
  if (scaled) scores /= std::sqrt(static_cast<double>(H));
  tr.A = row_softmax(scores);
  tr.Z.noalias() = tr.A * tr.V;
  return tr;
}

/// Returns dL/dY and accumulates weight gradients.
inline Mat attention_backward(const AttentionParams& att, const Mat& Y, const AttentionTrace& tr, const Mat& dZ,
                              bool scaled, AttentionParams& grad) {
  const Mat dA = dZ * tr.V.transpose();
  const Mat dV = tr.A.transpose() * dZ;
  // softmax Jacobian, row by row: dS_ij = A_ij (dA_ij - sum_k A_ik dA_ik)
  Mat dS = tr.A.cwiseProduct(dA);
  const Vec row_dot = dS.rowwise().sum();
  dS -= tr.A.cwiseProduct(row_dot.replicate(1, tr.A.cols()));
  if (scaled) dS /= std::sqrt(static_cast<double>(Y.cols()));
  const Mat dQ = dS * tr.K;
  const Mat dK = dS.transpose() * tr.Q;
  grad.query.noalias() += Y.transpose() * dQ;
  grad.key.noalias() += Y.transpose() * dK;
  grad.value.noalias() += Y.transpose() * dV;
  Mat dY = dQ * att.query.transpose();
  dY.noalias() += dK * att.key.transpose();
  dY.noalias() += dV * att.value.transpose();
  return dY;
}

// ---------------------------------------------------------------------------
// Full model

struct ForwardTrace {
  LstmTrace lstm;
  AttentionTrace attention;  // empty for the plain variant
  Vec pooled;                // dense-layer input
  Vec logits;
  Vec probs;
};

inline Vec softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

inline ForwardTrace forward_trace(const ModelParams& p, std::span<const double> x, Architecture arch, bool scaled) {
  ForwardTrace tr;
  tr.lstm = lstm_forward(p.lstm, x);
  if (arch == Architecture::AttentionLstm) {
    tr.attention = attention_forward(p.attention, tr.lstm.Y, scaled);
    tr.pooled = tr.attention.Z.colwise().mean().transpose();
  } else {
    tr.pooled = tr.lstm.Y.row(tr.lstm.Y.rows() - 1).transpose();
  }
  tr.logits = p.dense.weight * tr.pooled + p.dense.bias.col(0);
  tr.probs = softmax(tr.logits);
  return tr;
}

/// Class probabilities for one standardized feature vector.
inline Vec model_forward(const ModelParams& p, std::span<const double> x, Architecture arch = Architecture::AttentionLstm,
                         bool scaled = false) {
  return forward_trace(p, x, arch, scaled).probs;
}

inline double cross_entropy(const Vec& logits, int label) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label);
}

/// Adds weight * dLoss/dparams for one example; returns its loss.
inline double accumulate_example(const ModelParams& p, std::span<const double> x, int label, Architecture arch,
                                 bool scaled, double weight, ModelParams& grad) {
  const ForwardTrace tr = forward_trace(p, x, arch, scaled);
  Vec dlogits = tr.probs;
  dlogits(label) -= 1.0;
  dlogits *= weight;
  grad.dense.weight.noalias() += dlogits * tr.pooled.transpose();
  grad.dense.bias.col(0) += dlogits;
  const Vec dpooled = p.dense.weight.transpose() * dlogits;

  const auto T = tr.lstm.Y.rows();
  Mat dY;
  if (arch == Architecture::AttentionLstm) {
    const Mat dZ = (dpooled / static_cast<double>(T)).transpose().replicate(T, 1);
    dY = attention_backward(p.attention, tr.lstm.Y, tr.attention, dZ, scaled, grad.attention);
  } else {
    dY = Mat::Zero(T, p.hidden());
    dY.row(T - 1) = dpooled.transpose();
  }
  lstm_backward(p.lstm, x, tr.lstm, dY, grad.lstm);
  return cross_entropy(tr.logits, label);
}

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grads;
};

inline LossAndGrad loss_and_grad(const ModelParams& p, const std::vector<Row>& rows, const std::vector<int>& labels,
                                 Architecture arch = Architecture::AttentionLstm, bool scaled = false) {
  if (rows.empty() || rows.size() != labels.size()) throw Error("neural", ErrorKind::ShapeMismatch, "bad batch");
  LossAndGrad out{0.0, ModelParams::zeros(p.hidden())};
  const double w = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.loss += w * accumulate_example(p, rows[i], labels[i], arch, scaled, w, out.grads);
  }
  return out;
}

inline double mean_loss(const ModelParams& p, const std::vector<Row>& rows, const std::vector<int>& labels,
                        Architecture arch = Architecture::AttentionLstm, bool scaled = false) {
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    loss += cross_entropy(forward_trace(p, rows[i], arch, scaled).logits, labels[i]);
  }
  return rows.empty() ? 0.0 : loss / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------
// Training

struct LogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  bool operator==(const LogEntry&) const = default;
};

struct TrainedModel {
  Architecture architecture = Architecture::AttentionLstm;
  TrainConfig config;
  std::size_t input_dims = 0;
  ModelParams params;
  std::optional<features::Scaler> scaler;
  std::vector<LogEntry> log;
  int best_epoch = 0;
};

class AdamState {
 public:
  explicit AdamState(int hidden) : m_(ModelParams::zeros(hidden)), v_(ModelParams::zeros(hidden)) {}

  void step(ModelParams& p, const ModelParams& g, const TrainConfig& cfg) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t_);
    auto pt = p.tensors();
    auto gt = g.tensors();
    auto mt = m_.tensors();
    auto vt = v_.tensors();
    for (std::size_t i = 0; i < kNumTensors; ++i) {
      *mt[i] = cfg.beta1 * *mt[i] + (1.0 - cfg.beta1) * *gt[i];
      *vt[i] = cfg.beta2 * *vt[i] + (1.0 - cfg.beta2) * gt[i]->cwiseProduct(*gt[i]);
      pt[i]->array() -= cfg.learning_rate * (mt[i]->array() / bc1) / ((vt[i]->array() / bc2).sqrt() + cfg.adam_epsilon);
    }
  }

 private:
  ModelParams m_, v_;
  int t_ = 0;
};

namespace detail {

/// Stratified holdout; classes too small to spare a row stay in training.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout(const LabeledTable& t, double fraction, Rng& rng) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < t.size(); ++i) by_class[class_index(t.labels[i])].push_back(i);
  std::vector<char> valid(t.size(), 0);
  for (auto& members : by_class) {
    rng.shuffle(std::span(members));
    auto n_valid = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    n_valid = std::min(n_valid, members.size() > 0 ? members.size() - 1 : 0);
    for (std::size_t j = 0; j < n_valid; ++j) valid[members[j]] = 1;
  }
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < t.size(); ++i) (valid[i] ? va : tr).push_back(i);
  return {tr, va};
}

}  // namespace detail

inline void validate_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0) || cfg.epochs < 0 || cfg.batch_size < 1 || cfg.hidden < 1 || cfg.early_stop_patience < 1) {
    throw Error("neural", ErrorKind::BadInput, "invalid training configuration");
  }
}

/// Mini-batch training on a standardized table. Keeps the parameters with the
/// lowest validation loss (training loss when no rows are held out).
inline TrainedModel train(const LabeledTable& table, double valid_fraction, const TrainConfig& cfg,
                          Architecture arch = Architecture::AttentionLstm) {
  validate_config(cfg);
  if (table.size() < 10) throw Error("neural", ErrorKind::TooFewRows, "training needs at least 10 rows");
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) throw Error("neural", ErrorKind::BadInput, "valid_fraction must lie in [0,1)");
  check_shape(table);

  Rng rng(cfg.seed);
  TrainedModel model;
  model.architecture = arch;
  model.config = cfg;
  model.input_dims = table.dims();
  model.params = random_params(cfg.hidden, rng, cfg.init_range);

  auto [train_idx, valid_idx] = detail::holdout(table, valid_fraction, rng);
  std::vector<Row> valid_rows;
  std::vector<int> valid_labels;
  for (std::size_t i : valid_idx) {
    valid_rows.push_back(table.rows[i]);
    valid_labels.push_back(class_index(table.labels[i]));
  }

  AdamState adam(cfg.hidden);
  ModelParams best = model.params;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span(train_idx));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      const std::size_t end = std::min(start + batch, train_idx.size());
      ModelParams grad = ModelParams::zeros(cfg.hidden);
      const double w = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = train_idx[b];
        epoch_loss += accumulate_example(model.params, table.rows[i], class_index(table.labels[i]), arch,
                                         cfg.scaled_attention, w, grad);
      }
      if (cfg.optimizer == Optimizer::Adam) {
        adam.step(model.params, grad, cfg);
      } else {
        auto pt = model.params.tensors();
        auto gt = grad.tensors();
        for (std::size_t t = 0; t < kNumTensors; ++t) *pt[t] -= cfg.learning_rate * *gt[t];
      }
    }
    LogEntry entry{epoch, epoch_loss / static_cast<double>(train_idx.size()), 0.0};
    entry.valid_loss = valid_rows.empty() ? entry.train_loss
                                          : mean_loss(model.params, valid_rows, valid_labels, arch, cfg.scaled_attention);
    model.log.push_back(entry);
    if (!std::isfinite(entry.valid_loss)) break;
    if (entry.valid_loss < best_loss) {
      best_loss = entry.valid_loss;
      best = model.params;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  model.params = std::move(best);
  return model;
}

struct Prediction {
  std::vector<ScamLabel> labels;
  std::vector<std::array<double, kNumClasses>> probabilities;
};

inline int argmax(const std::array<double, kNumClasses>& p) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return best;
}

inline Prediction predict(const TrainedModel& model, const LabeledTable& table) {
  if (!table.empty() && table.dims() != model.input_dims) {
    throw Error("neural", ErrorKind::DimensionMismatch,
                "model expects " + std::to_string(model.input_dims) + " features, table has " + std::to_string(table.dims()));
  }
  Prediction out;
  for (const auto& row : table.rows) {
    const Vec p = model_forward(model.params, row, model.architecture, model.config.scaled_attention);
    std::array<double, kNumClasses> probs{p(0), p(1), p(2)};
    out.labels.push_back(label_from_index(argmax(probs)));
    out.probabilities.push_back(probs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints and logs

inline nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, std::string_view name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error("neural", ErrorKind::ShapeMismatch, "tensor " + std::string(name) + " has wrong row count");
  }
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error("neural", ErrorKind::ShapeMismatch, "tensor " + std::string(name) + " has wrong column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size},       {"hidden", c.hidden},
          {"seed", c.seed},                   {"optimizer", std::string(to_string(c.optimizer))},
          {"beta1", c.beta1},                 {"beta2", c.beta2},
          {"adam_epsilon", c.adam_epsilon},   {"early_stop_patience", c.early_stop_patience},
          {"scaled_attention", c.scaled_attention}, {"init_range", c.init_range}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.hidden = j.value("hidden", c.hidden);
  c.seed = j.value("seed", c.seed);
  c.optimizer = j.value("optimizer", std::string("adam")) == "sgd" ? Optimizer::SGD : Optimizer::Adam;
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.scaled_attention = j.value("scaled_attention", c.scaled_attention);
  c.init_range = j.value("init_range", c.init_range);
  return c;
}

inline nlohmann::json scaler_to_json(const features::Scaler& s) { return {{"means", s.means}, {"stds", s.stds}}; }

inline features::Scaler scaler_from_json(const nlohmann::json& j) {
  return {j.at("means").get<std::vector<double>>(), j.at("stds").get<std::vector<double>>()};
}

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json weights;
  const auto ts = m.params.tensors();
  for (std::size_t i = 0; i < kNumTensors; ++i) weights[std::string(kTensorNames[i])] = matrix_to_json(*ts[i]);
  nlohmann::json doc{{"kind", std::string(to_string(m.architecture))},
                     {"config", config_to_json(m.config)},
                     {"input_dims", m.input_dims},
                     {"best_epoch", m.best_epoch},
                     {"weights", std::move(weights)}};
  doc["scaler"] = m.scaler ? scaler_to_json(*m.scaler) : nlohmann::json(nullptr);
  return doc;
}

inline TrainedModel from_json(const nlohmann::json& doc) {
  TrainedModel m;
  try {
    const auto kind = doc.at("kind").get<std::string>();
    if (kind != "alstm" && kind != "lstm") throw Error("neural", ErrorKind::BadInput, "not a neural checkpoint: " + kind);
    m.architecture = kind == "alstm" ? Architecture::AttentionLstm : Architecture::PlainLstm;
    m.config = config_from_json(doc.at("config"));
    m.input_dims = doc.at("input_dims").get<std::size_t>();
    m.best_epoch = doc.value("best_epoch", 0);
    const int H = m.config.hidden;
    m.params = ModelParams::zeros(H);
    auto ts = m.params.tensors();
    for (std::size_t i = 0; i < kNumTensors; ++i) {
      *ts[i] = matrix_from_json(doc.at("weights").at(std::string(kTensorNames[i])), ts[i]->rows(), ts[i]->cols(), kTensorNames[i]);
    }
    if (doc.contains("scaler") && !doc["scaler"].is_null()) m.scaler = scaler_from_json(doc["scaler"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error("neural", ErrorKind::BadInput, std::string("bad checkpoint: ") + e.what());
  }
  return m;
}

inline void write_log_csv(std::ostream& out, const std::vector<LogEntry>& log) {
  out << "epoch,train_loss,valid_loss\n";
  for (const auto& e : log) out << e.epoch << ',' << csv::format_value(e.train_loss) << ',' << csv::format_value(e.valid_loss) << '\n';
}

}  // namespace scamlens::neural
