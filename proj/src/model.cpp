#include "gnncert/model.hpp"

#include <cmath>
#include <string>

#include "gnncert/error.hpp"

namespace gnncert {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonBinaryAdjacency: return "NonBinaryAdjacency";
    case ErrorCode::InvalidClass: return "InvalidClass";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::InconsistentFixings: return "InconsistentFixings";
    case ErrorCode::UnboundedVariable: return "UnboundedVariable";
    case ErrorCode::InfiniteBound: return "InfiniteBound";
    case ErrorCode::MissingVariable: return "MissingVariable";
    case ErrorCode::NoBranchCandidate: return "NoBranchCandidate";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Adjacency

Adjacency Adjacency::from_dense(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "adjacency must be square");
  }
  const int n = static_cast<int>(dense.rows());
  Adjacency a(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const double x = dense(u, v);
      if (x != 0.0 && x != 1.0) {
        throw Error(ErrorCode::NonBinaryAdjacency,
                    "entry (" + std::to_string(u) + "," + std::to_string(v) + ") is not 0/1");
      }
      if (u == v && x != 0.0) {
        throw Error(ErrorCode::NonBinaryAdjacency, "nonzero diagonal at node " + std::to_string(u));
      }
      a.bits_[a.index(u, v)] = x != 0.0;
    }
  }
  return a;
}

Adjacency Adjacency::from_edges(int n, const std::vector<std::pair<int, int>>& edges, bool directed) {
  Adjacency a(n);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw Error(ErrorCode::InvalidGraph, "edge endpoint out of range");
    }
    if (u == v) throw Error(ErrorCode::NonBinaryAdjacency, "self-loop on node " + std::to_string(u));
    a.set(u, v, true);
    if (!directed) a.set(v, u, true);
  }
  return a;
}

void Adjacency::set(int u, int v, bool value) {
  if (u == v && value) throw Error(ErrorCode::NonBinaryAdjacency, "diagonal entries must stay zero");
  bits_[index(u, v)] = value;
}

bool Adjacency::is_symmetric() const {
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if ((*this)(u, v) != (*this)(v, u)) return false;
  return true;
}

int Adjacency::in_degree(int v) const {
  int d = 0;
  for (int u = 0; u < n_; ++u) d += (*this)(u, v);
  return d;
}

int Adjacency::entry_count() const {
  int c = 0;
  for (auto b : bits_) c += b;
  return c;
}

std::vector<std::pair<int, int>> Adjacency::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n_; ++u)
    for (int v = 0; v < n_; ++v)
      if ((*this)(u, v)) out.emplace_back(u, v);
  return out;
}

std::vector<std::pair<int, int>> Adjacency::undirected_edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if ((*this)(u, v) || (*this)(v, u)) out.emplace_back(u, v);
  return out;
}

Eigen::MatrixXd Adjacency::to_dense() const {
  Eigen::MatrixXd d(n_, n_);
  for (int u = 0; u < n_; ++u)
    for (int v = 0; v < n_; ++v) d(u, v) = (*this)(u, v) ? 1.0 : 0.0;
  return d;
}

// ---------------------------------------------------------------------------
// Model

namespace {

void check_layer(const MPNNLayer& layer, const std::string& where, bool dense) {
  const auto rows = layer.w_self.rows();
  const auto cols = layer.w_self.cols();
  if (rows == 0 || cols == 0) throw Error(ErrorCode::InvalidModel, where + ": empty weight matrix");
  if (layer.w_neigh.rows() != rows || layer.w_neigh.cols() != cols || layer.bias.size() != cols) {
    throw Error(ErrorCode::InvalidModel, where + ": w_self, w_neigh and bias shapes disagree");
  }
  if (!layer.w_self.allFinite() || !layer.w_neigh.allFinite() || !layer.bias.allFinite()) {
    throw Error(ErrorCode::InvalidModel, where + ": non-finite entry");
  }
  if (dense && !layer.w_neigh.isZero(0.0)) {
    throw Error(ErrorCode::InvalidModel, where + ": dense layers must have w_neigh = 0");
  }
}

Eigen::VectorXd apply_activation(Eigen::VectorXd v, Activation act) {
  if (act == Activation::ReLU) v = v.cwiseMax(0.0);
  return v;
}

}  // namespace

int MPNNModel::input_dim() const { return mp_layers.empty() ? 0 : mp_layers.front().in_dim(); }

int MPNNModel::num_classes() const {
  if (!dense_head.empty()) return dense_head.back().out_dim();
  return mp_layers.empty() ? 0 : mp_layers.back().out_dim();
}

void MPNNModel::validate() const {
  if (mp_layers.empty()) throw Error(ErrorCode::InvalidModel, "model has no message-passing layers");
  int width = mp_layers.front().in_dim();
  for (std::size_t l = 0; l < mp_layers.size(); ++l) {
    const auto where = "layer " + std::to_string(l + 1);
    check_layer(mp_layers[l], where, false);
    if (mp_layers[l].in_dim() != width) throw Error(ErrorCode::InvalidModel, where + ": input width does not chain");
    width = mp_layers[l].out_dim();
  }
  if (!dense_head.empty() && pooling != Pooling::Add) {
    throw Error(ErrorCode::InvalidModel, "a dense head requires add pooling");
  }
  for (std::size_t k = 0; k < dense_head.size(); ++k) {
    const auto where = "dense layer " + std::to_string(k + 1);
    check_layer(dense_head[k], where, true);
    if (dense_head[k].in_dim() != width) throw Error(ErrorCode::InvalidModel, where + ": input width does not chain");
    width = dense_head[k].out_dim();
  }
}

void GraphInstance::validate(const MPNNModel& model) const {
  const int n = num_nodes();
  if (features.rows() != n) throw Error(ErrorCode::DimensionMismatch, "feature rows differ from node count");
  if (features.cols() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "feature width differs from model input width");
  }
  if (!features.allFinite()) throw Error(ErrorCode::InvalidGraph, "non-finite feature");
  if (!directed && !adjacency.is_symmetric()) throw Error(ErrorCode::InvalidGraph, "undirected graph is not symmetric");
  if (target.node) {
    if (*target.node < 0 || *target.node >= n) throw Error(ErrorCode::InvalidGraph, "target node out of range");
    if (model.pooling != Pooling::None) throw Error(ErrorCode::InvalidGraph, "node target needs a model without pooling");
  } else if (model.pooling != Pooling::Add) {
    throw Error(ErrorCode::InvalidGraph, "graph target needs add pooling");
  }
  const int classes = model.num_classes();
  if (label_true < 0 || label_attack < 0 || label_true >= classes || label_attack >= classes) {
    throw Error(ErrorCode::InvalidClass, "label out of range");
  }
  if (label_true == label_attack) throw Error(ErrorCode::InvalidClass, "true and attack labels coincide");
}

ForwardTrace forward_trace(const MPNNModel& model, const Eigen::MatrixXd& features, const Adjacency& adjacency) {
  const int n = adjacency.size();
  if (features.rows() != n) throw Error(ErrorCode::DimensionMismatch, "feature rows differ from node count");
  if (features.cols() != model.input_dim()) throw Error(ErrorCode::DimensionMismatch, "feature width mismatch");

  ForwardTrace trace;
  const Eigen::MatrixXd a = adjacency.to_dense();
  Eigen::MatrixXd x = features;
  for (const auto& layer : model.mp_layers) {
    // Rows are nodes: (A^T X)_v = sum_u A(u, v) x_u.
    Eigen::MatrixXd pre = x * layer.w_self + a.transpose() * x * layer.w_neigh;
    pre.rowwise() += layer.bias.transpose();
    Eigen::MatrixXd post = layer.activation == Activation::ReLU ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
    trace.preact.push_back(pre);
    trace.postact.push_back(post);
    x = std::move(post);
  }

  if (model.pooling == Pooling::None) {
    trace.logits = x;
    return trace;
  }
  trace.pooled = x.colwise().sum().transpose();
  Eigen::VectorXd h = trace.pooled;
  for (const auto& layer : model.dense_head) {
    Eigen::VectorXd pre = layer.w_self.transpose() * h + layer.bias;
    trace.dense_pre.push_back(pre);
    h = apply_activation(pre, layer.activation);
    trace.dense_post.push_back(h);
  }
  trace.logits = h.transpose();
  return trace;
}

Logits forward(const MPNNModel& model, const Eigen::MatrixXd& features, const Adjacency& adjacency) {
  return forward_trace(model, features, adjacency).logits;
}

double margin(const MPNNModel& model, const Eigen::MatrixXd& features, const Adjacency& adjacency, int c_star, int c,
              const Target& target) {
  const int classes = model.num_classes();
  if (c_star == c) throw Error(ErrorCode::InvalidClass, "c* and c must differ");
  if (c_star < 0 || c < 0 || c_star >= classes || c >= classes) throw Error(ErrorCode::InvalidClass, "class out of range");
  const Logits logits = forward(model, features, adjacency);
  const int row = target.node ? *target.node : 0;
  if (row < 0 || row >= logits.rows()) throw Error(ErrorCode::InvalidGraph, "target node out of range");
  return logits(row, c_star) - logits(row, c);
}

double margin(const MPNNModel& model, const GraphInstance& instance, const Adjacency& adjacency) {
  return margin(model, instance.features, adjacency, instance.label_true, instance.label_attack, instance.target);
}

int predicted_label(const MPNNModel& model, const GraphInstance& instance) {
  const Logits logits = forward(model, instance.features, instance.adjacency);
  const int row = instance.target.node ? *instance.target.node : 0;
  Eigen::Index best = 0;
  logits.row(row).maxCoeff(&best);
  return static_cast<int>(best);
}

int next_label(int c_star, int num_classes) { return (c_star + 1) % num_classes; }

}  // namespace gnncert
