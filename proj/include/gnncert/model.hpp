#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gnncert/adjacency.hpp"

namespace gnncert {

enum class Activation { ReLU, Identity };
enum class Pooling { None, Add };

/// One sum-aggregation message-passing layer:
///   x_v' = act(W_self^T x_v + sum_u A(u, v) W_neigh^T x_u + b).
/// Weight matrices are d_in x d_out. Dense head layers reuse this type with
/// w_neigh = 0 and are evaluated on a single node.
struct MPNNLayer {
  Eigen::MatrixXd w_self;
  Eigen::MatrixXd w_neigh;
  Eigen::VectorXd bias;
  Activation activation = Activation::ReLU;

  int in_dim() const { return static_cast<int>(w_self.rows()); }
  int out_dim() const { return static_cast<int>(w_self.cols()); }
};

struct MPNNModel {
  std::vector<MPNNLayer> mp_layers;
  Pooling pooling = Pooling::None;
  std::vector<MPNNLayer> dense_head;

  int input_dim() const;
  int num_classes() const;
  int num_mp_layers() const { return static_cast<int>(mp_layers.size()); }

  /// Throws InvalidModel if shapes do not chain or entries are not finite.
  void validate() const;
};

/// Node target t, or the whole graph when `node` is empty.
struct Target {
  std::optional<int> node;

  static Target graph() { return {}; }
  static Target of_node(int t) { return {t}; }
  bool is_graph() const { return !node.has_value(); }
};

struct GraphInstance {
  Eigen::MatrixXd features;  // N x d0
  Adjacency adjacency;       // A*
  bool directed = false;
  Target target;
  int label_true = 0;
  int label_attack = 1;

  int num_nodes() const { return adjacency.size(); }

  /// Throws InvalidGraph / InvalidClass when the instance does not fit `model`.
  void validate(const MPNNModel& model) const;
};

/// N x C for node tasks, 1 x C for graph tasks.
using Logits = Eigen::MatrixXd;

/// Every intermediate value of one forward evaluation.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> preact;   // per MP layer, N x d_l
  std::vector<Eigen::MatrixXd> postact;  // per MP layer, N x d_l
  Eigen::VectorXd pooled;                // empty unless pooling = Add
  std::vector<Eigen::VectorXd> dense_pre;
  std::vector<Eigen::VectorXd> dense_post;
  Logits logits;
};

ForwardTrace forward_trace(const MPNNModel& model, const Eigen::MatrixXd& features, const Adjacency& adjacency);
Logits forward(const MPNNModel& model, const Eigen::MatrixXd& features, const Adjacency& adjacency);

/// f_{c*} - f_c at node `target` (or for the graph).
double margin(const MPNNModel& model, const Eigen::MatrixXd& features, const Adjacency& adjacency, int c_star, int c,
              const Target& target);
double margin(const MPNNModel& model, const GraphInstance& instance, const Adjacency& adjacency);

int predicted_label(const MPNNModel& model, const GraphInstance& instance);
/// c = (c* + 1) mod C.
int next_label(int c_star, int num_classes);

}  // namespace gnncert
