#pragma once
// Small hand-checked instances shared by the unit tests.

#include <initializer_list>
#include <vector>

#include "gnncert/model.hpp"
#include "gnncert/perturbation.hpp"

namespace fixtures {

using namespace gnncert;

inline Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double x : row) m(r, c++) = x;
    ++r;
  }
  return m;
}

inline MPNNLayer layer(std::initializer_list<std::initializer_list<double>> w_self,
                       std::initializer_list<std::initializer_list<double>> w_neigh, std::vector<double> bias,
                       Activation act) {
  MPNNLayer l;
  l.w_self = mat(w_self);
  l.w_neigh = mat(w_neigh);
  l.bias = Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  l.activation = act;
  return l;
}

/// Undirected path 0 - 1 - 2 with x = (1, -2, 3), target node 0.
inline GraphInstance path_graph(int label_true = 0, int label_attack = 1) {
  GraphInstance g;
  g.features = mat({{1}, {-2}, {3}});
  g.adjacency = Adjacency::from_edges(3, {{0, 1}, {1, 2}}, false);
  g.target = Target::of_node(0);
  g.label_true = label_true;
  g.label_attack = label_attack;
  return g;
}

/// One identity layer, w_self = w_neigh = [[1, 0]]: feature 0 is x_v + sum of
/// neighbours, feature 1 is constant zero.
inline MPNNModel sum_model() {
  MPNNModel m;
  m.mp_layers.push_back(layer({{1, 0}}, {{1, 0}}, {0, 0}, Activation::Identity));
  return m;
}

/// margin(0, 1) at node 0 = x_0 - sum of neighbours - 0.5: 2.5 at A*, 0.5 once
/// {0,1} is removed, -0.5 once {0,2} is added.
inline MPNNModel shift_model() {
  MPNNModel m;
  m.mp_layers.push_back(layer({{1, 0}}, {{-1, 0}}, {-0.5, 0}, Activation::Identity));
  return m;
}

inline MPNNModel constant_model(int d_in, std::vector<double> bias) {
  MPNNModel m;
  MPNNLayer l;
  l.w_self = Eigen::MatrixXd::Zero(d_in, static_cast<Eigen::Index>(bias.size()));
  l.w_neigh = l.w_self;
  l.bias = Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  l.activation = Activation::Identity;
  m.mp_layers.push_back(l);
  return m;
}

/// ReLU layer w_self = w_neigh = [[1]], add pooling, head [[1, -1]]: pooled 3,
/// logits (3, -3).
inline MPNNModel pooled_model() {
  MPNNModel m;
  m.mp_layers.push_back(layer({{1}}, {{1}}, {0}, Activation::ReLU));
  m.pooling = Pooling::Add;
  m.dense_head.push_back(layer({{1, -1}}, {{0, 0}}, {0, 0}, Activation::Identity));
  return m;
}

inline GraphInstance pooled_graph() {
  GraphInstance g = path_graph();
  g.target = Target::graph();
  return g;
}

inline PerturbationSpec p1(int global, std::vector<int> local, bool tight = false) {
  return {PerturbationMode::UndirectedFlip, global, std::move(local), tight};
}

inline PerturbationSpec p2(int global, std::vector<int> local) {
  return {PerturbationMode::DirectedRemoveOnly, global, std::move(local), false};
}

}  // namespace fixtures
