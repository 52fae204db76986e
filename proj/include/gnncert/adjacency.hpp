#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gnncert {

/// Binary N×N adjacency. Entry (u, v) set means a message edge u -> v, so
/// column v lists the in-neighbours N(v). The diagonal is always zero.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(int n) : n_(n), bits_(static_cast<std::size_t>(n) * n, 0) {}

  /// Throws NonBinaryAdjacency on entries other than 0/1 or a nonzero diagonal.
  static Adjacency from_dense(const Eigen::MatrixXd& dense);
  /// Undirected edges are stored in both directions.
  static Adjacency from_edges(int n, const std::vector<std::pair<int, int>>& edges, bool directed);

  int size() const { return n_; }
  bool operator()(int u, int v) const { return bits_[index(u, v)] != 0; }
  void set(int u, int v, bool value);
  void toggle(int u, int v) { set(u, v, !(*this)(u, v)); }

  bool is_symmetric() const;
  int in_degree(int v) const;
  int entry_count() const;

  /// Ordered pairs (u, v) with A(u, v) = 1, row-major.
  std::vector<std::pair<int, int>> edges() const;
  /// Same as edges() but an undirected pair is listed once as (min, max).
  std::vector<std::pair<int, int>> undirected_edges() const;
  Eigen::MatrixXd to_dense() const;

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(u) * n_ + v; }

  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace gnncert
