#pragma once

#include <vector>

#include "flatness/types.hpp"

namespace flatness::lp {

/// Uncapacitated min-cost flow between S sources and T sinks with an extra "ground"
/// node of free balance: mass may move source->sink (cost(s,t)), source->ground
/// (source_ground_cost[s]) or ground->sink (sink_ground_cost[t]). Supplies and demands
/// must be strictly positive.
struct GroundedTransport {
  VectorXd supply;              // S
  VectorXd demand;              // T
  MatrixXd cost;                // S x T, nonnegative
  VectorXd source_ground_cost;  // S, nonnegative
  VectorXd sink_ground_cost;    // T, nonnegative
};

struct TransportSolution {
  double cost = 0.0;
  /// Node potentials y with y(ground) = 0 and y(tail) - y(head) <= arc cost, tight on
  /// every arc carrying flow. Maximizes sum(supply*y_s) - sum(demand*y_t).
  VectorXd source_potential;
  VectorXd sink_potential;
  long pivots = 0;
};

/// Primal network simplex on strongly feasible spanning trees rooted at the ground
/// node, with block pricing over implicitly enumerated arcs.
TransportSolution solve(const GroundedTransport& problem);

/// Reusable solver. Source->sink arcs are generated lazily: the restricted problem
/// starts from k-nearest-neighbour arcs and full pricing over all S*T arcs adds
/// violated ones until none remain. Consecutive solves of the same shape start from
/// the previous basis when its flows stay feasible for the new data.
class NetworkSimplex {
 public:
  TransportSolution solve(const GroundedTransport& problem);
  void set_warm_start(bool on) { warm_enabled_ = on; }

 private:
  void cold_start();
  bool warm_start();
  void run();
  void add_arc(int tail, int head, double cost);
  long price();
  int add_violated_arcs();
  void pivot(long entering);
  void detach(int v);
  void attach(int v, int p);
  void refresh_subtree(int top);

  const GroundedTransport* problem_ = nullptr;
  int sources_ = 0;
  int sinks_ = 0;
  int root_ = 0;

  std::vector<int> tail_, head_;
  std::vector<double> cost_;
  std::vector<char> present_;  // S*T flags, sink-major

  std::vector<int> parent_;
  std::vector<long> pred_arc_;
  std::vector<char> pred_up_;  // 1 when the tree arc points from the node to its parent
  std::vector<double> flow_;   // flow on the node's tree arc
  std::vector<double> potential_;
  std::vector<int> depth_;
  std::vector<int> first_child_, next_sibling_, prev_sibling_;
  std::vector<int> stack_, path_;
  long next_arc_ = 0;
  long block_ = 16;
  double eps_ = 0.0;
  long pivots_ = 0;
  long max_pivots_ = 0;
  bool warm_enabled_ = true;
  bool have_basis_ = false;
};

}  // namespace flatness::lp
