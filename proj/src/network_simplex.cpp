#include "flatness/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace flatness::lp {

namespace {
constexpr int kNeighbours = 8;
}

TransportSolution solve(const GroundedTransport& problem) {
  NetworkSimplex solver;
  return solver.solve(problem);
}

void NetworkSimplex::add_arc(int tail, int head, double cost) {
  tail_.push_back(tail);
  head_.push_back(head);
  cost_.push_back(cost);
}

// Block pricing over the explicit arcs: the most negative reduced cost within the
// first block (cyclically from the last position) that holds one; -1 if none.
long NetworkSimplex::price() {
  const long arcs = static_cast<long>(cost_.size());
  const double* y = potential_.data();
  long entering = -1;
  double best = -eps_;
  long in_block = 0;
  long arc = next_arc_ < arcs ? next_arc_ : 0;
  for (long scanned = 0; scanned < arcs; ++scanned) {
    const double rc = cost_[arc] - y[tail_[arc]] + y[head_[arc]];
    if (rc < best) {
      best = rc;
      entering = arc;
    }
    if (++arc == arcs) arc = 0;
    if (++in_block >= block_) {
      if (entering >= 0) break;
      in_block = 0;
    }
  }
  next_arc_ = arc;
  return entering;
}

int NetworkSimplex::add_violated_arcs() {
  const double* y = potential_.data();
  const double* cost = problem_->cost.data();
  int added = 0;
  for (int t = 0; t < sinks_; ++t) {
    const double yt = y[sources_ + t];
    const double* col = cost + static_cast<long>(t) * sources_;
    char* flags = present_.data() + static_cast<long>(t) * sources_;
    for (int s = 0; s < sources_; ++s) {
      if (!flags[s] && col[s] - y[s] + yt < -eps_) {
        flags[s] = 1;
        add_arc(s, sources_ + t, col[s]);
        ++added;
      }
    }
  }
  return added;
}

void NetworkSimplex::detach(int v) {
  const int p = parent_[v];
  if (prev_sibling_[v] >= 0) next_sibling_[prev_sibling_[v]] = next_sibling_[v];
  else first_child_[p] = next_sibling_[v];
  if (next_sibling_[v] >= 0) prev_sibling_[next_sibling_[v]] = prev_sibling_[v];
  next_sibling_[v] = prev_sibling_[v] = -1;
}

void NetworkSimplex::attach(int v, int p) {
  parent_[v] = p;
  prev_sibling_[v] = -1;
  next_sibling_[v] = first_child_[p];
  if (first_child_[p] >= 0) prev_sibling_[first_child_[p]] = v;
  first_child_[p] = v;
}

void NetworkSimplex::refresh_subtree(int top) {
  stack_.clear();
  stack_.push_back(top);
  while (!stack_.empty()) {
    const int v = stack_.back();
    stack_.pop_back();
    if (v != root_) {
      const int u = parent_[v];
      const double c = cost_[pred_arc_[v]];
      potential_[v] = pred_up_[v] ? potential_[u] + c : potential_[u] - c;
      depth_[v] = depth_[u] + 1;
    }
    for (int c = first_child_[v]; c >= 0; c = next_sibling_[c]) stack_.push_back(c);
  }
}

void NetworkSimplex::pivot(long entering) {
  if (++pivots_ > max_pivots_) throw std::runtime_error("network simplex: pivot limit exceeded");
  const int u = tail_[entering];
  const int w = head_[entering];

  int a = u, b = w;
  while (a != b) {
    if (depth_[a] >= depth_[b]) a = parent_[a];
    else b = parent_[b];
  }
  const int apex = a;

  // Leaving arc: the last blocking arc met when walking the cycle
  // apex -> ... -> u -> w -> ... -> apex (Cunningham's rule).
  double delta = std::numeric_limits<double>::infinity();
  int leave = -1;
  bool leave_on_u_side = false;
  for (int x = u; x != apex; x = parent_[x]) {
    if (pred_up_[x] && flow_[x] < delta) {
      delta = flow_[x];
      leave = x;
      leave_on_u_side = true;
    }
  }
  for (int x = w; x != apex; x = parent_[x]) {
    if (!pred_up_[x] && flow_[x] <= delta) {
      delta = flow_[x];
      leave = x;
      leave_on_u_side = false;
    }
  }
  if (leave < 0) throw std::runtime_error("network simplex: unbounded cycle");

  if (delta > 0.0) {
    for (int x = u; x != apex; x = parent_[x]) flow_[x] += pred_up_[x] ? -delta : delta;
    for (int x = w; x != apex; x = parent_[x]) flow_[x] += pred_up_[x] ? delta : -delta;
  }

  // Re-hang the subtree cut off by the leaving arc from the entering arc.
  const int inner = leave_on_u_side ? u : w;
  const int outer = leave_on_u_side ? w : u;
  path_.clear();
  for (int x = inner;; x = parent_[x]) {
    path_.push_back(x);
    if (x == leave) break;
  }
  long carry_arc = entering;
  char carry_up = leave_on_u_side ? 1 : 0;  // inner is the tail exactly when inner == u
  double carry_flow = delta;
  int new_parent = outer;
  for (const int x : path_) {
    const long arc = pred_arc_[x];
    const char up = pred_up_[x];
    const double f = flow_[x];
    detach(x);
    attach(x, new_parent);
    pred_arc_[x] = carry_arc;
    pred_up_[x] = carry_up;
    flow_[x] = carry_flow;
    carry_arc = arc;
    carry_up = up ? 0 : 1;
    carry_flow = f;
    new_parent = x;
  }
  refresh_subtree(inner);
}

void NetworkSimplex::cold_start() {
  const GroundedTransport& problem = *problem_;
  const int nodes = root_ + 1;
  tail_.clear();
  head_.clear();
  cost_.clear();
  present_.assign(static_cast<std::size_t>(sources_) * sinks_, 0);

  parent_.assign(nodes, -1);
  pred_arc_.assign(nodes, -1);
  pred_up_.assign(nodes, 0);
  flow_.assign(nodes, 0.0);
  potential_.assign(nodes, 0.0);
  depth_.assign(nodes, 0);
  first_child_.assign(nodes, -1);
  next_sibling_.assign(nodes, -1);
  prev_sibling_.assign(nodes, -1);

  // Every source drains into ground and ground feeds every sink: all tree flows are
  // positive, so the starting tree is strongly feasible.
  for (int s = 0; s < sources_; ++s) {
    add_arc(s, root_, problem.source_ground_cost[s]);
    pred_arc_[s] = s;
    pred_up_[s] = 1;
    flow_[s] = problem.supply[s];
    attach(s, root_);
  }
  for (int t = 0; t < sinks_; ++t) {
    add_arc(root_, sources_ + t, problem.sink_ground_cost[t]);
    pred_arc_[sources_ + t] = sources_ + t;
    pred_up_[sources_ + t] = 0;
    flow_[sources_ + t] = problem.demand[t];
    attach(sources_ + t, root_);
  }
  refresh_subtree(root_);

  // Candidate arcs: each sink's and each source's nearest partners.
  auto mark = [&](int s, int t) {
    char& f = present_[static_cast<std::size_t>(t) * sources_ + s];
    if (!f) {
      f = 1;
      add_arc(s, sources_ + t, problem.cost(s, t));
    }
  };
  std::vector<int> order;
  const int ks = std::min(kNeighbours, sources_);
  order.resize(static_cast<std::size_t>(sources_));
  for (int t = 0; t < sinks_; ++t) {
    const double* col = problem.cost.data() + static_cast<long>(t) * sources_;
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + (ks - 1), order.end(),
                     [&](int a, int b) { return col[a] < col[b]; });
    for (int k = 0; k < ks; ++k) mark(order[static_cast<std::size_t>(k)], t);
  }
  const int kt = std::min(kNeighbours, sinks_);
  order.resize(static_cast<std::size_t>(sinks_));
  std::vector<double> row(static_cast<std::size_t>(sinks_));
  for (int s = 0; s < sources_; ++s) {
    for (int t = 0; t < sinks_; ++t) row[static_cast<std::size_t>(t)] = problem.cost(s, t);
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + (kt - 1), order.end(),
                     [&](int a, int b) { return row[static_cast<std::size_t>(a)] < row[static_cast<std::size_t>(b)]; });
    for (int k = 0; k < kt; ++k) mark(s, order[static_cast<std::size_t>(k)]);
  }
}

// Keeps the previous tree and arc set, refreshing costs and tree flows. Fails when a
// tree flow turns negative under the new supplies and demands.
bool NetworkSimplex::warm_start() {
  const GroundedTransport& problem = *problem_;
  for (int s = 0; s < sources_; ++s) cost_[static_cast<std::size_t>(s)] = problem.source_ground_cost[s];
  for (int t = 0; t < sinks_; ++t) cost_[static_cast<std::size_t>(sources_ + t)] = problem.sink_ground_cost[t];
  for (std::size_t a = static_cast<std::size_t>(root_); a < cost_.size(); ++a)
    cost_[a] = problem.cost(tail_[a], head_[a] - sources_);

  // Subtree balances, children before parents.
  path_.clear();
  stack_.clear();
  stack_.push_back(root_);
  while (!stack_.empty()) {
    const int v = stack_.back();
    stack_.pop_back();
    path_.push_back(v);
    for (int c = first_child_[v]; c >= 0; c = next_sibling_[c]) stack_.push_back(c);
  }
  std::vector<double>& balance = potential_;  // reused as scratch, refreshed below
  for (int s = 0; s < sources_; ++s) balance[s] = problem.supply[s];
  for (int t = 0; t < sinks_; ++t) balance[sources_ + t] = -problem.demand[t];
  balance[root_] = 0.0;
  const double slack = 1e-14 * (problem.supply.sum() + problem.demand.sum());
  for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
    const int v = *it;
    if (v == root_) continue;
    const double f = pred_up_[v] ? balance[v] : -balance[v];
    if (f < -slack) return false;
    flow_[v] = std::max(f, 0.0);
    balance[parent_[v]] += balance[v];
  }
  refresh_subtree(root_);
  return true;
}

void NetworkSimplex::run() {
  while (true) {
    block_ = std::max<long>(32, static_cast<long>(std::sqrt(static_cast<double>(cost_.size()))));
    for (long entering = price(); entering >= 0; entering = price()) pivot(entering);
    if (add_violated_arcs() == 0) break;
  }
}

TransportSolution NetworkSimplex::solve(const GroundedTransport& problem) {
  const int S = static_cast<int>(problem.supply.size());
  const int T = static_cast<int>(problem.demand.size());
  if (problem.cost.rows() != S || problem.cost.cols() != T || problem.source_ground_cost.size() != S ||
      problem.sink_ground_cost.size() != T)
    throw std::invalid_argument("GroundedTransport: inconsistent sizes");
  const bool same_shape = have_basis_ && S == sources_ && T == sinks_;
  problem_ = &problem;
  sources_ = S;
  sinks_ = T;
  root_ = S + T;
  const int nodes = root_ + 1;

  double max_cost = 0.0;
  if (S > 0) max_cost = std::max(max_cost, problem.source_ground_cost.maxCoeff());
  if (T > 0) max_cost = std::max(max_cost, problem.sink_ground_cost.maxCoeff());
  if (problem.cost.size() > 0) max_cost = std::max(max_cost, problem.cost.maxCoeff());
  eps_ = 1e-13 * (1.0 + max_cost);
  max_pivots_ = 200 * static_cast<long>(nodes) + 10000;

  // A warm arc set that has grown far beyond the neighbour lists costs more in pricing
  // than it saves.
  const std::size_t arc_cap = static_cast<std::size_t>(4 * kNeighbours) * static_cast<std::size_t>(nodes);
  bool warm = warm_enabled_ && same_shape && cost_.size() <= arc_cap && warm_start();
  if (!warm) cold_start();
  next_arc_ = 0;
  pivots_ = 0;
  have_basis_ = false;
  try {
    run();
  } catch (const std::runtime_error&) {
    // Degenerate cycling from a warm basis that is not strongly feasible.
    if (!warm) throw;
    cold_start();
    pivots_ = 0;
    run();
  }
  have_basis_ = true;

  TransportSolution out;
  out.pivots = pivots_;
  for (int v = 0; v < root_; ++v) out.cost += flow_[v] * cost_[pred_arc_[v]];
  out.source_potential = Eigen::Map<const VectorXd>(potential_.data(), sources_);
  out.sink_potential = Eigen::Map<const VectorXd>(potential_.data() + sources_, sinks_);
  return out;
}

}  // namespace flatness::lp
