#include "wotlab/linear_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wotlab {

namespace {

// Primal network simplex specialized to the bipartite transportation graph.
//
// Nodes 0..n-1 are sources (supply p_i), n..n+m-1 sinks (demand q_j), and a
// root node closes the initial basis through artificial arcs of prohibitive
// cost.  Real arc (i,j) has id i*m+j; the artificial arc of node v has id
// n*m+v and is oriented source->root for sources, root->sink for sinks.
//
// The spanning-tree basis is kept in parent/pred/children form.  A pivot
// re-hangs the subtree cut off by the leaving arc (reverse the parent chain
// up to the entering arc's endpoint) and shifts that subtree's potentials by
// one constant, so dual values never get recomputed wholesale and rounding
// cannot drift with the pivot count.  The leaving-arc tie rule (strict
// minimum on the source path, last minimum on the target path) keeps the
// basis strongly feasible, which is the standard anti-cycling guarantee.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& p,
                   const Eigen::VectorXd& q)
      : cost_(cost),
        n_(static_cast<int>(p.size())),
        m_(static_cast<int>(q.size())),
        real_arcs_(n_ * m_),
        arc_count_(n_ * m_ + n_ + m_),
        root_(n_ + m_) {
    const int nodes = n_ + m_ + 1;
    big_ = (1.0 + cost_.cwiseAbs().maxCoeff()) * (n_ + m_ + 1);
    flow_.assign(arc_count_, 0.0);
    in_tree_.assign(arc_count_, 0);
    parent_.assign(nodes, -1);
    pred_.assign(nodes, -1);
    pred_up_.assign(nodes, 0);
    succ_num_.assign(nodes, 1);
    pi_.assign(nodes, 0.0);
    children_.assign(nodes, {});

    // Initial basis: every node hangs off the root by its artificial arc.
    succ_num_[root_] = nodes;
    children_[root_].reserve(n_ + m_);
    for (int v = 0; v < n_ + m_; ++v) {
      const int arc = real_arcs_ + v;
      parent_[v] = root_;
      pred_[v] = arc;
      pred_up_[v] = v < n_;  // source arcs point up to the root
      in_tree_[arc] = 1;
      flow_[arc] = v < n_ ? p[v] : q[v - n_];
      pi_[v] = v < n_ ? -big_ : big_;
      children_[root_].push_back(v);
    }
  }

  void run() {
    const long pivot_limit =
        1000 + 64L * (n_ + m_) * (64 - __builtin_clzll(n_ + m_ + 1));
    long pivots = 0;
    block_size_ = std::max(
        64, static_cast<int>(std::sqrt(static_cast<double>(arc_count_))));
    while (find_entering()) {
      if (++pivots > pivot_limit)
        throw std::runtime_error(
            "linear_ot: pivot limit exceeded (possible numerical cycling)");
      pivot();
    }
  }

  Eigen::MatrixXd extract_plan() const {
    Eigen::MatrixXd plan(n_, m_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j)
        plan(i, j) = std::max(0.0, flow_[i * m_ + j]);
    return plan;
  }

 private:
  int arc_src(int a) const {
    if (a < real_arcs_) return a / m_;
    const int v = a - real_arcs_;
    return v < n_ ? v : root_;
  }
  int arc_dst(int a) const {
    if (a < real_arcs_) return n_ + a % m_;
    const int v = a - real_arcs_;
    return v < n_ ? root_ : v;
  }
  double arc_cost(int a) const {
    return a < real_arcs_ ? cost_(a / m_, a % m_) : big_;
  }
  double reduced_cost(int a) const {
    return arc_cost(a) + pi_[arc_src(a)] - pi_[arc_dst(a)];
  }

  // Block pricing: scan fixed-size windows cyclically, take the most
  // negative reduced cost seen in the first window that has one.
  bool find_entering() {
    int scanned = 0;
    double best = 0.0;
    int best_arc = -1;
    int a = next_arc_;
    for (int in_block = 0; scanned < arc_count_; ++scanned) {
      if (!in_tree_[a]) {
        const double r = reduced_cost(a);
        if (r < best) {
          best = r;
          best_arc = a;
        }
      }
      if (++a == arc_count_) a = 0;
      if (++in_block == block_size_) {
        if (best_arc >= 0) break;
        in_block = 0;
      }
    }
    if (best_arc < 0) return false;
    in_arc_ = best_arc;
    next_arc_ = a;
    return true;
  }

  int find_join(int u, int v) const {
    while (u != v) {
      if (succ_num_[u] < succ_num_[v])
        u = parent_[u];
      else
        v = parent_[v];
    }
    return u;
  }

  void remove_child(int par, int child) {
    auto& kids = children_[par];
    for (auto& c : kids) {
      if (c == child) {
        c = kids.back();
        kids.pop_back();
        return;
      }
    }
    throw std::logic_error("linear_ot: tree bookkeeping broke");
  }

  void pivot() {
    const int src = arc_src(in_arc_), dst = arc_dst(in_arc_);
    const int join = find_join(src, dst);

    // Leaving arc: the tightest flow bound around the cycle closed by the
    // entering arc.  Pushing along src->dst drains up-arcs on the src side
    // and down-arcs on the dst side.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double delta = kInf;
    int u_out = -1;
    bool out_on_src_side = true;
    for (int u = src; u != join; u = parent_[u]) {
      if (pred_up_[u] && flow_[pred_[u]] < delta) {
        delta = flow_[pred_[u]];
        u_out = u;
        out_on_src_side = true;
      }
    }
    for (int u = dst; u != join; u = parent_[u]) {
      if (!pred_up_[u] && flow_[pred_[u]] <= delta) {
        delta = flow_[pred_[u]];
        u_out = u;
        out_on_src_side = false;
      }
    }
    if (u_out < 0)
      throw std::logic_error("linear_ot: unbounded pivot on bounded polytope");

    // Push delta units around the cycle.
    if (delta != 0.0) {
      flow_[in_arc_] += delta;
      for (int u = src; u != join; u = parent_[u])
        flow_[pred_[u]] += pred_up_[u] ? -delta : delta;
      for (int u = dst; u != join; u = parent_[u])
        flow_[pred_[u]] += pred_up_[u] ? delta : -delta;
    }

    const int out_arc = pred_[u_out];
    flow_[out_arc] = 0.0;  // leaves at its lower bound; clear rounding dust
    in_tree_[out_arc] = 0;
    in_tree_[in_arc_] = 1;

    // u_in: endpoint of the entering arc inside the subtree cut off by the
    // leaving arc; v_in: the endpoint that stays attached to the root side.
    const int u_in = out_on_src_side ? src : dst;
    const int v_in = out_on_src_side ? dst : src;

    // Detach the subtree and fix ancestor sizes on both sides.
    const int size_sub = succ_num_[u_out];
    remove_child(parent_[u_out], u_out);
    for (int w = parent_[u_out]; w >= 0; w = parent_[w])
      succ_num_[w] -= size_sub;
    for (int w = v_in; w >= 0; w = parent_[w]) succ_num_[w] += size_sub;

    // Re-root the subtree at u_in by reversing the parent chain up to u_out.
    std::vector<int> path;
    for (int w = u_in; w != u_out; w = parent_[w]) path.push_back(w);
    path.push_back(u_out);
    for (std::size_t t = path.size() - 1; t > 0; --t) {
      const int child = path[t - 1], par = path[t];
      const int arc = pred_[child];
      remove_child(par, child);
      children_[child].push_back(par);
      parent_[par] = child;
      pred_[par] = arc;
      pred_up_[par] = arc_src(arc) == par;
    }
    parent_[u_in] = v_in;
    pred_[u_in] = in_arc_;
    pred_up_[u_in] = arc_src(in_arc_) == u_in;
    children_[v_in].push_back(u_in);

    // One constant shift re-zeroes the entering arc's reduced cost across
    // the re-hung subtree; sizes are refreshed on the way out of the DFS.
    const double r_in =
        arc_cost(in_arc_) + pi_[arc_src(in_arc_)] - pi_[arc_dst(in_arc_)];
    const double sigma = pred_up_[u_in] ? -r_in : r_in;
    dfs_stack_.clear();
    dfs_stack_.push_back(u_in);
    order_.clear();
    while (!dfs_stack_.empty()) {
      const int w = dfs_stack_.back();
      dfs_stack_.pop_back();
      pi_[w] += sigma;
      order_.push_back(w);
      for (int c : children_[w]) dfs_stack_.push_back(c);
    }
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      succ_num_[*it] = 1;
      for (int c : children_[*it]) succ_num_[*it] += succ_num_[c];
    }
  }

  const Eigen::MatrixXd& cost_;
  int n_, m_, real_arcs_, arc_count_, root_;
  double big_ = 0.0;
  int block_size_ = 64;
  int next_arc_ = 0;
  int in_arc_ = -1;
  std::vector<double> flow_, pi_;
  std::vector<char> in_tree_, pred_up_;
  std::vector<int> parent_, pred_, succ_num_;
  std::vector<std::vector<int>> children_;
  std::vector<int> dfs_stack_, order_;
};

}  // namespace

Coupling linear_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& p,
                   const Eigen::VectorXd& q) {
  const Eigen::Index n = p.size(), m = q.size();
  if (cost.rows() != n || cost.cols() != m)
    throw std::invalid_argument("linear_ot: cost shape mismatch");
  if (n < 1 || m < 1) throw std::invalid_argument("linear_ot: empty marginal");
  if ((p.array() < 0).any() || (q.array() < 0).any())
    throw std::invalid_argument("linear_ot: negative marginal entry");
  if (std::abs(p.sum() - q.sum()) > 1e-9)
    throw std::invalid_argument("linear_ot: marginals carry unequal mass");
  if (!cost.allFinite())
    throw std::invalid_argument("linear_ot: non-finite cost entry");

  Coupling out;
  out.p = p;
  out.q = q;
  if (n == 1) {
    out.matrix = q.transpose();
  } else if (m == 1) {
    out.matrix = p;
  } else {
    TransportSimplex solver(cost, p, q);
    solver.run();
    out.matrix = solver.extract_plan();
  }
  validate(out);
  return out;
}

}  // namespace wotlab
