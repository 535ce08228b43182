#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "lagflow/error.hpp"

namespace lagflow::detail {

namespace {

using Int = std::int64_t;

constexpr double kSupplyScale = 0x1p50;
constexpr double kCostScale = 0x1p38;
constexpr Int kInf = std::numeric_limits<Int>::max();
constexpr int kUp = 1;
constexpr int kDown = -1;
constexpr std::size_t kDenseArcs = 1 << 16;
constexpr std::size_t kCandidates = 8;

// Integer supplies summing to exactly 2^50.
std::vector<Int> quantize(const std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  std::vector<Int> q(w.size());
  Int sum = 0;
  std::size_t largest = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    q[k] = std::max<Int>(1, std::llround(w[k] / total * kSupplyScale));
    sum += q[k];
    if (q[k] > q[largest]) largest = k;
  }
  q[largest] += static_cast<Int>(kSupplyScale) - sum;
  if (q[largest] <= 0) throw InvalidInput("wasserstein_exact: weights too unbalanced to quantize");
  return q;
}

// Primal network simplex with spanning tree labels (parent, thread,
// subtree sizes) and block search pivoting. Real arcs can be appended at any
// time; artificial root arcs are encoded as ~u.
class Solver {
 public:
  Solver(int n, int m, const std::vector<Int>& supply_a, const std::vector<Int>& supply_b,
         Int cmax)
      : n_(n), m_(m), nodes_(n + m) {
    art_cost_ = (cmax + 1) * nodes_;
    const int total = nodes_ + 1;
    root_ = nodes_;
    parent_.resize(total);
    pred_.resize(total);
    pred_dir_.resize(total);
    pred_flow_.resize(total);
    thread_.resize(total);
    rev_thread_.resize(total);
    succ_num_.resize(total);
    last_succ_.resize(total);
    pi_.resize(total);
    for (int u = 0; u < nodes_; ++u) {
      parent_[u] = root_;
      pred_[u] = ~static_cast<std::int64_t>(u);
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      if (u < n_) {
        pred_dir_[u] = kUp;
        pi_[u] = -art_cost_;
        pred_flow_[u] = supply_a[u];
      } else {
        pred_dir_[u] = kDown;
        pi_[u] = art_cost_;
        pred_flow_[u] = supply_b[u - n_];
      }
    }
    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = nodes_ + 1;
    last_succ_[root_] = root_ - 1;
    pi_[root_] = 0;
  }

  void add_arc(int i, int j, Int cost) {
    src_.push_back(i);
    tgt_.push_back(n_ + j);
    cost_.push_back(cost);
  }

  void run() {
    block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(double(src_.size()))));
    while (find_entering_arc()) {
      find_join_node();
      if (!find_leaving_arc()) throw Error("wasserstein_exact: unbounded transportation problem");
      change_flow();
      update_tree();
      update_potential();
    }
  }

  bool feasible() const {
    for (int u = 0; u < nodes_; ++u)
      if (pred_[u] < 0 && pred_flow_[u] != 0) return false;
    return true;
  }

  int nodes() const { return nodes_; }
  bool real_arc(int u) const { return pred_[u] >= 0; }
  int arc_source(int u) const { return src_[pred_[u]]; }
  int arc_target(int u) const { return tgt_[pred_[u]] - n_; }
  Int pred_flow(int u) const { return pred_flow_[u]; }
  Int potential(int u) const { return pi_[u]; }

 private:
  int source(std::int64_t e) const {
    if (e >= 0) return src_[e];
    const int u = static_cast<int>(~e);
    return u < n_ ? u : root_;
  }
  int target(std::int64_t e) const {
    if (e >= 0) return tgt_[e];
    const int u = static_cast<int>(~e);
    return u < n_ ? root_ : u;
  }
  Int arc_cost(std::int64_t e) const { return e >= 0 ? cost_[e] : art_cost_; }

  bool find_entering_arc() {
    const std::size_t arcs = src_.size();
    if (arcs == 0) return false;
    Int best = 0;
    std::size_t cnt = block_;
    std::size_t e = next_arc_ < arcs ? next_arc_ : 0;
    for (std::size_t k = 0; k < arcs; ++k) {
      const Int c = cost_[e] + pi_[src_[e]] - pi_[tgt_[e]];
      if (c < best) {
        best = c;
        in_arc_ = static_cast<std::int64_t>(e);
      }
      if (++e == arcs) e = 0;
      if (--cnt == 0) {
        if (best < 0) break;
        cnt = block_;
      }
    }
    if (best >= 0) return false;
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int u = source(in_arc_), v = target(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v])
        u = parent_[u];
      else
        v = parent_[v];
    }
    join_ = u;
  }

  bool find_leaving_arc() {
    const int first = source(in_arc_), second = target(in_arc_);
    delta_ = kInf;
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      const Int d = pred_dir_[u] == kUp ? pred_flow_[u] : kInf;
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      const Int d = pred_dir_[u] == kDown ? pred_flow_[u] : kInf;
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
    return result != 0;
  }

  void change_flow() {
    if (delta_ == 0) return;
    for (int u = source(in_arc_); u != join_; u = parent_[u]) pred_flow_[u] -= pred_dir_[u] * delta_;
    for (int u = target(in_arc_); u != join_; u = parent_[u]) pred_flow_[u] += pred_dir_[u] * delta_;
  }

  void update_tree() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      const int thread_continue =
          old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
      int stem = u_in_;
      int par_stem = v_in_;
      int last = last_succ_[u_in_];
      int after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        const int next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);
        const int before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

      int tmp_sc = 0;
      const int tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        pred_flow_[u] = pred_flow_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      succ_num_[u_in_] = old_succ_num;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
    pred_flow_[u_in_] = delta_;

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u])
      last_succ_[u] = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_out;
    }

    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const Int sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  int n_, m_, nodes_, root_ = 0;
  std::vector<int> src_, tgt_;
  std::vector<Int> cost_;
  Int art_cost_ = 0;
  std::size_t block_ = 10;
  std::size_t next_arc_ = 0;

  std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
  std::vector<std::int64_t> pred_;
  std::vector<Int> pred_flow_, pi_;
  std::vector<int> dirty_revs_;

  std::int64_t in_arc_ = 0;
  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  Int delta_ = 0;
};

// The k smallest (cost, index) pairs seen so far.
class TopK {
 public:
  explicit TopK(std::size_t k) : cost_(k, kInf), index_(k, 0) {}

  void offer(Int c, std::size_t index) {
    if (c >= cost_[worst_]) return;
    cost_[worst_] = c;
    index_[worst_] = index;
    for (std::size_t s = 0; s < cost_.size(); ++s)
      if (cost_[s] > cost_[worst_]) worst_ = s;
  }

  void append_to(std::vector<std::size_t>& out) const {
    for (std::size_t s = 0; s < cost_.size(); ++s)
      if (cost_[s] != kInf) out.push_back(index_[s]);
  }

 private:
  std::vector<Int> cost_;
  std::vector<std::size_t> index_;
  std::size_t worst_ = 0;
};

}  // namespace

TransportSolution solve_transportation(const std::vector<double>& a,
                                       const std::vector<double>& b,
                                       const std::function<void(std::size_t, double*)>& cost_row,
                                       double cost_bound) {
  const std::size_t n = a.size(), m = b.size();
  TransportSolution out;
  if (n == 0 || m == 0) return out;
  double mass = 0.0;
  for (double x : a) mass += x;

  const double scale = cost_bound > 0.0 ? kCostScale / cost_bound : 1.0;
  std::vector<Int> icost(n * m);
  Int cmax = 0;
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    cost_row(i, row.data());
    for (std::size_t j = 0; j < m; ++j) {
      const Int c = std::llround(std::min(row[j], cost_bound) * scale);
      icost[i * m + j] = c;
      cmax = std::max(cmax, c);
    }
  }

  const int ni = static_cast<int>(n), mi = static_cast<int>(m);
  Solver solver(ni, mi, quantize(a), quantize(b), cmax);

  // Candidate arcs: the k cheapest per row and per column, then pricing
  // rounds over the full cost table until no reduced cost is negative.
  if (n * m <= kDenseArcs) {
    for (int i = 0; i < ni; ++i)
      for (int j = 0; j < mi; ++j) solver.add_arc(i, j, icost[i * m + j]);
  } else {
    const std::size_t k = kCandidates;
    std::vector<TopK> rows(n, TopK(k)), cols(m, TopK(k));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const Int c = icost[i * m + j];
        rows[i].offer(c, i * m + j);
        cols[j].offer(c, i * m + j);
      }
    std::vector<std::size_t> cand;
    cand.reserve((n + m) * k);
    for (const TopK& t : rows) t.append_to(cand);
    for (const TopK& t : cols) t.append_to(cand);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (std::size_t e : cand)
      solver.add_arc(static_cast<int>(e / m), static_cast<int>(e % m), icost[e]);
  }

  for (;;) {
    solver.run();
    if (n * m <= kDenseArcs) break;
    std::vector<std::size_t> violated;
    std::vector<Int> col_best(m, 0);
    std::vector<std::size_t> col_arg(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Int pi_i = solver.potential(static_cast<int>(i));
      Int best = 0;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const Int rc = icost[i * m + j] + pi_i - solver.potential(static_cast<int>(n + j));
        if (rc < best) {
          best = rc;
          arg = i * m + j;
        }
        if (rc < col_best[j]) {
          col_best[j] = rc;
          col_arg[j] = i * m + j;
        }
      }
      if (best < 0) violated.push_back(arg);
    }
    for (std::size_t j = 0; j < m; ++j)
      if (col_best[j] < 0) violated.push_back(col_arg[j]);
    std::sort(violated.begin(), violated.end());
    violated.erase(std::unique(violated.begin(), violated.end()), violated.end());
    for (std::size_t e : violated)
      solver.add_arc(static_cast<int>(e / m), static_cast<int>(e % m), icost[e]);
    const std::size_t added = violated.size();
    if (added == 0) break;
  }
  if (!solver.feasible()) throw Error("wasserstein_exact: transportation problem infeasible");

  const double unit = mass / kSupplyScale;
  for (int u = 0; u < solver.nodes(); ++u) {
    if (!solver.real_arc(u) || solver.pred_flow(u) == 0) continue;
    out.plan.push_back({static_cast<std::size_t>(solver.arc_source(u)),
                        static_cast<std::size_t>(solver.arc_target(u)),
                        static_cast<double>(solver.pred_flow(u)) * unit});
  }
  std::sort(out.plan.begin(), out.plan.end(), [](const PlanEntry& x, const PlanEntry& y) {
    return x.i != y.i ? x.i < y.i : x.j < y.j;
  });

  const Int shift = solver.potential(ni);
  out.f.resize(n);
  out.g.resize(m);
  for (std::size_t i = 0; i < n; ++i)
    out.f[i] = -static_cast<double>(solver.potential(static_cast<int>(i)) - shift) / scale;
  for (std::size_t j = 0; j < m; ++j)
    out.g[j] = static_cast<double>(solver.potential(static_cast<int>(n + j)) - shift) / scale;
  return out;
}

}  // namespace lagflow::detail
