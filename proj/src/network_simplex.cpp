#include "occlab/network_simplex.hpp"

#include "occlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace occlab {

namespace {

constexpr std::int8_t kLower = 1, kTree = 0;
constexpr int kUp = 1, kDown = -1;
constexpr double kInfFlow = std::numeric_limits<double>::infinity();

class Simplex {
 public:
  Simplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost)
      : n1_(int(a.size())), n2_(int(b.size())), nodes_(n1_ + n2_), root_(nodes_) {
    real_ = std::int64_t(n1_) * n2_;
    all_ = real_ + nodes_;
    cost_.resize(std::size_t(all_));
    flow_.assign(std::size_t(all_), 0.0);
    state_.assign(std::size_t(all_), kLower);
    art_src_.resize(nodes_);
    art_tgt_.resize(nodes_);
    double cmax = 0.0;
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) {
        const double c = cost(i, j);
        cost_[std::size_t(i) * n2_ + j] = c;
        cmax = std::max(cmax, c);
      }
    art_cost_ = (cmax + 1.0) * nodes_;
    eps_ = 1e-14 * art_cost_;

    supply_.resize(nodes_ + 1);
    for (int i = 0; i < n1_; ++i) supply_[i] = a[i];
    for (int j = 0; j < n2_; ++j) supply_[n1_ + j] = -b[j];

    const int N = nodes_ + 1;
    parent_.resize(N);
    pred_.resize(N);
    thread_.resize(N);
    rev_thread_.resize(N);
    succ_num_.resize(N);
    last_succ_.resize(N);
    pred_dir_.resize(N);
    pi_.resize(N);

    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = nodes_ + 1;
    last_succ_[root_] = root_ - 1;
    supply_[root_] = 0.0;
    pi_[root_] = 0.0;
    for (int u = 0; u < nodes_; ++u) {
      const std::int64_t e = real_ + u;
      parent_[u] = root_;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[std::size_t(e)] = kTree;
      if (supply_[u] >= 0.0) {
        pred_dir_[u] = kUp;
        pi_[u] = 0.0;
        art_src_[u] = u;
        art_tgt_[u] = root_;
        flow_[std::size_t(e)] = supply_[u];
        cost_[std::size_t(e)] = 0.0;
      } else {
        pred_dir_[u] = kDown;
        pi_[u] = art_cost_;
        art_src_[u] = root_;
        art_tgt_[u] = u;
        flow_[std::size_t(e)] = -supply_[u];
        cost_[std::size_t(e)] = art_cost_;
      }
    }
    block_ = std::max<std::int64_t>(10, std::int64_t(std::ceil(std::sqrt(double(real_)))));
  }

  long long run() {
    long long pivots = 0;
    while (find_entering()) {
      find_join();
      find_leaving();
      if (!(delta_ < kInfFlow)) throw NumericalFailure("transport problem is unbounded");
      change_flow();
      update_tree();
      update_potential();
      ++pivots;
    }
    return pivots;
  }

  TransportSolution result(double total) const {
    for (int u = 0; u < nodes_; ++u) {
      if (flow_[std::size_t(real_ + u)] > 1e-12 * std::max(1.0, total)) {
        std::ostringstream os;
        os << "transport problem infeasible: artificial flow " << flow_[std::size_t(real_ + u)] << " at node " << u;
        throw NumericalFailure(os.str());
      }
    }
    // Recompute potentials exactly from the final tree (thread order visits parents first).
    std::vector<double> pi(nodes_ + 1, 0.0);
    for (int u = thread_[root_]; u != root_; u = thread_[u])
      pi[u] = pi[parent_[u]] - pred_dir_[u] * cost_[std::size_t(pred_[u])];

    TransportSolution s;
    s.u.resize(n1_);
    s.v.resize(n2_);
    for (int i = 0; i < n1_; ++i) s.u[i] = -pi[i];
    for (int j = 0; j < n2_; ++j) s.v[j] = pi[n1_ + j];
    // Shift so the potentials are centered near zero; the dual value is invariant.
    const double shift = s.u.size() ? s.u.mean() : 0.0;
    s.u.array() -= shift;
    s.v.array() += shift;
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) {
        const std::size_t e = std::size_t(i) * n2_ + j;
        s.max_violation = std::max(s.max_violation, s.u[i] + s.v[j] - cost_[e]);
        if (state_[e] == kTree && flow_[e] > 0.0) {
          s.flows.push_back({i, j, flow_[e]});
          s.cost += flow_[e] * cost_[e];
        }
      }
    for (int i = 0; i < n1_; ++i) s.dual_value += supply_[i] * s.u[i];
    for (int j = 0; j < n2_; ++j) s.dual_value += -supply_[n1_ + j] * s.v[j];
    return s;
  }

 private:
  int src(std::int64_t e) const { return e < real_ ? int(e / n2_) : art_src_[std::size_t(e - real_)]; }
  int tgt(std::int64_t e) const { return e < real_ ? n1_ + int(e % n2_) : art_tgt_[std::size_t(e - real_)]; }

  bool find_entering() {
    double best = -eps_;
    std::int64_t cnt = block_;
    std::int64_t e = next_arc_;
    bool found = false;
    // Artificial arcs never re-enter: their cost dominates any real path.
    for (std::int64_t k = 0; k < real_; ++k, ++e) {
      if (e == real_) e = 0;
      if (state_[std::size_t(e)] == kLower) {
        const int i = int(e / n2_), j = n1_ + int(e % n2_);
        const double c = cost_[std::size_t(e)] + pi_[i] - pi_[j];
        if (c < best) {
          best = c;
          in_arc_ = e;
          found = true;
        }
      }
      if (--cnt == 0) {
        if (found) {
          next_arc_ = e + 1 == real_ ? 0 : e + 1;
          return true;
        }
        cnt = block_;
      }
    }
    if (found) next_arc_ = in_arc_;
    return found;
  }

  void find_join() {
    int u = src(in_arc_), v = tgt(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v])
        u = parent_[u];
      else
        v = parent_[v];
    }
    join_ = u;
  }

  void find_leaving() {
    // The entering arc is always at its lower bound here.
    const int first = src(in_arc_), second = tgt(in_arc_);
    delta_ = kInfFlow;
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      const double d = pred_dir_[u] == kDown ? kInfFlow : flow_[std::size_t(pred_[u])];
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      const double d = pred_dir_[u] == kUp ? kInfFlow : flow_[std::size_t(pred_[u])];
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
  }

  void change_flow() {
    if (delta_ > 0.0) {
      const double val = delta_;
      flow_[std::size_t(in_arc_)] += val;
      for (int u = src(in_arc_); u != join_; u = parent_[u]) flow_[std::size_t(pred_[u])] -= pred_dir_[u] * val;
      for (int u = tgt(in_arc_); u != join_; u = parent_[u]) flow_[std::size_t(pred_[u])] += pred_dir_[u] * val;
    }
    state_[std::size_t(in_arc_)] = kTree;
    const std::size_t out = std::size_t(pred_[u_out_]);
    flow_[out] = 0.0;
    state_[out] = kLower;
  }

  void update_tree() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
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
      const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
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
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
      succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;
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
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[std::size_t(in_arc_)];
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  int n1_, n2_, nodes_, root_;
  std::int64_t real_ = 0, all_ = 0, block_ = 10, next_arc_ = 0;
  std::vector<double> cost_, flow_;
  std::vector<std::int8_t> state_;
  std::vector<int> art_src_, art_tgt_;
  double art_cost_ = 0.0, eps_ = 0.0;

  std::vector<double> supply_, pi_;
  std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_, dirty_revs_;
  std::vector<std::int64_t> pred_;

  std::int64_t in_arc_ = 0;
  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0;
};

}  // namespace

TransportSolution solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  const Eigen::MatrixXd& cost) {
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("solve_transport: empty marginal");
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw InvalidArgument("solve_transport: cost matrix shape does not match the marginals");
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any() || !a.allFinite() || !b.allFinite())
    throw InvalidArgument("solve_transport: marginals must be finite and nonnegative");
  if (!cost.allFinite() || (cost.array() < 0.0).any())
    throw InvalidArgument("solve_transport: costs must be finite and nonnegative");
  const double ta = a.sum(), tb = b.sum();
  if (std::abs(ta - tb) > 1e-12 * std::max({1.0, ta, tb}))
    throw InvalidArgument("solve_transport: marginals have different total mass");
  Simplex s(a, b, cost);
  const long long pivots = s.run();
  TransportSolution out = s.result(ta);
  out.pivots = pivots;
  return out;
}

}  // namespace occlab
