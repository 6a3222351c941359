// Primal network simplex for the dense bipartite transportation problem.
// Spanning tree with parent / thread / successor bookkeeping, an
// artificial root, block-search pricing and the strongly feasible
// leaving-arc rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "lab/error.hpp"
#include "lab/simd/kernels.hpp"
#include "lab/wasserstein.hpp"

namespace lab {

namespace {

constexpr double kUnit = 4503599627370496.0;  // 2^52
constexpr double kCertTol = 1e-10;
constexpr std::int8_t kTree = 0, kLower = 1;
constexpr int kUp = 1, kDown = -1;

std::vector<std::int64_t> integer_masses(const std::vector<double>& w, double total) {
    std::vector<std::int64_t> q(w.size());
    std::int64_t sum = 0;
    std::size_t big = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        q[i] = std::llround(w[i] / total * kUnit);
        sum += q[i];
        if (q[i] > q[big]) big = i;
    }
    q[big] += std::int64_t(kUnit) - sum;
    return q;
}

class Simplex {
  public:
    Simplex(const double* cost, std::size_t n, std::size_t m, const std::vector<std::int64_t>& supply,
            const std::vector<std::int64_t>& demand)
        : cost_(cost), n_(n), m_(m), arcs_(n * m), nodes_(n + m), root_(int(n + m)) {
        const std::size_t N = nodes_ + 1;
        parent_.assign(N, -1);
        pred_.assign(N, -1);
        thread_.assign(N, 0);
        rev_thread_.assign(N, 0);
        succ_num_.assign(N, 0);
        last_succ_.assign(N, 0);
        pred_dir_.assign(N, 0);
        pred_flow_.assign(N, 0);
        pi_.assign(N, 0.0);
        art_src_.assign(nodes_, 0);
        art_tgt_.assign(nodes_, 0);
        state_.assign(arcs_, kLower);

        double max_cost = 0;
        for (std::size_t e = 0; e < arcs_; ++e) max_cost = std::max(max_cost, cost_[e]);
        art_cost_ = (max_cost + 1.0) * double(nodes_);
        price_tol_ = 1e-13 * (max_cost + 1.0);

        parent_[root_] = -1;
        pred_[root_] = -1;
        thread_[root_] = 0;
        rev_thread_[0] = root_;
        succ_num_[root_] = int(N);
        last_succ_[root_] = root_ - 1;
        for (std::size_t u = 0; u < nodes_; ++u) {
            const int ui = int(u);
            parent_[u] = root_;
            pred_[u] = int(arcs_ + u);
            thread_[u] = ui + 1;
            rev_thread_[u + 1] = ui;
            succ_num_[u] = 1;
            last_succ_[u] = ui;
            const std::int64_t s = u < n_ ? supply[u] : -demand[u - n_];
            if (s >= 0) {
                pred_dir_[u] = kUp;
                pi_[u] = 0;
                art_src_[u] = ui;
                art_tgt_[u] = root_;
                pred_flow_[u] = s;
            } else {
                pred_dir_[u] = kDown;
                pi_[u] = art_cost_;
                art_src_[u] = root_;
                art_tgt_[u] = ui;
                pred_flow_[u] = -s;
            }
        }
        block_ = std::max<std::size_t>(std::size_t(std::sqrt(double(arcs_))), 10);
    }

    std::size_t run() {
        std::size_t iters = 0;
        for (;;) {
            while (find_entering()) {
                find_join();
                find_leaving();
                change_flow();
                update_tree();
                update_potential();
                ++iters;
            }
            // potentials drift with many incremental updates; rebuild and re-price
            recompute_potentials();
            if (!find_entering()) break;
        }
        return iters;
    }

    double certificate() const {
        double worst = 0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < m_; ++j)
                worst = std::min(worst, cost_[i * m_ + j] + pi_[i] - pi_[n_ + j]);
        return worst;
    }

    bool artificial_flow() const {
        for (std::size_t u = 0; u < nodes_; ++u)
            if (std::size_t(pred_[u]) >= arcs_ && pred_flow_[u] != 0) return true;
        return false;
    }

    template <class F>
    void for_each_flow(F&& f) const {
        for (std::size_t u = 0; u < nodes_; ++u)
            if (std::size_t(pred_[u]) < arcs_ && pred_flow_[u] != 0) f(std::size_t(pred_[u]), pred_flow_[u]);
    }

  private:
    int source(int e) const { return std::size_t(e) < arcs_ ? int(std::size_t(e) / m_) : art_src_[std::size_t(e) - arcs_]; }
    int target(int e) const {
        return std::size_t(e) < arcs_ ? int(n_ + std::size_t(e) % m_) : art_tgt_[std::size_t(e) - arcs_];
    }
    double cost(int e) const { return std::size_t(e) < arcs_ ? cost_[e] : (art_src_[std::size_t(e) - arcs_] == root_ ? art_cost_ : 0.0); }

    bool find_entering() {
        const auto& k = simd::kernels();
        double best = -price_tol_;
        std::size_t arg = arcs_, scanned = 0;
        for (std::size_t step = 0; step < n_; ++step) {
            const std::size_t i = (next_row_ + step) % n_;
            double b;
            std::size_t bj;
            k.price_row(cost_ + i * m_, state_.data() + i * m_, pi_[i], pi_.data() + n_, m_, &b, &bj);
            scanned += m_;
            if (b < best) {
                best = b;
                arg = i * m_ + bj;
            }
            if (arg < arcs_ && scanned >= block_) {
                next_row_ = (i + 1) % n_;
                break;
            }
        }
        if (arg == arcs_) return false;
        in_arc_ = int(arg);
        return true;
    }

    void find_join() {
        int u = source(in_arc_), v = target(in_arc_);
        while (u != v) {
            if (succ_num_[u] < succ_num_[v]) u = parent_[u];
            else v = parent_[v];
        }
        join_ = u;
    }

    void find_leaving() {
        const int first = source(in_arc_), second = target(in_arc_);
        std::int64_t delta = std::numeric_limits<std::int64_t>::max();
        int result = 0;
        for (int u = first; u != join_; u = parent_[u]) {
            if (pred_dir_[u] != kUp) continue;
            if (pred_flow_[u] < delta) {
                delta = pred_flow_[u];
                u_out_ = u;
                result = 1;
            }
        }
        for (int u = second; u != join_; u = parent_[u]) {
            if (pred_dir_[u] != kDown) continue;
            if (pred_flow_[u] <= delta) {
                delta = pred_flow_[u];
                u_out_ = u;
                result = 2;
            }
        }
        if (result == 0) throw NumericalError("transport problem is unbounded");
        delta_ = delta;
        if (result == 1) {
            u_in_ = first;
            v_in_ = second;
        } else {
            u_in_ = second;
            v_in_ = first;
        }
    }

    void change_flow() {
        if (delta_ > 0) {
            for (int u = source(in_arc_); u != join_; u = parent_[u]) pred_flow_[u] -= pred_dir_[u] * delta_;
            for (int u = target(in_arc_); u != join_; u = parent_[u]) pred_flow_[u] += pred_dir_[u] * delta_;
        }
        state_[std::size_t(in_arc_)] = kTree;
        const int out = pred_[u_out_];
        if (std::size_t(out) < arcs_) state_[std::size_t(out)] = kLower;
    }

    void update_tree() {
        const int old_rev_thread = rev_thread_[u_out_];
        const int old_succ_num = succ_num_[u_out_];
        const int old_last_succ = last_succ_[u_out_];
        const int v_out = parent_[u_out_];

        if (u_in_ == u_out_) {
            parent_[u_in_] = v_in_;
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
            pred_flow_[u_in_] = delta_;
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
            int stem = u_in_, par_stem = v_in_, next_stem;
            int last = last_succ_[u_in_];
            int before, after = thread_[last];
            thread_[v_in_] = u_in_;
            dirty_.clear();
            dirty_.push_back(v_in_);
            while (stem != u_out_) {
                next_stem = parent_[stem];
                thread_[last] = next_stem;
                dirty_.push_back(last);
                before = rev_thread_[stem];
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
            for (int u : dirty_) rev_thread_[thread_[u]] = u;

            int tmp_sc = 0, tmp_ls = last_succ_[u_out_];
            for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
                pred_[u] = pred_[p];
                pred_dir_[u] = -pred_dir_[p];
                pred_flow_[u] = pred_flow_[p];
                tmp_sc += succ_num_[u] - succ_num_[p];
                succ_num_[u] = tmp_sc;
                last_succ_[p] = tmp_ls;
            }
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
            pred_flow_[u_in_] = delta_;
            succ_num_[u_in_] = old_succ_num;
        }

        const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
        const int last_succ_out = last_succ_[u_out_];
        for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;
        if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
            for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = old_rev_thread;
        } else if (last_succ_out != old_last_succ) {
            for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = last_succ_out;
        }
        for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
        for (int u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
    }

    void update_potential() {
        const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost(in_arc_);
        const int end = thread_[last_succ_[u_in_]];
        for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
    }

    void recompute_potentials() {
        pi_[root_] = 0;
        for (int u = thread_[root_]; u != root_; u = thread_[u])
            pi_[u] = pi_[parent_[u]] - pred_dir_[u] * cost(pred_[u]);
    }

    const double* cost_;
    std::size_t n_, m_, arcs_, nodes_;
    int root_;
    double art_cost_ = 0, price_tol_ = 0;
    std::size_t block_ = 10, next_row_ = 0;

    std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
    std::vector<std::int64_t> pred_flow_;
    std::vector<double> pi_;
    std::vector<int> art_src_, art_tgt_;
    std::vector<std::int8_t> state_;
    std::vector<int> dirty_;

    int in_arc_ = -1, join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1;
    std::int64_t delta_ = 0;
};

}  // namespace

TransportResult transport_exact(const std::vector<double>& cost, const std::vector<double>& a,
                                const std::vector<double>& b, std::vector<double>* plan) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0 || m == 0) throw InputError("transport marginals must be nonempty");
    if (cost.size() != n * m) throw InputError("cost matrix shape does not match the marginals");
    double sa = 0, sb = 0;
    for (double v : a) {
        if (!(v >= 0) || !std::isfinite(v)) throw InputError("transport marginals must be finite and nonnegative");
        sa += v;
    }
    for (double v : b) {
        if (!(v >= 0) || !std::isfinite(v)) throw InputError("transport marginals must be finite and nonnegative");
        sb += v;
    }
    if (!(sa > 0) || std::abs(sa - sb) > 1e-9 * std::max(sa, sb))
        throw InputError("transport marginals must carry equal positive mass");
    for (double c : cost)
        if (!(c >= 0) || !std::isfinite(c)) throw InputError("transport costs must be finite and nonnegative");

    // drop empty rows and columns
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] > 0) rows.push_back(i);
    for (std::size_t j = 0; j < m; ++j)
        if (b[j] > 0) cols.push_back(j);
    std::vector<double> ra(rows.size()), cb(cols.size()), c(rows.size() * cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) ra[r] = a[rows[r]];
    for (std::size_t s = 0; s < cols.size(); ++s) cb[s] = b[cols[s]];
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t s = 0; s < cols.size(); ++s) c[r * cols.size() + s] = cost[rows[r] * m + cols[s]];

    Simplex sx(c.data(), rows.size(), cols.size(), integer_masses(ra, sa), integer_masses(cb, sb));
    TransportResult res;
    res.iterations = sx.run();
    if (sx.artificial_flow()) throw NumericalError("transport solve ended with flow on artificial arcs");
    res.certificate = sx.certificate();
    if (res.certificate < -kCertTol)
        throw NumericalError("reduced-cost certificate failed: " + std::to_string(res.certificate));

    std::vector<double> row(n, 0.0), col(m, 0.0);
    if (plan) plan->assign(n * m, 0.0);
    double total = 0;
    sx.for_each_flow([&](std::size_t e, std::int64_t f) {
        const std::size_t i = rows[e / cols.size()], j = cols[e % cols.size()];
        const double mass = double(f) / kUnit * sa;
        total += mass * c[e];
        row[i] += mass;
        col[j] += mass;
        if (plan) (*plan)[i * m + j] += mass;
    });
    res.cost = total / sa;
    double viol = 0;
    for (std::size_t i = 0; i < n; ++i) viol += std::abs(row[i] - a[i]);
    for (std::size_t j = 0; j < m; ++j) viol += std::abs(col[j] - b[j] * sa / sb);
    res.marginal_violation = viol / sa;
    return res;
}

}  // namespace lab
