#include "vortex/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vortex {

WeightedPoints WeightedPoints::empirical(const std::vector<Vec2>& pts) {
    WeightedPoints w;
    w.dim = 2;
    w.coords.reserve(2 * pts.size());
    for (const auto& p : pts) {
        w.coords.push_back(p.x1);
        w.coords.push_back(p.x2);
    }
    w.weights.assign(pts.size(), pts.empty() ? 0.0 : 1.0 / static_cast<double>(pts.size()));
    return w;
}

WeightedPoints WeightedPoints::empirical(int dim, std::vector<double> coords) {
    if (dim < 1 || coords.size() % static_cast<std::size_t>(dim) != 0) throw std::invalid_argument("bad coordinate array");
    WeightedPoints w;
    w.dim = dim;
    std::size_t n = coords.size() / static_cast<std::size_t>(dim);
    w.coords = std::move(coords);
    w.weights.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
    return w;
}

void WeightedPoints::validate() const {
    if (dim < 1 || coords.size() != weights.size() * static_cast<std::size_t>(dim))
        throw std::invalid_argument("weighted points: coordinate count does not match weights");
    if (weights.empty()) throw std::invalid_argument("weighted points: empty");
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("weighted points: negative weight");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("weighted points: weights must sum to 1");
}

WeightedPoints quantize(const GridField& rho, int side) {
    std::vector<double> m = cell_masses(rho, side);
    double total = 0.0;
    for (double v : m) {
        if (v < -1e-12) throw std::invalid_argument("quantize: negative cell mass");
        total += std::max(v, 0.0);
    }
    if (!(total > 0.0)) throw std::invalid_argument("quantize: zero mass");
    WeightedPoints w;
    w.dim = 2;
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b) {
            w.coords.push_back(-0.5 + (a + 0.5) / side);
            w.coords.push_back(-0.5 + (b + 0.5) / side);
            w.weights.push_back(std::max(m[static_cast<std::size_t>(a * side + b)], 0.0) / total);
        }
    return w;
}

WeightedPoints product(const WeightedPoints& a, const WeightedPoints& b) {
    WeightedPoints p;
    p.dim = a.dim + b.dim;
    p.coords.reserve(a.size() * b.size() * static_cast<std::size_t>(p.dim));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            p.coords.insert(p.coords.end(), a.atom(i), a.atom(i) + a.dim);
            p.coords.insert(p.coords.end(), b.atom(j), b.atom(j) + b.dim);
            p.weights.push_back(a.weights[i] * b.weights[j]);
        }
    return p;
}

namespace {

constexpr double kMassScale = 1099511627776.0;  // 2^40

std::vector<int64_t> integer_masses(const std::vector<double>& w) {
    // largest-remainder rounding to a total of exactly 2^40
    std::vector<int64_t> q(w.size());
    std::vector<double> frac(w.size());
    int64_t total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double x = w[i] * kMassScale;
        q[i] = static_cast<int64_t>(std::floor(x));
        frac[i] = x - static_cast<double>(q[i]);
        total += q[i];
    }
    int64_t rest = static_cast<int64_t>(kMassScale) - total;
    std::vector<std::size_t> idx(w.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; rest > 0; k = (k + 1) % idx.size(), --rest) ++q[idx[k]];
    for (std::size_t k = idx.size(); rest < 0; ++rest) {
        k = k == 0 ? idx.size() - 1 : k - 1;
        if (q[idx[k]] > 0) --q[idx[k]]; else ++rest;
    }
    return q;
}

std::vector<double> cost_matrix(const WeightedPoints& a, const WeightedPoints& b) {
    std::vector<double> c(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i * b.size() + j] = torus_dist2(a.atom(i), b.atom(j), a.dim);
    return c;
}

// Primal network simplex on the complete bipartite graph sources -> sinks, with one
// artificial arc per node to a root.  Tree bookkeeping (thread, rev_thread, succ_num,
// last_succ) follows the usual spanning-tree representation.
class NetworkSimplex {
public:
    NetworkSimplex(int n, int m, const std::vector<double>& cost, const std::vector<int64_t>& supply,
                   const std::vector<int64_t>& demand)
        : n_(n), m_(m), nodes_(n + m), root_(n + m), arcs_(static_cast<int64_t>(n) * m), C_(cost) {
        const int all_nodes = nodes_ + 1;
        parent_.assign(static_cast<std::size_t>(all_nodes), -1);
        pred_.assign(static_cast<std::size_t>(all_nodes), -1);
        thread_.assign(static_cast<std::size_t>(all_nodes), 0);
        rev_thread_.assign(static_cast<std::size_t>(all_nodes), 0);
        succ_num_.assign(static_cast<std::size_t>(all_nodes), 0);
        last_succ_.assign(static_cast<std::size_t>(all_nodes), 0);
        pred_dir_.assign(static_cast<std::size_t>(all_nodes), 0);
        pi_.assign(static_cast<std::size_t>(all_nodes), 0.0);
        state_.assign(static_cast<std::size_t>(arcs_), kLower);
        flow_.assign(static_cast<std::size_t>(arcs_) + static_cast<std::size_t>(nodes_), 0);
        art_src_.assign(static_cast<std::size_t>(nodes_), 0);
        art_tgt_.assign(static_cast<std::size_t>(nodes_), 0);
        art_cost_.assign(static_cast<std::size_t>(nodes_), 0.0);

        double maxc = 0.0;
        for (double c : C_) maxc = std::max(maxc, c);
        const double art = (maxc + 1.0) * nodes_;
        eps_ = 1e-12 * art;

        parent_[root_] = -1;
        pred_[root_] = -1;
        thread_[root_] = 0;
        rev_thread_[0] = root_;
        succ_num_[root_] = all_nodes;
        last_succ_[root_] = root_ - 1;
        pi_[root_] = 0.0;
        for (int u = 0; u < nodes_; ++u) {
            int64_t e = arcs_ + u;
            parent_[u] = root_;
            pred_[u] = e;
            thread_[u] = u + 1;
            rev_thread_[u + 1] = u;
            succ_num_[u] = 1;
            last_succ_[u] = u;
            int64_t s = u < n_ ? supply[static_cast<std::size_t>(u)] : -demand[static_cast<std::size_t>(u - n_)];
            if (s >= 0) {
                pred_dir_[u] = kUp;
                pi_[u] = 0.0;
                art_src_[u] = u;
                art_tgt_[u] = root_;
                flow_[static_cast<std::size_t>(e)] = s;
                art_cost_[u] = 0.0;
            } else {
                pred_dir_[u] = kDown;
                pi_[u] = art;
                art_src_[u] = root_;
                art_tgt_[u] = u;
                flow_[static_cast<std::size_t>(e)] = -s;
                art_cost_[u] = art;
            }
        }
        block_ = std::max<int64_t>(static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(arcs_)))), 10);
    }

    long run() {
        long pivots = 0;
        while (find_entering_arc()) {
            find_join_node();
            bool change = find_leaving_arc();
            change_flow(change);
            if (change) {
                update_tree_structure();
                update_potential();
            }
            ++pivots;
        }
        for (int u = 0; u < nodes_; ++u)
            if (flow_[static_cast<std::size_t>(arcs_ + u)] != 0) throw std::logic_error("network simplex: infeasible residual on artificial arc");
        return pivots;
    }

    int64_t flow(int i, int j) const { return flow_[static_cast<std::size_t>(static_cast<int64_t>(i) * m_ + j)]; }
    bool in_tree(int64_t e) const { return state_[static_cast<std::size_t>(e)] == kTree; }
    double potential(int u) const { return pi_[static_cast<std::size_t>(u)]; }
    /// Tree arcs that are real arcs.
    std::vector<int64_t> tree_arcs() const {
        std::vector<int64_t> out;
        for (int u = 0; u < nodes_; ++u)
            if (pred_[u] < arcs_) out.push_back(pred_[u]);
        return out;
    }

private:
    static constexpr int8_t kLower = 1, kTree = 0;
    static constexpr int kUp = 1, kDown = -1;
    static constexpr int64_t kInf = std::numeric_limits<int64_t>::max();

    int n_, m_, nodes_, root_;
    int64_t arcs_;
    const std::vector<double>& C_;
    std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
    std::vector<int64_t> pred_;
    std::vector<double> pi_;
    std::vector<int8_t> state_;
    std::vector<int64_t> flow_;
    std::vector<int> art_src_, art_tgt_;
    std::vector<double> art_cost_;
    std::vector<int> dirty_revs_;
    double eps_ = 0.0;
    int64_t block_ = 10;
    int64_t next_arc_ = 0;

    int64_t in_arc_ = -1;
    int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
    int64_t delta_ = 0;

    int source(int64_t e) const { return e < arcs_ ? static_cast<int>(e / m_) : art_src_[static_cast<std::size_t>(e - arcs_)]; }
    int target(int64_t e) const {
        return e < arcs_ ? n_ + static_cast<int>(e % m_) : art_tgt_[static_cast<std::size_t>(e - arcs_)];
    }
    double cost(int64_t e) const { return e < arcs_ ? C_[static_cast<std::size_t>(e)] : art_cost_[static_cast<std::size_t>(e - arcs_)]; }
    int state(int64_t e) const { return e < arcs_ ? state_[static_cast<std::size_t>(e)] : kTree; }

    // Block search over the real arcs.
    bool find_entering_arc() {
        double best = -eps_;
        int64_t cnt = block_;
        int64_t found = -1;
        auto scan = [&](int64_t from, int64_t to) -> bool {
            int64_t e = from;
            int i = static_cast<int>(from / m_), j = static_cast<int>(from % m_);
            for (; e < to; ++e) {
                if (state_[static_cast<std::size_t>(e)] == kLower) {
                    double c = C_[static_cast<std::size_t>(e)] + pi_[static_cast<std::size_t>(i)] - pi_[static_cast<std::size_t>(n_ + j)];
                    if (c < best) {
                        best = c;
                        found = e;
                    }
                }
                if (++j == m_) {
                    j = 0;
                    ++i;
                }
                if (--cnt == 0) {
                    if (found >= 0) {
                        next_arc_ = e + 1 == arcs_ ? 0 : e + 1;
                        return true;
                    }
                    cnt = block_;
                }
            }
            return false;
        };
        if (scan(next_arc_, arcs_) || scan(0, next_arc_)) {
            in_arc_ = found;
            return true;
        }
        if (found < 0) return false;
        in_arc_ = found;
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
        int first = source(in_arc_), second = target(in_arc_);  // entering arcs are at lower bound
        delta_ = kInf;
        int result = 0;
        for (int u = first; u != join_; u = parent_[u]) {
            int64_t d = pred_dir_[u] == kUp ? flow_[static_cast<std::size_t>(pred_[u])] : kInf;
            if (d < delta_) {
                delta_ = d;
                u_out_ = u;
                result = 1;
            }
        }
        for (int u = second; u != join_; u = parent_[u]) {
            int64_t d = pred_dir_[u] == kDown ? flow_[static_cast<std::size_t>(pred_[u])] : kInf;
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
        if (result == 0) throw std::logic_error("network simplex: unbounded cycle");
        return true;
    }

    void change_flow(bool change) {
        if (delta_ > 0) {
            int64_t val = delta_;
            flow_[static_cast<std::size_t>(in_arc_)] += val;
            for (int u = source(in_arc_); u != join_; u = parent_[u]) flow_[static_cast<std::size_t>(pred_[u])] -= pred_dir_[u] * val;
            for (int u = target(in_arc_); u != join_; u = parent_[u]) flow_[static_cast<std::size_t>(pred_[u])] += pred_dir_[u] * val;
        }
        if (change) {
            state_[static_cast<std::size_t>(in_arc_)] = kTree;
            int64_t out = pred_[u_out_];
            if (out < arcs_) state_[static_cast<std::size_t>(out)] = kLower;
        }
    }

    void update_tree_structure() {
        int old_rev_thread = rev_thread_[u_out_];
        int old_succ_num = succ_num_[u_out_];
        int old_last_succ = last_succ_[u_out_];
        v_out_ = parent_[u_out_];

        if (u_in_ == u_out_) {
            parent_[u_in_] = v_in_;
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
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
            int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
            int stem = u_in_;
            int par_stem = v_in_;
            int next_stem;
            int last = last_succ_[u_in_];
            int before, after = thread_[last];
            thread_[v_in_] = u_in_;
            dirty_revs_.clear();
            dirty_revs_.push_back(v_in_);
            while (stem != u_out_) {
                next_stem = parent_[stem];
                thread_[last] = next_stem;
                dirty_revs_.push_back(last);
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
            for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

            int tmp_sc = 0, tmp_ls = last_succ_[u_out_];
            for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
                pred_[u] = pred_[p];
                pred_dir_[u] = -pred_dir_[p];
                tmp_sc += succ_num_[u] - succ_num_[p];
                succ_num_[u] = tmp_sc;
                last_succ_[p] = tmp_ls;
            }
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
            succ_num_[u_in_] = old_succ_num;
        }

        int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
        int last_succ_out = last_succ_[u_out_];
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
        double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost(in_arc_);
        int end = thread_[last_succ_[u_in_]];
        for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
    }
};

void check_pair(const WeightedPoints& a, const WeightedPoints& b) {
    a.validate();
    b.validate();
    if (a.dim != b.dim) throw std::invalid_argument("transport: dimension mismatch");
}

}  // namespace

ExactTransport w2_exact(const WeightedPoints& a, const WeightedPoints& b) {
    check_pair(a, b);
    if (a.size() > kExactMaxSupport || b.size() > kExactMaxSupport)
        throw std::invalid_argument("exact transport limited to " + std::to_string(kExactMaxSupport) + " atoms per side");
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    std::vector<double> C = cost_matrix(a, b);
    std::vector<int64_t> sa = integer_masses(a.weights), sb = integer_masses(b.weights);
    NetworkSimplex ns(n, m, C, sa, sb);

    ExactTransport r;
    r.pivots = ns.run();
    double cost = 0.0;
    for (int64_t e : ns.tree_arcs()) {
        int i = static_cast<int>(e / m), j = static_cast<int>(e % m);
        int64_t f = ns.flow(i, j);
        if (f == 0) continue;
        double mass = static_cast<double>(f) / kMassScale;
        r.plan.push_back({i, j, mass});
        cost += mass * C[static_cast<std::size_t>(e)];
    }
    std::sort(r.plan.begin(), r.plan.end(), [](const auto& x, const auto& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
    r.cost = cost;
    r.w2 = std::sqrt(std::max(cost, 0.0));

    // Dual certificate: u from the tree potentials, v as its c-transform (feasible).
    r.u.resize(a.size());
    r.v.assign(b.size(), std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) r.u[static_cast<std::size_t>(i)] = -ns.potential(i);
    double shift = *std::min_element(r.u.begin(), r.u.end());
    for (double& x : r.u) x -= shift;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            r.v[static_cast<std::size_t>(j)] = std::min(r.v[static_cast<std::size_t>(j)], C[static_cast<std::size_t>(i) * m + j] - r.u[static_cast<std::size_t>(i)]);
    return r;
}

namespace {

double logsumexp(const double* x, std::size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, x[i]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - mx);
    return mx + std::log(s);
}

struct SinkhornOut {
    std::vector<double> f, g;
    double dual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Log-domain Sinkhorn; symmetric problems use the averaged update.
SinkhornOut sinkhorn(const WeightedPoints& a, const WeightedPoints& b, const std::vector<double>& C, double reg,
                     int max_iters, double tol, bool symmetric) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> la(n), lb(m);
    for (std::size_t i = 0; i < n; ++i) la[i] = a.weights[i] > 0 ? std::log(a.weights[i]) : -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) lb[j] = b.weights[j] > 0 ? std::log(b.weights[j]) : -std::numeric_limits<double>::infinity();
    SinkhornOut o;
    o.f.assign(n, 0.0);
    o.g.assign(m, 0.0);
    std::vector<double> buf(std::max(n, m));
    for (int it = 1; it <= max_iters; ++it) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) buf[j] = lb[j] + (o.g[j] - C[i * m + j]) / reg;
            double fi = -reg * logsumexp(buf.data(), m);
            if (symmetric) fi = 0.5 * (fi + o.f[i]);
            change = std::max(change, std::abs(fi - o.f[i]));
            o.f[i] = fi;
        }
        if (symmetric) {
            o.g = o.f;
        } else {
            for (std::size_t j = 0; j < m; ++j) {
                for (std::size_t i = 0; i < n; ++i) buf[i] = la[i] + (o.f[i] - C[i * m + j]) / reg;
                double gj = -reg * logsumexp(buf.data(), n);
                change = std::max(change, std::abs(gj - o.g[j]));
                o.g[j] = gj;
            }
        }
        o.iterations = it;
        if (change / reg < tol) {
            o.converged = true;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) o.dual += a.weights[i] * o.f[i];
    for (std::size_t j = 0; j < m; ++j) o.dual += b.weights[j] * o.g[j];
    return o;
}

}  // namespace

EntropicTransport w2_entropic(const WeightedPoints& a, const WeightedPoints& b, double reg, int max_iters, double tol) {
    check_pair(a, b);
    if (!(reg > 0.0)) throw std::invalid_argument("entropic regularization must be positive");
    std::vector<double> cab = cost_matrix(a, b), caa = cost_matrix(a, a), cbb = cost_matrix(b, b);
    SinkhornOut ab = sinkhorn(a, b, cab, reg, max_iters, tol, false);
    SinkhornOut aa = sinkhorn(a, a, caa, reg, max_iters, tol, true);
    SinkhornOut bb = sinkhorn(b, b, cbb, reg, max_iters, tol, true);
    EntropicTransport r;
    r.reg = reg;
    r.iterations = ab.iterations;
    r.converged = ab.converged && aa.converged && bb.converged;
    const std::size_t m = b.size();
    double pc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double c = cab[i * m + j];
            pc += a.weights[i] * b.weights[j] * std::exp((ab.f[i] + ab.g[j] - c) / reg) * c;
        }
    r.plan_cost = pc;
    double s = ab.dual - 0.5 * (aa.dual + bb.dual);
    r.w2 = std::sqrt(std::max(s, 0.0));
    r.note = "debiased Sinkhorn divergence at reg " + std::to_string(reg) +
             "; converges to W2^2 as reg -> 0, residual blur of order reg remains";
    return r;
}

W2Method parse_w2_method(const std::string& s) {
    if (s == "exact") return W2Method::Exact;
    if (s == "entropic") return W2Method::Entropic;
    throw std::invalid_argument("w2 method must be exact or entropic, got '" + s + "'");
}

double wasserstein2_torus(const WeightedPoints& a, const WeightedPoints& b, W2Method method, double reg) {
    if (method == W2Method::Exact) return w2_exact(a, b).w2;
    return w2_entropic(a, b, reg).w2;
}

double wasserstein2_torus(const GridField& a, const GridField& b, int side, W2Method method) {
    return wasserstein2_torus(quantize(a, side), quantize(b, side), method);
}

}  // namespace vortex
