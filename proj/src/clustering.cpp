#include "pidiar/clustering.hpp"
#include "pidiar/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace pidiar {

// ─── Graph ──────────────────────────────────────────────────────────────────

void AffinityGraph::finalize() {
    in_.assign(rows_.size(), {});
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        auto &row = rows_[i];
        std::sort(row.begin(), row.end(), [](const Edge &a, const Edge &b) { return a.target < b.target; });
        double sum = 0.0;
        for (const auto &e : row) sum += e.weight;
        for (auto &e : row) {
            if (sum > 0.0) {
                e.transition = e.weight / sum;
            } else {
                e.transition = 1.0 / static_cast<double>(row.size());
            }
            in_[static_cast<std::size_t>(e.target)].push_back(static_cast<int>(i));
        }
    }
}

AffinityGraph AffinityGraph::from_weights(const Eigen::MatrixXd &W) {
    if (W.rows() != W.cols()) throw std::invalid_argument("weight matrix must be square");
    if ((W.array() < 0.0).any()) throw std::invalid_argument("edge weights must be non-negative");
    AffinityGraph g;
    g.rows_.resize(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        for (Eigen::Index j = 0; j < W.cols(); ++j) {
            if (i != j && W(i, j) > 0.0) g.rows_[static_cast<std::size_t>(i)].push_back({static_cast<int>(j), W(i, j), 0.0});
        }
        g.k_ = std::max(g.k_, static_cast<int>(g.rows_[static_cast<std::size_t>(i)].size()));
    }
    g.finalize();
    return g;
}

Eigen::MatrixXd AffinityGraph::weights() const {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(size(), size());
    for (int i = 0; i < size(); ++i)
        for (const auto &e : out_edges(i)) W(i, e.target) = e.weight;
    return W;
}

Eigen::MatrixXd AffinityGraph::transitions() const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(size(), size());
    for (int i = 0; i < size(); ++i)
        for (const auto &e : out_edges(i)) P(i, e.target) = e.transition;
    return P;
}

AffinityGraph build_knn_graph(const SimilarityMatrix &scores, int K, double sigmoid_scale, double sigmoid_offset) {
    const auto N = static_cast<int>(scores.size());
    if (N < 2) throw std::invalid_argument("k-NN graph needs at least two vertices");
    if (K < 1 || K > N - 1) throw std::invalid_argument("K must be in [1, N-1]");
    if (!(sigmoid_scale > 0.0)) throw std::invalid_argument("sigmoid scale must be positive");
    const Eigen::MatrixXd &S = scores.scores;

    AffinityGraph g;
    g.k_ = K;
    g.rows_.resize(static_cast<std::size_t>(N));
    std::vector<int> order(static_cast<std::size_t>(N - 1));
    for (int i = 0; i < N; ++i) {
        std::size_t n = 0;
        for (int j = 0; j < N; ++j)
            if (j != i) order[n++] = j;
        std::partial_sort(order.begin(), order.begin() + K, order.end(), [&](int a, int b) {
            if (S(i, a) != S(i, b)) return S(i, a) > S(i, b);
            return a < b;
        });
        auto &row = g.rows_[static_cast<std::size_t>(i)];
        for (int k = 0; k < K; ++k) {
            const int j = order[static_cast<std::size_t>(k)];
            const double w = 1.0 / (1.0 + std::exp(-sigmoid_scale * (S(i, j) - sigmoid_offset)));
            row.push_back({j, w, 0.0});
        }
    }
    g.finalize();
    return g;
}

// ─── Partition ──────────────────────────────────────────────────────────────

Partition Partition::from_labels(const std::vector<int> &labels) {
    Partition p;
    std::map<int, int> remap;
    p.labels_.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(p.clusters_.size()));
        if (inserted) p.clusters_.emplace_back();
        p.labels_[i] = it->second;
        p.clusters_[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
    }
    return p;
}

Partition Partition::from_clusters(const std::vector<std::vector<int>> &clusters, int size) {
    std::vector<int> labels(static_cast<std::size_t>(size), -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        if (clusters[c].empty()) throw std::invalid_argument("clusters must be non-empty");
        for (int v : clusters[c]) {
            if (v < 0 || v >= size || labels[static_cast<std::size_t>(v)] != -1)
                throw std::invalid_argument("clusters must be disjoint and within range");
            labels[static_cast<std::size_t>(v)] = static_cast<int>(c);
        }
    }
    if (std::find(labels.begin(), labels.end(), -1) != labels.end())
        throw std::invalid_argument("clusters must cover every vertex");
    return from_labels(labels);
}

// ─── Path integrals ─────────────────────────────────────────────────────────

PathIntegralSolver::PathIntegralSolver(const AffinityGraph &graph, double z)
    : graph_(graph), z_(z), local_(static_cast<std::size_t>(graph.size()), -1),
      mark_(static_cast<std::size_t>(graph.size()), 0) {
    if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("damping factor z must be in (0, 1)");
    // ||z P_C||_inf <= z, so the tail after n steps is below z^(n+1) / (1 - z).
    max_iterations_ = static_cast<int>(std::ceil(std::log(1e-17 * (1.0 - z)) / std::log(z))) + 1;
}

double PathIntegralSolver::solve_sum(const std::vector<int> &members, const std::vector<int> &rhs_members) {
    const std::size_t n = members.size();
    for (std::size_t k = 0; k < n; ++k) local_[static_cast<std::size_t>(members[k])] = static_cast<int>(k);

    std::vector<std::size_t> row_start(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> probs;
    for (std::size_t k = 0; k < n; ++k) {
        for (const auto &e : graph_.out_edges(members[k])) {
            const int j = local_[static_cast<std::size_t>(e.target)];
            if (j >= 0) {
                cols.push_back(j);
                probs.push_back(z_ * e.transition);
            }
        }
        row_start[k + 1] = cols.size();
    }

    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (int v : rhs_members) {
        const int j = local_[static_cast<std::size_t>(v)];
        if (j < 0) throw std::invalid_argument("path integral subset is not inside the vertex set");
        b(j) = 1.0;
    }
    for (int v : members) local_[static_cast<std::size_t>(v)] = -1;

    Eigen::VectorXd x = b;
    Eigen::VectorXd next(static_cast<Eigen::Index>(n));
    for (int it = 0; it < max_iterations_; ++it) {
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t e = row_start[k]; e < row_start[k + 1]; ++e) s += probs[e] * x(cols[e]);
            next(static_cast<Eigen::Index>(k)) = b(static_cast<Eigen::Index>(k)) + s;
        }
        const bool unchanged = next == x;
        x.swap(next);
        if (unchanged) break;
    }

    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (b(static_cast<Eigen::Index>(k)) != 0.0) total += x(static_cast<Eigen::Index>(k));
    if (!std::isfinite(total)) throw NumericalError("path integral solve diverged");
    return total;
}

double PathIntegralSolver::path_integral(const std::vector<int> &members) {
    if (members.empty()) throw std::invalid_argument("path integral of an empty cluster");
    const double n = static_cast<double>(members.size());
    return solve_sum(members, members) / (n * n);
}

double PathIntegralSolver::conditional(const std::vector<int> &subset, const std::vector<int> &union_members) {
    if (subset.empty()) throw std::invalid_argument("conditional path integral of an empty cluster");
    const double n = static_cast<double>(subset.size());
    return solve_sum(union_members, subset) / (n * n);
}

bool PathIntegralSolver::linked(const std::vector<int> &a, const std::vector<int> &b) const {
    auto any_edge = [&](const std::vector<int> &from, const std::vector<int> &to) {
        for (int v : to) const_cast<std::vector<int> &>(mark_)[static_cast<std::size_t>(v)] = 1;
        bool found = false;
        for (int v : from) {
            for (const auto &e : graph_.out_edges(v)) {
                if (mark_[static_cast<std::size_t>(e.target)]) {
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
        for (int v : to) const_cast<std::vector<int> &>(mark_)[static_cast<std::size_t>(v)] = 0;
        return found;
    };
    return any_edge(a, b) && any_edge(b, a);
}

double PathIntegralSolver::affinity(const std::vector<int> &a, const std::vector<int> &b) {
    if (!linked(a, b)) return 0.0;
    return affinity(a, b, path_integral(a), path_integral(b));
}

double PathIntegralSolver::affinity(const std::vector<int> &a, const std::vector<int> &b, double integral_a,
                                    double integral_b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("affinity needs two non-empty clusters");
    // Paths leaving a cluster and returning need edges both ways.
    if (!linked(a, b)) return 0.0;
    std::vector<int> u;
    u.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
    if (std::adjacent_find(u.begin(), u.end()) != u.end()) throw std::invalid_argument("affinity clusters must be disjoint");
    const double inc_a = conditional(a, u) - integral_a;
    const double inc_b = conditional(b, u) - integral_b;
    return inc_a + inc_b;
}

double path_integral(const AffinityGraph &graph, const std::vector<int> &members, double z) {
    return PathIntegralSolver(graph, z).path_integral(members);
}

double conditional_path_integral(const AffinityGraph &graph, const std::vector<int> &subset,
                                 const std::vector<int> &union_members, double z) {
    return PathIntegralSolver(graph, z).conditional(subset, union_members);
}

double affinity(const AffinityGraph &graph, const std::vector<int> &a, const std::vector<int> &b, double z) {
    return PathIntegralSolver(graph, z).affinity(a, b);
}

// ─── Initialization ─────────────────────────────────────────────────────────

namespace {

int find_root(std::vector<int> &parent, int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
        parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        v = parent[static_cast<std::size_t>(v)];
    }
    return v;
}

} // namespace

Partition init_partition(const AffinityGraph &graph) {
    const int N = graph.size();
    std::vector<int> parent(static_cast<std::size_t>(N));
    std::iota(parent.begin(), parent.end(), 0);
    for (int i = 0; i < N; ++i) {
        const auto &row = graph.out_edges(i);
        if (row.empty()) continue;
        const AffinityGraph::Edge *best = &row.front();
        for (const auto &e : row)
            if (e.weight > best->weight) best = &e;
        int ra = find_root(parent, i);
        int rb = find_root(parent, best->target);
        if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
    std::vector<int> labels(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) labels[static_cast<std::size_t>(i)] = find_root(parent, i);
    return Partition::from_labels(labels);
}

// ─── Path integral clustering ───────────────────────────────────────────────

PicResult pic_cluster(const AffinityGraph &graph, const PICParams &params) {
    if (params.target_clusters < 1) throw std::invalid_argument("target cluster count must be >= 1");
    PicResult result;
    result.partition = init_partition(graph);
    const int initial = result.partition.num_clusters();
    if (initial <= params.target_clusters) {
        if (initial < params.target_clusters)
            result.warning = "requested " + std::to_string(params.target_clusters) + " clusters but initialization gives " +
                             std::to_string(initial) + "; path integral clustering only merges";
        return result;
    }

    PathIntegralSolver solver(graph, params.z);
    const int N = graph.size();

    // Slot order equals cluster-id order and survives merges (survivor = lower slot).
    std::vector<std::vector<int>> members = result.partition.clusters();
    std::vector<double> integral(members.size());
    std::vector<char> alive(members.size(), 1);
    std::vector<int> slot_of(static_cast<std::size_t>(N));
    for (std::size_t s = 0; s < members.size(); ++s) {
        integral[s] = solver.path_integral(members[s]);
        for (int v : members[s]) slot_of[static_cast<std::size_t>(v)] = static_cast<int>(s);
    }

    std::map<std::pair<int, int>, double> table;
    auto linked_slots = [&](int s) {
        std::vector<int> out, in;
        for (int v : members[static_cast<std::size_t>(s)]) {
            for (const auto &e : graph.out_edges(v)) out.push_back(slot_of[static_cast<std::size_t>(e.target)]);
            for (int u : graph.in_neighbors(v)) in.push_back(slot_of[static_cast<std::size_t>(u)]);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        std::sort(in.begin(), in.end());
        in.erase(std::unique(in.begin(), in.end()), in.end());
        std::vector<int> both;
        std::set_intersection(out.begin(), out.end(), in.begin(), in.end(), std::back_inserter(both));
        both.erase(std::remove(both.begin(), both.end(), s), both.end());
        return both;
    };
    auto refresh = [&](int s) {
        for (int t : linked_slots(s)) {
            const int lo = std::min(s, t), hi = std::max(s, t);
            table[{lo, hi}] = solver.affinity(members[static_cast<std::size_t>(lo)], members[static_cast<std::size_t>(hi)],
                                              integral[static_cast<std::size_t>(lo)], integral[static_cast<std::size_t>(hi)]);
        }
    };
    for (std::size_t s = 0; s < members.size(); ++s) {
        for (int t : linked_slots(static_cast<int>(s))) {
            if (t > static_cast<int>(s))
                table[{static_cast<int>(s), t}] =
                    solver.affinity(members[s], members[static_cast<std::size_t>(t)], integral[s], integral[static_cast<std::size_t>(t)]);
        }
    }

    int count = initial;
    while (count > params.target_clusters) {
        std::pair<int, int> pick{-1, -1};
        double best = 0.0;
        for (const auto &[key, value] : table) {
            if (value > best) {
                best = value;
                pick = key;
            }
        }
        if (pick.first < 0) {
            // Every affinity is zero: merge the two smallest ids.
            int first = -1;
            for (std::size_t s = 0; s < alive.size(); ++s) {
                if (!alive[s]) continue;
                if (first < 0) {
                    first = static_cast<int>(s);
                } else {
                    pick = {first, static_cast<int>(s)};
                    break;
                }
            }
            best = 0.0;
            if (!result.warning)
                result.warning = "no cluster pair has positive affinity; merged the clusters with the smallest ids";
        }
        const auto [s, t] = pick;
        auto &ms = members[static_cast<std::size_t>(s)];
        auto &mt = members[static_cast<std::size_t>(t)];
        result.merges.push_back({ms.front(), mt.front(), best});

        std::vector<int> merged;
        merged.reserve(ms.size() + mt.size());
        std::merge(ms.begin(), ms.end(), mt.begin(), mt.end(), std::back_inserter(merged));
        ms = std::move(merged);
        mt.clear();
        alive[static_cast<std::size_t>(t)] = 0;
        for (int v : ms) slot_of[static_cast<std::size_t>(v)] = s;
        integral[static_cast<std::size_t>(s)] = solver.path_integral(ms);
        --count;

        for (auto it = table.begin(); it != table.end();) {
            const auto &k = it->first;
            if (k.first == s || k.second == s || k.first == t || k.second == t) {
                it = table.erase(it);
            } else {
                ++it;
            }
        }
        if (count > params.target_clusters) refresh(s);
    }

    std::vector<std::vector<int>> final_clusters;
    for (std::size_t s = 0; s < members.size(); ++s)
        if (alive[s]) final_clusters.push_back(std::move(members[s]));
    result.partition = Partition::from_clusters(final_clusters, N);
    return result;
}

// ─── Average-linkage AHC ────────────────────────────────────────────────────

Partition ahc_cluster(const SimilarityMatrix &scores, const AhcStop &stop) {
    const auto N = static_cast<int>(scores.size());
    if (N < 1) throw std::invalid_argument("AHC needs at least one item");
    if (stop.num_clusters && *stop.num_clusters < 1) throw std::invalid_argument("AHC cluster count must be >= 1");
    if (!stop.threshold && !stop.num_clusters) throw std::invalid_argument("AHC needs a threshold or a cluster count");

    Eigen::MatrixXd link = scores.scores;
    std::vector<int> size(static_cast<std::size_t>(N), 1);
    std::vector<char> alive(static_cast<std::size_t>(N), 1);
    std::vector<int> parent(static_cast<std::size_t>(N));
    std::iota(parent.begin(), parent.end(), 0);
    // best[i]: most similar other live cluster (ties to the lower index).
    std::vector<int> best(static_cast<std::size_t>(N), -1);

    auto recompute = [&](int i) {
        int arg = -1;
        for (int j = 0; j < N; ++j) {
            if (j == i || !alive[static_cast<std::size_t>(j)]) continue;
            if (arg < 0 || link(i, j) > link(i, arg)) arg = j;
        }
        best[static_cast<std::size_t>(i)] = arg;
    };
    for (int i = 0; i < N; ++i) recompute(i);

    int count = N;
    while (count > 1) {
        if (stop.num_clusters && count <= *stop.num_clusters) break;
        int bi = -1, bj = -1;
        double bv = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < N; ++i) {
            if (!alive[static_cast<std::size_t>(i)]) continue;
            const int j = best[static_cast<std::size_t>(i)];
            const double v = link(i, j);
            const int lo = std::min(i, j), hi = std::max(i, j);
            if (bi < 0 || v > bv || (v == bv && std::make_pair(lo, hi) < std::make_pair(bi, bj))) {
                bv = v;
                bi = lo;
                bj = hi;
            }
        }
        if (stop.threshold && bv < *stop.threshold) break;

        // Merge bj into bi (Lance-Williams update for average linkage).
        const double na = size[static_cast<std::size_t>(bi)], nb = size[static_cast<std::size_t>(bj)];
        for (int k = 0; k < N; ++k) {
            if (!alive[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
            const double v = (na * link(bi, k) + nb * link(bj, k)) / (na + nb);
            link(bi, k) = v;
            link(k, bi) = v;
        }
        size[static_cast<std::size_t>(bi)] += size[static_cast<std::size_t>(bj)];
        alive[static_cast<std::size_t>(bj)] = 0;
        parent[static_cast<std::size_t>(bj)] = bi;
        --count;

        for (int k = 0; k < N; ++k) {
            if (!alive[static_cast<std::size_t>(k)]) continue;
            const int bk = best[static_cast<std::size_t>(k)];
            if (k == bi || bk == bi || bk == bj) {
                recompute(k);
            } else if (link(k, bi) > link(k, bk) || (link(k, bi) == link(k, bk) && bi < bk)) {
                best[static_cast<std::size_t>(k)] = bi;
            }
        }
    }

    std::vector<int> labels(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        int r = i;
        while (parent[static_cast<std::size_t>(r)] != r) r = parent[static_cast<std::size_t>(r)];
        labels[static_cast<std::size_t>(i)] = r;
    }
    return Partition::from_labels(labels);
}

int estimate_num_speakers(const SimilarityMatrix &scores, double threshold) {
    return ahc_cluster(scores, AhcStop::at_threshold(threshold)).num_clusters();
}

double calibrate_threshold(const SimilarityMatrix &scores, const std::vector<int> &labels) {
    const Eigen::Index N = scores.size();
    if (static_cast<Eigen::Index>(labels.size()) != N) throw std::invalid_argument("label count differs from matrix size");
    double within = 0.0, across = 0.0;
    double nw = 0.0, na = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
            if (i == j) continue;
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                within += scores.scores(i, j);
                nw += 1.0;
            } else {
                across += scores.scores(i, j);
                na += 1.0;
            }
        }
    }
    if (nw == 0.0 || na == 0.0) throw std::invalid_argument("calibration needs same- and different-label pairs");
    return 0.5 * (within / nw + across / na);
}

} // namespace pidiar
