#pragma once

#include "pidiar/annotation.hpp"
#include "pidiar/clustering.hpp"
#include "pidiar/container.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("pidiar_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string &name) const { return (path_ / name).string(); }
    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline Eigen::MatrixXd random_matrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64 &rng, Eigen::Index d, double ridge = 0.5) {
    const Eigen::MatrixXd a = random_matrix(rng, d, d);
    return a * a.transpose() / static_cast<double>(d) + ridge * Eigen::MatrixXd::Identity(d, d);
}

// Segments on a 1 ms grid, possibly overlapping, `speakers` labels.
inline pidiar::Annotation random_annotation(std::mt19937_64 &rng, const std::string &rec, int segments, int speakers,
                                            int max_ms = 60000) {
    std::uniform_int_distribution<int> on(0, max_ms), dur(1, 5000), spk(0, speakers - 1);
    pidiar::Annotation a(rec);
    for (int i = 0; i < segments; ++i) {
        a.add(on(rng) / 1000.0, dur(rng) / 1000.0, "spk" + std::to_string(spk(rng)));
    }
    return a;
}

// Random sparse non-negative weight matrix: each row keeps k random
// neighbors with weights in (0.05, 1].
inline Eigen::MatrixXd random_weights(std::mt19937_64 &rng, int n, int k) {
    std::uniform_real_distribution<double> w(0.05, 1.0);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> others;
        for (int j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        std::shuffle(others.begin(), others.end(), rng);
        for (int t = 0; t < k && t < static_cast<int>(others.size()); ++t) W(i, others[static_cast<std::size_t>(t)]) = w(rng);
    }
    return W;
}

inline Eigen::MatrixXd row_normalize(const Eigen::MatrixXd &W) {
    Eigen::MatrixXd P = W;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const double s = P.row(i).sum();
        if (s > 0.0) P.row(i) /= s;
    }
    return P;
}

inline Eigen::MatrixXd restrict(const Eigen::MatrixXd &P, const std::vector<int> &idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = P(idx[a], idx[b]);
    return out;
}

// Sum over every path of length <= max_len that starts in `from` and ends
// in `to`, all vertices inside `inside`, of z^len times the product of
// transition probabilities. Enumerated by extending paths one step at a
// time (path counts are aggregated per end vertex).
inline double path_sum(const Eigen::MatrixXd &P, const std::vector<int> &inside, const std::vector<int> &from,
                       const std::vector<int> &to, double z, int max_len) {
    const int n = static_cast<int>(P.rows());
    std::vector<char> in(static_cast<std::size_t>(n), 0), end(static_cast<std::size_t>(n), 0);
    for (int v : inside) in[static_cast<std::size_t>(v)] = 1;
    for (int v : to) end[static_cast<std::size_t>(v)] = 1;
    std::vector<double> mass(static_cast<std::size_t>(n), 0.0);
    for (int v : from) mass[static_cast<std::size_t>(v)] += 1.0;
    double total = 0.0;
    double damp = 1.0;
    for (int len = 0; len <= max_len; ++len) {
        for (int v = 0; v < n; ++v)
            if (end[static_cast<std::size_t>(v)]) total += damp * mass[static_cast<std::size_t>(v)];
        std::vector<double> next(static_cast<std::size_t>(n), 0.0);
        for (int u = 0; u < n; ++u) {
            if (mass[static_cast<std::size_t>(u)] == 0.0) continue;
            for (int v = 0; v < n; ++v)
                if (in[static_cast<std::size_t>(v)] && P(u, v) != 0.0)
                    next[static_cast<std::size_t>(v)] += mass[static_cast<std::size_t>(u)] * P(u, v);
        }
        mass.swap(next);
        damp *= z;
    }
    return total;
}

// Dense closed forms, used as the recompute-everything reference.
inline double dense_path_integral(const Eigen::MatrixXd &P, const std::vector<int> &c, double z) {
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - z * restrict(P, c);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
    return one.dot(M.fullPivLu().solve(one)) / static_cast<double>(n * n);
}

inline double dense_conditional(const Eigen::MatrixXd &P, const std::vector<int> &a, const std::vector<int> &u, double z) {
    const Eigen::Index n = static_cast<Eigen::Index>(u.size());
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - z * restrict(P, u);
    Eigen::VectorXd ind = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < u.size(); ++k)
        if (std::find(a.begin(), a.end(), u[k]) != a.end()) ind(static_cast<Eigen::Index>(k)) = 1.0;
    const double sa = static_cast<double>(a.size());
    return ind.dot(M.fullPivLu().inverse() * ind) / (sa * sa);
}

inline double dense_affinity(const Eigen::MatrixXd &P, std::vector<int> a, std::vector<int> b, double z) {
    std::vector<int> u = a;
    u.insert(u.end(), b.begin(), b.end());
    std::sort(u.begin(), u.end());
    return dense_conditional(P, a, u, z) - dense_path_integral(P, a, z) + dense_conditional(P, b, u, z) -
           dense_path_integral(P, b, z);
}

// Exact millisecond count of a time on the 1 ms grid, rounded half up to
// the 10 ms frame boundary.
inline long frame_boundary(double t) { return (std::lround(t * 1000.0) + 5) / 10; }

// Per-speaker 10 ms frame activity, speakers in sorted label order.
inline std::vector<std::vector<char>> frame_activity(const pidiar::Annotation &a, long frames) {
    const auto labels = a.speakers();
    std::vector<std::vector<char>> act(labels.size(), std::vector<char>(static_cast<std::size_t>(frames), 0));
    for (const auto &s : a.segments()) {
        const auto i = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), s.speaker) - labels.begin());
        const long b = frame_boundary(s.onset), e = std::min(frames, frame_boundary(s.offset()));
        for (long k = b; k < e; ++k) act[i][static_cast<std::size_t>(k)] = 1;
    }
    return act;
}

// Best total co-occurrence (frames) over every one-to-one partial mapping,
// by enumerating all assignments of reference speakers to hypothesis
// speakers or to nothing.
inline long brute_force_agreement(const pidiar::Annotation &ref, const pidiar::Annotation &hyp) {
    long frames = 0;
    for (const auto *a : {&ref, &hyp})
        for (const auto &s : a->segments()) frames = std::max(frames, frame_boundary(s.offset()));
    const auto r = frame_activity(ref, frames), h = frame_activity(hyp, frames);
    std::vector<std::vector<long>> co(r.size(), std::vector<long>(h.size(), 0));
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < h.size(); ++j)
            for (long k = 0; k < frames; ++k) co[i][j] += r[i][static_cast<std::size_t>(k)] && h[j][static_cast<std::size_t>(k)];
    std::vector<char> used(h.size(), 0);
    long best = 0;
    std::function<void(std::size_t, long)> go = [&](std::size_t i, long acc) {
        if (i == r.size()) {
            best = std::max(best, acc);
            return;
        }
        go(i + 1, acc);
        for (std::size_t j = 0; j < h.size(); ++j) {
            if (used[j]) continue;
            used[j] = 1;
            go(i + 1, acc + co[i][j]);
            used[j] = 0;
        }
    };
    go(0, 0);
    return best;
}

} // namespace testing
