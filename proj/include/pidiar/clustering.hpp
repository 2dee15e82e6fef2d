#pragma once

#include "pidiar/scoring.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pidiar {

// Directed sparse affinity graph. Row i lists its out-edges sorted by target
// vertex; `weight` is w_ij and `transition` is p_ij = w_ij / sum_j w_ij.
class AffinityGraph {
public:
    struct Edge {
        int target;
        double weight;
        double transition;
    };

    AffinityGraph() = default;
    // Graph from an explicit weight matrix (diagonal ignored). Every nonzero
    // off-diagonal entry is an edge. Rows without edges stay all-zero in P.
    static AffinityGraph from_weights(const Eigen::MatrixXd &W);

    int size() const { return static_cast<int>(rows_.size()); }
    int neighbors() const { return k_; }
    const std::vector<Edge> &out_edges(int i) const { return rows_[static_cast<std::size_t>(i)]; }
    const std::vector<int> &in_neighbors(int i) const { return in_[static_cast<std::size_t>(i)]; }

    Eigen::MatrixXd weights() const;
    Eigen::MatrixXd transitions() const;

private:
    friend AffinityGraph build_knn_graph(const SimilarityMatrix &, int, double, double);
    void finalize();

    int k_ = 0;
    std::vector<std::vector<Edge>> rows_;
    std::vector<std::vector<int>> in_;
};

// Row i keeps sigmoid weights of its K most similar other vertices (ties to
// the lower index). All-zero rows get a uniform transition row over those K.
AffinityGraph build_knn_graph(const SimilarityMatrix &scores, int K, double sigmoid_scale = 1.0,
                              double sigmoid_offset = 0.0);

// Cluster labels plus member lists, canonical form: cluster ids are numbered
// by their smallest member and member lists are sorted.
class Partition {
public:
    Partition() = default;
    static Partition from_labels(const std::vector<int> &labels);
    static Partition from_clusters(const std::vector<std::vector<int>> &clusters, int size);

    int size() const { return static_cast<int>(labels_.size()); }
    int num_clusters() const { return static_cast<int>(clusters_.size()); }
    const std::vector<int> &labels() const { return labels_; }
    const std::vector<std::vector<int>> &clusters() const { return clusters_; }

    friend bool operator==(const Partition &, const Partition &) = default;

private:
    std::vector<int> labels_;
    std::vector<std::vector<int>> clusters_;
};

// Sums of damped transition-probability products over paths restricted to a
// vertex set, computed from (I - z P_C) x = b by fixed-point iteration.
// Members must be sorted and unique.
class PathIntegralSolver {
public:
    PathIntegralSolver(const AffinityGraph &graph, double z);

    double z() const { return z_; }
    // (1/|C|^2) 1^T (I - z P_C)^{-1} 1
    double path_integral(const std::vector<int> &members);
    // (1/|A|^2) 1_A^T (I - z P_U)^{-1} 1_A with U = union, A a subset of U.
    double conditional(const std::vector<int> &subset, const std::vector<int> &union_members);
    // Incremental path integral affinity. Exactly 0 unless edges run
    // in both directions between a and b.
    double affinity(const std::vector<int> &a, const std::vector<int> &b);
    // Same, with the path integrals of a and b supplied by the caller.
    double affinity(const std::vector<int> &a, const std::vector<int> &b, double integral_a, double integral_b);

    bool linked(const std::vector<int> &a, const std::vector<int> &b) const;

private:
    double solve_sum(const std::vector<int> &members, const std::vector<int> &rhs_members);

    const AffinityGraph &graph_;
    double z_;
    int max_iterations_;
    std::vector<int> local_;
    std::vector<int> mark_;
};

double path_integral(const AffinityGraph &graph, const std::vector<int> &members, double z);
double conditional_path_integral(const AffinityGraph &graph, const std::vector<int> &subset,
                                 const std::vector<int> &union_members, double z);
double affinity(const AffinityGraph &graph, const std::vector<int> &a, const std::vector<int> &b, double z);

// Weakly connected components of the directed 1-nearest-neighbor graph
// (each vertex points at its highest-weight out-neighbor).
Partition init_partition(const AffinityGraph &graph);

struct PICParams {
    double z = 0.01;
    int K = 30;
    int target_clusters = 1;
};

struct MergeStep {
    int cluster_a; // smallest vertex of the first cluster
    int cluster_b; // smallest vertex of the second cluster, cluster_a < cluster_b
    double affinity;
};

struct PicResult {
    Partition partition;
    std::vector<MergeStep> merges;
    std::optional<std::string> warning;
};

// Greedy agglomeration from init_partition: merge the pair with maximum
// affinity (ties to the lexicographically smallest id pair) until
// target_clusters remain. When no pair has positive affinity the two
// clusters with the smallest ids merge. Never splits.
PicResult pic_cluster(const AffinityGraph &graph, const PICParams &params);

struct AhcStop {
    std::optional<double> threshold;
    std::optional<int> num_clusters;

    static AhcStop at_threshold(double t) { return {t, std::nullopt}; }
    static AhcStop at_count(int n) { return {std::nullopt, n}; }
};

// Average-linkage agglomeration on similarity scores (higher = closer).
// Stops when the best linkage falls below the threshold or the count is
// reached, whichever comes first.
Partition ahc_cluster(const SimilarityMatrix &scores, const AhcStop &stop);
int estimate_num_speakers(const SimilarityMatrix &scores, double threshold);

// Midpoint between the mean same-label and mean different-label off-diagonal
// scores. Throws when either population is empty.
double calibrate_threshold(const SimilarityMatrix &scores, const std::vector<int> &labels);

} // namespace pidiar
