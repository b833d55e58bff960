#ifndef DSC_CLUSTER_HPP
#define DSC_CLUSTER_HPP

#include <span>
#include <string>
#include <vector>

#include "dsc/gauss_model.hpp"

namespace dsc {

/// One agglomerative merge: child cluster ids and the differential KLD
/// benefit (bits, <= 0) of joining them. Leaves are 0..N-1; the merge at
/// step t creates id N+t.
struct DendrogramMerge {
    int left;
    int right;
    int id;
    double delta_bits;
};

struct Dendrogram {
    int n_leaves = 0;
    std::vector<DendrogramMerge> merges; // exactly N-1 entries

    int root_id() const { return n_leaves + static_cast<int>(merges.size()) - 1; }
};

/// Disjoint source clusters of bounded size covering all sources, plus the
/// KLD (bits) of the pure-cluster product approximation.
struct ClusterPlan {
    std::vector<std::vector<int>> clusters; // each sorted ascending
    int max_size = 0;
    double kld_bits = 0.0;
};

/// Delta D(set, empty) = 0.5 * log2 |R_set| in bits; <= 0 for correlation
/// models, 0 for singletons.
double delta_kld_cluster(const CovarianceModel& model, std::span<const int> set);

/// Differential benefit of merging two disjoint clusters:
/// Delta D(k u l) - Delta D(k) - Delta D(l); always <= 0.
double delta_kld_merge(const CovarianceModel& model, std::span<const int> set_k,
                       std::span<const int> set_l);

/// Greedy agglomeration: repeatedly merges the pair with the largest
/// |Delta D'| (ties broken on the lexicographically smallest id pair) until
/// a single cluster remains. Per-cluster log-determinants are cached so
/// each candidate costs one new factorization.
Dendrogram build_dendrogram(const CovarianceModel& model);

/// Top-down pruning: descending from the root, any subtree with at most
/// `max_size` leaves is cut and becomes a cluster (both children may be cut
/// at the same branch); clusters are labeled in cut order.
ClusterPlan prune(const Dendrogram& dendrogram, const CovarianceModel& model, int max_size);

/// GraphViz rendering of the merge tree; internal nodes carry the cluster
/// KLD benefit |Delta D(cluster)| in bits.
std::string dendrogram_dot(const Dendrogram& dendrogram, const CovarianceModel& model);

} // namespace dsc

#endif
