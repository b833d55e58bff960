#ifndef DSC_FACTORIZE_HPP
#define DSC_FACTORIZE_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsc/cluster.hpp"
#include "dsc/gauss_model.hpp"

namespace dsc {

/// One directed link candidate between clusters: conditioning cluster k's
/// bridge variables P_k support cluster l's bridge variables Q_l.
struct LinkEdge {
    int from = 0;
    int to = 0;
    double cost_bits = 0.0;     // Delta D*(P_k, Q_l), <= 0
    std::vector<int> p_set;     // subset of cluster `from`
    std::vector<int> q_set;     // subset of cluster `to`
};

/// Complete directed graph over the clusters; edge (k,l) carries the best
/// achievable KLD benefit of linking l to k. Generally cost(k,l) != cost(l,k).
struct LinkGraph {
    int n_clusters = 0;
    std::vector<LinkEdge> edges; // ordered (k,l), k ascending then l ascending

    const LinkEdge& edge(int from, int to) const;
};

/// Minimum-cost rooted spanning arborescence.
struct Arborescence {
    int root = 0;
    std::vector<std::pair<int, int>> edges; // (from, to), sorted
    double total_cost = 0.0;
};

/// One factor p(u_A | u_B) of a constrained chain rule expansion.
struct CcreFactor {
    std::vector<int> a_set; // sorted
    std::vector<int> b_set; // sorted

    std::vector<int> scope() const; // sorted union
};

struct Ccre {
    std::vector<CcreFactor> factors;
};

/// Best bridge subsets between two disjoint clusters: exhaustive scan over
/// subsets of size min(A,|cluster_k|) x min(B,|cluster_l|), minimizing
/// Delta D*(P, Q) = Delta D(P u Q) - Delta D(P) - Delta D(Q).
/// Ties resolve to the lexicographically smallest subset pair.
LinkEdge link_cost(const CovarianceModel& model, std::span<const int> cluster_k,
                   std::span<const int> cluster_l, int a_cap, int b_cap);

LinkGraph build_link_graph(const CovarianceModel& model, const ClusterPlan& plan,
                           int a_cap, int b_cap);

/// Chu-Liu/Edmonds over every candidate root; returns the cheapest
/// arborescence (ties -> lowest root id).
Arborescence mdst(const LinkGraph& graph);

/// Depth-first traversal of the arborescence (children ascending) emitting
/// the factorization: p(u_root_cluster), then per tree edge k->l the link
/// factor p(u_Q | u_P) and the residual factor p(u_{cluster_l \ Q} | u_Q)
/// (dropped when empty). The result is a symmetric CCRE.
Ccre build_factorization(const ClusterPlan& plan, const LinkGraph& graph,
                         const Arborescence& tree);

/// Validates the CCRE conditions (disjointness, coverage, causal
/// conditioning, symmetry) plus the factor-size and factor-count bounds;
/// throws ValidationError naming the first violated invariant.
void validate_ccre(const Ccre& ccre, int n_sources, int max_factor_size);

/// D(p || p_hat) in bits: -1/2 log2 |R| + sum_m Delta D(S_m, B_m).
double factorization_kld(const CovarianceModel& model, const Ccre& ccre);

std::string factor_graph_dot(const Ccre& ccre);

} // namespace dsc

#endif
