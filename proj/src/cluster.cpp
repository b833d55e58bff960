#include "dsc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dsc/errors.hpp"

namespace dsc {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

std::vector<int> sorted_union(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

double delta_kld_cluster(const CovarianceModel& model, std::span<const int> set) {
    if (set.empty())
        throw NumericalError("delta_kld_cluster: empty set");
    return 0.5 * model.log_det_submatrix(set) / kLog2;
}

double delta_kld_merge(const CovarianceModel& model, std::span<const int> set_k,
                       std::span<const int> set_l) {
    for (int i : set_k)
        if (std::find(set_l.begin(), set_l.end(), i) != set_l.end())
            throw NumericalError("delta_kld_merge: sets overlap");
    const std::vector<int> joined = sorted_union(set_k, set_l);
    return delta_kld_cluster(model, joined) - delta_kld_cluster(model, set_k) -
           delta_kld_cluster(model, set_l);
}

Dendrogram build_dendrogram(const CovarianceModel& model) {
    const int n = model.size();
    Dendrogram out;
    out.n_leaves = n;

    struct Live {
        std::vector<int> members; // sorted source ids
        double benefit_bits;      // Delta D(members, empty)
    };
    std::map<int, Live> live; // cluster id -> state, key order gives ties
    for (int i = 0; i < n; ++i)
        live.emplace(i, Live{{i}, delta_kld_cluster(model, std::vector<int>{i})});

    // Candidate cache: (k, l) with k < l -> differential benefit in bits.
    std::map<std::pair<int, int>, double> cand;
    auto add_candidates = [&](int id) {
        const Live& a = live.at(id);
        for (const auto& [other, b] : live) {
            if (other == id)
                continue;
            const auto key = std::minmax(id, other);
            const std::vector<int> joined = sorted_union(a.members, b.members);
            cand[{key.first, key.second}] =
                delta_kld_cluster(model, joined) - a.benefit_bits - b.benefit_bits;
        }
    };
    for (int i = 0; i < n; ++i) {
        const Live& a = live.at(i);
        for (int j = i + 1; j < n; ++j) {
            const Live& b = live.at(j);
            const std::vector<int> joined = sorted_union(a.members, b.members);
            cand[{i, j}] = delta_kld_cluster(model, joined) - a.benefit_bits - b.benefit_bits;
        }
    }

    for (int t = 0; static_cast<int>(live.size()) > 1; ++t) {
        // Most negative differential benefit; std::map order breaks ties on
        // the lowest (k, l) pair.
        auto best = cand.end();
        double best_val = std::numeric_limits<double>::infinity();
        for (auto it = cand.begin(); it != cand.end(); ++it) {
            if (it->second < best_val) {
                best_val = it->second;
                best = it;
            }
        }
        const auto [k, l] = best->first;
        const int id = n + t;

        Live merged;
        merged.members = sorted_union(live.at(k).members, live.at(l).members);
        merged.benefit_bits = delta_kld_cluster(model, merged.members);
        out.merges.push_back({k, l, id, best_val});

        live.erase(k);
        live.erase(l);
        for (auto it = cand.begin(); it != cand.end();) {
            if (it->first.first == k || it->first.second == k || it->first.first == l ||
                it->first.second == l)
                it = cand.erase(it);
            else
                ++it;
        }
        live.emplace(id, std::move(merged));
        add_candidates(id);
    }
    return out;
}

namespace {

struct TreeIndex {
    std::vector<int> left, right, leaf_count; // indexed by node id, -1 for leaves
};

TreeIndex index_tree(const Dendrogram& d) {
    const int total = d.n_leaves + static_cast<int>(d.merges.size());
    TreeIndex t;
    t.left.assign(static_cast<std::size_t>(total), -1);
    t.right.assign(static_cast<std::size_t>(total), -1);
    t.leaf_count.assign(static_cast<std::size_t>(total), 1);
    for (const auto& m : d.merges) {
        t.left[static_cast<std::size_t>(m.id)] = m.left;
        t.right[static_cast<std::size_t>(m.id)] = m.right;
        t.leaf_count[static_cast<std::size_t>(m.id)] =
            t.leaf_count[static_cast<std::size_t>(m.left)] +
            t.leaf_count[static_cast<std::size_t>(m.right)];
    }
    return t;
}

void collect_leaves(const TreeIndex& t, int id, std::vector<int>& out) {
    if (t.left[static_cast<std::size_t>(id)] < 0) {
        out.push_back(id);
        return;
    }
    collect_leaves(t, t.left[static_cast<std::size_t>(id)], out);
    collect_leaves(t, t.right[static_cast<std::size_t>(id)], out);
}

} // namespace

ClusterPlan prune(const Dendrogram& dendrogram, const CovarianceModel& model, int max_size) {
    if (max_size < 1)
        throw NumericalError("prune: max cluster size must be >= 1");
    if (dendrogram.n_leaves < 1)
        throw NumericalError("prune: empty dendrogram");
    const TreeIndex tree = index_tree(dendrogram);

    ClusterPlan plan;
    plan.max_size = max_size;

    auto cut = [&](int id) {
        std::vector<int> leaves;
        collect_leaves(tree, id, leaves);
        std::sort(leaves.begin(), leaves.end());
        plan.clusters.push_back(std::move(leaves));
    };

    // Depth-first descent; a subtree is cut as soon as it fits.
    std::vector<int> stack{dendrogram.root_id()};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (tree.leaf_count[static_cast<std::size_t>(id)] <= max_size) {
            cut(id);
            continue;
        }
        const int l = tree.left[static_cast<std::size_t>(id)];
        const int r = tree.right[static_cast<std::size_t>(id)];
        // Push right first so the left branch is explored first.
        stack.push_back(r);
        stack.push_back(l);
    }

    double kld = -delta_kld_cluster(model, [&] {
        std::vector<int> all(static_cast<std::size_t>(model.size()));
        for (int i = 0; i < model.size(); ++i)
            all[static_cast<std::size_t>(i)] = i;
        return all;
    }());
    for (const auto& c : plan.clusters)
        kld += delta_kld_cluster(model, c);
    plan.kld_bits = kld;
    return plan;
}

std::string dendrogram_dot(const Dendrogram& dendrogram, const CovarianceModel& model) {
    const TreeIndex tree = index_tree(dendrogram);
    std::ostringstream os;
    os << "digraph dendrogram {\n";
    os << "  rankdir=BT;\n";
    os << "  node [fontsize=10];\n";
    for (int i = 0; i < dendrogram.n_leaves; ++i)
        os << "  n" << i << " [shape=circle, label=\"u" << i << "\"];\n";
    for (const auto& m : dendrogram.merges) {
        std::vector<int> leaves;
        collect_leaves(tree, m.id, leaves);
        std::sort(leaves.begin(), leaves.end());
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f",
                      std::abs(delta_kld_cluster(model, leaves)));
        os << "  n" << m.id << " [shape=box, label=\"" << buf << " bit\"];\n";
        os << "  n" << m.left << " -> n" << m.id << ";\n";
        os << "  n" << m.right << " -> n" << m.id << ";\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace dsc
