#include "dsc/factorize.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "dsc/errors.hpp"

namespace dsc {

namespace {

// All sorted subsets of `pool` with exactly `size` elements, lexicographic.
std::vector<std::vector<int>> subsets_of_size(std::span<const int> pool, int size) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (static_cast<int>(current.size()) == size) {
            out.push_back(current);
            return;
        }
        for (std::size_t i = start; i < pool.size(); ++i) {
            current.push_back(pool[i]);
            self(self, i + 1);
            current.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

std::vector<int> sorted_union(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

const LinkEdge& LinkGraph::edge(int from, int to) const {
    // Edges are stored for all ordered pairs, k-major.
    const int idx = from * (n_clusters - 1) + (to > from ? to - 1 : to);
    return edges[static_cast<std::size_t>(idx)];
}

std::vector<int> CcreFactor::scope() const {
    return sorted_union(a_set, b_set);
}

LinkEdge link_cost(const CovarianceModel& model, std::span<const int> cluster_k,
                   std::span<const int> cluster_l, int a_cap, int b_cap) {
    if (cluster_k.empty() || cluster_l.empty())
        throw NumericalError("link_cost: empty cluster");
    if (a_cap < 1 || b_cap < 1)
        throw NumericalError("link_cost: subset caps must be >= 1");
    for (int i : cluster_k)
        if (std::find(cluster_l.begin(), cluster_l.end(), i) != cluster_l.end())
            throw NumericalError("link_cost: clusters overlap");

    const int a_size = std::min<int>(a_cap, static_cast<int>(cluster_k.size()));
    const int b_size = std::min<int>(b_cap, static_cast<int>(cluster_l.size()));

    LinkEdge best;
    best.cost_bits = std::numeric_limits<double>::infinity();
    for (const auto& p : subsets_of_size(cluster_k, a_size)) {
        const double dp = delta_kld_cluster(model, p);
        for (const auto& q : subsets_of_size(cluster_l, b_size)) {
            const double cost =
                delta_kld_cluster(model, sorted_union(p, q)) - dp - delta_kld_cluster(model, q);
            if (cost < best.cost_bits) {
                best.cost_bits = cost;
                best.p_set = p;
                best.q_set = q;
            }
        }
    }
    return best;
}

LinkGraph build_link_graph(const CovarianceModel& model, const ClusterPlan& plan,
                           int a_cap, int b_cap) {
    LinkGraph g;
    g.n_clusters = static_cast<int>(plan.clusters.size());
    for (int k = 0; k < g.n_clusters; ++k) {
        for (int l = 0; l < g.n_clusters; ++l) {
            if (k == l)
                continue;
            LinkEdge e = link_cost(model, plan.clusters[static_cast<std::size_t>(k)],
                                   plan.clusters[static_cast<std::size_t>(l)], a_cap, b_cap);
            e.from = k;
            e.to = l;
            g.edges.push_back(std::move(e));
        }
    }
    return g;
}

namespace {

struct FlatEdge {
    int from;
    int to;
    double w;
    int orig; // index into LinkGraph::edges; ties resolve to the lowest
};

// Chu-Liu/Edmonds for a fixed root; returns original edge ids of the
// minimum arborescence. Recursive cycle contraction.
std::vector<int> edmonds(int n, int root, const std::vector<FlatEdge>& edges) {
    std::vector<int> in_edge(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const FlatEdge& e = edges[i];
        if (e.to == root || e.from == e.to)
            continue;
        const int cur = in_edge[static_cast<std::size_t>(e.to)];
        if (cur < 0)
            in_edge[static_cast<std::size_t>(e.to)] = static_cast<int>(i);
        else {
            const FlatEdge& c = edges[static_cast<std::size_t>(cur)];
            if (e.w < c.w || (e.w == c.w && e.orig < c.orig))
                in_edge[static_cast<std::size_t>(e.to)] = static_cast<int>(i);
        }
    }
    for (int v = 0; v < n; ++v)
        if (v != root && in_edge[static_cast<std::size_t>(v)] < 0)
            throw NumericalError("mdst: graph not connected to root");

    // Cycle detection among the selected edges.
    std::vector<int> color(static_cast<std::size_t>(n), 0);
    std::vector<int> cycle;
    for (int v = 0; v < n && cycle.empty(); ++v) {
        if (color[static_cast<std::size_t>(v)] != 0)
            continue;
        int u = v;
        std::vector<int> path;
        while (u != root && color[static_cast<std::size_t>(u)] == 0) {
            color[static_cast<std::size_t>(u)] = 1;
            path.push_back(u);
            u = edges[static_cast<std::size_t>(in_edge[static_cast<std::size_t>(u)])].from;
        }
        if (u != root && color[static_cast<std::size_t>(u)] == 1) {
            // Walked into the fresh path again: extract the cycle.
            auto it = std::find(path.begin(), path.end(), u);
            cycle.assign(it, path.end());
        }
        for (int p : path)
            color[static_cast<std::size_t>(p)] = 2;
    }

    if (cycle.empty()) {
        std::vector<int> out;
        for (int v = 0; v < n; ++v)
            if (v != root)
                out.push_back(edges[static_cast<std::size_t>(in_edge[static_cast<std::size_t>(v)])].orig);
        return out;
    }

    // Contract the cycle into a supernode and recurse on adjusted costs.
    std::vector<char> in_cycle(static_cast<std::size_t>(n), 0);
    for (int v : cycle)
        in_cycle[static_cast<std::size_t>(v)] = 1;
    std::vector<int> remap(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int v = 0; v < n; ++v)
        if (!in_cycle[static_cast<std::size_t>(v)])
            remap[static_cast<std::size_t>(v)] = next++;
    const int super = next++;
    for (int v : cycle)
        remap[static_cast<std::size_t>(v)] = super;

    std::vector<FlatEdge> contracted;
    // For edges entering the cycle remember which cycle edge they displace.
    std::vector<int> displaced; // aligned with contracted
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const FlatEdge& e = edges[i];
        const int cf = remap[static_cast<std::size_t>(e.from)];
        const int ct = remap[static_cast<std::size_t>(e.to)];
        if (cf == ct)
            continue;
        FlatEdge ne{cf, ct, e.w, e.orig};
        int disp = -1;
        if (ct == super) {
            const int cyc_in = in_edge[static_cast<std::size_t>(e.to)];
            ne.w -= edges[static_cast<std::size_t>(cyc_in)].w;
            disp = cyc_in;
        }
        contracted.push_back(ne);
        displaced.push_back(disp);
    }

    const std::vector<int> sub = edmonds(next, remap[static_cast<std::size_t>(root)], contracted);

    // Expand: keep the recursion's edges plus all cycle in-edges except the
    // one displaced by the edge chosen to enter the supernode.
    std::vector<int> result(sub);
    int displaced_cycle_edge = -1;
    for (std::size_t i = 0; i < contracted.size(); ++i) {
        if (contracted[i].to != super)
            continue;
        if (std::find(sub.begin(), sub.end(), contracted[i].orig) != sub.end()) {
            displaced_cycle_edge = displaced[i];
            break;
        }
    }
    for (int v : cycle) {
        const int ce = in_edge[static_cast<std::size_t>(v)];
        if (ce != displaced_cycle_edge)
            result.push_back(edges[static_cast<std::size_t>(ce)].orig);
    }
    return result;
}

} // namespace

Arborescence mdst(const LinkGraph& graph) {
    const int n = graph.n_clusters;
    if (n < 1)
        throw NumericalError("mdst: empty graph");

    std::vector<FlatEdge> flat;
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const LinkEdge& e = graph.edges[i];
        flat.push_back({e.from, e.to, e.cost_bits, static_cast<int>(i)});
    }

    Arborescence best;
    best.total_cost = std::numeric_limits<double>::infinity();
    best.root = -1;
    for (int root = 0; root < n; ++root) {
        const std::vector<int> chosen = edmonds(n, root, flat);
        double total = 0.0;
        for (int id : chosen)
            total += graph.edges[static_cast<std::size_t>(id)].cost_bits;
        if (total < best.total_cost) {
            best.total_cost = total;
            best.root = root;
            best.edges.clear();
            for (int id : chosen)
                best.edges.emplace_back(graph.edges[static_cast<std::size_t>(id)].from,
                                        graph.edges[static_cast<std::size_t>(id)].to);
        }
    }
    std::sort(best.edges.begin(), best.edges.end());
    return best;
}

Ccre build_factorization(const ClusterPlan& plan, const LinkGraph& graph,
                         const Arborescence& tree) {
    const int n_clusters = static_cast<int>(plan.clusters.size());
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n_clusters));
    std::vector<char> seen(static_cast<std::size_t>(n_clusters), 0);
    for (const auto& [from, to] : tree.edges)
        children[static_cast<std::size_t>(from)].push_back(to);
    for (auto& c : children)
        std::sort(c.begin(), c.end());

    Ccre ccre;
    ccre.factors.push_back({plan.clusters[static_cast<std::size_t>(tree.root)], {}});
    seen[static_cast<std::size_t>(tree.root)] = 1;

    // Pre-order walk; children in ascending cluster id.
    std::vector<int> stack{tree.root};
    while (!stack.empty()) {
        const int k = stack.back();
        stack.pop_back();
        for (auto it = children[static_cast<std::size_t>(k)].rbegin();
             it != children[static_cast<std::size_t>(k)].rend(); ++it)
            stack.push_back(*it);
        if (k != tree.root) {
            // Find the tree edge parent -> k.
            int parent = -1;
            for (const auto& [from, to] : tree.edges)
                if (to == k)
                    parent = from;
            const LinkEdge& e = graph.edge(parent, k);
            ccre.factors.push_back({e.q_set, e.p_set});
            std::vector<int> residual;
            std::set_difference(plan.clusters[static_cast<std::size_t>(k)].begin(),
                                plan.clusters[static_cast<std::size_t>(k)].end(),
                                e.q_set.begin(), e.q_set.end(), std::back_inserter(residual));
            if (!residual.empty())
                ccre.factors.push_back({std::move(residual), e.q_set});
            seen[static_cast<std::size_t>(k)] = 1;
        }
    }
    for (char s : seen)
        if (!s)
            throw NumericalError("build_factorization: tree does not span all clusters");
    return ccre;
}

void validate_ccre(const Ccre& ccre, int n_sources, int max_factor_size) {
    if (ccre.factors.empty())
        throw ValidationError("ccre: no factors");
    if (static_cast<int>(ccre.factors.size()) > 2 * n_sources + 1)
        throw ValidationError("ccre: factor count exceeds 2N+1");

    std::set<int> covered;
    std::vector<std::set<int>> scopes;
    for (std::size_t m = 0; m < ccre.factors.size(); ++m) {
        const CcreFactor& f = ccre.factors[m];
        if (f.a_set.empty())
            throw ValidationError("ccre: factor with empty A set");
        for (int i : f.a_set)
            if (std::find(f.b_set.begin(), f.b_set.end(), i) != f.b_set.end())
                throw ValidationError("ccre: A and B overlap in factor " + std::to_string(m));
        if (m == 0 && !f.b_set.empty())
            throw ValidationError("ccre: first factor must have empty B");
        // Causal conditioning: B_m inside the union of earlier A sets.
        for (int i : f.b_set)
            if (!covered.count(i))
                throw ValidationError("ccre: conditioning variable " + std::to_string(i) +
                                      " not covered by earlier factors");
        // Symmetry: B_m inside a single earlier scope.
        if (!f.b_set.empty()) {
            bool ok = false;
            for (const auto& s : scopes) {
                bool all = true;
                for (int i : f.b_set)
                    all = all && s.count(i) > 0;
                if (all) {
                    ok = true;
                    break;
                }
            }
            if (!ok)
                throw ValidationError("ccre: not symmetric, B of factor " + std::to_string(m) +
                                      " splits across earlier factors");
        }
        const std::vector<int> s = f.scope();
        if (max_factor_size > 0 && static_cast<int>(s.size()) > max_factor_size)
            throw ValidationError("ccre: factor " + std::to_string(m) + " exceeds size bound");
        scopes.emplace_back(s.begin(), s.end());
        covered.insert(f.a_set.begin(), f.a_set.end());
    }
    for (int i = 0; i < n_sources; ++i)
        if (!covered.count(i))
            throw ValidationError("ccre: source " + std::to_string(i) + " not covered");
    if (static_cast<int>(covered.size()) != n_sources)
        throw ValidationError("ccre: covers unknown sources");
}

double factorization_kld(const CovarianceModel& model, const Ccre& ccre) {
    std::vector<int> all(static_cast<std::size_t>(model.size()));
    for (int i = 0; i < model.size(); ++i)
        all[static_cast<std::size_t>(i)] = i;
    double bits = -delta_kld_cluster(model, all);
    for (const CcreFactor& f : ccre.factors) {
        bits += delta_kld_cluster(model, f.scope());
        if (!f.b_set.empty())
            bits -= delta_kld_cluster(model, f.b_set);
    }
    return bits;
}

std::string factor_graph_dot(const Ccre& ccre) {
    std::ostringstream os;
    os << "graph factorgraph {\n";
    os << "  node [fontsize=10];\n";
    std::set<int> vars;
    for (const auto& f : ccre.factors)
        for (int v : f.scope())
            vars.insert(v);
    for (int v : vars)
        os << "  u" << v << " [shape=circle];\n";
    for (std::size_t m = 0; m < ccre.factors.size(); ++m) {
        os << "  f" << m << " [shape=box, label=\"f" << m << "\"];\n";
        for (int v : ccre.factors[m].scope())
            os << "  f" << m << " -- u" << v << ";\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace dsc
