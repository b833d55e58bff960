#include "dsc/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dsc/errors.hpp"

namespace dsc {

std::vector<std::vector<int>> preimage_sets(const EncoderBank& bank,
                                            std::span<const int> codewords) {
    const std::size_t n = bank.alphabet.size();
    if (bank.assignments.size() != n)
        throw NumericalError("preimage_sets: bank size mismatch");
    if (codewords.size() != n)
        throw NumericalError("preimage_sets: codeword vector length mismatch");

    std::vector<std::vector<int>> allowed(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (bank.assignments[v].has_value()) {
            const IndexAssignment& m = *bank.assignments[v];
            const int w = codewords[v];
            if (w < 0 || w >= m.output_size())
                throw NumericalError("preimage_sets: codeword out of range for source " +
                                     std::to_string(v));
            for (int i = 0; i < m.input_size(); ++i)
                if (m(i) == w)
                    allowed[v].push_back(i);
        } else {
            allowed[v].resize(static_cast<std::size_t>(bank.alphabet[v]));
            for (int i = 0; i < bank.alphabet[v]; ++i)
                allowed[v][static_cast<std::size_t>(i)] = i;
        }
    }
    return allowed;
}

ExactPosteriorResult exact_posterior(const JointPmf& joint, const EncoderBank& bank,
                                     std::span<const int> codewords, int target) {
    const IndexTensor& t = joint.tensor();
    const int target_axis = t.axis_of(target);
    if (target_axis < 0)
        throw NumericalError("exact_posterior: target not in pmf scope");

    // Admissible indices per axis; the target axis runs over everything and
    // gets filtered per l below.
    const std::vector<std::vector<int>> all_sets = preimage_sets(bank, codewords);
    std::vector<const std::vector<int>*> axis_allowed(t.scope.size());
    for (std::size_t a = 0; a < t.scope.size(); ++a)
        axis_allowed[a] = &all_sets[static_cast<std::size_t>(t.scope[a])];

    const auto strides = t.strides();
    const int target_alphabet = t.shape[static_cast<std::size_t>(target_axis)];

    ExactPosteriorResult out;
    out.probs.assign(static_cast<std::size_t>(target_alphabet), 0.0);

    // Odometer over the restricted sets of the non-target axes, ascending,
    // with the target value innermost; this visits admissible tuples in the
    // row-major order of the underlying tensor restricted per axis.
    std::vector<std::size_t> pos(t.scope.size(), 0);
    const std::vector<int>& target_set = *axis_allowed[static_cast<std::size_t>(target_axis)];
    for (;;) {
        std::size_t base = 0;
        for (std::size_t a = 0; a < t.scope.size(); ++a) {
            if (static_cast<int>(a) == target_axis)
                continue;
            base += static_cast<std::size_t>((*axis_allowed[a])[pos[a]]) * strides[a];
        }
        for (int l : target_set) {
            out.probs[static_cast<std::size_t>(l)] +=
                t.values[base +
                         static_cast<std::size_t>(l) * strides[static_cast<std::size_t>(target_axis)]];
            ++out.terms;
        }
        // Advance the odometer, skipping the target axis.
        std::size_t a = t.scope.size();
        bool carried = true;
        while (a-- > 0) {
            if (static_cast<int>(a) == static_cast<int>(target_axis))
                continue;
            if (++pos[a] < axis_allowed[a]->size()) {
                carried = false;
                break;
            }
            pos[a] = 0;
        }
        if (carried)
            break;
    }

    double total = 0.0;
    for (double p : out.probs)
        total += p;
    if (total > 0.0) {
        for (double& p : out.probs)
            p /= total;
    } else {
        // Cannot happen with smoothed PMFs; uniform over feasible values.
        out.fallback = true;
        const double u = 1.0 / static_cast<double>(target_set.size());
        for (int l : target_set)
            out.probs[static_cast<std::size_t>(l)] = u;
    }
    return out;
}

double cme_estimate(std::span<const double> posterior, const ScalarQuantizer& quantizer) {
    if (static_cast<int>(posterior.size()) != quantizer.size())
        throw NumericalError("cme_estimate: posterior length does not match quantizer");
    double estimate = 0.0;
    for (std::size_t l = 0; l < posterior.size(); ++l)
        estimate += quantizer.level(static_cast<int>(l)) * posterior[l];
    return estimate;
}

FactorGraph::FactorGraph(std::vector<int> alphabet_by_source,
                         std::vector<IndexTensor> tables)
    : alphabet_(std::move(alphabet_by_source)) {
    var_adj_.resize(alphabet_.size());
    for (auto& t : tables) {
        Factor f;
        f.scope = std::move(t.scope);
        f.shape = std::move(t.shape);
        f.values = std::move(t.values);
        f.strides.assign(f.shape.size(), 1);
        for (std::size_t a = f.shape.size(); a-- > 1;)
            f.strides[a - 1] = f.strides[a] * static_cast<std::size_t>(f.shape[a]);
        for (std::size_t j = 0; j < f.scope.size(); ++j) {
            const int v = f.scope[j];
            if (v < 0 || v >= n_sources())
                throw NumericalError("FactorGraph: scope id out of range");
            if (f.shape[j] != alphabet_[static_cast<std::size_t>(v)])
                throw NumericalError("FactorGraph: table shape does not match alphabet");
            var_adj_[static_cast<std::size_t>(v)].emplace_back(
                static_cast<int>(factors_.size()), static_cast<int>(j));
        }
        factors_.push_back(std::move(f));
    }

    // Forest test: edges == nodes - components over the bipartite graph.
    const int n_vars = n_sources();
    const int n_nodes = n_vars + static_cast<int>(factors_.size());
    std::vector<int> parent(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i)
        parent[static_cast<std::size_t>(i)] = i;
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    std::size_t edges = 0;
    for (std::size_t m = 0; m < factors_.size(); ++m) {
        for (int v : factors_[m].scope) {
            ++edges;
            const int a = find(v);
            const int b = find(n_vars + static_cast<int>(m));
            if (a != b)
                parent[static_cast<std::size_t>(a)] = b;
        }
    }
    std::size_t components = 0;
    for (int i = 0; i < n_nodes; ++i)
        if (find(i) == i)
            ++components;
    cycle_free_ = edges == static_cast<std::size_t>(n_nodes) - components;
}

namespace {

// Normalizes to unit sum; an all-zero vector becomes uniform over `allowed`
// and bumps the fallback counter.
void normalize_or_fallback(std::vector<double>& v, const std::vector<int>& allowed,
                           int& fallbacks) {
    double sum = 0.0;
    for (double x : v)
        sum += x;
    if (sum > 0.0 && std::isfinite(sum)) {
        const double inv = 1.0 / sum;
        for (double& x : v)
            x *= inv;
    } else {
        ++fallbacks;
        std::fill(v.begin(), v.end(), 0.0);
        const double u = 1.0 / static_cast<double>(allowed.size());
        for (int l : allowed)
            v[static_cast<std::size_t>(l)] = u;
    }
}

struct MessageState {
    // Messages indexed per (factor, scope position).
    std::vector<std::vector<std::vector<double>>> f2v, v2f;
};

// mu_{m->n}: restricted sum over the admissible box of factor m with the
// target coordinate pinned, weighting by the other variables' messages.
void factor_message(const FactorGraph::Factor& f,
                    const std::vector<const std::vector<int>*>& allowed_per_pos,
                    const std::vector<std::vector<double>>& v2f, std::size_t target_pos,
                    std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t deg = f.scope.size();
    const std::vector<int>& target_set = *allowed_per_pos[target_pos];
    const std::size_t target_stride = f.strides[target_pos];

    std::vector<std::size_t> pos(deg, 0);
    for (;;) {
        std::size_t base = 0;
        double weight = 1.0;
        for (std::size_t j = 0; j < deg; ++j) {
            if (j == target_pos)
                continue;
            const int idx = (*allowed_per_pos[j])[pos[j]];
            base += static_cast<std::size_t>(idx) * f.strides[j];
            weight *= v2f[j][static_cast<std::size_t>(idx)];
        }
        if (weight != 0.0) {
            for (int l : target_set)
                out[static_cast<std::size_t>(l)] +=
                    f.values[base + static_cast<std::size_t>(l) * target_stride] * weight;
        }
        std::size_t j = deg;
        bool carried = true;
        while (j-- > 0) {
            if (j == target_pos)
                continue;
            if (++pos[j] < allowed_per_pos[j]->size()) {
                carried = false;
                break;
            }
            pos[j] = 0;
        }
        if (carried)
            break;
    }
}

// Leave-one-out products of the factor messages arriving at one variable,
// renormalized at every step to dodge underflow on high-degree variables.
class VarProducts {
public:
    void compute(const std::vector<const std::vector<double>*>& incoming, int alphabet) {
        const std::size_t deg = incoming.size();
        prefix_.assign(deg + 1, std::vector<double>(static_cast<std::size_t>(alphabet), 1.0));
        suffix_.assign(deg + 1, std::vector<double>(static_cast<std::size_t>(alphabet), 1.0));
        for (std::size_t i = 0; i < deg; ++i) {
            double max = 0.0;
            for (std::size_t l = 0; l < prefix_[i].size(); ++l) {
                prefix_[i + 1][l] = prefix_[i][l] * (*incoming[i])[l];
                max = std::max(max, prefix_[i + 1][l]);
            }
            if (max > 0.0)
                for (double& x : prefix_[i + 1])
                    x /= max;
        }
        for (std::size_t i = deg; i-- > 0;) {
            double max = 0.0;
            for (std::size_t l = 0; l < suffix_[i].size(); ++l) {
                suffix_[i][l] = suffix_[i + 1][l] * (*incoming[i])[l];
                max = std::max(max, suffix_[i][l]);
            }
            if (max > 0.0)
                for (double& x : suffix_[i])
                    x /= max;
        }
    }

    // Product of all incoming messages except slot i.
    void all_but(std::size_t i, std::vector<double>& out) const {
        for (std::size_t l = 0; l < out.size(); ++l)
            out[l] = prefix_[i][l] * suffix_[i + 1][l];
    }

    // Product of all incoming messages.
    void all(std::vector<double>& out) const {
        for (std::size_t l = 0; l < out.size(); ++l)
            out[l] = suffix_[0][l];
    }

private:
    std::vector<std::vector<double>> prefix_, suffix_;
};

} // namespace

SumProductResult sum_product_decode(const FactorGraph& graph,
                                    const std::vector<std::vector<int>>& allowed,
                                    const SumProductOptions& options) {
    const int n_vars = graph.n_sources();
    if (static_cast<int>(allowed.size()) != n_vars)
        throw NumericalError("sum_product_decode: allowed-set count mismatch");
    for (int v = 0; v < n_vars; ++v)
        if (allowed[static_cast<std::size_t>(v)].empty())
            throw NumericalError("sum_product_decode: empty admissible set for source " +
                                 std::to_string(v));

    const auto& factors = graph.factors();
    const auto& var_adj = graph.var_adjacency();

    SumProductResult result;
    result.tree_schedule = graph.cycle_free() && !options.force_flooding;

    MessageState st;
    st.f2v.resize(factors.size());
    st.v2f.resize(factors.size());
    std::vector<std::vector<const std::vector<int>*>> fact_allowed(factors.size());
    for (std::size_t m = 0; m < factors.size(); ++m) {
        const auto& f = factors[m];
        st.f2v[m].resize(f.scope.size());
        st.v2f[m].resize(f.scope.size());
        fact_allowed[m].resize(f.scope.size());
        for (std::size_t j = 0; j < f.scope.size(); ++j) {
            const int v = f.scope[j];
            const auto size = static_cast<std::size_t>(graph.alphabet()[static_cast<std::size_t>(v)]);
            st.f2v[m][j].assign(size, 1.0);
            st.v2f[m][j].assign(size, 1.0);
            fact_allowed[m][j] = &allowed[static_cast<std::size_t>(v)];
        }
    }

    auto send_factor_message = [&](std::size_t m, std::size_t j) {
        factor_message(factors[m], fact_allowed[m], st.v2f[m], j, st.f2v[m][j]);
        normalize_or_fallback(st.f2v[m][j], *fact_allowed[m][j], result.zero_mass_fallbacks);
    };

    auto dump_messages = [&](const char* stage) {
        if (!options.trace)
            return;
        std::ostream& os = *options.trace;
        os << "# " << stage << "\n";
        for (std::size_t m = 0; m < factors.size(); ++m) {
            for (std::size_t j = 0; j < factors[m].scope.size(); ++j) {
                os << "f" << m << "->u" << factors[m].scope[j] << ":";
                for (double x : st.f2v[m][j])
                    os << ' ' << x;
                os << "\n";
            }
        }
    };

    VarProducts products;
    std::vector<const std::vector<double>*> incoming;
    auto send_var_messages = [&](int v) {
        const auto& adj = var_adj[static_cast<std::size_t>(v)];
        if (adj.empty())
            return;
        incoming.clear();
        for (const auto& [m, j] : adj)
            incoming.push_back(&st.f2v[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)]);
        products.compute(incoming, graph.alphabet()[static_cast<std::size_t>(v)]);
        for (std::size_t i = 0; i < adj.size(); ++i) {
            const auto& [m, j] = adj[i];
            products.all_but(i, st.v2f[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)]);
            normalize_or_fallback(st.v2f[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)],
                                  allowed[static_cast<std::size_t>(v)],
                                  result.zero_mass_fallbacks);
        }
    };

    if (result.tree_schedule) {
        // Bipartite tree: nodes 0..n_vars-1 are variables, then factors.
        const int n_nodes = n_vars + static_cast<int>(factors.size());
        std::vector<int> parent(static_cast<std::size_t>(n_nodes), -2);
        std::vector<int> order; // preorder
        order.reserve(static_cast<std::size_t>(n_nodes));
        auto neighbors = [&](int node, auto&& visit) {
            if (node < n_vars) {
                for (const auto& [m, j] : var_adj[static_cast<std::size_t>(node)]) {
                    (void)j;
                    visit(n_vars + m);
                }
            } else {
                for (int v : factors[static_cast<std::size_t>(node - n_vars)].scope)
                    visit(v);
            }
        };
        for (int root = 0; root < n_nodes; ++root) {
            if (parent[static_cast<std::size_t>(root)] != -2)
                continue;
            parent[static_cast<std::size_t>(root)] = -1;
            std::vector<int> stack{root};
            while (!stack.empty()) {
                const int node = stack.back();
                stack.pop_back();
                order.push_back(node);
                std::vector<int> kids;
                neighbors(node, [&](int nb) {
                    if (parent[static_cast<std::size_t>(nb)] == -2) {
                        parent[static_cast<std::size_t>(nb)] = node;
                        kids.push_back(nb);
                    }
                });
                for (auto it = kids.rbegin(); it != kids.rend(); ++it)
                    stack.push_back(*it);
            }
        }

        // Upward pass: children before parents, each node sends to its parent.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int node = *it;
            const int par = parent[static_cast<std::size_t>(node)];
            if (par < 0)
                continue;
            if (node < n_vars) {
                // Variable -> parent factor: product over child factors.
                const auto& adj = var_adj[static_cast<std::size_t>(node)];
                for (const auto& [m, j] : adj) {
                    if (n_vars + m != par)
                        continue;
                    auto& out = st.v2f[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
                    std::fill(out.begin(), out.end(), 1.0);
                    for (const auto& [m2, j2] : adj) {
                        if (m2 == m)
                            continue;
                        const auto& in =
                            st.f2v[static_cast<std::size_t>(m2)][static_cast<std::size_t>(j2)];
                        for (std::size_t l = 0; l < out.size(); ++l)
                            out[l] *= in[l];
                    }
                    normalize_or_fallback(out, allowed[static_cast<std::size_t>(node)],
                                          result.zero_mass_fallbacks);
                }
            } else {
                const auto m = static_cast<std::size_t>(node - n_vars);
                for (std::size_t j = 0; j < factors[m].scope.size(); ++j)
                    if (factors[m].scope[j] == par)
                        send_factor_message(m, j);
            }
        }

        dump_messages("upward pass");

        // Downward pass in preorder: each node sends to all its children.
        for (const int node : order) {
            if (node < n_vars) {
                send_var_messages(node);
            } else {
                const auto m = static_cast<std::size_t>(node - n_vars);
                const int par = parent[static_cast<std::size_t>(node)];
                for (std::size_t j = 0; j < factors[m].scope.size(); ++j)
                    if (factors[m].scope[j] != par)
                        send_factor_message(m, j);
            }
        }
        dump_messages("downward pass");
    } else {
        // Synchronous flooding with an early stop on message convergence.
        std::vector<double> previous;
        for (int iter = 0; iter < options.max_iterations; ++iter) {
            double change = 0.0;
            for (std::size_t m = 0; m < factors.size(); ++m) {
                for (std::size_t j = 0; j < factors[m].scope.size(); ++j) {
                    previous = st.f2v[m][j];
                    send_factor_message(m, j);
                    for (std::size_t l = 0; l < previous.size(); ++l)
                        change = std::max(change, std::abs(previous[l] - st.f2v[m][j][l]));
                }
            }
            for (int v = 0; v < n_vars; ++v)
                send_var_messages(v);
            result.iterations = iter + 1;
            if (options.trace) {
                char label[48];
                std::snprintf(label, sizeof label, "flooding iteration %d", iter + 1);
                dump_messages(label);
            }
            if (change < options.tolerance)
                break;
        }
    }

    // Posteriors: normalized product of all incoming factor messages.
    result.posteriors.resize(static_cast<std::size_t>(n_vars));
    for (int v = 0; v < n_vars; ++v) {
        auto& post = result.posteriors[static_cast<std::size_t>(v)];
        post.assign(static_cast<std::size_t>(graph.alphabet()[static_cast<std::size_t>(v)]), 0.0);
        const auto& adj = var_adj[static_cast<std::size_t>(v)];
        if (adj.empty()) {
            // Source constrained only by its own codeword.
            const double u = 1.0 / static_cast<double>(allowed[static_cast<std::size_t>(v)].size());
            for (int l : allowed[static_cast<std::size_t>(v)])
                post[static_cast<std::size_t>(l)] = u;
            continue;
        }
        incoming.clear();
        for (const auto& [m, j] : adj)
            incoming.push_back(&st.f2v[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)]);
        products.compute(incoming, graph.alphabet()[static_cast<std::size_t>(v)]);
        products.all(post);
        normalize_or_fallback(post, allowed[static_cast<std::size_t>(v)],
                              result.zero_mass_fallbacks);
    }
    return result;
}

Decoder::Decoder(const DesignArtifact& artifact)
    : artifact_(artifact),
      graph_([&] {
          std::vector<int> alphabet(static_cast<std::size_t>(artifact.n_sources));
          for (int v = 0; v < artifact.n_sources; ++v)
              alphabet[static_cast<std::size_t>(v)] =
                  artifact.quantizers[static_cast<std::size_t>(v)].size();
          return FactorGraph(std::move(alphabet), artifact.factor_tables);
      }()) {
    bank_.alphabet.resize(static_cast<std::size_t>(artifact.n_sources));
    bank_.assignments.resize(static_cast<std::size_t>(artifact.n_sources));
    for (int v = 0; v < artifact.n_sources; ++v)
        bank_.alphabet[static_cast<std::size_t>(v)] =
            artifact.quantizers[static_cast<std::size_t>(v)].size();
    for (std::size_t e = 0; e < artifact.encoder_ids.size(); ++e)
        bank_.assignments[static_cast<std::size_t>(artifact.encoder_ids[e])] =
            artifact.assignments[e];
}

Decoder::Output Decoder::decode(std::span<const int> codewords) const {
    if (codewords.size() != artifact_.encoder_ids.size())
        throw NumericalError("decode: codeword vector length mismatch");
    std::vector<int> by_source(static_cast<std::size_t>(artifact_.n_sources), -1);
    for (std::size_t e = 0; e < artifact_.encoder_ids.size(); ++e)
        by_source[static_cast<std::size_t>(artifact_.encoder_ids[e])] = codewords[e];

    const auto allowed = preimage_sets(bank_, by_source);
    const SumProductResult sp = sum_product_decode(graph_, allowed);

    Output out;
    out.zero_mass_fallbacks = sp.zero_mass_fallbacks;
    out.estimates.assign(static_cast<std::size_t>(artifact_.n_sources), 0.0);
    const int first = 0;
    const int last = artifact_.ceo_mode ? 1 : artifact_.n_sources;
    for (int v = first; v < last; ++v)
        out.estimates[static_cast<std::size_t>(v)] =
            cme_estimate(sp.posteriors[static_cast<std::size_t>(v)],
                         artifact_.quantizers[static_cast<std::size_t>(v)]);
    return out;
}

Decoder::Output decode_all(const DesignArtifact& artifact, std::span<const int> codewords) {
    return Decoder(artifact).decode(codewords);
}

} // namespace dsc
