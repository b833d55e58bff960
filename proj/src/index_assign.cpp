#include "dsc/index_assign.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dsc/errors.hpp"

namespace dsc {

IndexAssignment IndexAssignment::identity(int size) {
    if (size < 1)
        throw NumericalError("IndexAssignment: size must be >= 1");
    IndexAssignment a;
    a.map_.resize(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i)
        a.map_[static_cast<std::size_t>(i)] = i;
    a.output_size_ = size;
    return a;
}

IndexAssignment IndexAssignment::from_map(std::vector<int> map) {
    if (map.empty())
        throw ValidationError("IndexAssignment: empty mapping vector");
    const int k = *std::max_element(map.begin(), map.end()) + 1;
    std::vector<char> hit(static_cast<std::size_t>(k), 0);
    for (int w : map) {
        if (w < 0)
            throw ValidationError("IndexAssignment: negative codeword");
        hit[static_cast<std::size_t>(w)] = 1;
    }
    for (int w = 0; w < k; ++w)
        if (!hit[static_cast<std::size_t>(w)])
            throw ValidationError("IndexAssignment: mapping not surjective, codeword " +
                                  std::to_string(w) + " unused");
    IndexAssignment a;
    a.map_ = std::move(map);
    a.output_size_ = k;
    return a;
}

IndexAssignment IndexAssignment::merged(int a, int b) const {
    if (!(0 <= a && a < b && b < output_size_))
        throw NumericalError("merge_codewords: need 0 <= a < b < K");
    IndexAssignment out;
    out.map_.resize(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) {
        const int w = map_[i];
        if (w == a || w == b)
            out.map_[i] = a;
        else if (w > b)
            out.map_[i] = w - 1;
        else
            out.map_[i] = w;
    }
    out.output_size_ = output_size_ - 1;
    return out;
}

std::vector<std::vector<int>> IndexAssignment::preimages() const {
    std::vector<std::vector<int>> q(static_cast<std::size_t>(output_size_));
    for (std::size_t i = 0; i < map_.size(); ++i)
        q[static_cast<std::size_t>(map_[i])].push_back(static_cast<int>(i));
    return q;
}

bool IndexAssignment::satisfies_preimage_bound() const {
    const int bound = input_size() - output_size() + 1;
    for (const auto& q : preimages())
        if (static_cast<int>(q.size()) > bound || q.empty())
            return false;
    return true;
}

namespace {

// Distortion engine. Holds, per codeword tuple w over the current output
// alphabets, the statistics
//   S0(w)   = sum of p(i_Omega) over the preimage of w,
//   S1_n(w) = same sum weighted by the target's reconstruction level,
//   S2_n(w) = same sum weighted by the squared level,
// from which d_d = sum_n sum_w S2_n(w) - S1_n(w)^2 / S0(w). Merging two
// codewords of one encoder only combines slices of these tensors, so
// candidate merges are scored without touching the full index tensor again.
class DistortionEngine {
public:
    DistortionEngine(const JointPmf& pmf, const std::vector<ScalarQuantizer>& quantizers,
                     std::span<const int> omega, std::span<const int> psi,
                     const std::vector<IndexAssignment>& assignments) {
        const IndexTensor& t = pmf.tensor();
        omega_.assign(omega.begin(), omega.end());
        psi_.assign(psi.begin(), psi.end());

        std::vector<std::size_t> omega_axes;
        std::vector<int> omega_shape;
        for (int id : omega_) {
            const int axis = t.axis_of(id);
            if (axis < 0)
                throw NumericalError("distortion: encoder not in pmf scope");
            omega_axes.push_back(static_cast<std::size_t>(axis));
            omega_shape.push_back(t.shape[static_cast<std::size_t>(axis)]);
        }
        std::vector<std::size_t> psi_axes;
        for (int id : psi_) {
            const int axis = t.axis_of(id);
            if (axis < 0)
                throw NumericalError("distortion: target not in pmf scope");
            psi_axes.push_back(static_cast<std::size_t>(axis));
            if (static_cast<std::size_t>(id) >= quantizers.size())
                throw NumericalError("distortion: no quantizer for target source");
        }

        // Fold the full tensor down to per-i_Omega moment tensors.
        std::size_t omega_cells = 1;
        std::vector<std::size_t> omega_strides(omega_axes.size(), 1);
        for (std::size_t a = omega_axes.size(); a-- > 0;) {
            omega_strides[a] = omega_cells;
            omega_cells *= static_cast<std::size_t>(omega_shape[a]);
        }
        s0_.assign(omega_cells, 0.0);
        s1_.assign(psi_.size(), std::vector<double>(omega_cells, 0.0));
        s2_.assign(psi_.size(), std::vector<double>(omega_cells, 0.0));

        std::vector<int> multi(t.scope.size(), 0);
        std::size_t flat = 0;
        do {
            std::size_t oflat = 0;
            for (std::size_t k = 0; k < omega_axes.size(); ++k)
                oflat += static_cast<std::size_t>(multi[omega_axes[k]]) * omega_strides[k];
            const double p = t.values[flat];
            s0_[oflat] += p;
            for (std::size_t k = 0; k < psi_.size(); ++k) {
                const auto& q = quantizers[static_cast<std::size_t>(psi_[k])];
                const double lvl = q.level(multi[psi_axes[k]]);
                s1_[k][oflat] += p * lvl;
                s2_[k][oflat] += p * lvl * lvl;
            }
            ++flat;
        } while (next_multi_index(multi, t.shape));

        // Fold index statistics into codeword statistics via the mappings.
        shape_.resize(omega_.size());
        for (std::size_t e = 0; e < omega_.size(); ++e) {
            if (assignments[e].input_size() != omega_shape[e])
                throw NumericalError("distortion: assignment length does not match pmf shape");
            shape_[e] = assignments[e].output_size();
        }
        std::size_t w_cells = 1;
        std::vector<std::size_t> w_strides(shape_.size(), 1);
        for (std::size_t a = shape_.size(); a-- > 0;) {
            w_strides[a] = w_cells;
            w_cells *= static_cast<std::size_t>(shape_[a]);
        }
        t0_.assign(w_cells, 0.0);
        t1_.assign(psi_.size(), std::vector<double>(w_cells, 0.0));
        t2_.assign(psi_.size(), std::vector<double>(w_cells, 0.0));

        std::vector<int> idx(omega_.size(), 0);
        std::size_t iflat = 0;
        do {
            std::size_t wflat = 0;
            for (std::size_t e = 0; e < omega_.size(); ++e)
                wflat += static_cast<std::size_t>(assignments[e](idx[e])) * w_strides[e];
            t0_[wflat] += s0_[iflat];
            for (std::size_t k = 0; k < psi_.size(); ++k) {
                t1_[k][wflat] += s1_[k][iflat];
                t2_[k][wflat] += s2_[k][iflat];
            }
            ++iflat;
        } while (next_multi_index(idx, omega_shape));

        rebuild_cache();
    }

    double current_dd() const { return total_; }

    // d_d if codewords a < b of encoder position e were merged.
    double evaluate_merge(std::size_t e, int a, int b) const {
        const auto strides = w_strides();
        const std::size_t axis_stride = strides[e];
        double d = total_;
        // Visit every cell of the a-slice together with its b-partner.
        iterate_slice(e, [&](std::size_t base) {
            const std::size_t ca = base + static_cast<std::size_t>(a) * axis_stride;
            const std::size_t cb = base + static_cast<std::size_t>(b) * axis_stride;
            d -= cell_term_[ca] + cell_term_[cb];
            double merged = 0.0;
            const double m0 = t0_[ca] + t0_[cb];
            for (std::size_t k = 0; k < psi_.size(); ++k) {
                const double m1 = t1_[k][ca] + t1_[k][cb];
                const double m2 = t2_[k][ca] + t2_[k][cb];
                merged += m2 - m1 * m1 / m0;
            }
            d += merged;
        });
        return d;
    }

    // Applies the merge to the codeword statistics and refreshes the cache.
    void commit_merge(std::size_t e, int a, int b) {
        const std::vector<int> old_shape = shape_;
        shape_[e] -= 1;

        std::size_t new_cells = 1;
        std::vector<std::size_t> new_strides(shape_.size(), 1);
        for (std::size_t ax = shape_.size(); ax-- > 0;) {
            new_strides[ax] = new_cells;
            new_cells *= static_cast<std::size_t>(shape_[ax]);
        }
        std::vector<double> n0(new_cells, 0.0);
        std::vector<std::vector<double>> n1(psi_.size(), std::vector<double>(new_cells, 0.0));
        std::vector<std::vector<double>> n2(psi_.size(), std::vector<double>(new_cells, 0.0));

        std::vector<int> idx(old_shape.size(), 0);
        std::size_t oflat = 0;
        do {
            int w = idx[e];
            if (w == b)
                w = a;
            else if (w > b)
                w -= 1;
            std::size_t nflat = 0;
            for (std::size_t ax = 0; ax < shape_.size(); ++ax)
                nflat += static_cast<std::size_t>(ax == e ? w : idx[ax]) * new_strides[ax];
            n0[nflat] += t0_[oflat];
            for (std::size_t k = 0; k < psi_.size(); ++k) {
                n1[k][nflat] += t1_[k][oflat];
                n2[k][nflat] += t2_[k][oflat];
            }
            ++oflat;
        } while (next_multi_index(idx, old_shape));

        t0_ = std::move(n0);
        t1_ = std::move(n1);
        t2_ = std::move(n2);
        rebuild_cache();
    }

private:
    std::vector<std::size_t> w_strides() const {
        std::vector<std::size_t> st(shape_.size(), 1);
        for (std::size_t a = shape_.size(); a-- > 1;)
            st[a - 1] = st[a] * static_cast<std::size_t>(shape_[a]);
        return st;
    }

    // Calls fn(base_flat) for every cell with coordinate 0 on axis e.
    template <typename Fn>
    void iterate_slice(std::size_t e, Fn&& fn) const {
        std::vector<int> reduced_shape = shape_;
        reduced_shape[e] = 1;
        const auto strides = w_strides();
        std::vector<int> idx(shape_.size(), 0);
        do {
            std::size_t base = 0;
            for (std::size_t ax = 0; ax < shape_.size(); ++ax)
                base += static_cast<std::size_t>(idx[ax]) * strides[ax];
            fn(base);
        } while (next_multi_index(idx, reduced_shape));
    }

    void rebuild_cache() {
        cell_term_.assign(t0_.size(), 0.0);
        total_ = 0.0;
        for (std::size_t c = 0; c < t0_.size(); ++c) {
            double term = 0.0;
            for (std::size_t k = 0; k < psi_.size(); ++k)
                term += t2_[k][c] - t1_[k][c] * t1_[k][c] / t0_[c];
            cell_term_[c] = term;
            total_ += term;
        }
    }

    std::vector<int> omega_;
    std::vector<int> psi_;
    std::vector<int> shape_; // current output alphabet sizes per encoder
    std::vector<double> s0_;
    std::vector<std::vector<double>> s1_, s2_;   // index-tuple moments
    std::vector<double> t0_;
    std::vector<std::vector<double>> t1_, t2_;   // codeword-tuple moments
    std::vector<double> cell_term_;
    double total_ = 0.0;
};

void check_design_sets(std::span<const int> omega, std::span<const int> psi) {
    if (omega.empty())
        throw NumericalError("index_reuse: empty encoder set");
    if (psi.empty())
        throw NumericalError("index_reuse: empty target set");
    if (!std::is_sorted(omega.begin(), omega.end()) ||
        std::adjacent_find(omega.begin(), omega.end()) != omega.end())
        throw NumericalError("index_reuse: encoder ids must be strictly increasing");
    if (!std::is_sorted(psi.begin(), psi.end()) ||
        std::adjacent_find(psi.begin(), psi.end()) != psi.end())
        throw NumericalError("index_reuse: target ids must be strictly increasing");
}

} // namespace

double distortion_dd(const ClusterCodeDesign& design) {
    check_design_sets(design.encoders, design.targets);
    DistortionEngine engine(design.pmf, design.quantizers, design.encoders, design.targets,
                            design.assignments);
    return engine.current_dd();
}

std::array<double, 3> total_distortion(const ClusterCodeDesign& design) {
    double d_q = 0.0;
    for (int n : design.targets)
        d_q += design.quantizers[static_cast<std::size_t>(n)].mse();
    const double d_d = distortion_dd(design);
    return {d_q, d_d, d_q + d_d};
}

IndexAssignment rate_matching_assignment(const ScalarQuantizer& fine,
                                         const ScalarQuantizer& coarse) {
    std::vector<int> map(static_cast<std::size_t>(fine.size()));
    for (int i = 0; i < fine.size(); ++i)
        map[static_cast<std::size_t>(i)] = coarse.quantize(fine.level(i));
    return IndexAssignment::from_map(std::move(map));
}

ClusterCodeDesign optimize_index_reuse(const JointPmf& pmf,
                                       const std::vector<ScalarQuantizer>& quantizers,
                                       std::span<const int> omega, std::span<const int> psi,
                                       int input_levels, int k_target) {
    check_design_sets(omega, psi);
    if (!(1 <= k_target && k_target <= input_levels))
        throw NumericalError("optimize_index_reuse: need 1 <= K <= L");
    for (int id : omega) {
        const int axis = pmf.tensor().axis_of(id);
        if (axis < 0)
            throw NumericalError("optimize_index_reuse: encoder not in pmf scope");
        if (pmf.shape()[static_cast<std::size_t>(axis)] != input_levels)
            throw NumericalError("optimize_index_reuse: pmf shape does not match L");
    }

    ClusterCodeDesign design{{omega.begin(), omega.end()},
                             {psi.begin(), psi.end()},
                             std::vector<IndexAssignment>(omega.size(),
                                                          IndexAssignment::identity(input_levels)),
                             pmf,
                             quantizers,
                             {}};

    double d_q = 0.0;
    for (int n : design.targets)
        d_q += quantizers[static_cast<std::size_t>(n)].mse();

    DistortionEngine engine(pmf, quantizers, design.encoders, design.targets,
                            design.assignments);

    for (int k = input_levels; k > k_target; --k) {
        for (std::size_t e = 0; e < design.encoders.size(); ++e) {
            double best = std::numeric_limits<double>::infinity();
            int best_a = -1, best_b = -1;
            for (int a = 0; a <= k - 2; ++a) {
                for (int b = a + 1; b <= k - 1; ++b) {
                    const double d = engine.evaluate_merge(e, a, b);
                    if (d < best) {
                        best = d;
                        best_a = a;
                        best_b = b;
                    }
                }
            }
            engine.commit_merge(e, best_a, best_b);
            design.assignments[e] = design.assignments[e].merged(best_a, best_b);
            design.history.push_back(
                {design.encoders[e], best_a, best_b, d_q + engine.current_dd()});
        }
    }
    return design;
}

} // namespace dsc
