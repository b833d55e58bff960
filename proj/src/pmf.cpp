#include "dsc/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>

#include "dsc/errors.hpp"
#include "dsc/rng.hpp"

namespace dsc {

namespace {

constexpr std::int64_t kBatchSize = 65536;

void check_sorted_unique(std::span<const int> ids, const char* what) {
    for (std::size_t k = 1; k < ids.size(); ++k)
        if (ids[k] <= ids[k - 1])
            throw NumericalError(std::string(what) + ": scope ids must be strictly increasing");
}

} // namespace

JointPmf::JointPmf(IndexTensor tensor) : tensor_(std::move(tensor)) {
    check_sorted_unique(tensor_.scope, "JointPmf");
    if (tensor_.scope.size() != tensor_.shape.size())
        throw NumericalError("JointPmf: scope/shape size mismatch");
    if (tensor_.values.size() != tensor_.cell_count())
        throw NumericalError("JointPmf: table size mismatch");
    double sum = 0.0;
    for (double v : tensor_.values) {
        if (!(v >= 0.0))
            throw NumericalError("JointPmf: negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw NumericalError("JointPmf: entries do not sum to 1");
}

JointPmf JointPmf::marginalize(std::span<const int> subset) const {
    check_sorted_unique(subset, "marginalize");

    IndexTensor out;
    out.scope.assign(subset.begin(), subset.end());
    out.shape.reserve(subset.size());
    std::vector<int> kept_axes;
    for (int id : subset) {
        const int axis = tensor_.axis_of(id);
        if (axis < 0)
            throw NumericalError("marginalize: subset not contained in scope");
        kept_axes.push_back(axis);
        out.shape.push_back(tensor_.shape[static_cast<std::size_t>(axis)]);
    }
    out.values.assign(out.cell_count(), 0.0);

    const auto out_strides = out.strides();
    std::vector<int> multi(tensor_.scope.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t out_flat = 0;
        for (std::size_t k = 0; k < kept_axes.size(); ++k)
            out_flat += static_cast<std::size_t>(multi[static_cast<std::size_t>(kept_axes[k])]) *
                        out_strides[k];
        out.values[out_flat] += tensor_.values[flat];
        ++flat;
    } while (next_multi_index(multi, tensor_.shape));

    return JointPmf(std::move(out));
}

JointPmf estimate_joint_pmf(const CovarianceModel& model,
                            const std::vector<ScalarQuantizer>& quantizers_by_source,
                            std::span<const int> scope, std::int64_t n_samples,
                            std::uint64_t seed, int threads, std::size_t cell_cap) {
    check_sorted_unique(scope, "estimate_joint_pmf");
    if (scope.empty())
        throw NumericalError("estimate_joint_pmf: empty scope");
    if (n_samples < 1)
        throw NumericalError("estimate_joint_pmf: need at least one sample");

    IndexTensor out;
    out.scope.assign(scope.begin(), scope.end());
    for (int id : scope) {
        if (id < 0 || id >= model.size())
            throw NumericalError("estimate_joint_pmf: scope id outside model");
        if (static_cast<std::size_t>(id) >= quantizers_by_source.size())
            throw NumericalError("estimate_joint_pmf: no quantizer for source");
        out.shape.push_back(quantizers_by_source[static_cast<std::size_t>(id)].size());
    }
    const std::size_t cells = out.cell_count();
    if (cells > cell_cap)
        throw CapacityError("estimate_joint_pmf: scope tensor of " + std::to_string(cells) +
                            " cells exceeds cap of " + std::to_string(cell_cap));

    const std::int64_t n_batches = (n_samples + kBatchSize - 1) / kBatchSize;
    const auto strides = out.strides();

    // Integer counts make the cross-batch reduction order-independent.
    auto count_batch = [&](std::int64_t batch, std::vector<std::int64_t>& counts) {
        const std::int64_t offset = batch * kBatchSize;
        const int count = static_cast<int>(std::min<std::int64_t>(kBatchSize, n_samples - offset));
        const Eigen::MatrixXd block = model.sample_scope(
            scope, derive_seed(seed, static_cast<std::uint64_t>(batch)), count);
        for (int s = 0; s < count; ++s) {
            std::size_t flat = 0;
            for (std::size_t a = 0; a < out.scope.size(); ++a) {
                const auto& q = quantizers_by_source[static_cast<std::size_t>(out.scope[a])];
                flat += static_cast<std::size_t>(
                            q.quantize(block(static_cast<Eigen::Index>(a), s))) *
                        strides[a];
            }
            ++counts[flat];
        }
    };

    std::vector<std::int64_t> counts(cells, 0);
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n_batches)));
    if (workers == 1) {
        for (std::int64_t b = 0; b < n_batches; ++b)
            count_batch(b, counts);
    } else {
        std::vector<std::vector<std::int64_t>> partial(
            static_cast<std::size_t>(workers), std::vector<std::int64_t>(cells, 0));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::int64_t b = w; b < n_batches; b += workers)
                    count_batch(b, partial[static_cast<std::size_t>(w)]);
            });
        }
        for (auto& t : pool)
            t.join();
        for (const auto& p : partial)
            for (std::size_t c = 0; c < cells; ++c)
                counts[c] += p[c];
    }

    const double epsilon = 1.0 / (static_cast<double>(n_samples) * static_cast<double>(cells));
    const double denom = static_cast<double>(n_samples) + epsilon * static_cast<double>(cells);
    out.values.resize(cells);
    for (std::size_t c = 0; c < cells; ++c)
        out.values[c] = (static_cast<double>(counts[c]) + epsilon) / denom;

    return JointPmf(std::move(out));
}

IndexTensor conditional_table(const JointPmf& pmf, std::span<const int> target,
                              std::span<const int> given) {
    check_sorted_unique(target, "conditional_table");
    check_sorted_unique(given, "conditional_table");
    if (target.empty())
        throw NumericalError("conditional_table: empty target");
    for (int t : target)
        if (std::find(given.begin(), given.end(), t) != given.end())
            throw NumericalError("conditional_table: target and given overlap");

    std::vector<int> joint_scope;
    joint_scope.reserve(target.size() + given.size());
    joint_scope.insert(joint_scope.end(), target.begin(), target.end());
    joint_scope.insert(joint_scope.end(), given.begin(), given.end());
    std::sort(joint_scope.begin(), joint_scope.end());

    const JointPmf joint = pmf.marginalize(joint_scope);

    IndexTensor out = joint.tensor();
    if (given.empty())
        return out; // marginal of target, already normalized

    // Accumulate the given-marginal, then divide each cell by its slice mass.
    std::vector<std::size_t> given_axes;
    for (int g : given)
        given_axes.push_back(static_cast<std::size_t>(out.axis_of(g)));

    IndexTensor gm;
    gm.scope.assign(given.begin(), given.end());
    for (std::size_t a : given_axes)
        gm.shape.push_back(out.shape[a]);
    gm.values.assign(gm.cell_count(), 0.0);
    const auto gm_strides = gm.strides();

    std::vector<int> multi(out.scope.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t gflat = 0;
        for (std::size_t k = 0; k < given_axes.size(); ++k)
            gflat += static_cast<std::size_t>(multi[given_axes[k]]) * gm_strides[k];
        gm.values[gflat] += out.values[flat];
        ++flat;
    } while (next_multi_index(multi, out.shape));

    std::fill(multi.begin(), multi.end(), 0);
    flat = 0;
    do {
        std::size_t gflat = 0;
        for (std::size_t k = 0; k < given_axes.size(); ++k)
            gflat += static_cast<std::size_t>(multi[given_axes[k]]) * gm_strides[k];
        out.values[flat] /= gm.values[gflat];
        ++flat;
    } while (next_multi_index(multi, out.shape));

    return out;
}

} // namespace dsc
