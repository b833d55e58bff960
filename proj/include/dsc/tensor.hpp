#ifndef DSC_TENSOR_HPP
#define DSC_TENSOR_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace dsc {

/// Dense real table over an ordered set of discrete source variables.
/// `scope` holds strictly increasing source ids, `shape` the per-source
/// alphabet sizes; `values` is row-major with the last axis fastest.
struct IndexTensor {
    std::vector<int> scope;
    std::vector<int> shape;
    std::vector<double> values;

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (int s : shape)
            n *= static_cast<std::size_t>(s);
        return n;
    }

    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> st(shape.size(), 1);
        for (std::size_t a = shape.size(); a-- > 1;)
            st[a - 1] = st[a] * static_cast<std::size_t>(shape[a]);
        return st;
    }

    std::size_t flat_index(std::span<const int> multi) const {
        std::size_t flat = 0;
        std::size_t stride = 1;
        for (std::size_t a = shape.size(); a-- > 0;) {
            flat += static_cast<std::size_t>(multi[a]) * stride;
            stride *= static_cast<std::size_t>(shape[a]);
        }
        return flat;
    }

    int axis_of(int source_id) const {
        for (std::size_t a = 0; a < scope.size(); ++a)
            if (scope[a] == source_id)
                return static_cast<int>(a);
        return -1;
    }
};

/// Advances a multi-index in row-major order; returns false after the last.
inline bool next_multi_index(std::span<int> multi, std::span<const int> shape) {
    for (std::size_t a = multi.size(); a-- > 0;) {
        if (++multi[a] < shape[a])
            return true;
        multi[a] = 0;
    }
    return false;
}

} // namespace dsc

#endif
