#pragma once

#include <algorithm>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace crdlab {

/// Strictly increasing list of 1-based positions into a covariance layout.
/// May be empty; operations that need a non-empty set say so at their entry.
class IndexSet {
public:
    IndexSet() = default;
    IndexSet(std::initializer_list<int> indices) : IndexSet(std::vector<int>(indices)) {}
    explicit IndexSet(std::vector<int> indices) : indices_(std::move(indices)) {
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (indices_[i] < 1)
                throw std::invalid_argument("IndexSet: positions are 1-based");
            if (i > 0 && indices_[i] <= indices_[i - 1])
                throw std::invalid_argument("IndexSet: positions must be strictly increasing");
        }
    }

    /// Contiguous range lo..hi inclusive.
    static IndexSet range(int lo, int hi) {
        if (hi < lo) throw std::invalid_argument("IndexSet::range: empty range");
        std::vector<int> v;
        v.reserve(static_cast<std::size_t>(hi - lo + 1));
        for (int i = lo; i <= hi; ++i) v.push_back(i);
        return IndexSet(std::move(v));
    }

    bool empty() const { return indices_.empty(); }
    std::size_t size() const { return indices_.size(); }
    const std::vector<int>& indices() const& { return indices_; }
    std::vector<int> indices() && { return std::move(indices_); }  // rvalues hand out a copy
    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }
    int max_index() const { return indices_.back(); }

    IndexSet unioned(const IndexSet& other) const {
        std::vector<int> merged;
        merged.reserve(indices_.size() + other.indices_.size());
        std::merge(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                   std::back_inserter(merged));
        return IndexSet(std::move(merged));  // duplicates trip the strictly-increasing check
    }

    bool disjoint_from(const IndexSet& other) const {
        std::vector<int> common;
        std::set_intersection(indices_.begin(), indices_.end(), other.indices_.begin(),
                              other.indices_.end(), std::back_inserter(common));
        return common.empty();
    }

    static void require_nonempty(const IndexSet& s, const std::string& name) {
        if (s.empty()) throw std::invalid_argument("index set '" + name + "' must be non-empty");
    }

    static void require_in_bounds(const IndexSet& s, int dim, const std::string& name) {
        if (!s.empty() && s.max_index() > dim)
            throw std::invalid_argument("index set '" + name + "' exceeds layout dimension " +
                                        std::to_string(dim));
    }

    static void require_disjoint(const IndexSet& a, const IndexSet& b, const std::string& what) {
        if (!a.disjoint_from(b))
            throw std::invalid_argument("index sets must be disjoint: " + what);
    }

private:
    std::vector<int> indices_;
};

}  // namespace crdlab
