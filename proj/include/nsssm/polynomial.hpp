#pragma once

#include "nsssm/types.hpp"

#include <string>
#include <vector>

namespace nsssm {

using MultiIndex = std::vector<int>;

/// Monomials of total degree lo..hi in d variables, graded lexicographic:
/// degree ascending, and within a degree the exponent of the first variable
/// descending, e.g. d = 2, degree 2: (2,0), (1,1), (0,2).
class MonomialBasis {
public:
    MonomialBasis(int dim, int lo, int hi);

    int dim() const { return dim_; }
    int lo() const { return lo_; }
    int hi() const { return hi_; }
    int size() const { return static_cast<int>(exps_.size()); }
    const MultiIndex& operator[](int i) const { return exps_[i]; }
    const std::vector<MultiIndex>& exponents() const { return exps_; }

    /// Position of a multi-index, or -1.
    int find(const MultiIndex& p) const;

    Vec evaluate(const Vec& x) const;
    /// size() x dim() Jacobian of evaluate().
    Mat jacobian(const Vec& x) const;

    /// Evaluate for many points at once: rows = monomials, cols = samples.
    Mat evaluate_columns(const Mat& xs) const;

private:
    int dim_, lo_, hi_;
    std::vector<MultiIndex> exps_;
};

int degree(const MultiIndex& p);
std::string to_key(const MultiIndex& p);
MultiIndex from_key(const std::string& key);

int monomial_count(int dim, int lo, int hi);

}  // namespace nsssm
