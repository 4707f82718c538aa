#pragma once

#include "nsssm/types.hpp"

#include <vector>

namespace nsssm {

/// Eigen-decomposition of a real matrix. Eigenvalues are sorted by descending
/// real part, complex pairs adjacent with the positive imaginary part first.
/// Eigenvectors have unit 2-norm and their largest-magnitude component is
/// real and positive.
struct LinearizedSystem {
    Mat a_matrix;
    CVec eigenvalues;
    CMat eigenvectors;

    int size() const { return static_cast<int>(eigenvalues.size()); }
    bool is_real(int j) const;
};

LinearizedSystem decompose(const Mat& a);

/// Real basis of a spectral subspace built from selected eigenvalue indices
/// (each complex pair must be selected as a whole).
struct SpectralSubspace {
    std::vector<int> indices;
    Mat v_basis;  // n x k
    Mat w_basis;  // k x n, w_basis * v_basis = I
    Mat r_block;  // k x k, A v_basis = v_basis r_block
};

/// Real modal matrix of the whole space. For a pair a ± ib the columns are
/// (Re v, Im v) of the eigenvector with b > 0, giving the block [[a, b], [-b, a]].
struct ModalChange {
    Mat v;
    Mat v_inv;
    Mat blocks;  // v_inv * A * v
};

ModalChange modal_change(const LinearizedSystem& lin);

SpectralSubspace spectral_subspace(const LinearizedSystem& lin, std::vector<int> indices);

/// Subspace of the `n_pairs` slowest eigenvalue groups (a complex pair or a
/// real eigenvalue counts as one group).
SpectralSubspace slowest_subspace(const LinearizedSystem& lin, int n_groups);

/// Int[min Re λ over the spectrum / max Re λ over E]
int relative_spectral_quotient(const LinearizedSystem& lin, const SpectralSubspace& e);

/// As above with the minimum restricted to the complement of E.
/// Throws DegenerateError when E is the whole spectrum (empty complement).
int absolute_spectral_quotient(const LinearizedSystem& lin, const SpectralSubspace& e);

}  // namespace nsssm
