#include "nsssm/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace nsssm {

namespace {

double pair_tol(const Mat& a) { return 1e-12 * std::max(1.0, a.norm()); }

CVec normalize_phase(CVec v) {
    v /= v.norm();
    Eigen::Index k = 0;
    v.cwiseAbs().maxCoeff(&k);
    const Complex ph = std::abs(v[k]) / v[k];
    v *= ph;
    v[k] = Complex(v[k].real(), 0.0);
    return v;
}

}  // namespace

bool LinearizedSystem::is_real(int j) const {
    return std::abs(eigenvalues[j].imag()) <= pair_tol(a_matrix);
}

LinearizedSystem decompose(const Mat& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw PreconditionError("decompose: matrix must be square and nonempty");
    }
    if (!a.allFinite()) throw PreconditionError("decompose: matrix is not finite");
    Eigen::EigenSolver<Mat> es(a, true);
    if (es.info() != Eigen::Success) throw DecompositionError("eigenvalue iteration failed");
    const CVec ev = es.eigenvalues();
    const CMat evec = es.eigenvectors();
    const int n = static_cast<int>(a.rows());
    const double tol = pair_tol(a);

    // keep one member of each conjugate pair (Im >= 0) and real eigenvalues
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        if (std::abs(ev[i].real() - ev[j].real()) > tol) return ev[i].real() > ev[j].real();
        return ev[i].imag() > ev[j].imag();
    });

    LinearizedSystem lin;
    lin.a_matrix = a;
    lin.eigenvalues.resize(n);
    lin.eigenvectors.resize(n, n);
    int k = 0;
    std::vector<bool> used(n, false);
    for (int idx : order) {
        if (used[idx]) continue;
        const Complex lam = ev[idx];
        if (std::abs(lam.imag()) <= tol) {
            used[idx] = true;
            lin.eigenvalues[k] = Complex(lam.real(), 0.0);
            CVec v = evec.col(idx);
            lin.eigenvectors.col(k) = normalize_phase(v.real().cast<Complex>());
            ++k;
            continue;
        }
        if (lam.imag() < 0.0) continue;  // handled with its partner
        used[idx] = true;
        // find partner
        int partner = -1;
        double best = 1e300;
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            const double d = std::abs(ev[j] - std::conj(lam));
            if (d < best) {
                best = d;
                partner = j;
            }
        }
        if (partner < 0 || best > 1e-8 * std::max(1.0, std::abs(lam))) {
            throw DecompositionError("complex eigenvalue without conjugate partner");
        }
        used[partner] = true;
        const CVec v = normalize_phase(evec.col(idx));
        lin.eigenvalues[k] = lam;
        lin.eigenvectors.col(k) = v;
        lin.eigenvalues[k + 1] = std::conj(lam);
        lin.eigenvectors.col(k + 1) = v.conjugate();
        k += 2;
    }
    // pick up negative-imaginary members whose partner was consumed out of order
    if (k != n) throw DecompositionError("eigenvalue pairing failed");

    // defectiveness check: eigenvector matrix must be well conditioned
    Eigen::JacobiSVD<CMat> svd(lin.eigenvectors);
    const auto& s = svd.singularValues();
    const double cond = s[0] / std::max(s[n - 1], 1e-300);
    if (!(cond < 1e12)) {
        std::ostringstream os;
        os << "matrix is defective or nearly so (eigenvector condition " << cond << ")";
        throw DecompositionError(os.str());
    }
    return lin;
}

ModalChange modal_change(const LinearizedSystem& lin) {
    const int n = lin.size();
    ModalChange mc;
    mc.v.resize(n, n);
    for (int j = 0; j < n;) {
        if (lin.is_real(j)) {
            mc.v.col(j) = lin.eigenvectors.col(j).real();
            ++j;
        } else {
            mc.v.col(j) = lin.eigenvectors.col(j).real();
            mc.v.col(j + 1) = lin.eigenvectors.col(j).imag();
            j += 2;
        }
    }
    Eigen::JacobiSVD<Mat> svd(mc.v);
    const auto& s = svd.singularValues();
    const double cond = s[0] / std::max(s[n - 1], 1e-300);
    if (!(cond <= 1e12)) {
        std::ostringstream os;
        os << "modal matrix is ill-conditioned (condition " << cond << ")";
        throw ConditioningError(os.str());
    }
    mc.v_inv = mc.v.partialPivLu().inverse();
    mc.blocks = mc.v_inv * lin.a_matrix * mc.v;
    return mc;
}

SpectralSubspace spectral_subspace(const LinearizedSystem& lin, std::vector<int> indices) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    const int n = lin.size();
    std::set<int> sel(indices.begin(), indices.end());
    for (int i : indices) {
        if (i < 0 || i >= n) throw PreconditionError("spectral_subspace: index out of range");
    }
    // complete pairs must be selected
    for (int j = 0; j < n;) {
        if (lin.is_real(j)) {
            ++j;
            continue;
        }
        if (sel.count(j) != sel.count(j + 1)) {
            throw PreconditionError("spectral_subspace: complex pairs must be selected together");
        }
        j += 2;
    }
    const ModalChange mc = modal_change(lin);
    SpectralSubspace e;
    e.indices = indices;
    const int k = static_cast<int>(indices.size());
    e.v_basis.resize(n, k);
    e.w_basis.resize(k, n);
    for (int c = 0; c < k; ++c) {
        e.v_basis.col(c) = mc.v.col(indices[c]);
        e.w_basis.row(c) = mc.v_inv.row(indices[c]);
    }
    e.r_block = e.w_basis * lin.a_matrix * e.v_basis;
    return e;
}

SpectralSubspace slowest_subspace(const LinearizedSystem& lin, int n_groups) {
    std::vector<int> idx;
    int j = 0;
    for (int g = 0; g < n_groups && j < lin.size(); ++g) {
        if (lin.is_real(j)) {
            idx.push_back(j++);
        } else {
            idx.push_back(j);
            idx.push_back(j + 1);
            j += 2;
        }
    }
    return spectral_subspace(lin, idx);
}

namespace {
int quotient(double num, double den) {
    if (den == 0.0) throw DegenerateError("spectral quotient: zero real part in the subspace");
    return static_cast<int>(std::floor(num / den));
}

void require_stable(const LinearizedSystem& lin) {
    for (int j = 0; j < lin.size(); ++j) {
        if (!(lin.eigenvalues[j].real() < 0.0)) {
            throw PreconditionError("spectral quotient requires all real parts negative");
        }
    }
}
}  // namespace

int relative_spectral_quotient(const LinearizedSystem& lin, const SpectralSubspace& e) {
    require_stable(lin);
    double mn = 0.0;
    for (int j = 0; j < lin.size(); ++j) mn = std::min(mn, lin.eigenvalues[j].real());
    double mx = -1e300;
    for (int i : e.indices) mx = std::max(mx, lin.eigenvalues[i].real());
    return quotient(mn, mx);
}

int absolute_spectral_quotient(const LinearizedSystem& lin, const SpectralSubspace& e) {
    require_stable(lin);
    std::set<int> sel(e.indices.begin(), e.indices.end());
    bool any = false;
    double mn = 0.0;
    for (int j = 0; j < lin.size(); ++j) {
        if (sel.count(j)) continue;
        any = true;
        mn = std::min(mn, lin.eigenvalues[j].real());
    }
    if (!any) throw DegenerateError("absolute spectral quotient: empty complement of E");
    double mx = -1e300;
    for (int i : e.indices) mx = std::max(mx, lin.eigenvalues[i].real());
    return quotient(mn, mx);
}

}  // namespace nsssm
