#pragma once

#include "nsssm/polynomial.hpp"
#include "nsssm/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace nsssm {

/// O(eps) time-periodic correction for cosine forcing eps * f0 * cos(omega t),
/// kept at Fourier modes ±1. The lift gains 2 eps Re(v_hat e^{i omega t}) and
/// the reduced dynamics 2 eps Re(r_hat e^{i omega t}).
struct PeriodicCorrection {
    double omega = 0.0;
    double eps = 0.0;
    CVec v_hat;  // observable-space mode (n)
    CVec r_hat;  // reduced-space mode (d)
    CVec h_hat;  // slave-coordinate mode of the modal chart (analytic path); may be empty

    Vec lift_term(double t) const;
    Vec reduced_term(double t) const;
};

/// One SSM branch: x = x0 + V ξ + M φ_{2:m}(ξ), dξ/dt = R φ_{1:r}(ξ),
/// chart ξ = W (x - x0) with W V = I and W M = 0.
///
/// A model may carry an alternative chart η = W0 (x - x0). All public
/// reduced-coordinate operations (lift, chart, reduced_field, ...) then act on
/// η; the polynomial coefficients stay in ξ and η is mapped back by Newton on
/// W0 (lift(ξ) - x0) = η.
class SsmModel {
public:
    SsmModel() = default;
    SsmModel(int branch, Vec x0, Mat v, Mat w, int order_m, Mat m_coeffs, int order_r, Mat r_coeffs);

    int branch() const { return branch_; }
    int dim() const { return static_cast<int>(x0_.size()); }
    int reduced_dim() const { return static_cast<int>(v_.cols()); }
    int order_m() const { return order_m_; }
    int order_r() const { return order_r_; }
    const Vec& x0() const { return x0_; }
    const Mat& v() const { return v_; }
    const Mat& w() const { return w_; }
    const Mat& m_coeffs() const { return m_; }
    const Mat& r_coeffs() const { return r_; }
    const MonomialBasis& m_basis() const { return mb_; }
    const MonomialBasis& r_basis() const { return rb_; }

    Vec lift(const Vec& xi) const;
    Vec lift(const Vec& xi, double t) const;
    Mat lift_jacobian(const Vec& xi) const;
    Vec chart(const Vec& x) const { return projection() * (x - x0_); }
    Vec reduced_field(const Vec& xi) const;
    Vec reduced_field(double t, const Vec& xi) const;
    Mat reduced_jacobian(const Vec& xi) const;
    /// Linear block of the reduced dynamics.
    Mat linear_block() const;

    bool has_chart() const { return chart_w_.size() > 0; }
    /// Linear map defining the public reduced coordinates (W or W0).
    const Mat& projection() const { return has_chart() ? chart_w_ : w_; }
    /// Tangent basis in public coordinates (V or V P⁻¹).
    Mat tangent() const;
    /// P = W0 V, identity without an alternative chart.
    Mat chart_p() const;
    /// Copy of this model expressed in the chart η = w0 (x - x0).
    /// Throws ChartError when P = w0 V is singular or ill-conditioned.
    SsmModel recharted(const Mat& w0) const;
    /// ξ for a public coordinate η (identity without an alternative chart).
    Vec to_internal(const Vec& eta) const;

    const std::optional<PeriodicCorrection>& correction() const { return corr_; }
    void set_correction(std::optional<PeriodicCorrection> c) { corr_ = std::move(c); }

    // Bookkeeping for serialization of analytic models: full modal matrix and
    // slave-coordinate coefficients (rows of z = Σ h_p ξ^p).
    std::string source = "analytic";
    Mat modal_v;   // n x n, empty for data-driven models
    Mat h_coeffs;  // (n - d) x count(2..m), empty for data-driven models

    nlohmann::json to_json() const;
    static SsmModel from_json(const nlohmann::json& j);

private:
    int branch_ = 1;
    Vec x0_;
    Mat v_, w_;
    int order_m_ = 2, order_r_ = 1;
    Vec base_lift(const Vec& xi) const;
    Mat base_jacobian(const Vec& xi) const;
    Vec base_field(const Vec& xi) const;
    void set_chart(const Mat& w0);

    Mat m_, r_;
    Mat chart_w_;
    Mat chart_p_inv_;
    MonomialBasis mb_{1, 2, 2}, rb_{1, 1, 1};
    std::optional<PeriodicCorrection> corr_;
};

}  // namespace nsssm
