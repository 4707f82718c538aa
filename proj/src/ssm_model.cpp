#include "nsssm/ssm_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsssm {

using nlohmann::json;

Vec PeriodicCorrection::lift_term(double t) const {
    if (v_hat.size() == 0) return Vec();
    const Complex e = std::exp(Complex(0.0, omega * t));
    return 2.0 * eps * (v_hat * e).real();
}

Vec PeriodicCorrection::reduced_term(double t) const {
    if (r_hat.size() == 0) return Vec();
    const Complex e = std::exp(Complex(0.0, omega * t));
    return 2.0 * eps * (r_hat * e).real();
}

SsmModel::SsmModel(int branch, Vec x0, Mat v, Mat w, int order_m, Mat m_coeffs, int order_r,
                   Mat r_coeffs)
    : branch_(branch > 0 ? 1 : -1),
      x0_(std::move(x0)),
      v_(std::move(v)),
      w_(std::move(w)),
      order_m_(order_m),
      order_r_(order_r),
      m_(std::move(m_coeffs)),
      r_(std::move(r_coeffs)),
      mb_(static_cast<int>(v_.cols()), 2, std::max(2, order_m)),
      rb_(static_cast<int>(v_.cols()), 1, std::max(1, order_r)) {
    const int n = static_cast<int>(x0_.size());
    const int d = static_cast<int>(v_.cols());
    if (v_.rows() != n || w_.rows() != d || w_.cols() != n) {
        throw PreconditionError("SsmModel: inconsistent V/W dimensions");
    }
    if (order_m < 1 || order_r < 1) throw PreconditionError("SsmModel: orders must be >= 1");
    if (order_m == 1) m_ = Mat::Zero(n, mb_.size());
    if (m_.rows() != n || m_.cols() != mb_.size()) {
        throw PreconditionError("SsmModel: M has wrong shape");
    }
    if (r_.rows() != d || r_.cols() != rb_.size()) {
        throw PreconditionError("SsmModel: R has wrong shape");
    }
}

Vec SsmModel::base_lift(const Vec& xi) const { return x0_ + v_ * xi + m_ * mb_.evaluate(xi); }

Mat SsmModel::base_jacobian(const Vec& xi) const { return v_ + m_ * mb_.jacobian(xi); }

Vec SsmModel::base_field(const Vec& xi) const { return r_ * rb_.evaluate(xi); }

Vec SsmModel::to_internal(const Vec& eta) const {
    if (!has_chart()) return eta;
    const double scale = 1.0 + eta.norm();
    auto residual = [&](const Vec& z) { return Vec(chart_w_ * (base_lift(z) - x0_) - eta); };
    // plain Newton first; the damped variant is the fallback far from x0
    for (bool damped : {false, true}) {
        Vec xi = chart_p_inv_ * eta;
        Vec res = residual(xi);
        for (int it = 0; it < 100 && xi.allFinite(); ++it) {
            if (res.norm() <= 1e-14 * scale) return xi;
            const Vec step = (chart_w_ * base_jacobian(xi)).partialPivLu().solve(res);
            if (!step.allFinite()) break;
            double lam = 1.0;
            Vec trial = xi - step;
            Vec rt = residual(trial);
            while (damped && !(rt.norm() < res.norm()) && lam > 1e-4) {
                lam *= 0.5;
                trial = xi - lam * step;
                rt = residual(trial);
            }
            xi = trial;
            res = rt;
            if (lam * step.norm() <= 1e-15 * (1.0 + xi.norm())) break;
            if (!damped && it >= 50) break;
        }
        if (xi.allFinite() && res.norm() <= 1e-10 * scale) return xi;
    }
    std::ostringstream msg;
    msg << "alternative chart: the manifold is not a graph over the chosen coordinates at eta = ("
        << eta.transpose() << ")";
    throw ChartError(msg.str());
}

Vec SsmModel::lift(const Vec& eta) const { return base_lift(to_internal(eta)); }

Vec SsmModel::lift(const Vec& xi, double t) const {
    Vec x = lift(xi);
    if (corr_ && corr_->v_hat.size() == x.size()) x += corr_->lift_term(t);
    return x;
}

Mat SsmModel::lift_jacobian(const Vec& eta) const {
    if (!has_chart()) return base_jacobian(eta);
    const Mat j = base_jacobian(to_internal(eta));
    return j * (chart_w_ * j).inverse();
}

Vec SsmModel::reduced_field(const Vec& eta) const {
    if (!has_chart()) return base_field(eta);
    const Vec xi = to_internal(eta);
    return chart_w_ * (base_jacobian(xi) * base_field(xi));
}

Vec SsmModel::reduced_field(double t, const Vec& xi) const {
    Vec f = reduced_field(xi);
    if (corr_ && corr_->r_hat.size() == f.size()) f += corr_->reduced_term(t);
    return f;
}

Mat SsmModel::reduced_jacobian(const Vec& eta) const {
    if (!has_chart()) return r_ * rb_.jacobian(eta);
    const int d = reduced_dim();
    Mat j(d, d);
    for (int c = 0; c < d; ++c) {
        const double h = 1e-6 * (1.0 + std::abs(eta[c]));
        Vec a = eta, b = eta;
        a[c] += h;
        b[c] -= h;
        j.col(c) = (reduced_field(a) - reduced_field(b)) / (2 * h);
    }
    return j;
}

Mat SsmModel::linear_block() const {
    const int d = reduced_dim();
    if (!has_chart()) return r_.leftCols(d);
    const Mat p = chart_p();
    return p * r_.leftCols(d) * chart_p_inv_;
}

Mat SsmModel::tangent() const {
    if (!has_chart()) return v_;
    return v_ * chart_p_inv_;
}

Mat SsmModel::chart_p() const {
    if (!has_chart()) return Mat::Identity(reduced_dim(), reduced_dim());
    return chart_w_ * v_;
}

void SsmModel::set_chart(const Mat& w0) {
    const int d = reduced_dim();
    if (w0.rows() != d || w0.cols() != dim()) throw PreconditionError("rechart: W0 must be d x n");
    const Mat p = w0 * v_;
    Eigen::JacobiSVD<Mat> svd(p);
    const auto s = svd.singularValues();
    const double cond = s[d - 1] > 0.0 ? s[0] / s[d - 1] : INFINITY;
    if (!(cond < 1e8)) {
        throw ChartError("rechart: P = W0 V is singular (condition " + std::to_string(cond) +
                         "); the chosen coordinates cannot describe the manifold as a graph");
    }
    chart_w_ = w0;
    chart_p_inv_ = p.inverse();
}

SsmModel SsmModel::recharted(const Mat& w0) const {
    SsmModel m = *this;
    m.set_chart(w0);
    return m;
}

namespace {

json mat_to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json cvec_to_json(const CVec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
    return a;
}

Mat mat_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected a matrix (array of rows)");
    const auto rows = j.size();
    if (rows == 0) return Mat();
    const auto cols = j[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ConfigError("ragged matrix in JSON");
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

Vec vec_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected a vector");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

CVec cvec_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected a complex vector");
    CVec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != 2) throw ConfigError("complex entries are [re, im]");
        v[i] = Complex(j[i][0].get<double>(), j[i][1].get<double>());
    }
    return v;
}

json coeffs_to_json(const MonomialBasis& b, const Mat& c) {
    json o = json::object();
    for (int i = 0; i < b.size(); ++i) o[to_key(b[i])] = vec_to_json(c.col(i));
    return o;
}

Mat coeffs_from_json(const json& o, const MonomialBasis& b, int rows) {
    if (!o.is_object()) throw ConfigError("coefficient map must be an object");
    Mat c = Mat::Zero(rows, b.size());
    for (auto it = o.begin(); it != o.end(); ++it) {
        const int idx = b.find(from_key(it.key()));
        if (idx < 0) throw ConfigError("coefficient key " + it.key() + " outside the model orders");
        const Vec v = vec_from_json(it.value());
        if (v.size() != rows) throw ConfigError("coefficient " + it.key() + " has wrong length");
        c.col(idx) = v;
    }
    return c;
}

int max_order(const json& o) {
    int m = 1;
    for (auto it = o.begin(); it != o.end(); ++it) m = std::max(m, degree(from_key(it.key())));
    return m;
}

}  // namespace

json SsmModel::to_json() const {
    json j;
    j["branch"] = branch_ > 0 ? "+" : "-";
    j["source"] = source;
    j["fixed_point"] = vec_to_json(x0_);
    j["order_m"] = order_m_;
    j["order_r"] = order_r_;
    j["monomial_order"] = "graded-lexicographic: degree ascending, first exponent descending";
    if (modal_v.size() > 0 && h_coeffs.size() > 0) {
        j["V"] = mat_to_json(modal_v);
        j["h"] = coeffs_to_json(mb_, h_coeffs);
    } else {
        j["V"] = mat_to_json(v_);
        j["h"] = coeffs_to_json(mb_, m_);
    }
    j["W"] = mat_to_json(w_);
    j["r"] = coeffs_to_json(rb_, r_);
    if (has_chart()) j["chart"] = mat_to_json(chart_w_);
    if (corr_) {
        json c;
        c["omega"] = corr_->omega;
        c["eps"] = corr_->eps;
        if (corr_->h_hat.size() > 0) c["h_hat_1"] = cvec_to_json(corr_->h_hat);
        c["v_hat_1"] = cvec_to_json(corr_->v_hat);
        c["r_hat_1"] = cvec_to_json(corr_->r_hat);
        j["correction"] = c;
    }
    return j;
}

SsmModel SsmModel::from_json(const json& j) {
    static const std::vector<std::string> allowed = {
        "branch", "source", "fixed_point", "order_m", "order_r", "monomial_order",
        "V",      "W",      "h",           "r",       "correction", "chart"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + it.key() + "' in SSM model JSON");
        }
    }
    try {
        const std::string br = j.at("branch").get<std::string>();
        if (br != "+" && br != "-") throw ConfigError("branch must be \"+\" or \"-\"");
        const int branch = br == "+" ? 1 : -1;
        const std::string source = j.value("source", std::string("analytic"));
        const Vec x0 = vec_from_json(j.at("fixed_point"));
        const int n = static_cast<int>(x0.size());
        const Mat vj = mat_from_json(j.at("V"));
        const Mat w = mat_from_json(j.at("W"));
        const int d = static_cast<int>(w.rows());
        const int order_m = j.contains("order_m") ? j["order_m"].get<int>() : max_order(j.at("h"));
        const int order_r = j.contains("order_r") ? j["order_r"].get<int>() : max_order(j.at("r"));
        MonomialBasis mb(d, 2, std::max(2, order_m));
        MonomialBasis rb(d, 1, order_r);
        Mat v, m, modal, h;
        if (vj.rows() == n && vj.cols() == n && n != d) {
            // analytic form: modal matrix plus slave coefficients
            modal = vj;
            v = modal.leftCols(d);
            h = coeffs_from_json(j.at("h"), mb, n - d);
            m = modal.rightCols(n - d) * h;
        } else {
            v = vj;
            m = coeffs_from_json(j.at("h"), mb, n);
        }
        const Mat r = coeffs_from_json(j.at("r"), rb, d);
        SsmModel model(branch, x0, v, w, order_m, m, order_r, r);
        model.source = source;
        model.modal_v = modal;
        model.h_coeffs = h;
        if (j.contains("chart")) model.set_chart(mat_from_json(j["chart"]));
        if (j.contains("correction")) {
            const json& c = j["correction"];
            PeriodicCorrection pc;
            pc.omega = c.at("omega").get<double>();
            pc.eps = c.value("eps", 0.0);
            if (c.contains("h_hat_1")) pc.h_hat = cvec_from_json(c["h_hat_1"]);
            if (c.contains("v_hat_1")) pc.v_hat = cvec_from_json(c["v_hat_1"]);
            if (c.contains("r_hat_1")) pc.r_hat = cvec_from_json(c["r_hat_1"]);
            if (pc.v_hat.size() == 0 && pc.h_hat.size() > 0 && modal.size() > 0) {
                pc.v_hat = modal.rightCols(n - d).cast<Complex>() * pc.h_hat;
            }
            model.set_correction(pc);
        }
        return model;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed SSM model JSON: ") + e.what());
    }
}

}  // namespace nsssm
