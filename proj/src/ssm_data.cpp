#include "nsssm/ssm_data.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nsssm {

namespace fs = std::filesystem;
using nlohmann::json;

void TrajectoryDataset::validate() const {
    if (trajectories.empty()) throw PreconditionError("dataset has no trajectories");
    const int n = dim();
    for (const auto& tr : trajectories) {
        if (tr.y.rows() != n) throw PreconditionError("dataset trajectories differ in dimension");
        if (static_cast<int>(tr.t.size()) != tr.y.cols()) throw PreconditionError("time grid length mismatch");
        for (std::size_t i = 1; i < tr.t.size(); ++i) {
            if (!(tr.t[i] > tr.t[i - 1])) throw PreconditionError("time grid must be strictly increasing");
        }
        if (!tr.y.allFinite()) throw PreconditionError("dataset contains non-finite samples");
    }
}

namespace {

Trajectory integrate_one(const Field& f, const Vec& x0, double t0, double t1, double dt,
                         const TrainingOptions& o) {
    const Samples s = integrate_sampled(f, t0, x0, t1, dt, o.ode, o.stop);
    Trajectory tr;
    tr.t = s.t;
    tr.y.resize(x0.size(), static_cast<Eigen::Index>(s.x.size()));
    for (std::size_t i = 0; i < s.x.size(); ++i) tr.y.col(static_cast<Eigen::Index>(i)) = s.x[i];
    return tr;
}

// Solve A X = B in the least-squares sense with column equilibration; falls
// back to a tiny ridge when A is rank deficient.
Mat least_squares(const Mat& a, const Mat& b, FitReport& rep) {
    Vec scale = a.colwise().norm().transpose();
    for (Eigen::Index i = 0; i < scale.size(); ++i) scale[i] = scale[i] > 0 ? 1.0 / scale[i] : 1.0;
    const Mat as = a * scale.asDiagonal();
    Eigen::ColPivHouseholderQR<Mat> qr(as);
    qr.setThreshold(1e-13);
    Mat x;
    if (qr.rank() < as.cols()) {
        const Mat n = as.transpose() * as;
        const double lam = 1e-10 * n.trace() / static_cast<double>(n.rows());
        x = (n + lam * Mat::Identity(n.rows(), n.cols())).ldlt().solve(as.transpose() * b);
        rep.regularized = true;
        rep.warning = "rank-deficient regressor matrix (rank " + std::to_string(qr.rank()) + " of " +
                      std::to_string(as.cols()) + "); ridge 1e-10 applied";
    } else {
        x = qr.solve(b);
    }
    return scale.asDiagonal() * x;
}

int samples_after_trim(const TrajectoryDataset& d, const Trajectory& tr) {
    return std::max(0, tr.samples() - d.trim);
}

}  // namespace

TrajectoryDataset generate_training(const Field& f, int branch, const std::vector<Vec>& ics, double t0,
                                    double t1, double dt, const TrainingOptions& opts) {
    if (ics.empty()) throw PreconditionError("generate_training: no initial conditions");
    if (!(dt > 0.0) || !(t1 > t0)) throw PreconditionError("generate_training: need dt > 0 and t1 > t0");
    TrajectoryDataset d;
    d.branch = branch > 0 ? 1 : -1;
    d.dt = dt;
    d.trajectories.resize(ics.size());
    const long n = static_cast<long>(ics.size());
    if (opts.parallel) {
        std::vector<std::string> errors(ics.size());
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < n; ++i) {
            try {
                d.trajectories[i] = integrate_one(f, ics[i], t0, t1, dt, opts);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
        for (const auto& e : errors) {
            if (!e.empty()) throw ConvergenceError("training trajectory failed: " + e);
        }
    } else {
        for (long i = 0; i < n; ++i) d.trajectories[i] = integrate_one(f, ics[i], t0, t1, dt, opts);
    }
    int len = 0;
    for (const auto& tr : d.trajectories) len = std::max(len, tr.samples());
    d.trim = static_cast<int>(std::floor(opts.trim_fraction * len));
    return d;
}

Mat finite_difference(const Mat& y, double dt) {
    const Eigen::Index p = y.cols();
    Mat d = Mat::Zero(y.rows(), p);
    if (p < 3) throw PreconditionError("finite_difference: need at least 3 samples");
    for (Eigen::Index i = 0; i < p; ++i) {
        if (i >= 2 && i + 2 < p) {
            d.col(i) = (-y.col(i + 2) + 8 * y.col(i + 1) - 8 * y.col(i - 1) + y.col(i - 2)) / (12 * dt);
        } else if (i == 0) {
            d.col(i) = (-3 * y.col(0) + 4 * y.col(1) - y.col(2)) / (2 * dt);
        } else if (i == p - 1) {
            d.col(i) = (3 * y.col(p - 1) - 4 * y.col(p - 2) + y.col(p - 3)) / (2 * dt);
        } else {
            d.col(i) = (y.col(i + 1) - y.col(i - 1)) / (2 * dt);
        }
    }
    return d;
}

ManifoldFit fit_manifold(const TrajectoryDataset& data, const Vec& x0, const Mat& v, int order, const Mat& w) {
    data.validate();
    if (order < 2) throw PreconditionError("fit_manifold: order must be >= 2");
    const int n = data.dim();
    if (v.rows() != n || x0.size() != n) throw PreconditionError("fit_manifold: V / x0 dimension mismatch");
    const int dd = static_cast<int>(v.cols());
    ManifoldFit fit;
    fit.x0 = x0;
    fit.order = order;
    if (w.size() == 0) {
        Eigen::HouseholderQR<Mat> qr(v);
        fit.v = qr.householderQ() * Mat::Identity(n, dd);
        fit.w = fit.v.transpose();
    } else {
        if (w.rows() != dd || w.cols() != n) throw PreconditionError("fit_manifold: W must be d x n");
        if ((w * v - Mat::Identity(dd, dd)).norm() > 1e-8) throw PreconditionError("fit_manifold: W V != I");
        fit.v = v;
        fit.w = w;
    }
    int total = 0;
    for (const auto& tr : data.trajectories) total += samples_after_trim(data, tr);
    if (total == 0) throw PreconditionError("fit_manifold: no samples after trimming");
    Mat ys(n, total);
    int c = 0;
    for (const auto& tr : data.trajectories) {
        const int k = samples_after_trim(data, tr);
        ys.middleCols(c, k) = tr.y.rightCols(k);
        c += k;
    }
    const Mat dev = ys.colwise() - x0;
    const Mat xi = fit.w * dev;
    const MonomialBasis mb(dd, 2, order);
    const Mat phi = mb.evaluate_columns(xi);
    const Mat target = dev - fit.v * xi;
    fit.m_coeffs = least_squares(phi.transpose(), target.transpose(), fit.report).transpose();
    const Mat rec = fit.v * xi + fit.m_coeffs * phi;
    const double tn = target.norm();
    fit.report.residual = tn > 0 ? (target - fit.m_coeffs * phi).norm() / tn : 0.0;
    fit.report.nmte_in_sample = nmte(dev, rec, dataset_scale(data, x0));
    return fit;
}

DynamicsFit fit_dynamics(const TrajectoryDataset& data, const ManifoldFit& fit, int order) {
    data.validate();
    if (order < 1) throw PreconditionError("fit_dynamics: order must be >= 1");
    const int dd = static_cast<int>(fit.v.cols());
    std::vector<Mat> xs, dxs;
    int total = 0;
    for (const auto& tr : data.trajectories) {
        const int k = samples_after_trim(data, tr);
        if (k < 7) continue;
        const Mat xi = fit.w * (tr.y.rightCols(k).colwise() - fit.x0);
        Mat dxi;
        if (tr.dy.size() > 0) {
            dxi = fit.w * tr.dy.rightCols(k);
        } else {
            if (!(data.dt > 0)) throw PreconditionError("fit_dynamics: uniform dt required for differences");
            dxi = finite_difference(xi, data.dt);
        }
        xs.push_back(xi.middleCols(2, k - 4));
        dxs.push_back(dxi.middleCols(2, k - 4));
        total += k - 4;
    }
    if (total == 0) throw PreconditionError("fit_dynamics: not enough samples");
    Mat x(dd, total), dx(dd, total);
    int c = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        x.middleCols(c, xs[i].cols()) = xs[i];
        dx.middleCols(c, xs[i].cols()) = dxs[i];
        c += static_cast<int>(xs[i].cols());
    }
    const MonomialBasis rb(dd, 1, order);
    const Mat phi = rb.evaluate_columns(x);
    DynamicsFit df;
    df.order = order;
    df.r_coeffs = least_squares(phi.transpose(), dx.transpose(), df.report).transpose();
    const double dn = dx.norm();
    df.report.residual = dn > 0 ? (dx - df.r_coeffs * phi).norm() / dn : 0.0;
    return df;
}

SsmModel make_model(int branch, const ManifoldFit& mf, const DynamicsFit& df) {
    SsmModel m(branch, mf.x0, mf.v, mf.w, mf.order, mf.m_coeffs, df.order, df.r_coeffs);
    m.source = "data";
    return m;
}

double nmte(const Mat& reference, const Mat& reconstruction, double normalization) {
    if (reference.rows() != reconstruction.rows() || reference.cols() != reconstruction.cols()) {
        throw PreconditionError("nmte: trajectories differ in shape");
    }
    if (!(normalization > 0.0)) throw PreconditionError("nmte: normalization must be positive");
    if (reference.cols() == 0) return 0.0;
    return (reference - reconstruction).colwise().norm().mean() / normalization;
}

double dataset_scale(const TrajectoryDataset& data, const Vec& x0) {
    double s = 0.0;
    for (const auto& tr : data.trajectories) s = std::max(s, (tr.y.colwise() - x0).colwise().norm().maxCoeff());
    return s;
}

double reconstruction_nmte(const SsmModel& model, const Trajectory& ref, double normalization,
                           const OdeOptions& opts) {
    if (ref.t.size() < 2) throw PreconditionError("reconstruction_nmte: trajectory too short");
    const Vec eta0 = model.chart(ref.y.col(0));
    Field f = [&model](double t, const Vec& e) { return model.reduced_field(t, e); };
    DormandPrince dp(f, opts);
    dp.reset(ref.t[0], eta0);
    Mat rec(ref.y.rows(), ref.y.cols());
    rec.col(0) = model.lift(eta0, ref.t[0]);
    for (std::size_t i = 1; i < ref.t.size(); ++i) {
        while (dp.t() < ref.t[i]) dp.step(ref.t.back());
        rec.col(static_cast<Eigen::Index>(i)) = model.lift(dp.dense(ref.t[i]), ref.t[i]);
    }
    return nmte(ref.y, rec, normalization);
}

ChartChange chart_change(const SsmModel& model, const Mat& w0) {
    ChartChange c;
    c.w0 = w0;
    c.p = w0 * model.v();
    Eigen::JacobiSVD<Mat> svd(c.p);
    const auto s = svd.singularValues();
    c.condition = s[s.size() - 1] > 0 ? s[0] / s[s.size() - 1] : INFINITY;
    return c;
}

SsmModel rechart(const SsmModel& model, const Mat& w0, ChartChange* info) {
    if (info) *info = chart_change(model, w0);
    return model.recharted(w0);
}

PeriodicCorrection nonmodal_forcing_correction(const SsmModel& model, const Mat& a, const Vec& f0, double eps,
                                               double omega) {
    const int n = model.dim();
    if (a.rows() != n || a.cols() != n || f0.size() != n) {
        throw PreconditionError("forcing correction: A and f0 must match the model dimension");
    }
    PeriodicCorrection pc;
    pc.omega = omega;
    pc.eps = eps;
    const Mat w0 = model.projection();
    const Mat v0 = model.tangent();
    const Mat proj = Mat::Identity(n, n) - v0 * w0;
    const CMat lhs = Complex(0.0, omega) * CMat::Identity(n, n) - (proj * a).cast<Complex>();
    Eigen::JacobiSVD<CMat> svd(lhs);
    const auto s = svd.singularValues();
    if (!(s[n - 1] > 1e-12 * s[0])) {
        throw ResonanceError("forcing correction: iΩ is resonant with the normal dynamics");
    }
    const CVec fhat = (0.5 * f0).cast<Complex>();
    pc.v_hat = lhs.fullPivLu().solve((proj.cast<Complex>() * fhat).eval());
    pc.r_hat = w0.cast<Complex>() * (a.cast<Complex>() * pc.v_hat + fhat);
    return pc;
}

void write_dataset(const TrajectoryDataset& data, const std::string& dir) {
    fs::create_directories(dir);
    for (std::size_t k = 0; k < data.trajectories.size(); ++k) {
        const auto& tr = data.trajectories[k];
        std::ofstream os(fs::path(dir) / ("traj_" + std::to_string(k) + ".csv"));
        if (!os) throw ConfigError("cannot write dataset file in " + dir);
        os.precision(17);
        os << "t";
        for (int i = 0; i < tr.y.rows(); ++i) os << ",y" << (i + 1);
        os << "\n";
        for (int j = 0; j < tr.samples(); ++j) {
            os << tr.t[j];
            for (int i = 0; i < tr.y.rows(); ++i) os << "," << tr.y(i, j);
            os << "\n";
        }
    }
    json m;
    m["branch"] = data.branch > 0 ? "+" : "-";
    m["dt"] = data.dt;
    m["trim"] = data.trim;
    m["trajectories"] = data.trajectories.size();
    m["dim"] = data.dim();
    std::ofstream os(fs::path(dir) / "manifest.json");
    os << m.dump(2) << "\n";
}

TrajectoryDataset read_dataset(const std::string& dir) {
    std::ifstream ms(fs::path(dir) / "manifest.json");
    if (!ms) throw ConfigError("dataset manifest missing in " + dir);
    json m;
    try {
        ms >> m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset manifest: ") + e.what());
    }
    TrajectoryDataset d;
    d.branch = m.at("branch").get<std::string>() == "+" ? 1 : -1;
    d.dt = m.at("dt").get<double>();
    d.trim = m.at("trim").get<int>();
    const int count = m.at("trajectories").get<int>();
    const int n = m.at("dim").get<int>();
    for (int k = 0; k < count; ++k) {
        std::ifstream is(fs::path(dir) / ("traj_" + std::to_string(k) + ".csv"));
        if (!is) throw ConfigError("dataset trajectory file missing");
        std::string line;
        std::getline(is, line);
        std::vector<double> t;
        std::vector<std::vector<double>> rows;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<double> vals;
            while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
            if (static_cast<int>(vals.size()) != n + 1) throw ConfigError("dataset row has wrong width");
            t.push_back(vals[0]);
            rows.emplace_back(vals.begin() + 1, vals.end());
        }
        Trajectory tr;
        tr.t = t;
        tr.y.resize(n, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t j = 0; j < rows.size(); ++j) {
            for (int i = 0; i < n; ++i) tr.y(i, static_cast<Eigen::Index>(j)) = rows[j][i];
        }
        d.trajectories.push_back(std::move(tr));
    }
    d.validate();
    return d;
}

}  // namespace nsssm
