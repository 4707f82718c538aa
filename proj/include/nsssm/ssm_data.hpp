#pragma once

#include "nsssm/ode.hpp"
#include "nsssm/ssm_model.hpp"
#include "nsssm/types.hpp"

#include <string>
#include <vector>

namespace nsssm {

struct Trajectory {
    std::vector<double> t;
    Mat y;  // n x P, one sample per column
    Mat dy; // optional time derivatives, same shape (empty if absent)
    int samples() const { return static_cast<int>(y.cols()); }
};

struct TrajectoryDataset {
    int branch = 1;
    double dt = 0.0;
    int trim = 0;  // samples dropped at the start of every trajectory before fitting
    std::vector<Trajectory> trajectories;
    int dim() const { return trajectories.empty() ? 0 : static_cast<int>(trajectories[0].y.rows()); }
    void validate() const;
};

struct TrainingOptions {
    OdeOptions ode;
    double trim_fraction = 0.05;
    bool parallel = true;
    // ends a trajectory early (e.g. when an unstable extension leaves the region of interest)
    std::function<bool(const Vec&)> stop;
};

/// Integrate the (smooth) branch field from each initial condition without
/// switching and sample uniformly with step dt.
TrajectoryDataset generate_training(const Field& f, int branch, const std::vector<Vec>& ics, double t0,
                                    double t1, double dt, const TrainingOptions& opts = {});

/// Fourth-order central differences inside, second-order one-sided at the ends.
Mat finite_difference(const Mat& y, double dt);

struct FitReport {
    double nmte_in_sample = 0.0;
    double residual = 0.0;  // relative least-squares residual
    bool regularized = false;
    std::string warning;
};

struct ManifoldFit {
    Vec x0;
    Mat v;       // n x d tangent basis
    Mat w;       // d x n chart, w v = I (v^T for an orthonormal basis)
    Mat m_coeffs;  // n x count(2..m)
    int order = 2;
    FitReport report;
};

/// Least-squares fit of x = x0 + V ξ + M φ_{2:m}(ξ) with ξ = W (y - x0).
/// W defaults to Vᵀ after orthonormalizing V. The tangency constraint W M = 0
/// holds because every residual column lies in the kernel of W.
ManifoldFit fit_manifold(const TrajectoryDataset& data, const Vec& x0, const Mat& v, int order,
                         const Mat& w = Mat());

struct DynamicsFit {
    Mat r_coeffs;  // d x count(1..r)
    int order = 1;
    FitReport report;
};

DynamicsFit fit_dynamics(const TrajectoryDataset& data, const ManifoldFit& fit, int order);

SsmModel make_model(int branch, const ManifoldFit& mf, const DynamicsFit& df);

/// (1/‖ȳ‖)(1/P) Σ ‖y_j - ŷ_j‖ over columns.
double nmte(const Mat& reference, const Mat& reconstruction, double normalization);

/// Normalization used throughout: the largest deviation from x0 in the data.
double dataset_scale(const TrajectoryDataset& data, const Vec& x0);

/// Integrate the reduced dynamics from the chart of y(0) and lift; NMTE
/// against the reference trajectory.
double reconstruction_nmte(const SsmModel& model, const Trajectory& ref, double normalization,
                           const OdeOptions& opts = {});

struct ChartChange {
    Mat w0;
    Mat p;
    double condition = 0.0;
};

/// Alternative reduced coordinates η = w0 (x - x0).
ChartChange chart_change(const SsmModel& model, const Mat& w0);
SsmModel rechart(const SsmModel& model, const Mat& w0, ChartChange* info = nullptr);

/// Forcing correction for eps f0 cos(Ω t) in the model's public chart
/// (W0, V0), A the linearization of the full system at x0:
///   (iΩ - (I - V0 W0) A) v̂ = (I - V0 W0) f̂,   r̂ = W0 A v̂ + W0 f̂,   f̂ = f0 / 2.
PeriodicCorrection nonmodal_forcing_correction(const SsmModel& model, const Mat& a, const Vec& f0,
                                               double eps, double omega);

/// Dataset directory: traj_<k>.csv (t,y1..yn) plus manifest.json.
void write_dataset(const TrajectoryDataset& data, const std::string& dir);
TrajectoryDataset read_dataset(const std::string& dir);

}  // namespace nsssm
