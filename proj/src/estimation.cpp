#include "ionreadout/estimation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ionreadout/errors.hpp"

namespace ionreadout {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Mean counts for a bright-prepared ion; same closed form as expected_counts
// but total on the reals so finite differences may straddle zero.
double model(double tau, const Vec3& x) {
  const double signal = x[0], rd = x[1], rb = x[2];
  const double k = rd + rb;
  if (k == 0.0) return signal * tau;
  const double relax = -std::expm1(-k * tau) / k;
  return signal * ((rb * tau + rd * relax) / k);
}

struct Problem {
  std::vector<double> tau, y, w;
  bool exact_weights = false;

  std::size_t size() const { return tau.size(); }

  Eigen::VectorXd residuals(const Vec3& x) const {
    Eigen::VectorXd r(size());
    for (std::size_t i = 0; i < size(); ++i) r[i] = std::sqrt(w[i]) * (model(tau[i], x) - y[i]);
    return r;
  }

  Eigen::MatrixXd jacobian(const Vec3& x) const {
    Eigen::MatrixXd jac(size(), 3);
    const double rate_scale = std::max({x[1] + x[2], 1e-9 * x[0], 1e-12});
    for (int j = 0; j < 3; ++j) {
      const double scale = j == 0 ? std::max(x[0], 1e-12) : std::max(x[j], rate_scale);
      const double h = 1e-6 * scale;
      Vec3 hi = x, lo = x;
      hi[j] += h;
      const bool central = x[j] - h >= 0.0;
      if (central) lo[j] -= h;
      for (std::size_t i = 0; i < size(); ++i) {
        const double d = (model(tau[i], hi) - model(tau[i], lo)) / (central ? 2.0 * h : h);
        jac(static_cast<Eigen::Index>(i), j) = std::sqrt(w[i]) * d;
      }
    }
    return jac;
  }
};

Problem make_problem(const DecayCurve& curve, CurveWeighting weighting) {
  Problem p;
  double max_mean = 0.0;
  for (const auto& pt : curve.points) max_mean = std::max(max_mean, pt.mean_counts);
  const double floor = 1e-9 * max_mean;
  p.exact_weights = weighting == CurveWeighting::InverseVariance;
  for (const auto& pt : curve.points) {
    p.tau.push_back(pt.tau);
    p.y.push_back(pt.mean_counts);
    const double n = static_cast<double>(pt.n_trials);
    if (weighting == CurveWeighting::Unweighted) {
      p.w.push_back(n);
      continue;
    }
    double var = pt.mean_counts;
    if (pt.count_variance) {
      var = *pt.count_variance;
    } else {
      p.exact_weights = false;
    }
    p.w.push_back(n / std::max(var, floor));
  }
  return p;
}

Covariance3 to_array(const Mat3& m) {
  Covariance3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

void DecayCurve::validate() const {
  double last = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    require(pt.tau > last || (i == 0 && pt.tau > 0.0), "curve taus must be positive and strictly increasing");
    require(pt.mean_counts >= 0.0 && std::isfinite(pt.mean_counts), "mean counts must be nonnegative");
    require(pt.n_trials >= 1, "n_trials must be at least 1");
    require(!pt.count_variance || *pt.count_variance >= 0.0, "count variance must be nonnegative");
    last = pt.tau;
  }
}

double RateFit::standard_error(std::size_t i) const {
  require(i < 3, "parameter index out of range");
  return std::sqrt(std::max(covariance[i][i], 0.0));
}

RateFit initial_guess(const DecayCurve& curve) {
  curve.validate();
  require(curve.points.size() >= 2, "need at least two points for an initial guess");
  const auto& pts = curve.points;
  const auto& first = pts.front();
  const auto& a = pts[pts.size() - 2];
  const auto& b = pts.back();

  RateFit g;
  g.detected_signal = first.mean_counts / first.tau;
  const double late_slope = std::max((b.mean_counts - a.mean_counts) / (b.tau - a.tau), 0.0);
  const double intercept = b.mean_counts - late_slope * b.tau;
  if (g.detected_signal <= 0.0) return g;
  const double p_inf = std::clamp(late_slope / g.detected_signal, 0.0, 1.0);
  if (intercept <= 0.0 || p_inf >= 1.0) {
    // Looks like a straight line; start near the boundary.
    g.rd = 1e-3 / b.tau;
    g.rb = 0.0;
    return g;
  }
  const double k = g.detected_signal * (1.0 - p_inf) / intercept;
  g.rb = p_inf * k;
  g.rd = k - g.rb;
  return g;
}

RateFit fit_decay_curve(const DecayCurve& curve, const RateFit& guess, const FitOptions& options) {
  curve.validate();
  require(curve.points.size() >= 4, "need at least four curve points");
  if (std::all_of(curve.points.begin(), curve.points.end(),
                  [](const CurvePoint& p) { return p.mean_counts == 0.0; })) {
    throw DegenerateData("decay curve has no detected counts");
  }
  const Problem prob = make_problem(curve, options.weighting);

  Vec3 x(std::max(guess.detected_signal, 0.0), std::max(guess.rd, 0.0), std::max(guess.rb, 0.0));
  if (x[0] == 0.0) x[0] = curve.points.back().mean_counts / curve.points.back().tau;
  Eigen::VectorXd r = prob.residuals(x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  auto make_fit = [&](Vec3 at, double at_cost, std::size_t iters) {
    // With rd = 0 the population never leaves the bright manifold and rb has
    // no effect; report the equivalent point with both rates at zero.
    if (at[1] <= 1e-15 * at[0]) {
      const Vec3 line(at[0], 0.0, 0.0);
      const double line_cost = prob.residuals(line).squaredNorm();
      if (line_cost <= at_cost * (1.0 + 1e-9) + 1e-300) {
        at = line;
        at_cost = line_cost;
      }
    }
    RateFit fit;
    fit.detected_signal = at[0];
    fit.rd = at[1];
    fit.rb = at[2];
    fit.residual_norm = std::sqrt(at_cost);
    fit.iterations = iters;
    const Eigen::MatrixXd jac = prob.jacobian(at);
    const Mat3 normal = jac.transpose() * jac;
    Mat3 cov = normal.completeOrthogonalDecomposition().pseudoInverse();
    const auto dof = static_cast<double>(prob.size()) - 3.0;
    if (!prob.exact_weights && dof > 0.0) cov *= at_cost / dof;
    fit.covariance = to_array(cov);
    return fit;
  };

  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    if (cost == 0.0) return make_fit(x, cost, iter);
    const Eigen::MatrixXd jac = prob.jacobian(x);
    const Mat3 normal = jac.transpose() * jac;
    const Vec3 grad = jac.transpose() * r;

    // Parameters pinned at zero whose descent direction points outward are
    // held fixed for this iteration.
    std::array<bool, 3> free{};
    for (int j = 0; j < 3; ++j) free[j] = !(x[j] <= 0.0 && grad[j] > 0.0);

    bool accepted = false;
    while (!accepted) {
      Mat3 lhs = normal;
      Vec3 rhs = -grad;
      for (int j = 0; j < 3; ++j) {
        lhs(j, j) += lambda * std::max(normal(j, j), 1e-300);
        if (!free[j]) {
          lhs.row(j).setZero();
          lhs.col(j).setZero();
          lhs(j, j) = 1.0;
          rhs[j] = 0.0;
        }
      }
      const Vec3 step = lhs.ldlt().solve(rhs);
      const Vec3 trial = (x + step).cwiseMax(0.0);
      const Eigen::VectorXd r_trial = prob.residuals(trial);
      const double trial_cost = r_trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rel_drop = (cost - trial_cost) / cost;
        const double rel_step = (trial - x).cwiseQuotient(x.cwiseAbs().cwiseMax(1e-300)).cwiseAbs().maxCoeff();
        x = trial;
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_drop < options.tolerance || rel_step < options.tolerance) return make_fit(x, cost, iter);
      } else {
        lambda *= 4.0;
        if (lambda > 1e16) return make_fit(x, cost, iter);  // no downhill step left
      }
    }
  }
  throw FitFailure("decay-curve fit did not converge", make_fit(x, cost, options.max_iterations));
}

DecayCurve curve_from_records(const std::vector<TrialRecord>& records,
                              const std::vector<double>& taus, double background_rate) {
  require(!records.empty(), "need at least one record");
  require(background_rate >= 0.0, "background rate must be nonnegative");
  DecayCurve curve;
  for (double tau : taus) {
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& r : records) {
      if (r.horizon < tau) throw InsufficientData("record shorter than curve tau");
      const auto n = static_cast<double>(
          std::upper_bound(r.events.begin(), r.events.end(), tau) - r.events.begin());
      sum += n;
      sum_sq += n * n;
    }
    const auto m = static_cast<double>(records.size());
    const double mean = sum / m;
    CurvePoint pt;
    pt.tau = tau;
    pt.mean_counts = std::max(mean - background_rate * tau, 0.0);
    pt.n_trials = records.size();
    if (records.size() > 1) pt.count_variance = std::max((sum_sq - m * mean * mean) / (m - 1.0), 0.0);
    curve.points.push_back(pt);
  }
  curve.validate();
  return curve;
}

double fit_rate_vs_power(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 2, "need at least two points");
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [drive, rate] : points) {
    require(rate >= 0.0, "rates must be nonnegative");
    sxy += drive * rate;
    sxx += drive * drive;
  }
  if (sxx == 0.0) throw DegenerateData("all drive values are zero");
  return sxy / sxx;
}

}  // namespace ionreadout
