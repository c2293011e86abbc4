#include "afc/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afc/errors.hpp"

namespace afc {
namespace {

// Tolerance for matching window endpoints against the sample grid.
double snap_tol(double t) { return 1e-9 * (1.0 + std::abs(t)); }

void check_series(const RegressorSeries& rs) {
  if (rs.times.size() != rs.phi.cols()) {
    throw ConfigError("regressor series: times and phi lengths differ");
  }
  if (rs.times.size() < 2) {
    throw ConfigError("regressor series needs at least 2 samples");
  }
  for (Eigen::Index i = 1; i < rs.times.size(); ++i) {
    if (!(rs.times[i] > rs.times[i - 1])) {
      throw ConfigError("regressor series: times must be strictly increasing");
    }
  }
}

// Index range [i0, i1] of samples inside [t0, t1].
std::pair<Eigen::Index, Eigen::Index> sample_range(const RegressorSeries& rs,
                                                   double t0, double t1) {
  if (!(t0 < t1)) throw ConfigError("gram window: t0 must be < t1");
  if (t0 < rs.times[0] - snap_tol(t0) ||
      t1 > rs.times[rs.times.size() - 1] + snap_tol(t1)) {
    throw ConfigError("gram window [" + std::to_string(t0) + ", " +
                      std::to_string(t1) + "] outside the series span");
  }
  const double* begin = rs.times.data();
  const double* end = begin + rs.times.size();
  Eigen::Index i0 = std::lower_bound(begin, end, t0 - snap_tol(t0)) - begin;
  Eigen::Index i1 = std::upper_bound(begin, end, t1 + snap_tol(t1)) - begin - 1;
  if (i1 - i0 < 1) {
    throw ConfigError("gram window contains fewer than 2 samples");
  }
  return {i0, i1};
}

double lsq_slope(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sx += static_cast<double>(k);
    sy += y[k];
    sxx += static_cast<double>(k) * static_cast<double>(k);
    sxy += static_cast<double>(k) * y[k];
  }
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

void fill_lambda_sums(ExcitationReport& rep) {
  double acc = 0.0;
  rep.lambda_series.reserve(rep.windows.size());
  rep.sum_lambda_sq.reserve(rep.windows.size());
  for (const GramWindow& w : rep.windows) {
    rep.lambda_series.push_back(w.lambda_min);
    acc += w.lambda_min * w.lambda_min;
    rep.sum_lambda_sq.push_back(acc);
  }
  rep.growth_slope = lsq_slope(rep.sum_lambda_sq);
}

}  // namespace

RegressorSeries make_regressor(const Eigen::VectorXd& times,
                               const Eigen::VectorXd& x2hat, double vartheta) {
  if (times.size() != x2hat.size()) {
    throw ConfigError("make_regressor: times and x2hat lengths differ");
  }
  RegressorSeries rs;
  rs.times = times;
  rs.phi.resize(2, times.size());
  rs.phi.row(0) = x2hat;
  rs.phi.row(1) = (vartheta * x2hat.array()).tanh();
  check_series(rs);
  return rs;
}

double lambda_min_2x2(const Eigen::Matrix2d& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  return 0.5 * (tr - disc);
}

GramWindow gram_over_window(const RegressorSeries& rs, double t0, double t1) {
  check_series(rs);
  const auto [i0, i1] = sample_range(rs, t0, t1);
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (Eigen::Index i = i0; i < i1; ++i) {
    const double h = rs.times[i + 1] - rs.times[i];
    const Eigen::Vector2d a = rs.phi.col(i);
    const Eigen::Vector2d b = rs.phi.col(i + 1);
    g += (0.5 * h) * (a * a.transpose() + b * b.transpose());
  }
  return {t0, t1, g, lambda_min_2x2(g)};
}

ExcitationReport check_pe(const RegressorSeries& rs, double T, double mu,
                          double stride) {
  check_series(rs);
  if (!(T > 0.0) || !(mu > 0.0)) {
    throw ConfigError("check_pe: window width and mu must be positive");
  }
  const double span = rs.times[rs.times.size() - 1] - rs.times[0];
  if (T > span + snap_tol(span)) {
    throw ConfigError("check_pe: window width exceeds the series span");
  }
  if (stride <= 0.0) stride = rs.times[1] - rs.times[0];

  ExcitationReport rep;
  rep.pe_window = T;
  rep.pe_mu = mu;
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0;; ++j) {
    const double t0 = rs.times[0] + static_cast<double>(j) * stride;
    if (t0 + T > rs.times[rs.times.size() - 1] + snap_tol(t0 + T)) break;
    GramWindow w = gram_over_window(rs, t0, t0 + T);
    if (w.lambda_min < worst) {
      worst = w.lambda_min;
      rep.worst_index = rep.windows.size();
    }
    ok = ok && w.lambda_min >= mu;
    rep.windows.push_back(std::move(w));
  }
  rep.pe_verdict = ok ? PeVerdict::satisfied : PeVerdict::violated;
  fill_lambda_sums(rep);
  return rep;
}

ExcitationReport interval_excitation(
    const RegressorSeries& rs,
    const std::vector<std::pair<double, double>>& windows) {
  check_series(rs);
  if (windows.empty()) throw ConfigError("interval_excitation: no windows");
  ExcitationReport rep;
  double prev_end = -std::numeric_limits<double>::infinity();
  for (const auto& [tk, Tk] : windows) {
    if (!(Tk > 0.0)) {
      throw ConfigError("interval_excitation: window widths must be positive");
    }
    if (tk < prev_end - snap_tol(tk)) {
      throw ConfigError("interval_excitation: windows overlap");
    }
    prev_end = tk + Tk;
    rep.windows.push_back(gram_over_window(rs, tk, tk + Tk));
  }
  fill_lambda_sums(rep);
  return rep;
}

ExcitationReport conservative_check(const RegressorSeries& rs,
                                    const std::vector<double>& partition) {
  check_series(rs);
  if (partition.size() < 2) {
    throw ConfigError("conservative_check: partition needs at least 2 points");
  }
  ExcitationReport rep;
  rep.phi_sup_norm = rs.phi.colwise().norm().maxCoeff();
  const double sup4 = std::pow(rep.phi_sup_norm, 4);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < partition.size(); ++k) {
    if (!(partition[k + 1] > partition[k])) {
      throw ConfigError("conservative_check: partition must be increasing");
    }
    GramWindow w = gram_over_window(rs, partition[k], partition[k + 1]);
    const double width = partition[k + 1] - partition[k];
    const double term = w.lambda_min / (1.0 + sup4 * width);
    rep.mu_series.push_back(w.lambda_min);
    rep.terms.push_back(term);
    acc += term;
    rep.partial_sums.push_back(acc);
    rep.windows.push_back(std::move(w));
  }
  fill_lambda_sums(rep);
  return rep;
}

}  // namespace afc
