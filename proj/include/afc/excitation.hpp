#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

// Windowed Gram-matrix analysis of the 2-d regressor (x2hat, tanh(vartheta *
// x2hat)): persistence of excitation over a sliding window, and the weaker
// interval-excitation bookkeeping over a window sequence.

namespace afc {

/// Uniformly or nonuniformly sampled regressor signal. Columns of phi are the
/// regressor at the matching time.
struct RegressorSeries {
  Eigen::VectorXd times;    ///< strictly increasing, length >= 2
  Eigen::Matrix2Xd phi;

  Eigen::Index size() const { return times.size(); }
};

/// Build the regressor from a logged velocity-estimate series.
RegressorSeries make_regressor(const Eigen::VectorXd& times,
                               const Eigen::VectorXd& x2hat, double vartheta);

/// Smallest eigenvalue of a symmetric 2x2 matrix, closed form.
double lambda_min_2x2(const Eigen::Matrix2d& m);

/// Integral of phi phi^T over one window (trapezoidal rule on the sample
/// grid; window endpoints snap inward to the nearest samples).
struct GramWindow {
  double t_start = 0.0;
  double t_end = 0.0;
  Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
  double lambda_min = 0.0;
};

GramWindow gram_over_window(const RegressorSeries& rs, double t0, double t1);

enum class PeVerdict { satisfied, violated };

/// Result of the window analyses. check_pe fills the verdict; the interval
/// and conservative checks fill the running sums. A finite log can only give
/// evidence for the divergent-sum condition, never prove it, so the report
/// carries partial sums and their growth trend, not a verdict.
struct ExcitationReport {
  std::vector<GramWindow> windows;
  std::vector<double> lambda_series;    ///< lambda_k per window
  std::vector<double> sum_lambda_sq;    ///< running sum of lambda_k^2
  double growth_slope = 0.0;            ///< least-squares slope of the running sum vs k

  std::optional<PeVerdict> pe_verdict{};
  double pe_window = 0.0;
  double pe_mu = 0.0;
  std::size_t worst_index = 0;          ///< window minimizing lambda_min

  std::vector<double> mu_series;        ///< per-interval excitation levels
  std::vector<double> terms;            ///< mu_k / (1 + sup|phi|^4 * T_k)
  std::vector<double> partial_sums;     ///< running sum of terms
  double phi_sup_norm = 0.0;            ///< series-wide sup of |phi(t)|
};

/// Persistence of excitation: every width-T window sliding at `stride` must
/// have Gram lambda_min >= mu. stride <= 0 selects the series' leading sample
/// interval.
ExcitationReport check_pe(const RegressorSeries& rs, double T, double mu,
                          double stride = 0.0);

/// Excitation levels over a user-chosen sequence of disjoint windows
/// (t_k, T_k), with the running sum of squared levels and its growth trend.
ExcitationReport interval_excitation(
    const RegressorSeries& rs,
    const std::vector<std::pair<double, double>>& windows);

/// Conservative variant: levels over a partition of the time axis, each
/// normalized by 1 + sup|phi|^4 * interval length.
ExcitationReport conservative_check(const RegressorSeries& rs,
                                    const std::vector<double>& partition);

}  // namespace afc
