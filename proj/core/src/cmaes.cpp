#include "propsim/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace propsim {

void CmaesConfig::validate() const {
  if (max_evals < 1) throw Error("max_evals must be >= 1");
  if (lambda < 0) throw Error("lambda must be >= 0");
  if (sigma0 <= 0.0) throw Error("sigma0 must be positive");
  if (ftol < 0.0) throw Error("ftol must be non-negative");
}

CalibrationResult calibrate_cmaes(const Scenario& base,
                                  const RefTrajectory& ref,
                                  const std::vector<ParamSpec>& specs,
                                  const CmaesConfig& cfg,
                                  const LossOptions& loss_opts) {
  cfg.validate();
  if (specs.empty()) throw Error("no parameters to calibrate");
  for (const auto& s : specs) s.validate();

  const int n = static_cast<int>(specs.size());
  std::vector<double> lo(n), hi(n), mean(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = std::log(specs[i].lower);
    hi[i] = std::log(specs[i].upper);
    const double init =
        std::clamp(specs[i].init, specs[i].lower, specs[i].upper);
    mean[i] = std::log(init);
  }

  const int lambda =
      cfg.lambda > 0 ? cfg.lambda
                     : 4 + static_cast<int>(3.0 * std::log(double(n)));
  const int mu = lambda / 2;
  std::vector<double> w(mu);
  for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  const double w_sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& wi : w) wi /= w_sum;
  const double mu_eff =
      1.0 / std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

  const double c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
  const double d_sigma =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) +
      c_sigma;
  const double c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
  const double c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
  const double c_mu =
      std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) /
                              ((n + 2.0) * (n + 2.0) + mu_eff));
  const double chi_n =
      std::sqrt(double(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  std::vector<double> cov(n * n, 0.0);
  for (int i = 0; i < n; ++i) cov[i * n + i] = 1.0;
  std::vector<double> p_sigma(n, 0.0), p_c(n, 0.0);
  double sigma = cfg.sigma0;

  std::mt19937 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  CalibrationResult res;
  res.loss = std::numeric_limits<double>::infinity();
  res.best_start = 0;
  long evals = 0;
  int gen = 0;

  while (evals < cfg.max_evals) {
    // Eigendecomposition C = B diag(d^2) B^T for sampling and C^-1/2.
    std::vector<double> d2, b;
    sym_eigen(n, cov, &d2, &b);
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = std::sqrt(std::max(d2[i], 1e-30));

    struct Candidate {
      std::vector<double> x, y;  // x = mean + sigma*y in log space
      double loss = 0.0;
    };
    std::vector<Candidate> pop(lambda);
    for (int k = 0; k < lambda; ++k) {
      Candidate& cand = pop[k];
      for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<double> z(n);
        for (double& zi : z) zi = gauss(rng);
        cand.y.assign(n, 0.0);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            cand.y[i] += b[i * n + j] * d[j] * z[j];
        cand.x.resize(n);
        bool inside = true;
        for (int i = 0; i < n; ++i) {
          cand.x[i] = mean[i] + sigma * cand.y[i];
          inside = inside && cand.x[i] >= lo[i] && cand.x[i] <= hi[i];
        }
        if (inside) break;
        if (attempt == 99)
          for (int i = 0; i < n; ++i) {
            cand.x[i] = std::clamp(cand.x[i], lo[i], hi[i]);
            cand.y[i] = (cand.x[i] - mean[i]) / sigma;
          }
      }
      std::vector<double> theta(n);
      for (int i = 0; i < n; ++i) theta[i] = std::exp(cand.x[i]);
      try {
        cand.loss = loss_value(base, ref, specs, theta, loss_opts);
      } catch (const DivergenceError&) {
        cand.loss = kDivergedLoss;
      } catch (const InvertedElementError&) {
        cand.loss = kDivergedLoss;
      } catch (const SingularMatrixError&) {
        cand.loss = kDivergedLoss;
      }
      ++evals;
      if (cand.loss < res.loss) {
        res.loss = cand.loss;
        res.params = theta;
      }
    }

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a2, int b2) {
      return pop[a2].loss < pop[b2].loss;
    });

    // History tracks the best-so-far point against cumulative evaluations,
    // which is the axis optimizer comparisons align on.
    res.history.push_back({gen, res.loss, sigma, evals, res.params});

    std::vector<double> y_w(n, 0.0);
    for (int i = 0; i < mu; ++i)
      for (int j = 0; j < n; ++j) y_w[j] += w[i] * pop[order[i]].y[j];
    for (int i = 0; i < n; ++i) mean[i] += sigma * y_w[i];

    // C^-1/2 y_w = B diag(1/d) B^T y_w.
    std::vector<double> tmp(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) tmp[i] += b[j * n + i] * y_w[j];
    for (int i = 0; i < n; ++i) tmp[i] /= d[i];
    std::vector<double> c_inv_half_yw(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c_inv_half_yw[i] += b[i * n + j] * tmp[j];

    double p_sigma_norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      p_sigma[i] = (1.0 - c_sigma) * p_sigma[i] +
                   std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) *
                       c_inv_half_yw[i];
      p_sigma_norm2 += p_sigma[i] * p_sigma[i];
    }
    const double p_sigma_norm = std::sqrt(p_sigma_norm2);
    const bool h_sig =
        p_sigma_norm /
            std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * (gen + 1))) /
            chi_n <
        1.4 + 2.0 / (n + 1.0);
    for (int i = 0; i < n; ++i)
      p_c[i] = (1.0 - c_c) * p_c[i] +
               (h_sig ? std::sqrt(c_c * (2.0 - c_c) * mu_eff) * y_w[i] : 0.0);

    const double delta_h = (1.0 - (h_sig ? 1.0 : 0.0)) * c_c * (2.0 - c_c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double rank_mu = 0.0;
        for (int k = 0; k < mu; ++k)
          rank_mu += w[k] * pop[order[k]].y[i] * pop[order[k]].y[j];
        cov[i * n + j] = (1.0 - c_1 - c_mu + c_1 * delta_h) * cov[i * n + j] +
                         c_1 * p_c[i] * p_c[j] + c_mu * rank_mu;
      }

    sigma *= std::exp((c_sigma / d_sigma) * (p_sigma_norm / chi_n - 1.0));
    ++gen;
    res.iterations = gen;

    const double spread = pop[order[lambda - 1]].loss - pop[order[0]].loss;
    if (spread < cfg.ftol || sigma < 1e-12) {
      res.converged = true;
      break;
    }
  }
  res.evaluations = evals;
  return res;
}

}  // namespace propsim
