#pragma once
// Hamiltonian Monte Carlo on an unconstrained log density: leapfrog
// integration, static HMC, multinomial NUTS, dual-averaging step size and
// windowed metric adaptation, and a multi-chain driver.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "morphouq/rng.hpp"

namespace morphouq {

/// Returns log p(q) and writes d log p / dq into `grad`. Must be safe to call
/// concurrently from several chains.
using LogDensity = std::function<double(std::span<const double> q, std::span<double> grad)>;

/// Inverse mass matrix (the target covariance estimate), diagonal or dense.
class Metric {
 public:
  Metric() = default;
  static Metric unit(std::size_t dim);
  static Metric diagonal(const Eigen::VectorXd& inv_mass);
  static Metric dense(const Eigen::MatrixXd& inv_mass);

  std::size_t dim() const { return static_cast<std::size_t>(diag_.size() > 0 ? diag_.size() : inv_.rows()); }
  bool is_dense() const { return dense_; }
  /// M^-1 p.
  Eigen::VectorXd velocity(const Eigen::VectorXd& p) const;
  double kinetic(const Eigen::VectorXd& p) const { return 0.5 * p.dot(velocity(p)); }
  /// p ~ N(0, M).
  Eigen::VectorXd sample_momentum(Rng& rng) const;
  Eigen::MatrixXd inverse_mass() const;

 private:
  bool dense_ = false;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd inv_;
  Eigen::MatrixXd chol_;  // lower Cholesky factor of inv_
};

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double logp = 0.0;
};

/// Evaluates logp and grad at q.
PhasePoint make_point(const LogDensity& target, const Eigen::VectorXd& q);

/// `steps` half-kick/drift/half-kick updates of size eps (negative eps runs
/// backwards). Returns false when the density or gradient becomes
/// non-finite (divergence); the point is then left mid-trajectory.
bool leapfrog(PhasePoint& z, double eps, std::size_t steps, const Metric& metric,
              const LogDensity& target);

/// Hamiltonian -logp + kinetic.
double hamiltonian(const PhasePoint& z, const Metric& metric);

struct StepInfo {
  bool accepted = false;
  bool divergent = false;
  /// HMC: Metropolis acceptance probability. NUTS: mean over the trajectory.
  double accept_stat = 0.0;
  std::size_t leapfrogs = 0;
  std::size_t depth = 0;
  bool max_depth_hit = false;
  double energy = 0.0;
};

/// Static-length HMC transition with fresh momentum and Metropolis correction.
StepInfo hmc_step(PhasePoint& z, double eps, std::size_t steps, const Metric& metric, Rng& rng,
                  const LogDensity& target);

/// Multinomial NUTS transition. Subtrees of depth 0..max_depth are appended
/// until the generalised U-turn criterion fails, so max_depth = 0 is a single
/// leapfrog proposal.
StepInfo nuts_step(PhasePoint& z, double eps, const Metric& metric, std::size_t max_depth, Rng& rng,
                   const LogDensity& target);

/// Nesterov dual averaging of log step size towards a target acceptance.
class DualAveraging {
 public:
  DualAveraging(double eps0, double target_accept);
  void restart(double eps0);
  /// Feeds one acceptance statistic and returns the next step size.
  double update(double accept_stat);
  double current() const { return eps_; }
  /// Iterate average, used once adaptation ends.
  double final_step() const;

 private:
  double target_;
  double mu_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double eps_ = 1.0;
  std::size_t count_ = 0;
};

/// Doubles or halves eps until a single leapfrog step crosses acceptance 0.8.
double initial_step_size(const PhasePoint& z, double eps, const Metric& metric, Rng& rng,
                         const LogDensity& target);

enum class Kernel { Nuts, Hmc };

struct McmcOptions {
  std::size_t chains = 4;
  std::size_t draws = 1000;  // per chain, after warm-up
  std::size_t warmup = 0;    // 0 means 20% of draws (at least 100)
  double target_accept = 0.8;
  std::size_t max_depth = 10;
  Kernel kernel = Kernel::Nuts;
  std::size_t hmc_steps = 10;
  bool dense_metric = false;
  bool adapt_metric = true;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  /// Prior draws screened per chain by run_mcmc; the densest few are refined
  /// by gradient ascent and the best point starts the chain.
  std::size_t init_draws = 100;
  std::size_t resolved_warmup() const;
};

struct ChainStats {
  double step_size = 0.0;
  Eigen::MatrixXd inverse_mass;
  double mean_accept = 0.0;
  std::size_t divergences = 0;
  std::size_t max_depth_hits = 0;
  std::size_t leapfrogs = 0;
  /// Step sizes after every warm-up iteration.
  std::vector<double> warmup_steps;
};

struct ChainSet {
  std::size_t chains = 0;
  std::size_t draws = 0;
  std::size_t dim = 0;
  /// chains x draws x dim, unconstrained coordinates.
  std::vector<double> values;
  std::vector<ChainStats> stats;

  double at(std::size_t c, std::size_t d, std::size_t k) const {
    return values[(c * draws + d) * dim + k];
  }
  /// One coordinate of one chain.
  std::vector<double> series(std::size_t c, std::size_t k) const;
};

/// Runs independent chains from the given initial points with warm-up
/// adaptation (dual averaging; windowed metric estimation). Chain c uses RNG
/// stream c of options.seed, so results do not depend on `jobs`.
ChainSet run_chains(const LogDensity& target, const std::vector<Eigen::VectorXd>& inits,
                    const McmcOptions& options);

}  // namespace morphouq
