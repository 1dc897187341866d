// Constant Q-curvature solvers in dimensions 3, 4 and ≥ 5, the Y₄-type
// quotients and the Φ_β minimization.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qcurv/kernels.hpp"

namespace qc {

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual = INFINITY;  // max-norm of the Euler–Lagrange residual
  Vec solution;                // node values
  double value = NAN;          // objective or quotient at the solution
  std::vector<double> energies;
  std::string gauge, status;
  // continuation path, one entry per accepted step
  std::vector<double> path_t, path_umin, path_umax;
  std::vector<int> path_newton;
  int halvings = 0;
  std::map<std::string, double> scalars;
};

// Yᵀ diag(dμ) f: the pairing of a node function with the basis
Vec space_dual(const Space& sp, const Vec& f);

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 1000;
  double gtol = 1e-10;  // on sqrt(gᵀ H₀ g)
  double ftol = 1e-15;  // relative decrease over five iterations
};
struct LbfgsResult {
  Vec x;
  double f = 0, gnorm = 0;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<double> history;
};
// f returns the value and writes the gradient; +inf marks points outside the domain
using Objective = std::function<double(const Vec&, Vec&)>;
LbfgsResult lbfgs_minimize(const Objective& f, Vec x0, const std::function<Vec(const Vec&)>& precond,
                           const LbfgsOptions& opt = {});

struct ContinuationOptions {
  int steps = 20;
  double newton_tol = 1e-10;
  int newton_max = 30;
  double u_floor = 1e-6;
  double min_step = 1e-6;
};
// u = ½ T_{(1−t)+tK}(u⁻⁷) from t = 0 to 1, K = −G_P
SolveReport continuation_dim3(const Kernel& K, const DiscreteOperator& P, const ContinuationOptions& opt = {});
// max |Pu + ½u⁻⁷| at the nodes
double continuation_residual(const DiscreteOperator& P, const Vec& u);

// f ← (1−s)f + s((n−4)/2 T_{G_P} f)^{(n+4)/(n−4)} with L^{2n/(n+4)} normalization
SolveReport dual_fixed_point(const Kernel& GP, int n, double damping, double tol, int max_iter = 5000,
                             const DiscreteOperator* P = nullptr, const Vec* f0 = nullptr);

double functional_II(const DiscreteOperator& P, const Vec& w);
SolveReport functional_II_min(const DiscreteOperator& P, double tol);

struct QuotientOptions {
  bool positive_only = false;
  double tol = 1e-9;
  std::uint64_t seed = 20240601;
  int max_iter = 2000;
  Vec start;  // empty: seeded band-limited random start
};
// E(u)‖u⁻¹‖²_{L⁶} (n = 3) or E(u)/‖u‖²_{L^{2n/(n−4)}} (n ≥ 5)
double y4_quotient(const DiscreteOperator& P, const Vec& u);
SolveReport y4_minimize(const DiscreteOperator& P, const QuotientOptions& opt = {});
// Y₄ and Y₄⁺ together; the unrestricted search is also started from the positive
// minimizer, so the reported values satisfy Y₄ ≤ Y₄⁺ as infima over nested sets
struct Y4Pair {
  SolveReport all, positive;
};
Y4Pair y4_pair(const DiscreteOperator& P, const QuotientOptions& opt = {});
// Φ_β(u) = E(u) − (β/2)∫u⁴[−2Δ(u⁻¹) + Ju⁻¹]²dμ
double phi_beta(const DiscreteOperator& P, const Vec& u, double beta);
SolveReport phi_beta_minimize(const DiscreteOperator& P, double beta, const QuotientOptions& opt = {});
// Q + 2βΔJ + βJ² of the metric u⁻⁴g: max deviation from its mean, and F_β(u⁻⁴g)
struct PhiBetaCheck {
  double residual = 0, mean = 0, F = 0;
};
PhiBetaCheck phi_beta_check(const MetricField& g, const Vec& u, double beta);

}  // namespace qc
