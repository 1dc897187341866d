// Conformal invariants and classification probes: κ, Θ₄, ν and λ₂(P), the
// energy decomposition behind condition P on S²×S¹-type metrics, and the
// integral diagnostics for maximizers of the β = −1/6 functional.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qcurv/solvers.hpp"

namespace qc {

// ∫Q dμ (n = 4)
double kappa_invariant(const CurvatureBundle& b, const Grid& grid);

struct Theta4 {
  double kernel_form = NAN, pu_form = NAN, q_form = NAN;
  double spike_value = NAN;  // best single-node candidate
  Eigen::Index spike_node = -1;
  Vec f;                     // maximizer of the kernel form, ‖f‖_{2n/(n+4)} = 1
  Vec u;                     // maximizer of the pu form
  std::vector<double> kernel_restarts, pu_restarts;
  int q_members = 0;         // positive factors the q form was evaluated on
  std::string status;
};
struct Theta4Options {
  int restarts = 20;
  std::uint64_t seed = 20240601;
  double gtol = 1e-12;
  int max_iter = 3000;
  int exchanges = 2;  // rounds of restarting each form from the image of the other's maximizer
  std::vector<Vec> q_factors;  // extra positive factors ρ for the q form
};
// kernel form alone: seeded ascents plus single-node spikes
Theta4 theta4_kernel_form(const Kernel& GP, int n, const Theta4Options& opt = {});
// all three forms; the pu form maximizes E(u)/‖Pu‖² from the images T f₀ of the same starts
Theta4 theta4(const Kernel& GP, const DiscreteOperator& P, int n, const Theta4Options& opt = {});
// (2/(n−4)) ∫Q̃dμ̃ / ‖Q̃‖²_{L^{2n/(n+4)}(dμ̃)} for g̃ = ρ^{4/(n−4)} g through the curvature pipeline
double theta4_q_member(const MetricField& g, const Vec& rho);

struct NuReport {
  std::vector<Eigen::Index> nodes;
  Vec nu;  // ν(p) per node in `nodes`
  double nu_global = NAN;
  Eigen::Index argmin = -1;
  double lambda1 = NAN, lambda2 = NAN, norm = NAN, tol = NAN;
  bool NN = false, P = false;
  // NN ⇒ NN⁺ and P ⇒ P⁺ only; the sign-constrained conditions are not certified
  bool NN_plus_implied = false, P_plus_implied = false;
  std::string note;
};
// all nodes when there are at most max_nodes, else a deterministic subsample of that size (≥ 64)
NuReport nu_invariants(const DiscreteOperator& P, int max_nodes = 4096);
// smallest eigenvalue of the energy on {u(p) = 0} by a dense projected eigenproblem
double nu_bruteforce(const DiscreteOperator& P, Eigen::Index node);

struct EnergyDecomposition {
  std::vector<double> direct, decomposed;  // E(u) by the quadratic form and by the decomposition
  std::vector<double> hessian_term, gradient_term, zeroth_term;
  double discrepancy = 0;  // max relative difference
  bool sigma2_negative = false, two_j_dominates = false;
  double sigma2_max = NAN, two_j_min_eig = NAN;
  bool summand_signs = true;  // checked only when both hypotheses hold
};
EnergyDecomposition energy_decomposition_check(const DiscreteOperator& P, const std::vector<Vec>& tests);

struct Sigma2Diagnostics {
  double q_integral = 0, j2_integral = 0;
  double q_minus_j2_integral = 0;  // ∫Q − (1/6)∫J²
  double pointwise_identity = 0;  // max |(Q − ΔJ/3 − J²/6) − (−(4/3)ΔJ − 2|Å|² + (2/3)J²)|
  double combination_spread = 0;  // max |Q − ΔJ/3 − J²/6 − mean|
  double combination_mean = 0;
  double lj_field = NAN;      // max |LJ − 6κ − 12|Å|²| when κ is supplied
  double lj_min = NAN;        // min LJ
  double sigma2_integral = 0, sigma2_rhs = 0, sigma2_residual = 0;
};
Sigma2Diagnostics sigma2_diagnostics(const CurvatureBundle& b, double kappa = NAN);

// Named values, flags and a hypothesis checklist for one instance.
struct InvariantReport {
  std::map<std::string, double> values;
  std::map<std::string, bool> flags;
  std::map<std::string, bool> hypotheses;
  std::map<std::string, std::string> labels;
  std::vector<double> nu_table;
  std::vector<Eigen::Index> nu_nodes;
  std::vector<std::string> notes;
};
struct InvariantOptions {
  bool quotients = true;
  bool theta = true;
  bool gamma_radius = true;
  int theta_restarts = 20;
  std::uint64_t seed = 20240601;
};
InvariantReport collect_invariants(const MetricField& g, const InvariantOptions& opt = {});

}  // namespace qc
