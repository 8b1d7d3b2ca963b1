#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sigmak/geometry.hpp"
#include "sigmak/solver.hpp"

namespace sigmak::verify {

struct Witness {
  std::string node;  // lattice location or sample index
  double value = 0.0;
};

/// Quantitative pass/fail record for one checked bound. margin is signed
/// slack (positive = satisfied); passed <=> margin >= -tolerance of the
/// check. hypotheses_met = false marks a report whose preconditions failed:
/// such reports are informational, not failures.
struct EstimateReport {
  std::string name;
  bool passed = false;
  bool hypotheses_met = true;
  double margin = 0.0;
  std::map<std::string, double> parameters;
  std::vector<Witness> witnesses;
  std::string note;

  std::string to_json() const;
};

/// Comparison principle: u admissible with sigma_k[u] >= psi(x,u,Du) and
/// sigma_k[v] <= psi(x,v,Dv) pointwise, u <= v on the boundary layer, and
/// sampled psi_u >= 0; then u <= v everywhere. Hypotheses are sampled on the
/// discrete fields; failures mark the report hypotheses-not-met.
EstimateReport comparison_check(const grid::Field& u, const grid::Field& v, int k,
                                const expr::PsiSpec& psi, double tol);

/// sub <= u <= super pointwise within tol.
EstimateReport c0_sandwich(const grid::Field& u, const grid::Field& sub,
                           const grid::Field& super, double tol);

/// Tilt bound: sup tilt <= (boundary-layer sup tilt) * exp(B (2 sup|phi| +
/// diam)) with B = sup|Dpsi| / (k inf psi) + 1e-6, constants sampled over
/// the grid box, the solution's range, and its realized gradients.
EstimateReport gradient_bound_report(const solver::Problem& problem,
                                     const grid::Field& u);

/// Curvature monitors of one solve: interior and boundary-layer sup of
/// kappa_max, the weighted interior quantity eta^beta kappa_max with
/// eta = (affine phi) - u, and sup kappa_max / (1 + boundary sup).
struct CurvatureStats {
  double h = 0.0;
  double sup_inset = 0.0;      // over nodes at distance >= inset
  double sup_all = 0.0;        // over all inside nodes
  double sup_layer = 0.0;      // over boundary-adjacent nodes
  double sup_weighted = 0.0;   // sup eta^beta kappa_max
  double ratio = 0.0;          // sup_all / (1 + sup_layer)
  double inset = 0.0;
  double beta = 0.0;
  bool eta_positive = false;   // affine representative exists and eta > 0
  std::string note;
};

CurvatureStats interior_curvature_stats(const solver::Problem& problem,
                                        const grid::Field& u, double inset,
                                        double beta);

/// Single-run report: records the monitors; the pass verdict needs a
/// refinement pair (below).
EstimateReport interior_curvature_report(const CurvatureStats& stats);

/// Refinement stability: the inset sup, the weighted quantity, and the
/// ratio move by at most `window` (default 20%) from coarse to fine.
EstimateReport interior_curvature_refinement(const CurvatureStats& coarse,
                                             const CurvatureStats& fine,
                                             double window = 0.2);

/// Symmetric-function identity suite over sampled jets: Euler, trace,
/// expansion, derivative positivity, dominant-derivative and negative-entry
/// bounds, power-mean chain monotonicity, midpoint concavity on consecutive
/// pairs, and the vanishing curvature commutator on umbilic samples.
EstimateReport identity_suite(const std::vector<geometry::GraphJet>& samples, int k);

/// Same suite on synthetic cone samples (rejection-sampled Gaussians).
EstimateReport identity_suite_synthetic(int n, int k, int count, std::uint64_t seed,
                                        double tail = 0.0);

struct LuProbePoint {
  double delta_prime = 0.0;
  int violations = 0;
  double worst_slack = 0.0;  // most negative LHS - RHS seen
};

/// Empirical probe of the concavity inequality
///   lu_quadratic(k, kappa, xi) >= (1-eps) xi_1^2 / kappa_1^2
///     - delta0 sum_{i>l} sigma_k^{ii} xi_i^2 / (kappa_1 sigma_k)
/// over sampled kappa with kappa_l >= delta kappa_1 and kappa_{l+1} <=
/// delta' kappa_1, sweeping delta'. Reports the largest delta' that
/// produced no violation; a probe, never a certificate.
struct LuProbeResult {
  double best_delta_prime = 0.0;
  std::vector<LuProbePoint> sweep;
  std::string to_json() const;
};

LuProbeResult lu_inequality_probe(int k, int n, int l, double epsilon, double delta,
                                  double delta0, int trials, std::uint64_t seed);

}  // namespace sigmak::verify
