#pragma once

#include <vector>

#include "dmamiso/scenario.hpp"

namespace dmamiso {

inline constexpr double kAmplitudeMin = 0.001;
inline constexpr double kAmplitudeMax = 5.0;
inline constexpr double kBinaryHigh = 0.1;

/// Propagation from each element to its microstrip feed port.
struct MicrostripModel {
  double alpha_wg = 0;
  double gamma_wg = 0;
  RVec distances;  // rho per element, length N
  CVec h;          // e^{-rho (alpha + j gamma)}
};

/// rho_{l,s} = s * dx (one-based s) unless `element_distances` overrides it.
MicrostripModel microstrip_propagation(const Scenario& sc);

/// Lorentzian map theta -> (j + e^{j theta}) / 2.
cplx constraint_map(double theta);

/// Nearest feasible point under the given set.
cplx project(cplx value, ConstraintSet set);

/// True when `value` lies in the set up to `tol`.
bool is_feasible(cplx value, ConstraintSet set, double tol = 1e-9);

/// Phase theta that maps onto a Lorentzian-feasible weight.
double lorentzian_phase(cplx q);

/// DMA weights together with the matrix views the solvers use.
class DmaState {
 public:
  DmaState() = default;
  DmaState(CVec q, ConstraintSet set, const MicrostripModel& model, int elements_per_strip);

  const CVec& q() const { return q_; }
  ConstraintSet constraint() const { return set_; }
  int num_microstrips() const { return static_cast<int>(q_.size()) / s_; }
  int elements_per_strip() const { return s_; }
  int num_elements() const { return static_cast<int>(q_.size()); }
  const CVec& h() const { return h_; }

  /// N x L block-sparse weight matrix Q.
  CMat weight_matrix() const;
  /// N x L block matrix H~ with [H~]_{n, l(n)} = h_n.
  CMat propagation_blocks() const;
  /// H Q as an N x L matrix (= diag(q) H~).
  CMat hq() const;
  /// diag((HQ)^H HQ); (HQ)^H HQ is diagonal because blocks are disjoint.
  RVec hq_gram_diag() const;

  int strip_of(int element) const { return element / s_; }

  /// Same hardware, new weights (no feasibility check).
  DmaState with_weights(CVec q) const;

 private:
  CVec q_;
  CVec h_;
  ConstraintSet set_ = ConstraintSet::Lorentzian;
  int s_ = 1;
};

/// Builds the views, rejecting q that violates the active constraint set.
DmaState assemble_views(const CVec& q, const MicrostripModel& model, const Scenario& sc,
                        ConstraintSet set);
inline DmaState assemble_views(const CVec& q, const MicrostripModel& model, const Scenario& sc) {
  return assemble_views(q, model, sc, sc.constraint);
}

/// Seeded feasible weights: LP and UC draw uniform Lorentzian phases, AO
/// draws amplitudes inside the interval, BA starts every element high.
CVec random_feasible_weights(int n, ConstraintSet set, RngStream& rng);

/// Weights from the scenario: explicit q0_theta when given, else seeded draws.
CVec initial_weights(const Scenario& sc);

}  // namespace dmamiso
