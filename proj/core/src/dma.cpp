#include "dmamiso/dma.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmamiso {

MicrostripModel microstrip_propagation(const Scenario& sc) {
  const int s_count = sc.elements_per_strip;
  const int n = sc.num_elements();
  MicrostripModel m;
  m.alpha_wg = sc.alpha_wg;
  m.gamma_wg = sc.gamma_wg;
  m.distances.resize(n);
  m.h.resize(n);
  for (int i = 0; i < n; ++i) {
    const int s = i % s_count;
    const double rho = sc.element_distances.empty() ? (s + 1) * sc.dx : sc.element_distances[s];
    m.distances(i) = rho;
    m.h(i) = std::exp(-rho * cplx(sc.alpha_wg, sc.gamma_wg));
  }
  return m;
}

cplx constraint_map(double theta) { return 0.5 * (kJ + std::polar(1.0, theta)); }

double lorentzian_phase(cplx q) { return std::arg(2.0 * q - kJ); }

cplx project(cplx value, ConstraintSet set) {
  switch (set) {
    case ConstraintSet::Lorentzian: {
      const cplx d = value - 0.5 * kJ;
      if (std::abs(d) == 0.0) return constraint_map(0.0);
      return 0.5 * kJ + 0.5 * d / std::abs(d);
    }
    case ConstraintSet::AmplitudeOnly:
      return std::clamp(value.real(), kAmplitudeMin, kAmplitudeMax);
    case ConstraintSet::BinaryAmplitude:
      return std::abs(value.real()) <= std::abs(value.real() - kBinaryHigh) ? 0.0 : kBinaryHigh;
    case ConstraintSet::Unconstrained:
      return value;
  }
  return value;
}

bool is_feasible(cplx value, ConstraintSet set, double tol) {
  switch (set) {
    case ConstraintSet::Lorentzian:
      return std::abs(std::abs(value - 0.5 * kJ) - 0.5) <= tol;
    case ConstraintSet::AmplitudeOnly:
      return std::abs(value.imag()) <= tol && value.real() >= kAmplitudeMin - tol &&
             value.real() <= kAmplitudeMax + tol;
    case ConstraintSet::BinaryAmplitude:
      return std::abs(value) <= tol || std::abs(value - kBinaryHigh) <= tol;
    case ConstraintSet::Unconstrained:
      return std::isfinite(value.real()) && std::isfinite(value.imag());
  }
  return false;
}

DmaState::DmaState(CVec q, ConstraintSet set, const MicrostripModel& model, int elements_per_strip)
    : q_(std::move(q)), h_(model.h), set_(set), s_(elements_per_strip) {
  if (q_.size() != h_.size() || s_ < 1 || q_.size() % s_ != 0)
    throw ConfigError("", "DmaState: weight length does not match the microstrip model");
}

DmaState DmaState::with_weights(CVec q) const {
  if (q.size() != q_.size()) throw ConfigError("q", "weight length changed");
  DmaState next = *this;
  next.q_ = std::move(q);
  return next;
}

CMat DmaState::propagation_blocks() const {
  const int n = num_elements();
  CMat ht = CMat::Zero(n, num_microstrips());
  for (int i = 0; i < n; ++i) ht(i, strip_of(i)) = h_(i);
  return ht;
}

CMat DmaState::weight_matrix() const {
  const int n = num_elements();
  CMat w = CMat::Zero(n, num_microstrips());
  for (int i = 0; i < n; ++i) w(i, strip_of(i)) = q_(i);
  return w;
}

CMat DmaState::hq() const {
  const int n = num_elements();
  CMat m = CMat::Zero(n, num_microstrips());
  for (int i = 0; i < n; ++i) m(i, strip_of(i)) = h_(i) * q_(i);
  return m;
}

RVec DmaState::hq_gram_diag() const {
  RVec d = RVec::Zero(num_microstrips());
  for (int i = 0; i < num_elements(); ++i) d(strip_of(i)) += std::norm(h_(i) * q_(i));
  return d;
}

DmaState assemble_views(const CVec& q, const MicrostripModel& model, const Scenario& sc, ConstraintSet set) {
  if (q.size() != sc.num_elements())
    throw ConfigError("q", "expected " + std::to_string(sc.num_elements()) + " weights");
  std::vector<int> bad;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (!is_feasible(q(i), set)) bad.push_back(static_cast<int>(i));
  if (!bad.empty()) {
    std::ostringstream os;
    os << "weights violate the " << to_string(set) << " set at indices";
    for (std::size_t k = 0; k < bad.size() && k < 16; ++k) os << ' ' << bad[k];
    if (bad.size() > 16) os << " ...";
    throw ConfigError("q", os.str());
  }
  return DmaState(q, set, model, sc.elements_per_strip);
}

CVec random_feasible_weights(int n, ConstraintSet set, RngStream& rng) {
  CVec q(n);
  for (int i = 0; i < n; ++i) {
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    switch (set) {
      case ConstraintSet::AmplitudeOnly: q(i) = 0.5 * (1.0 + std::sin(theta)) + kAmplitudeMin; break;
      case ConstraintSet::BinaryAmplitude: q(i) = kBinaryHigh; break;
      default: q(i) = constraint_map(theta); break;
    }
  }
  return q;
}

CVec initial_weights(const Scenario& sc) {
  const int n = sc.num_elements();
  if (!sc.q0_theta.empty()) {
    CVec q(n);
    for (int i = 0; i < n; ++i) q(i) = project(constraint_map(sc.q0_theta[i]), sc.constraint);
    return q;
  }
  RngStream rng(sc.seed, kStreamInitialPhases);
  return random_feasible_weights(n, sc.constraint, rng);
}

}  // namespace dmamiso
