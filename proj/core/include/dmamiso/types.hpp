#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dmamiso {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cplx kJ{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or violated input invariant. `key()` names the culprit.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Numerical breakdown or a violated solver guarantee.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Feasible set of a single DMA element weight.
enum class ConstraintSet {
  Lorentzian,      // LP: q = (j + e^{j theta}) / 2
  AmplitudeOnly,   // AO: real q in [0.001, 5]
  BinaryAmplitude, // BA: q in {0, 0.1}
  Unconstrained,   // UC: any complex value
};

std::string to_string(ConstraintSet set);
ConstraintSet constraint_from_string(const std::string& tag);

inline double nats_to_bits(double nats) { return nats / kLn2; }

}  // namespace dmamiso
