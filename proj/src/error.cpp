#include "vvpm/error.hpp"

#include <cmath>
#include <sstream>

#include "vvpm/linalg.hpp"

namespace vvpm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularShootingJacobian: return "SingularShootingJacobian";
    case ErrorKind::ConjugatePoint: return "ConjugatePoint";
    case ErrorKind::VectorPotentialPresent: return "VectorPotentialPresent";
    case ErrorKind::CausticRegion: return "CausticRegion";
    case ErrorKind::NotQuadraticModel: return "NotQuadraticModel";
    case ErrorKind::FocalPoint: return "FocalPoint";
    case ErrorKind::SeriesDivergence: return "SeriesDivergence";
    case ErrorKind::MidpointOffPath: return "MidpointOffPath";
    case ErrorKind::TurningPoint: return "TurningPoint";
    case ErrorKind::NonSPDMass: return "NonSPDMass";
    case ErrorKind::UnstableMode: return "UnstableMode";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

namespace {
std::string no_convergence_detail(int iterations, double best_residual) {
  std::ostringstream os;
  os << "shooting did not converge after " << iterations
     << " iterations (best residual " << best_residual << ")";
  return os.str();
}
}  // namespace

NoConvergence::NoConvergence(int iterations, double best_residual)
    : Error(ErrorKind::NoConvergence, no_convergence_detail(iterations, best_residual)),
      iterations_(iterations),
      best_residual_(best_residual) {}

bool boundary_block_singular(const Mat& y, const Mat& y_dot, double duration, double threshold) {
  const Eigen::Index d = y.rows();
  Mat stacked(2 * d, d);
  stacked << y, duration * y_dot;
  const double scale = stacked.norm();
  const double det = y.determinant();
  if (!std::isfinite(det) || !std::isfinite(scale)) return true;
  return std::abs(det) < threshold * std::pow(scale, static_cast<double>(d));
}

}  // namespace vvpm
