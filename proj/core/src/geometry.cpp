#include "lmopt/geometry.hpp"

namespace lmopt {

std::array<double, 3> SymMat3::eigenvalues_ascending() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(dense(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev[0], ev[1], ev[2]};
}

}  // namespace lmopt
