#pragma once

#include <stdexcept>
#include <string>

namespace tsf {

/// Base class for all errors raised by the toolkit.
struct TsfError : std::runtime_error {
  explicit TsfError(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix does not lie in the span of the Lie algebra basis.
struct NotInAlgebra : TsfError {
  using TsfError::TsfError;
};

/// Rotation angle too close to pi; the principal logarithm is ill-conditioned.
struct CutLocus : TsfError {
  using TsfError::TsfError;
};

/// A defining integral or linear solve is numerically singular.
struct Singular : TsfError {
  using TsfError::TsfError;
};

/// Linear map fails the derivation law D[X,Y] = [DX,Y] + [X,DY].
struct NotADerivation : TsfError {
  using TsfError::TsfError;
};

/// Matrix does not commute with its Moore-Penrose pseudo-inverse.
struct NotNormalCommuting : TsfError {
  using TsfError::TsfError;
};

/// Group elements carry incompatible law tags.
struct TagMismatch : TsfError {
  using TsfError::TsfError;
};

/// Whitening failed to reach the requested mean norm within max_iter.
struct NoConvergence : TsfError {
  using TsfError::TsfError;
};

/// Innovation covariance is not invertible.
struct SingularInnovation : TsfError {
  using TsfError::TsfError;
};

/// Covariance is not positive-definite even after jitter.
struct CholeskyFail : TsfError {
  using TsfError::TsfError;
};

/// A sigma point left the valid chart during propagation.
struct StepReject : TsfError {
  using TsfError::TsfError;
};

/// A Monte-Carlo path reached the cut locus.
struct PathEscape : TsfError {
  using TsfError::TsfError;
};

}  // namespace tsf
