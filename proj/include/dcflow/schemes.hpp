#pragma once

#include <string>

#include "dcflow/discretization.hpp"

namespace dcflow {

enum class SchemeKind { Upwind, Linear, TvdMinmod, TvdVanleer, DeepConvection };

SchemeKind scheme_from_name(const std::string& name);
const char* scheme_name(SchemeKind k);

/// Upstream/downstream gradient ratio per internal face, computed along the
/// face-normal axis from the sign of the face flux, then clipped to [0, 2].
/// Degenerate faces: zero denominator with nonzero numerator clips to 2;
/// zero over zero is 1 (smooth-data convention). The cell upstream of the
/// upwind cell falls back to the boundary face value where it is missing.
ad::Var compute_r(ad::Tape& t, const SolverMaps& maps, ad::Var u, ad::Var u_bvals,
                  ad::Var flux_internal);

/// Upwind face values: the upstream cell's value per the flux sign.
ad::Var upwind_face_values(ad::Tape& t, const SolverMaps& maps, ad::Var u,
                           ad::Var flux_internal);

/// Linear (midpoint) interpolation on the uniform grid.
ad::Var linear_face_values(ad::Tape& t, const SolverMaps& maps, ad::Var u);

/// Flux-limited face value u_P + psi(r)/2 (u_D - u_P).
ad::Var tvd_face_values(ad::Tape& t, const SolverMaps& maps, ad::Var u,
                        ad::Var u_bvals, ad::Var flux_internal, SchemeKind limiter);

/// Classical scheme dispatcher (DeepConvection handled by the neural module).
ad::Var interpolate_face(ad::Tape& t, const SolverMaps& maps, ad::Var u,
                         ad::Var u_bvals, ad::Var flux_internal, SchemeKind kind);

}  // namespace dcflow
