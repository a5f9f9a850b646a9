#pragma once

// Constants measured once by `mlab oracle calibrate` and frozen here. Lower
// bounds carry half the measured minimum and upper bounds twice the measured
// maximum, except where a criterion fixes the margin (bilinear pin).

namespace mlab {

// Cone identity constant per dimension (Gaussian data, Richardson in N for n=2,
// finest grid N=32 for n=3).
inline constexpr double kImClean2 = 6.324;
inline constexpr double kImClean3 = 25.46;
// min lambda_i / b_r over the weight family; the exact minimum is exp(-1/4)/2.
inline constexpr double kHessianMinorant = 0.38;
// int J4(u,u) dt >= kCoercivity ||P_{1/r} |D|^{1/2} |u|^2||^2, diag(1,-1), shell 3, N=64.
inline constexpr double kCoercivity = 1.8e4;
// J4(u,u) >= kGaussianLower int int b_r(x-y) |G|^2, diag(1,-1), shell 3.
inline constexpr double kGaussianLower = 4.2;
// b_r^ >= kFourierFloor P_{1/r}^ |xi|^{1-n} on the lattice (deterministic, rounded down).
inline constexpr double kFourierFloor = 2.4;
// Normalized bilinear ratio for counter-propagating packets: above every
// transversal value, a third of the co-located minimum.
inline constexpr double kBilinearPin = 0.138;
// sup_j Besov value <= kBesovBound lambda^{1/2} |u0|^2, diag(1,-1), shell 3, T = 1/4.
inline constexpr double kBesovBound = 0.16;
// |u conj(v)|^2_{L^2} <= kBernstein mu^{n-1} (hyperplane mass integral).
inline constexpr double kBernstein = 0.14;
// Non-coercivity ratio for g = Id on random dealiased and single-shell data, N=64.
inline constexpr double kIsotropicGap = 0.58;

inline constexpr double kAuditTolerance = 1e-3;
inline constexpr double kEnvelopeRatioBound = 2.0;

}  // namespace mlab
