//! Foundation numerics: quadrature, orthogonal polynomials, Chebyshev interpolation,
//! complex special functions and a dense complex solver.

pub mod cheb;
pub mod legendre;
pub mod linalg;
pub mod quad;
pub mod special;

pub use cheb::{cheb_fit, cheb_points, ChebInterpolant};
pub use legendre::{legendre_eval, legendre_transform_pair, LegendreTransform, Square};
pub use linalg::{lu_factor, lu_solve, CMatrix, DenseLU};
pub use quad::{adaptive_quad, gauss_legendre, AdaptiveQuad, QuadRule};
pub use special::{
    erf, erfc, erfi, faddeeva_related, faddeeva_w, gamma_fn, hermite_f, ln_factorial,
    ln_gamma_half, ErrorFunctions,
};
