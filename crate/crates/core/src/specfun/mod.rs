//! Special sequences: Bessel values by Miller's algorithm, the polynomials
//! of the Laguerre-type recurrence, even Mathieu Fourier coefficients, and
//! localized eigenvectors of the almost Mathieu operator.

mod bessel;
mod harper;
mod mathieu;
mod poly;

pub use bessel::{bessel_table, BesselTable};
pub use harper::{
    almost_mathieu_eigen, looks_rational, LocalizedEigenvector, Selector, GOLDEN_FREQ, MIN_BOX,
};
pub use mathieu::{mathieu_coeffs, MathieuCoeffs};
pub use poly::{poly_exact_rational, poly_generating_coeffs, poly_sequence, PolySequence};
