//! Special functions: Daubechies wavelets in the Fourier domain and on dyadic
//! grids, spherical and half-integer Bessel functions, Legendre polynomials.

mod filters;

pub mod bessel;
pub mod legendre;
pub mod wavelet;

pub use bessel::{
    bessel_half, first_stationary_point, spherical_bessel, spherical_bessel_all,
    spherical_bessel_sup, BesselEvalConfig,
};
pub use legendre::{gauss_legendre, normalized_legendre};
pub use wavelet::{
    band_infimum, band_onset, cascade_values, CascadeValues, FourierEnvelope, WaveletFamily,
};
