//! Multiplicative-noise (speckle) reduction built on a filter-response
//! image prior: a sum of Lorentzian potentials over linear filter
//! responses, combined with multi-look amplitude data terms and minimized
//! by an inertial proximal-gradient scheme.
//!
//! The crate is `no_std` (with `alloc`): pure numerics over row-major
//! `f64` buffers. File formats, image I/O and the command-line front end
//! live in the companion `despeckle-foe` crate.
//!
//! Module map:
//! - [`image`]: the pixel buffer type.
//! - [`filter_bank`]: filter storage, the FOEBANK text format, the DCT
//!   substitute bank.
//! - [`foe_prior`]: periodic convolution + adjoint, prior energy and
//!   gradients in `u` and `w = ln u`.
//! - [`data_fidelity`]: Nakagami / I-divergence / combined energies and
//!   proximal maps.
//! - [`ipiano`]: the inertial forward-backward solver and model assembly.
//! - [`speckle`]: synthetic multi-look speckle and its validation helpers.
//! - [`metrics`]: PSNR and SSIM.

#![no_std]
// negated float comparisons like `!(x > 0.0)` are deliberate: they treat
// NaN as a validation failure instead of letting it slip through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data_fidelity;
pub mod filter_bank;
pub mod foe_prior;
pub mod image;
pub mod ipiano;
pub mod metrics;
pub mod speckle;

pub use image::Image;
