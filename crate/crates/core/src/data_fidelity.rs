//! Data-fidelity terms tying the estimate to the speckled observation:
//! the multi-look amplitude (Nakagami) term in the log domain, the
//! I-divergence term in the amplitude domain, and their combination —
//! energies plus proximal maps.
//!
//! Every prox here is pixelwise: the coupled objective separates, so each
//! pixel reduces to a strictly increasing scalar root problem (Newton with
//! a bisection safeguard) or, for the I-divergence term, a closed form.

use core::fmt;

use crate::foe_prior::LogOverflowError;
use crate::image::Image;

/// Observed amplitudes are clamped to this floor (on the 0..=255 scale)
/// before any log or division.
pub const DEFAULT_CLAMP_FLOOR: f64 = 1.0;

/// Absolute tolerance on the per-pixel optimality residual.
pub const DEFAULT_PROX_TOL: f64 = 1e-12;

/// Per-pixel Newton iteration cap; exceeding it is an error.
pub const NEWTON_ITERATION_CAP: u32 = 30;

/// Which fidelity model a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataModel {
    /// Multi-look amplitude likelihood, solved in `w = ln u`.
    NakagamiLog,
    /// I-divergence, solved directly in `u`.
    IDivergence,
    /// Both terms, solved in `w`.
    Combined,
}

impl fmt::Display for DataModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataModel::NakagamiLog => f.write_str("nakagami"),
            DataModel::IDivergence => f.write_str("idiv"),
            DataModel::Combined => f.write_str("combined"),
        }
    }
}

/// Fidelity model selection with its weights.
///
/// `lambda` drives the single-term models; `lambda1`/`lambda2` drive the
/// combined model. Weights not used by the selected model are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataTermSpec {
    pub model: DataModel,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub looks: f64,
}

impl DataTermSpec {
    pub fn nakagami(lambda: f64, looks: f64) -> Self {
        DataTermSpec {
            model: DataModel::NakagamiLog,
            lambda,
            lambda1: 0.0,
            lambda2: 0.0,
            looks,
        }
    }

    pub fn idiv(lambda: f64, looks: f64) -> Self {
        DataTermSpec {
            model: DataModel::IDivergence,
            lambda,
            lambda1: 0.0,
            lambda2: 0.0,
            looks,
        }
    }

    pub fn combined(lambda1: f64, lambda2: f64, looks: f64) -> Self {
        DataTermSpec {
            model: DataModel::Combined,
            lambda: 0.0,
            lambda1,
            lambda2,
            looks,
        }
    }

    /// Checks that the weights the selected model uses are strictly
    /// positive (combined allows one of the two to be zero) and looks > 0.
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.looks > 0.0) {
            return Err(SpecError::NonPositiveLooks { looks: self.looks });
        }
        match self.model {
            DataModel::NakagamiLog | DataModel::IDivergence => {
                if !(self.lambda > 0.0) {
                    return Err(SpecError::NonPositiveWeight { name: "lambda" });
                }
            }
            DataModel::Combined => {
                if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
                    return Err(SpecError::NonPositiveWeight { name: "lambda1/lambda2" });
                }
                if self.lambda1 == 0.0 && self.lambda2 == 0.0 {
                    return Err(SpecError::NonPositiveWeight { name: "lambda1+lambda2" });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecError {
    NonPositiveWeight { name: &'static str },
    NonPositiveLooks { looks: f64 },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::NonPositiveWeight { name } => {
                write!(f, "data term weight {name} must be positive")
            }
            SpecError::NonPositiveLooks { looks } => {
                write!(f, "number of looks must be positive, got {looks}")
            }
        }
    }
}

impl core::error::Error for SpecError {}

/// Output of a Newton-based prox: the solution plus convergence evidence.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub image: Image,
    /// Worst per-pixel Newton iteration count.
    pub newton_iterations: u32,
    /// Worst per-pixel |phi| at return; at most the requested tolerance.
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxError {
    /// Newton failed to drive |phi| under the tolerance within the cap;
    /// carries the worst pixel.
    MaxIterations { x: usize, y: usize, residual: f64 },
}

impl fmt::Display for ProxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxError::MaxIterations { x, y, residual } => write!(
                f,
                "prox Newton exceeded {NEWTON_ITERATION_CAP} iterations at pixel ({x}, {y}), residual {residual:e}"
            ),
        }
    }
}

impl core::error::Error for ProxError {}

/// Pixel has a non-positive value where the I-divergence needs `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainError {
    pub index: usize,
    pub value: f64,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "I-divergence needs positive amplitudes, got {} at pixel index {}",
            self.value, self.index
        )
    }
}

impl core::error::Error for DomainError {}

/// Clamps observed amplitudes to `floor` from below.
pub fn clamp_observation(f: &Image, floor: f64) -> Image {
    f.map(|p| p.max(floor))
}

/// Log-domain multi-look amplitude energy
/// `(lambda/2) * sum_p (2 w_p + f_p^2 e^{-2 w_p})`.
pub fn nakagami_energy(w: &Image, f: &Image, lambda: f64) -> f64 {
    assert!(w.same_shape(f), "shape mismatch");
    let mut acc = 0.0;
    for (&wp, &fp) in w.pixels().iter().zip(f.pixels()) {
        acc += 2.0 * wp + fp * fp * libm::exp(-2.0 * wp);
    }
    0.5 * lambda * acc
}

/// I-divergence energy `(lambda/2) * sum_p (u_p^2 - 2 f_p^2 log u_p)`.
/// Errors when any `u_p <= 0`.
pub fn idiv_energy(u: &Image, f: &Image, lambda: f64) -> Result<f64, DomainError> {
    assert!(u.same_shape(f), "shape mismatch");
    let mut acc = 0.0;
    for (index, (&up, &fp)) in u.pixels().iter().zip(f.pixels()).enumerate() {
        if !(up > 0.0) {
            return Err(DomainError { index, value: up });
        }
        acc += up * up - 2.0 * fp * fp * libm::log(up);
    }
    Ok(0.5 * lambda * acc)
}

/// Combined energy
/// `sum_p [(lambda1/2)(2 w_p + f_p^2 e^{-2 w_p}) + (lambda2/2)(e^{2 w_p} - 2 f_p^2 w_p)]`.
///
/// Guards `e^{2w}` like the prior guards `e^w`: any `w_p` above half of
/// [`crate::foe_prior::LOG_OVERFLOW_BOUND`] is an error.
pub fn combined_energy(
    w: &Image,
    f: &Image,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64, LogOverflowError> {
    assert!(w.same_shape(f), "shape mismatch");
    let bound = crate::foe_prior::LOG_OVERFLOW_BOUND / 2.0;
    let mut acc = 0.0;
    for (index, (&wp, &fp)) in w.pixels().iter().zip(f.pixels()).enumerate() {
        if !(wp <= bound) {
            return Err(LogOverflowError { index, value: wp });
        }
        let f2 = fp * fp;
        let em2w = libm::exp(-2.0 * wp);
        acc += 0.5 * lambda1 * (2.0 * wp + f2 * em2w);
        acc += 0.5 * lambda2 * (libm::exp(2.0 * wp) - 2.0 * f2 * wp);
    }
    Ok(acc)
}

/// Scalar root state returned by the safeguarded Newton kernel.
struct PixelRoot {
    value: f64,
    iterations: u32,
    residual: f64,
}

/// Finds the unique root of a strictly increasing `phi` by Newton steps
/// safeguarded with bisection on a sign-changing bracket.
///
/// `lo`/`hi` seed the bracket and are expanded (doubling stride) until the
/// sign change is enclosed. On iteration-cap failure the error carries the
/// best |phi| reached.
fn newton_increasing_root(
    phi: &impl Fn(f64) -> (f64, f64),
    start: f64,
    lo0: f64,
    hi0: f64,
    tol: f64,
) -> Result<PixelRoot, f64> {
    let (mut value, mut deriv) = phi(start);
    if value.abs() <= tol {
        return Ok(PixelRoot {
            value: start,
            iterations: 0,
            residual: value.abs(),
        });
    }

    let mut lo = lo0.min(start);
    let mut hi = hi0.max(start);
    let mut stride = 1.0;
    while phi(lo).0 > 0.0 {
        lo -= stride;
        stride *= 2.0;
    }
    stride = 1.0;
    while phi(hi).0 < 0.0 {
        hi += stride;
        stride *= 2.0;
    }

    let mut w = start;
    let mut best = (w, value.abs());
    for iterations in 1..=NEWTON_ITERATION_CAP {
        // tighten the bracket around the sign change
        if value > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let newton = w - value / deriv;
        w = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let (v, d) = phi(w);
        value = v;
        deriv = d;
        if value.abs() < best.1 {
            best = (w, value.abs());
        }
        if value.abs() <= tol {
            return Ok(PixelRoot {
                value: w,
                iterations,
                residual: value.abs(),
            });
        }
    }
    Err(best.1)
}

fn prox_pointwise(
    anchor: &Image,
    f: &Image,
    tol: f64,
    phi: impl Fn(f64, f64, f64) -> (f64, f64),
) -> Result<ProxResult, ProxError> {
    assert!(anchor.same_shape(f), "shape mismatch");
    let mut out = anchor.clone();
    let mut worst_iters = 0u32;
    let mut worst_residual = 0.0f64;
    for (index, p) in out.pixels_mut().iter_mut().enumerate() {
        let anchor_p = *p;
        let fp = f.pixels()[index];
        // Newton from the anchor, bracketed around [anchor, log f~].
        let log_f = if fp > 0.0 { libm::log(fp) } else { anchor_p };
        let lo = anchor_p.min(log_f) - 1.0;
        let hi = anchor_p.max(log_f) + 1.0;
        let scalar_phi = |w: f64| phi(w, anchor_p, fp);
        match newton_increasing_root(&scalar_phi, anchor_p, lo, hi, tol) {
            Ok(root) => {
                *p = root.value;
                worst_iters = worst_iters.max(root.iterations);
                worst_residual = worst_residual.max(root.residual);
            }
            Err(residual) => {
                let (x, y) = anchor.coords(index);
                return Err(ProxError::MaxIterations { x, y, residual });
            }
        }
    }
    Ok(ProxResult {
        image: out,
        newton_iterations: worst_iters,
        max_residual: worst_residual,
    })
}

/// Prox of the log-domain Nakagami term at step `tau_lambda`:
/// per pixel the root of `phi(w) = w - w_hat + tau_lambda (1 - f^2 e^{-2w})`.
pub fn nakagami_prox(
    w_hat: &Image,
    f: &Image,
    tau_lambda: f64,
    tol: f64,
) -> Result<ProxResult, ProxError> {
    prox_pointwise(w_hat, f, tol, move |w, w_hat_p, fp| {
        let t = tau_lambda * fp * fp * libm::exp(-2.0 * w);
        (w - w_hat_p + tau_lambda - t, 1.0 + 2.0 * t)
    })
}

/// Prox of the combined term: per pixel the root of
/// `phi(w) = w - w_hat + tau [lambda1 (1 - f^2 e^{-2w}) + lambda2 (e^{2w} - f^2)]`.
/// `phi' = 1 + tau [2 lambda1 f^2 e^{-2w} + 2 lambda2 e^{2w}] > 0`, so the
/// root is unique.
pub fn combined_prox(
    w_hat: &Image,
    f: &Image,
    tau: f64,
    lambda1: f64,
    lambda2: f64,
    tol: f64,
) -> Result<ProxResult, ProxError> {
    prox_pointwise(w_hat, f, tol, move |w, w_hat_p, fp| {
        let f2 = fp * fp;
        let em2w = libm::exp(-2.0 * w);
        let e2w = libm::exp(2.0 * w);
        let s = tau * lambda1 * f2 * em2w;
        let q = tau * lambda2 * e2w;
        (
            w - w_hat_p + tau * lambda1 - s + q - tau * lambda2 * f2,
            1.0 + 2.0 * s + 2.0 * q,
        )
    })
}

/// Closed-form prox of the I-divergence term:
/// `u_p = (u_hat_p + sqrt(u_hat_p^2 + 4 (1 + tau_lambda) tau_lambda f_p^2)) / (2 (1 + tau_lambda))`.
pub fn idiv_prox(u_hat: &Image, f: &Image, tau_lambda: f64) -> Image {
    assert!(u_hat.same_shape(f), "shape mismatch");
    let a = 1.0 + tau_lambda;
    let mut out = u_hat.clone();
    for (p, &fp) in out.pixels_mut().iter_mut().zip(f.pixels()) {
        let u_hat_p = *p;
        *p = (u_hat_p + libm::sqrt(u_hat_p * u_hat_p + 4.0 * a * tau_lambda * fp * fp)) / (2.0 * a);
    }
    out
}
