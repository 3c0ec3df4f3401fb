//! Inertial proximal-gradient minimization of `H(x) = F(x) + G(x)` with a
//! smooth non-convex `F` (gradient oracle) and a convex `G` (prox oracle):
//!
//! ```text
//! x^{n+1} = prox_{alpha G}( x^n - alpha grad F(x^n) + beta (x^n - x^{n-1}) )
//! ```
//!
//! The step size is adaptive: a local Lipschitz estimate `L_n` is doubled
//! until the descent-lemma inequality holds at the candidate point, and
//! `alpha = step_safety * 2 (1 - beta) / L_n`. After an accepted step the
//! estimate is halved so it can track decreasing local curvature.
//!
//! [`assemble_model`] binds the three despeckling models to this scheme:
//! the Nakagami and combined models iterate in `w = ln u`, the
//! I-divergence model directly in `u`.

use alloc::vec::Vec;
use core::cell::Cell;
use core::fmt;

use crate::data_fidelity::{
    clamp_observation, combined_energy, combined_prox, idiv_energy, idiv_prox, nakagami_energy,
    nakagami_prox, DataModel, DataTermSpec, DomainError, ProxError, SpecError,
    DEFAULT_CLAMP_FLOOR, DEFAULT_PROX_TOL,
};
use crate::filter_bank::FilterBank;
use crate::foe_prior::{
    exp_image, prior_energy, prior_gradient_u, prior_gradient_w, ConvolutionError,
    LogOverflowError,
};
use crate::image::Image;

/// iPiano parameters. Defaults: `beta` 0.8, `max_iters` 200,
/// `rel_change_tol` 1e-5, `lipschitz_init` 1.0, `backtrack_factor` 2.0,
/// `step_safety` 0.95.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Inertia weight in `[0, 1)`.
    pub beta: f64,
    /// Outer iteration budget; 0 records the initial energy and returns
    /// the start point.
    pub max_iters: usize,
    /// Stop when `||x^{n+1} - x^n|| / max(||x^n||, 1)` falls below this.
    pub rel_change_tol: f64,
    /// Initial local Lipschitz estimate.
    pub lipschitz_init: f64,
    /// Multiplier applied to the estimate on each rejected step; > 1.
    pub backtrack_factor: f64,
    /// Fraction of the admissible step `2 (1 - beta) / L_n`, in `(0, 1)`.
    pub step_safety: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 0.8,
            max_iters: 200,
            rel_change_tol: 1e-5,
            lipschitz_init: 1.0,
            backtrack_factor: 2.0,
            step_safety: 0.95,
        }
    }
}

impl SolverConfig {
    fn validate(&self) {
        assert!((0.0..1.0).contains(&self.beta), "beta must be in [0, 1)");
        assert!(self.rel_change_tol > 0.0, "rel_change_tol must be positive");
        assert!(self.lipschitz_init > 0.0, "lipschitz_init must be positive");
        assert!(self.backtrack_factor > 1.0, "backtrack_factor must exceed 1");
        assert!(
            self.step_safety > 0.0 && self.step_safety < 1.0,
            "step_safety must be in (0, 1)"
        );
    }
}

/// Per-run record: energies include the initial point, so
/// `energies.len() == iterations_run + 1`.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub energies: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_rel_change: f64,
}

/// Failure inside a gradient/energy/prox oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    Overflow(LogOverflowError),
    Domain(DomainError),
    Prox(ProxError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Overflow(e) => e.fmt(f),
            OracleError::Domain(e) => e.fmt(f),
            OracleError::Prox(e) => e.fmt(f),
        }
    }
}

impl From<LogOverflowError> for OracleError {
    fn from(e: LogOverflowError) -> Self {
        OracleError::Overflow(e)
    }
}

impl From<DomainError> for OracleError {
    fn from(e: DomainError) -> Self {
        OracleError::Domain(e)
    }
}

impl From<ProxError> for OracleError {
    fn from(e: ProxError) -> Self {
        OracleError::Prox(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    NonFiniteEnergy { iteration: usize },
    NonFiniteGradient { iteration: usize },
    /// Backtracking doubled the Lipschitz estimate past the cap.
    BacktrackingStalled { iteration: usize, doublings: u32 },
    Oracle { iteration: usize, source: OracleError },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NonFiniteEnergy { iteration } => {
                write!(f, "non-finite energy at iteration {iteration}")
            }
            SolveError::NonFiniteGradient { iteration } => {
                write!(f, "non-finite gradient at iteration {iteration}")
            }
            SolveError::BacktrackingStalled {
                iteration,
                doublings,
            } => write!(
                f,
                "backtracking exceeded {doublings} doublings at iteration {iteration}"
            ),
            SolveError::Oracle { iteration, source } => {
                write!(f, "oracle failure at iteration {iteration}: {source}")
            }
        }
    }
}

impl core::error::Error for SolveError {}

/// The split objective the solver iterates on.
pub trait SplitObjective {
    /// Smooth part `F(x)`.
    fn smooth_energy(&self, x: &Image) -> Result<f64, OracleError>;
    /// `grad F(x)`.
    fn smooth_gradient(&self, x: &Image) -> Result<Image, OracleError>;
    /// Convex part `G(x)`.
    fn convex_energy(&self, x: &Image) -> Result<f64, OracleError>;
    /// `argmin_z ||z - v||^2 / 2 + step * G(z)`.
    fn prox(&self, v: &Image, step: f64) -> Result<Image, OracleError>;

    fn energy(&self, x: &Image) -> Result<f64, OracleError> {
        Ok(self.smooth_energy(x)? + self.convex_energy(x)?)
    }
}

const MAX_BACKTRACK_DOUBLINGS: u32 = 60;

/// One-shot secant refinement of the initial Lipschitz estimate: compares
/// gradients at `x0` and at a short step along `-grad`. Falls back to the
/// configured value when the gradient vanishes or the probe fails.
fn probe_initial_lipschitz<P: SplitObjective>(
    x0: &Image,
    grad0: &Image,
    problem: &P,
    fallback: f64,
) -> f64 {
    let gnorm = grad0.norm();
    if !gnorm.is_finite() || gnorm == 0.0 {
        return fallback;
    }
    let delta = 1e-3 * x0.norm().max(1.0);
    let mut probe = x0.clone();
    probe.scaled_add(-delta / gnorm, grad0);
    let grad_probe = match problem.smooth_gradient(&probe) {
        Ok(g) if g.is_finite() => g,
        _ => return fallback,
    };
    let mut diff = grad_probe;
    diff.scaled_add(-1.0, grad0);
    let estimate = diff.norm() / delta;
    if estimate.is_finite() && estimate > 0.0 {
        estimate
    } else {
        fallback
    }
}

/// Runs the inertial update from `x0` (with `x^{-1} = x0`) until the
/// relative change drops below tolerance or the iteration budget is spent.
/// Returns the final iterate and the full trace.
pub fn ipiano_solve<P: SplitObjective>(
    x0: &Image,
    problem: &P,
    cfg: &SolverConfig,
) -> Result<(Image, SolveTrace), SolveError> {
    cfg.validate();
    let at = |iteration: usize| move |source: OracleError| SolveError::Oracle { iteration, source };

    let mut x = x0.clone();
    let mut x_prev = x0.clone();

    let mut f_curr = problem.smooth_energy(&x).map_err(at(0))?;
    let g_curr = problem.convex_energy(&x).map_err(at(0))?;
    let h0 = f_curr + g_curr;
    if !h0.is_finite() {
        return Err(SolveError::NonFiniteEnergy { iteration: 0 });
    }

    let mut energies = Vec::with_capacity(cfg.max_iters + 1);
    energies.push(h0);
    let mut step_sizes = Vec::with_capacity(cfg.max_iters);
    let mut lipschitz = cfg.lipschitz_init;
    let mut converged = false;
    let mut final_rel_change = f64::INFINITY;
    let mut iterations_run = 0;

    for n in 0..cfg.max_iters {
        let grad = problem.smooth_gradient(&x).map_err(at(n))?;
        if !grad.is_finite() {
            return Err(SolveError::NonFiniteGradient { iteration: n });
        }
        if n == 0 {
            lipschitz = probe_initial_lipschitz(&x, &grad, problem, cfg.lipschitz_init);
        }

        // inertia direction beta (x^n - x^{n-1})
        let mut inertia = x.clone();
        inertia.scaled_add(-1.0, &x_prev);

        let mut doublings = 0u32;
        let (x_next, f_next, alpha) = loop {
            let alpha = cfg.step_safety * 2.0 * (1.0 - cfg.beta) / lipschitz;
            let mut v = x.clone();
            v.scaled_add(-alpha, &grad);
            v.scaled_add(cfg.beta, &inertia);

            // A failing prox or an overflowing candidate energy means the
            // trial step left the usable region; shrinking the step is the
            // same remedy as a failed descent check.
            let accepted = match problem.prox(&v, alpha) {
                Ok(candidate) => match problem.smooth_energy(&candidate) {
                    Ok(f_cand) => {
                        let mut dx = candidate.clone();
                        dx.scaled_add(-1.0, &x);
                        let linear = grad.dot(&dx);
                        let quad = 0.5 * lipschitz * dx.dot(&dx);
                        // round-off slack; vanishes as fast as F itself
                        let slack = 1e-12 * f_curr.abs();
                        if f_cand <= f_curr + linear + quad + slack {
                            Some((candidate, f_cand, alpha))
                        } else {
                            None
                        }
                    }
                    Err(_) => None,
                },
                Err(_) => None,
            };
            if let Some(step) = accepted {
                break step;
            }
            lipschitz *= cfg.backtrack_factor;
            doublings += 1;
            if doublings > MAX_BACKTRACK_DOUBLINGS {
                return Err(SolveError::BacktrackingStalled {
                    iteration: n,
                    doublings,
                });
            }
        };

        let g_next = problem.convex_energy(&x_next).map_err(at(n + 1))?;
        let h_next = f_next + g_next;
        if !h_next.is_finite() {
            return Err(SolveError::NonFiniteEnergy { iteration: n + 1 });
        }

        final_rel_change = x_next.distance(&x) / x.norm().max(1.0);
        energies.push(h_next);
        step_sizes.push(alpha);
        iterations_run = n + 1;

        x_prev = x;
        x = x_next;
        f_curr = f_next;
        // let the estimate relax so steps can grow again
        lipschitz *= 0.5;

        if final_rel_change < cfg.rel_change_tol {
            converged = true;
            break;
        }
    }

    Ok((
        x,
        SolveTrace {
            energies,
            step_sizes,
            iterations_run,
            converged,
            final_rel_change,
        },
    ))
}

/// A despeckling model bound to its solve domain: oracles, start point and
/// the mapping back to amplitudes.
#[derive(Debug)]
pub struct DespeckleProblem<'a> {
    bank: &'a FilterBank,
    observed: Image,
    spec: DataTermSpec,
    prox_tol: f64,
    max_newton_iterations: Cell<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssembleError {
    Spec(SpecError),
    Convolution(ConvolutionError),
}

impl fmt::Display for AssembleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssembleError::Spec(e) => e.fmt(f),
            AssembleError::Convolution(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for AssembleError {}

/// Binds a data-term spec, a filter bank and an observation to a solvable
/// problem. The observation is clamped to [`DEFAULT_CLAMP_FLOOR`] here;
/// the Nakagami and combined models run in `w` with `w0 = ln f~`, the
/// I-divergence model runs in `u` with `u0 = f~`.
pub fn assemble_model<'a>(
    spec: DataTermSpec,
    bank: &'a FilterBank,
    observed: &Image,
) -> Result<DespeckleProblem<'a>, AssembleError> {
    spec.validate().map_err(AssembleError::Spec)?;
    let s = bank.kernel_size();
    if s > observed.width() || s > observed.height() {
        return Err(AssembleError::Convolution(
            ConvolutionError::KernelLargerThanImage {
                size: s,
                width: observed.width(),
                height: observed.height(),
            },
        ));
    }
    Ok(DespeckleProblem {
        bank,
        observed: clamp_observation(observed, DEFAULT_CLAMP_FLOOR),
        spec,
        prox_tol: DEFAULT_PROX_TOL,
        max_newton_iterations: Cell::new(0),
    })
}

impl<'a> DespeckleProblem<'a> {
    /// Clamped observation `f~`.
    pub fn observed(&self) -> &Image {
        &self.observed
    }

    pub fn spec(&self) -> &DataTermSpec {
        &self.spec
    }

    /// Start point in the solve domain.
    pub fn initial_point(&self) -> Image {
        match self.spec.model {
            DataModel::NakagamiLog | DataModel::Combined => self.observed.map(libm::log),
            DataModel::IDivergence => self.observed.clone(),
        }
    }

    /// Maps a solve-domain iterate back to amplitudes.
    pub fn to_amplitude(&self, x: &Image) -> Image {
        match self.spec.model {
            DataModel::NakagamiLog | DataModel::Combined => x.map(libm::exp),
            DataModel::IDivergence => x.clone(),
        }
    }

    /// Worst per-pixel Newton count seen across all prox calls so far.
    pub fn max_newton_iterations(&self) -> u32 {
        self.max_newton_iterations.get()
    }
}

impl<'a> SplitObjective for DespeckleProblem<'a> {
    fn smooth_energy(&self, x: &Image) -> Result<f64, OracleError> {
        match self.spec.model {
            DataModel::NakagamiLog | DataModel::Combined => {
                let u = exp_image(x)?;
                Ok(prior_energy(&u, self.bank))
            }
            DataModel::IDivergence => Ok(prior_energy(x, self.bank)),
        }
    }

    fn smooth_gradient(&self, x: &Image) -> Result<Image, OracleError> {
        match self.spec.model {
            DataModel::NakagamiLog | DataModel::Combined => {
                Ok(prior_gradient_w(x, self.bank)?)
            }
            DataModel::IDivergence => Ok(prior_gradient_u(x, self.bank)),
        }
    }

    fn convex_energy(&self, x: &Image) -> Result<f64, OracleError> {
        match self.spec.model {
            DataModel::NakagamiLog => Ok(nakagami_energy(x, &self.observed, self.spec.lambda)),
            DataModel::IDivergence => {
                Ok(idiv_energy(x, &self.observed, self.spec.lambda)?)
            }
            DataModel::Combined => Ok(combined_energy(
                x,
                &self.observed,
                self.spec.lambda1,
                self.spec.lambda2,
            )?),
        }
    }

    fn prox(&self, v: &Image, step: f64) -> Result<Image, OracleError> {
        let result = match self.spec.model {
            DataModel::NakagamiLog => {
                nakagami_prox(v, &self.observed, step * self.spec.lambda, self.prox_tol)?
            }
            DataModel::IDivergence => {
                return Ok(idiv_prox(v, &self.observed, step * self.spec.lambda));
            }
            DataModel::Combined => combined_prox(
                v,
                &self.observed,
                step,
                self.spec.lambda1,
                self.spec.lambda2,
                self.prox_tol,
            )?,
        };
        self.max_newton_iterations
            .set(self.max_newton_iterations.get().max(result.newton_iterations));
        Ok(result.image)
    }
}
