//! Active power flow solvers with fixed voltage magnitudes.
//!
//! One-shot baselines ([`dcpf`], [`mdcpf`]), the lossy fixed-point
//! iterations ([`lmdcpf`], [`ldcpf`]), Newton oracles ([`newton_raphson`],
//! [`chord_newton`]) and the scalar two-bus closed form.

mod baseline;
mod lossy;
mod newton;
mod residual;
mod twobus;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::splinalg::norm_inf;

pub use baseline::{dcpf, mdcpf};
pub use lossy::{ldcpf, lmdcpf};
pub use newton::{chord_newton, chord_steps, newton_raphson, newton_steps, reference_angles, NonlinearSystem, PowerFlowSystem};
pub use residual::{active_injections, active_residual, jacobian};
pub use twobus::two_bus_closed_form;

/// Behaviour when a branch variable leaves `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiGuard {
    /// Stop with [`Termination::PsiOutOfRange`].
    #[default]
    Fail,
    /// Clamp to `+-(1 - 1e-12)` and flag the iteration.
    Clamp,
}

/// Magnitude used by [`PsiGuard::Clamp`].
pub const PSI_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Stop when the infinity norm of successive branch variables is below this.
    pub tolerance: f64,
    /// Exact angles used to fill [`IterationRecord::theta_err_deg`].
    pub reference: Option<Vec<f64>>,
    pub psi_guard: PsiGuard,
    /// Keep the cycle variables at zero (the simplified L-MDCPF).
    pub freeze_cycle_vars: bool,
    /// Starting angles; flat start when absent.
    pub initial_angles: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-10,
            reference: None,
            psi_guard: PsiGuard::Fail,
            freeze_cycle_vars: false,
            initial_angles: None,
        }
    }
}

impl SolveOptions {
    pub fn with_reference(mut self, theta: Vec<f64>) -> Self {
        self.reference = Some(theta);
        self
    }

    pub fn with_initial_angles(mut self, theta: Vec<f64>) -> Self {
        self.initial_angles = Some(theta);
        self
    }

    pub fn with_max_iterations(mut self, k: usize) -> Self {
        self.max_iterations = k;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_guard(mut self, guard: PsiGuard) -> Self {
        self.psi_guard = guard;
        self
    }

    pub fn frozen_cycles(mut self) -> Self {
        self.freeze_cycle_vars = true;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidNetwork("max_iterations must be at least 1".into()));
        }
        for v in [&self.reference, &self.initial_angles].into_iter().flatten() {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Iterate `(psi, x, theta_r)` with its residual norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverState {
    pub k: usize,
    pub psi: Vec<f64>,
    pub x: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub injection_residual: f64,
    pub kvl_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Max bus angle error against the reference, degrees.
    pub theta_err_deg: Option<f64>,
    /// `|psi[k] - psi[k-1]|_inf`; absent at `k = 0`.
    pub psi_step: Option<f64>,
    pub inj_residual: f64,
    pub kvl_residual: f64,
    /// Set when the clamp guard modified this iterate.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    PsiOutOfRange {
        iteration: usize,
        branch: usize,
        value: f64,
    },
    LinearFailure {
        message: String,
    },
    Diverged {
        iteration: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dcpf,
    Mdcpf,
    Ldcpf,
    Lmdcpf,
    Nr,
    Cnr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dcpf,
        Method::Mdcpf,
        Method::Ldcpf,
        Method::Lmdcpf,
        Method::Nr,
        Method::Cnr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dcpf => "dcpf",
            Method::Mdcpf => "mdcpf",
            Method::Ldcpf => "ldcpf",
            Method::Lmdcpf => "lmdcpf",
            Method::Nr => "nr",
            Method::Cnr => "cnr",
        }
    }

    /// True for methods computed in a single step.
    pub fn is_one_shot(self) -> bool {
        matches!(self, Method::Dcpf | Method::Mdcpf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidNetwork(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub state: SolverState,
    pub trace: IterationTrace,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.trace.termination == Termination::Converged
    }

    /// Iterations performed.
    pub fn iterations(&self) -> usize {
        self.state.k
    }

    /// The final state, or the termination turned into an error.
    pub fn ensure_converged(&self) -> Result<&SolverState> {
        match &self.trace.termination {
            Termination::Converged => Ok(&self.state),
            Termination::MaxIterations => Err(Error::MaxIterations(self.state.k)),
            Termination::PsiOutOfRange {
                iteration,
                branch,
                value,
            } => Err(Error::PsiOutOfRange {
                iteration: *iteration,
                branch: *branch,
                value: *value,
            }),
            Termination::LinearFailure { message } => Err(Error::LinearFailure(message.clone())),
            Termination::Diverged { iteration } => Err(Error::Diverged(*iteration)),
        }
    }

    /// First iteration whose angle error is at most `deg`, if a reference was given.
    pub fn iterations_to(&self, deg: f64) -> Option<usize> {
        self.trace
            .records
            .iter()
            .find(|r| r.theta_err_deg.is_some_and(|e| e <= deg))
            .map(|r| r.k)
    }
}

/// Runs `method` with options `opts`.
pub fn solve(method: Method, net: &Network, cache: &TopologyCache, opts: &SolveOptions) -> Result<SolveReport> {
    match method {
        Method::Dcpf => baseline::dcpf_report(net, cache, opts),
        Method::Mdcpf => baseline::mdcpf_report(net, cache, opts),
        Method::Ldcpf => ldcpf(net, cache, opts),
        Method::Lmdcpf => lmdcpf(net, cache, opts),
        Method::Nr | Method::Cnr => {
            let theta0 = opts
                .initial_angles
                .clone()
                .unwrap_or_else(|| vec![0.0; cache.n()]);
            if method == Method::Nr {
                newton_raphson(net, cache, &theta0, opts)
            } else {
                chord_newton(net, cache, &theta0, opts)
            }
        }
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `max_i |wrap(a_i - b_i)|` in degrees.
pub fn angle_error_deg(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max(wrap_angle(x - y).abs()))
        .to_degrees()
}

/// `|C^T arcsin(psi)|_inf` with each cycle sum wrapped to `(-pi, pi]`.
pub fn kvl_residual(cache: &TopologyCache, psi: &[f64]) -> f64 {
    if cache.is_radial() {
        return 0.0;
    }
    let angles: Vec<f64> = psi.iter().map(|p| p.clamp(-1.0, 1.0).asin()).collect();
    cache
        .cycles()
        .apply_t(&angles)
        .into_iter()
        .fold(0.0_f64, |m, s| m.max(wrap_angle(s).abs()))
}

/// Bookkeeping shared by the iterative solvers.
pub(crate) struct Recorder<'a> {
    net: &'a Network,
    cache: &'a TopologyCache,
    reference: Option<&'a [f64]>,
    records: Vec<IterationRecord>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(net: &'a Network, cache: &'a TopologyCache, opts: &'a SolveOptions) -> Self {
        Self {
            net,
            cache,
            reference: opts.reference.as_deref(),
            records: Vec::new(),
        }
    }

    /// Records iterate `k` and returns the corresponding state.
    pub(crate) fn record(
        &mut self,
        k: usize,
        psi: Vec<f64>,
        x: Vec<f64>,
        theta_r: Vec<f64>,
        psi_step: Option<f64>,
        clamped: bool,
    ) -> Result<SolverState> {
        let inj = norm_inf(&active_residual(self.net, self.cache, &theta_r)?);
        let kvl = kvl_residual(self.cache, &psi);
        self.records.push(IterationRecord {
            k,
            theta_err_deg: self.reference.map(|r| angle_error_deg(r, &theta_r)),
            psi_step,
            inj_residual: inj,
            kvl_residual: kvl,
            clamped,
        });
        Ok(SolverState {
            k,
            psi,
            x,
            theta_r,
            injection_residual: inj,
            kvl_residual: kvl,
        })
    }

    pub(crate) fn finish(self, method: Method, state: SolverState, termination: Termination) -> SolveReport {
        SolveReport {
            state,
            trace: IterationTrace {
                method,
                records: self.records,
                termination,
            },
        }
    }
}

pub(crate) fn sin_diffs(cache: &TopologyCache, theta: &[f64]) -> Vec<f64> {
    cache.incidence().diffs(theta).into_iter().map(f64::sin).collect()
}

pub(crate) fn max_step(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn check_injections(net: &Network, cache: &TopologyCache) -> Result<Vec<f64>> {
    let p = net.injections_reduced();
    if p.len() != cache.n() {
        return Err(Error::DimensionMismatch {
            expected: cache.n(),
            got: p.len(),
        });
    }
    Ok(p)
}
