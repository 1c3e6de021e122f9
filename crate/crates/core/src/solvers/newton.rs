use std::sync::Arc;

use super::residual::{active_injections, jacobian};
use super::{check_injections, max_step, sin_diffs, Method, Recorder, SolveOptions, SolveReport, Termination};
use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::splinalg::{norm_inf, CscMatrix, SparseLu, Symbolic};

/// A square system `G(z) = 0` with a sparse Jacobian.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;
    fn mismatch(&self, z: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, z: &[f64]) -> Result<CscMatrix>;

    /// Ordering to reuse across Jacobian factorizations.
    fn symbolic(&self) -> Option<Arc<Symbolic>> {
        None
    }
}

/// `G(theta) = f(theta) - P_r` for the fixed-voltage active power equations.
pub struct PowerFlowSystem<'a> {
    cache: &'a TopologyCache,
    p: Vec<f64>,
}

impl<'a> PowerFlowSystem<'a> {
    pub fn new(net: &Network, cache: &'a TopologyCache) -> Result<Self> {
        Ok(Self {
            cache,
            p: check_injections(net, cache)?,
        })
    }
}

impl NonlinearSystem for PowerFlowSystem<'_> {
    fn dim(&self) -> usize {
        self.cache.n()
    }

    fn mismatch(&self, z: &[f64]) -> Result<Vec<f64>> {
        let f = active_injections(self.cache, z)?;
        Ok(f.iter().zip(&self.p).map(|(f, p)| f - p).collect())
    }

    fn jacobian(&self, z: &[f64]) -> Result<CscMatrix> {
        jacobian(self.cache, z)
    }

    fn symbolic(&self) -> Option<Arc<Symbolic>> {
        Some(Arc::clone(self.cache.symbolic()))
    }
}

fn factor<S: NonlinearSystem>(system: &S, z: &[f64]) -> Result<SparseLu> {
    let j = system.jacobian(z)?;
    match system.symbolic() {
        Some(sym) => SparseLu::factorize_with(sym, &j),
        None => SparseLu::factorize(&j),
    }
}

/// Iterator over Newton or chord-Newton iterates `z[1], z[2], ...`.
pub struct NewtonSteps<'s, S: NonlinearSystem> {
    system: &'s S,
    z: Vec<f64>,
    frozen: Option<SparseLu>,
    failed: bool,
}

impl<S: NonlinearSystem> Iterator for NewtonSteps<'_, S> {
    type Item = Result<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let step = (|| {
            let g = self.system.mismatch(&self.z)?;
            let dz = match &self.frozen {
                Some(lu) => lu.solve(&g)?,
                None => factor(self.system, &self.z)?.solve(&g)?,
            };
            for (zi, d) in self.z.iter_mut().zip(dz) {
                *zi -= d;
            }
            Ok(self.z.clone())
        })();
        self.failed = step.is_err();
        Some(step)
    }
}

/// Full Newton: `z <- z - G'(z)^{-1} G(z)`.
pub fn newton_steps<S: NonlinearSystem>(system: &S, z0: Vec<f64>) -> NewtonSteps<'_, S> {
    NewtonSteps {
        system,
        z: z0,
        frozen: None,
        failed: false,
    }
}

/// Chord Newton: `z <- z - G'(z0)^{-1} G(z)` with one factorization.
pub fn chord_steps<S: NonlinearSystem>(system: &S, z0: Vec<f64>) -> Result<NewtonSteps<'_, S>> {
    let lu = factor(system, &z0)?;
    Ok(NewtonSteps {
        system,
        z: z0,
        frozen: Some(lu),
        failed: false,
    })
}

/// Iterates beyond this angle magnitude are treated as divergent.
const DIVERGENCE_LIMIT: f64 = 1e6;

fn run(method: Method, net: &Network, cache: &TopologyCache, theta0: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate(cache.n())?;
    if theta0.len() != cache.n() {
        return Err(Error::DimensionMismatch {
            expected: cache.n(),
            got: theta0.len(),
        });
    }
    let system = PowerFlowSystem::new(net, cache)?;
    let mut rec = Recorder::new(net, cache, opts);
    let mut state = rec.record(0, sin_diffs(cache, theta0), Vec::new(), theta0.to_vec(), None, false)?;
    let steps = match method {
        Method::Cnr => chord_steps(&system, theta0.to_vec()),
        _ => Ok(newton_steps(&system, theta0.to_vec())),
    };
    let mut steps = match steps {
        Ok(s) => s,
        Err(e) => {
            let termination = Termination::LinearFailure { message: e.to_string() };
            return Ok(rec.finish(method, state, termination));
        }
    };
    let termination = loop {
        if state.k >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        let k = state.k + 1;
        let theta = match steps.next().expect("steps are unbounded until failure") {
            Ok(t) => t,
            Err(e) => break Termination::LinearFailure { message: e.to_string() },
        };
        if !theta.iter().all(|t| t.is_finite()) || norm_inf(&theta) > DIVERGENCE_LIMIT {
            break Termination::Diverged { iteration: k };
        }
        let psi = sin_diffs(cache, &theta);
        let s = max_step(&psi, &state.psi);
        state = rec.record(k, psi, Vec::new(), theta, Some(s), false)?;
        if s <= opts.tolerance {
            break Termination::Converged;
        }
    };
    Ok(rec.finish(method, state, termination))
}

/// Undamped Newton-Raphson on the active power mismatch.
pub fn newton_raphson(net: &Network, cache: &TopologyCache, theta0: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    run(Method::Nr, net, cache, theta0, opts)
}

/// Chord Newton with the Jacobian factorized once at `theta0`.
pub fn chord_newton(net: &Network, cache: &TopologyCache, theta0: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    run(Method::Cnr, net, cache, theta0, opts)
}

/// Reference angles: Newton-Raphson from flat start, solved to round-off.
pub fn reference_angles(net: &Network, cache: &TopologyCache) -> Result<Vec<f64>> {
    let opts = SolveOptions::default().with_tolerance(1e-13).with_max_iterations(100);
    let rep = newton_raphson(net, cache, &vec![0.0; cache.n()], &opts)?;
    let residual = rep.state.injection_residual;
    if !rep.converged() || residual > 1e-9 {
        return Err(Error::Reference(format!(
            "Newton-Raphson from flat start ended with {:?} (residual {residual:e})",
            rep.trace.termination
        )));
    }
    Ok(rep.state.theta_r)
}
