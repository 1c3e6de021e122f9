use super::{check_injections, max_step, sin_diffs, Method, PsiGuard, Recorder, SolveOptions, SolveReport, SolverState, Termination, PSI_CLAMP};
use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};

enum Guarded {
    Ok { clamped: bool },
    Out { branch: usize, value: f64 },
}

fn guard(v: &mut [f64], mode: PsiGuard) -> Guarded {
    let mut clamped = false;
    for (e, p) in v.iter_mut().enumerate() {
        if !p.is_finite() || p.abs() >= 1.0 {
            match mode {
                PsiGuard::Fail => return Guarded::Out { branch: e, value: *p },
                PsiGuard::Clamp if p.is_finite() => {
                    *p = p.signum() * PSI_CLAMP;
                    clamped = true;
                }
                PsiGuard::Clamp => return Guarded::Out { branch: e, value: *p },
            }
        }
    }
    Guarded::Ok { clamped }
}

/// `P_r - G_diag V_r^2 + |A|_r D_G sqrt(1 - s^2)`.
fn loss_adjusted(cache: &TopologyCache, base: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    let w: Vec<f64> = s
        .iter()
        .zip(cache.d_g())
        .map(|(s, g)| g * (1.0 - s * s).sqrt())
        .collect();
    let add = cache.incidence().apply_abs(&w)?;
    Ok(base.iter().zip(add).map(|(b, a)| b + a).collect())
}

fn linear_failure(e: Error) -> Result<Termination> {
    match e {
        Error::LinearFailure(message) => Ok(Termination::LinearFailure { message }),
        Error::Indefinite { .. } | Error::Singular { .. } => Ok(Termination::LinearFailure { message: e.to_string() }),
        other => Err(other),
    }
}

/// Lossy modified DC power flow.
///
/// Each iteration takes a chord-Newton step on the cycle variables `x`,
/// updates the injections with the current loss estimate, solves with the
/// cached `L_B` factor and recovers angles from `arcsin(psi)`.
pub fn lmdcpf(net: &Network, cache: &TopologyCache, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate(cache.n())?;
    let p = check_injections(net, cache)?;
    let base: Vec<f64> = p.iter().zip(cache.g_diag_v2()).map(|(p, s)| p - s).collect();
    let mut rec = Recorder::new(net, cache, opts);

    let (theta0, psi0) = match &opts.initial_angles {
        Some(th) => (th.clone(), sin_diffs(cache, th)),
        None => (vec![0.0; cache.n()], vec![0.0; cache.m()]),
    };
    let mut x = vec![0.0; cache.c()];
    let mut state = rec.record(0, psi0, x.clone(), theta0, None, false)?;

    let termination = loop {
        if state.k >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        let k = state.k + 1;
        match lmdcpf_step(cache, &base, &state.psi, &mut x, opts) {
            Ok(Step::Next { psi, theta, clamped }) => {
                let s = max_step(&psi, &state.psi);
                state = rec.record(k, psi, x.clone(), theta, Some(s), clamped)?;
                if !s.is_finite() {
                    break Termination::Diverged { iteration: k };
                }
                if s <= opts.tolerance {
                    break Termination::Converged;
                }
            }
            Ok(Step::Out { branch, value }) => {
                break Termination::PsiOutOfRange {
                    iteration: k,
                    branch,
                    value,
                }
            }
            Err(e) => break linear_failure(e)?,
        }
    };
    Ok(rec.finish(Method::Lmdcpf, state, termination))
}

enum Step {
    Next {
        psi: Vec<f64>,
        theta: Vec<f64>,
        clamped: bool,
    },
    Out {
        branch: usize,
        value: f64,
    },
}

fn lmdcpf_step(cache: &TopologyCache, base: &[f64], psi: &[f64], x: &mut [f64], opts: &SolveOptions) -> Result<Step> {
    if let (Some(op), false) = (cache.cycle_operator(), opts.freeze_cycle_vars) {
        let angles: Vec<f64> = psi.iter().map(|p| p.asin()).collect();
        let dx = op.solve(&cache.cycles().apply_t(&angles))?;
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi -= d;
        }
    }
    let pk = loss_adjusted(cache, base, psi)?;
    let delta = cache.laplacian().solve(&pk)?;
    let cx = cache.cycles().apply(x);
    let mut next: Vec<f64> = cache
        .incidence()
        .diffs(&delta)
        .into_iter()
        .zip(cx.iter().zip(cache.d_b()))
        .map(|(d, (c, w))| d + c / w)
        .collect();
    let clamped = match guard(&mut next, opts.psi_guard) {
        Guarded::Ok { clamped } => clamped,
        Guarded::Out { branch, value } => return Ok(Step::Out { branch, value }),
    };
    let angles: Vec<f64> = next.iter().map(|p| p.asin()).collect();
    let theta = cache.recovery().recover(&angles)?;
    Ok(Step::Next {
        psi: next,
        theta,
        clamped,
    })
}

/// Lossy DC power flow:
/// `theta <- L_B^{-1} (P_r - G_diag V_r^2 + |A|_r D_G sqrt(1 - (A_r^T theta)^2))`.
pub fn ldcpf(net: &Network, cache: &TopologyCache, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate(cache.n())?;
    let p = check_injections(net, cache)?;
    let base: Vec<f64> = p.iter().zip(cache.g_diag_v2()).map(|(p, s)| p - s).collect();
    let mut rec = Recorder::new(net, cache, opts);
    let theta0 = opts
        .initial_angles
        .clone()
        .unwrap_or_else(|| vec![0.0; cache.n()]);
    let mut state: SolverState = rec.record(0, sin_diffs(cache, &theta0), Vec::new(), theta0, None, false)?;

    let termination = loop {
        if state.k >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        let k = state.k + 1;
        let mut d = cache.incidence().diffs(&state.theta_r);
        let clamped = match guard(&mut d, opts.psi_guard) {
            Guarded::Ok { clamped } => clamped,
            Guarded::Out { branch, value } => {
                break Termination::PsiOutOfRange {
                    iteration: k,
                    branch,
                    value,
                }
            }
        };
        let theta = match loss_adjusted(cache, &base, &d).and_then(|pk| cache.laplacian().solve(&pk)) {
            Ok(t) => t,
            Err(e) => break linear_failure(e)?,
        };
        let psi = sin_diffs(cache, &theta);
        let s = max_step(&psi, &state.psi);
        state = rec.record(k, psi, Vec::new(), theta, Some(s), clamped)?;
        if !s.is_finite() {
            break Termination::Diverged { iteration: k };
        }
        if s <= opts.tolerance {
            break Termination::Converged;
        }
    };
    Ok(rec.finish(Method::Ldcpf, state, termination))
}
