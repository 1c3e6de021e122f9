use super::{check_injections, sin_diffs, Method, Recorder, SolveOptions, SolveReport, Termination};
use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};

/// DC power flow `theta = L_B^{-1} P_r`.
pub fn dcpf(net: &Network, cache: &TopologyCache) -> Result<Vec<f64>> {
    cache.laplacian().solve(&check_injections(net, cache)?)
}

/// Modified DC power flow.
///
/// Returns the angles recovered from `arcsin(psi_mdc)` and the branch
/// variable `psi_mdc = A_r^T L_B^{-1} P_r`.
pub fn mdcpf(net: &Network, cache: &TopologyCache) -> Result<(Vec<f64>, Vec<f64>)> {
    let psi = cache.incidence().diffs(&dcpf(net, cache)?);
    if let Some((e, v)) = psi.iter().enumerate().find(|(_, v)| v.abs() >= 1.0) {
        return Err(Error::PsiOutOfRange {
            iteration: 1,
            branch: e,
            value: *v,
        });
    }
    let angles: Vec<f64> = psi.iter().map(|p| p.asin()).collect();
    Ok((cache.recovery().recover(&angles)?, psi))
}

pub(super) fn dcpf_report(net: &Network, cache: &TopologyCache, opts: &SolveOptions) -> Result<SolveReport> {
    one_shot(Method::Dcpf, net, cache, opts, || {
        let th = dcpf(net, cache)?;
        Ok((sin_diffs(cache, &th), th))
    })
}

pub(super) fn mdcpf_report(net: &Network, cache: &TopologyCache, opts: &SolveOptions) -> Result<SolveReport> {
    one_shot(Method::Mdcpf, net, cache, opts, || {
        let (th, psi) = mdcpf(net, cache)?;
        Ok((psi, th))
    })
}

fn one_shot(
    method: Method,
    net: &Network,
    cache: &TopologyCache,
    opts: &SolveOptions,
    run: impl FnOnce() -> Result<(Vec<f64>, Vec<f64>)>,
) -> Result<SolveReport> {
    opts.validate(cache.n())?;
    let mut rec = Recorder::new(net, cache, opts);
    let zero = vec![0.0; cache.n()];
    let state0 = rec.record(0, vec![0.0; cache.m()], vec![0.0; cache.c()], zero, None, false)?;
    match run() {
        Ok((psi, th)) => {
            let step = super::max_step(&psi, &state0.psi);
            let state = rec.record(1, psi, vec![0.0; cache.c()], th, Some(step), false)?;
            Ok(rec.finish(method, state, Termination::Converged))
        }
        Err(Error::PsiOutOfRange {
            iteration,
            branch,
            value,
        }) => Ok(rec.finish(
            method,
            state0,
            Termination::PsiOutOfRange {
                iteration,
                branch,
                value,
            },
        )),
        Err(Error::LinearFailure(message)) => Ok(rec.finish(method, state0, Termination::LinearFailure { message })),
        Err(e) => Err(e),
    }
}
