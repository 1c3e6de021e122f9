//! Canonical JSON case schema.
//!
//! ```json
//! {"base_mva": 100, "slack": 1,
//!  "buses": [{"id": 1, "type": "REF", "v": 1.0, "p": 0.0, "gs": 0.0}],
//!  "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1, "tap": 1.0}]}
//! ```
//!
//! `p` is the net injection and `gs` the shunt conductance, both in MW.

use serde::{Deserialize, Serialize};

use super::{BusType, CaseBranch, CaseBus, CaseFile};
use crate::error::{Error, Result};
use crate::netmodel::Network;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonCase {
    base_mva: f64,
    buses: Vec<JsonBus>,
    branches: Vec<JsonBranch>,
    slack: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBus {
    id: usize,
    #[serde(rename = "type")]
    kind: BusType,
    v: f64,
    p: f64,
    #[serde(default)]
    gs: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBranch {
    from: usize,
    to: usize,
    r: f64,
    x: f64,
    #[serde(default)]
    tap: f64,
}

pub(super) fn parse(text: &str) -> Result<CaseFile> {
    let j: JsonCase = serde_json::from_str(text)?;
    if j.buses.iter().any(|b| b.kind == BusType::Ref && b.id != j.slack) {
        let refs = j.buses.iter().filter(|b| b.kind == BusType::Ref || b.id == j.slack).count();
        return Err(Error::ReferenceBusCount(refs));
    }
    let buses = j
        .buses
        .into_iter()
        .map(|b| CaseBus {
            id: b.id,
            kind: if b.id == j.slack { BusType::Ref } else { b.kind },
            pd: -b.p,
            gs: b.gs,
            vm: b.v,
            va: 0.0,
        })
        .collect();
    let branches = j
        .branches
        .into_iter()
        .map(|b| CaseBranch {
            from: b.from,
            to: b.to,
            r: b.r,
            x: b.x,
            tap: b.tap,
        })
        .collect();
    CaseFile {
        base_mva: j.base_mva,
        buses,
        gens: Vec::new(),
        branches,
    }
    .drop_isolated()
    .validate()
}

/// Serializes a case in the canonical JSON schema.
pub fn case_to_json(case: &CaseFile) -> Result<String> {
    let j = JsonCase {
        base_mva: case.base_mva,
        slack: case.reference_bus(),
        buses: case
            .buses
            .iter()
            .zip(case.net_injections_mw())
            .map(|(b, p)| JsonBus {
                id: b.id,
                kind: b.kind,
                v: b.vm,
                p,
                gs: b.gs,
            })
            .collect(),
        branches: case
            .branches
            .iter()
            .map(|b| JsonBranch {
                from: b.from,
                to: b.to,
                r: b.r,
                x: b.x,
                tap: b.tap,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

/// Case-file view of a network, e.g. to save a scaled operating point.
pub fn network_to_case(net: &Network) -> CaseFile {
    let base = net.base_mva();
    let buses = net
        .buses()
        .iter()
        .map(|b| CaseBus {
            id: b.id,
            kind: if b.id == net.slack() { BusType::Ref } else { BusType::Pv },
            pd: -b.injection * base,
            gs: b.shunt_conductance * base,
            vm: b.voltage,
            va: 0.0,
        })
        .collect();
    let branches = net
        .branches()
        .iter()
        .map(|br| {
            let y2 = br.conductance * br.conductance + br.susceptance * br.susceptance;
            CaseBranch {
                from: br.from,
                to: br.to,
                r: br.conductance / y2,
                x: br.susceptance / y2,
                tap: br.tap,
            }
        })
        .collect();
    CaseFile {
        base_mva: base,
        buses,
        gens: Vec::new(),
        branches,
    }
}
