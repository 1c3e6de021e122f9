//! Case ingestion: MATPOWER `.m` files and a canonical JSON schema.

mod json;
mod matpower;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{Branch, Bus, Network};

pub use json::{case_to_json, network_to_case};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BusType {
    Pq,
    Pv,
    Ref,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseBus {
    pub id: usize,
    pub kind: BusType,
    /// Active load, MW.
    pub pd: f64,
    /// Shunt conductance, MW at 1 pu voltage.
    pub gs: f64,
    pub vm: f64,
    /// Voltage angle, degrees.
    pub va: f64,
}

/// An in-service generator.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseGen {
    pub bus: usize,
    /// Active output, MW.
    pub pg: f64,
}

/// An in-service branch; `tap == 0` means nominal.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseBranch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub tap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFile {
    pub base_mva: f64,
    pub buses: Vec<CaseBus>,
    pub gens: Vec<CaseGen>,
    pub branches: Vec<CaseBranch>,
}

/// Source of the fixed voltage magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPolicy {
    /// Use the case-file `Vm` column.
    #[default]
    Hot,
    /// Every magnitude set to 1 pu.
    Cold,
}

impl FromStr for StartPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hot" => Ok(Self::Hot),
            "cold" => Ok(Self::Cold),
            _ => Err(Error::InvalidNetwork(format!("unknown start policy `{s}`"))),
        }
    }
}

impl fmt::Display for StartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hot => "hot",
            Self::Cold => "cold",
        })
    }
}

impl CaseFile {
    /// Removes branches and generators attached to buses absent from the bus table.
    fn drop_isolated(mut self) -> Self {
        let ids: HashSet<usize> = self.buses.iter().map(|b| b.id).collect();
        self.branches
            .retain(|br| ids.contains(&br.from) && ids.contains(&br.to));
        self.gens.retain(|g| ids.contains(&g.bus));
        self
    }

    fn validate(self) -> Result<Self> {
        let refs = self.buses.iter().filter(|b| b.kind == BusType::Ref).count();
        if refs != 1 {
            return Err(Error::ReferenceBusCount(refs));
        }
        if !(self.base_mva > 0.0) {
            return Err(Error::InvalidNetwork(format!("baseMVA must be positive, got {}", self.base_mva)));
        }
        for b in &self.buses {
            if !(b.vm > 0.0) {
                return Err(Error::InvalidNetwork(format!("bus {} has Vm = {}", b.id, b.vm)));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            if br.x == 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "branch {k} ({} -> {}) has zero reactance",
                    br.from, br.to
                )));
            }
        }
        Ok(self)
    }

    pub fn reference_bus(&self) -> usize {
        self.buses
            .iter()
            .find(|b| b.kind == BusType::Ref)
            .map(|b| b.id)
            .expect("validated case has one reference bus")
    }

    /// Net injection `sum(Pg) - Pd` per bus, MW, in bus-table order.
    pub fn net_injections_mw(&self) -> Vec<f64> {
        let mut pg: HashMap<usize, f64> = HashMap::new();
        for g in &self.gens {
            *pg.entry(g.bus).or_default() += g.pg;
        }
        self.buses
            .iter()
            .map(|b| pg.get(&b.id).copied().unwrap_or(0.0) - b.pd)
            .collect()
    }
}

/// Parses MATPOWER text, or canonical JSON when the text starts with `{`.
pub fn parse_case(text: &str) -> Result<CaseFile> {
    if text.trim_start().starts_with('{') {
        json::parse(text)
    } else {
        matpower::parse(text)
    }
}

pub fn read_case(path: impl AsRef<Path>) -> Result<CaseFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_case(&text)
}

/// Converts a case to the per-unit all-PV network model.
pub fn to_network(case: &CaseFile, start: StartPolicy) -> Result<Network> {
    let base = case.base_mva;
    let buses = case
        .buses
        .iter()
        .zip(case.net_injections_mw())
        .map(|(b, p)| Bus {
            id: b.id,
            voltage: match start {
                StartPolicy::Hot => b.vm,
                StartPolicy::Cold => 1.0,
            },
            injection: p / base,
            shunt_conductance: b.gs / base,
        })
        .collect();
    let mut branches = Vec::with_capacity(case.branches.len());
    for (k, br) in case.branches.iter().enumerate() {
        let tap = if br.tap == 0.0 { 1.0 } else { br.tap };
        let branch = Branch::from_impedance(br.from, br.to, br.r, br.x, tap);
        if !(branch.susceptance > 0.0) {
            return Err(Error::NonInductiveBranch {
                branch: k,
                from: br.from,
                to: br.to,
                weight: branch.susceptance,
            });
        }
        branches.push(branch);
    }
    Network::new(buses, branches, case.reference_bus(), base)
}

/// Copy of `net` with every non-slack injection multiplied by `lambda`.
pub fn scale_loading(net: &Network, lambda: f64) -> Network {
    net.scaled(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus(r: f64, x: f64) -> CaseFile {
        CaseFile {
            base_mva: 100.0,
            buses: vec![
                CaseBus {
                    id: 1,
                    kind: BusType::Pq,
                    pd: 50.0,
                    gs: 0.0,
                    vm: 0.98,
                    va: 0.0,
                },
                CaseBus {
                    id: 2,
                    kind: BusType::Ref,
                    pd: 0.0,
                    gs: 0.0,
                    vm: 1.02,
                    va: 0.0,
                },
            ],
            gens: vec![CaseGen { bus: 2, pg: 50.0 }],
            branches: vec![CaseBranch {
                from: 1,
                to: 2,
                r,
                x,
                tap: 0.0,
            }],
        }
    }

    #[test]
    fn per_unit_conversion() {
        let net = to_network(&two_bus(0.0, 1.0), StartPolicy::Hot).unwrap();
        assert_eq!(net.injections_reduced(), vec![-0.5]);
        assert_eq!(net.branches()[0].susceptance, 1.0);
        assert_eq!(net.branches()[0].conductance, 0.0);
        assert_eq!(net.branches()[0].tap, 1.0);
        assert_eq!(net.slack(), 2);
        assert_eq!(net.voltages_reduced(), vec![0.98]);
    }

    #[test]
    fn cold_start_flattens_voltage() {
        let net = to_network(&two_bus(0.2, 1.0), StartPolicy::Cold).unwrap();
        assert!(net.buses().iter().all(|b| b.voltage == 1.0));
    }

    #[test]
    fn capacitive_branch_rejected() {
        assert!(matches!(
            to_network(&two_bus(0.0, -0.5), StartPolicy::Hot),
            Err(Error::NonInductiveBranch { .. })
        ));
    }

    #[test]
    fn start_policy_parses() {
        assert_eq!("cold".parse::<StartPolicy>().unwrap(), StartPolicy::Cold);
        assert!("warm".parse::<StartPolicy>().is_err());
    }
}
