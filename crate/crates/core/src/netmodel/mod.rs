//! Network description and the graph/matrix objects derived from it.

mod admittance;
mod incidence;
mod topology;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use admittance::{build_admittance, BusAdmittance};
pub use incidence::ReducedIncidence;
pub use topology::{build_topology, cycle_basis_check, CycleBasis, SpanningTree, TopologyCache};

/// A bus with fixed voltage magnitude and active injection (per-unit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub voltage: f64,
    pub injection: f64,
    #[serde(default)]
    pub shunt_conductance: f64,
}

/// A series branch `y = g - jb` with an off-nominal tap on the `from` side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub conductance: f64,
    pub susceptance: f64,
    #[serde(default = "unit_tap")]
    pub tap: f64,
}

fn unit_tap() -> f64 {
    1.0
}

impl Branch {
    /// Series branch from an impedance `r + jx`.
    pub fn from_impedance(from: usize, to: usize, r: f64, x: f64, tap: f64) -> Self {
        let z2 = r * r + x * x;
        Self {
            from,
            to,
            conductance: r / z2,
            susceptance: x / z2,
            tap,
        }
    }
}

/// Validated, immutable power network. Every non-slack bus is a PV bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkData", into = "NetworkData")]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    slack: usize,
    base_mva: f64,
    index: HashMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct NetworkData {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    slack: usize,
    base_mva: f64,
}

impl TryFrom<NetworkData> for Network {
    type Error = Error;

    fn try_from(d: NetworkData) -> Result<Self> {
        Network::new(d.buses, d.branches, d.slack, d.base_mva)
    }
}

impl From<Network> for NetworkData {
    fn from(n: Network) -> Self {
        Self {
            buses: n.buses,
            branches: n.branches,
            slack: n.slack,
            base_mva: n.base_mva,
        }
    }
}

impl Network {
    /// Validates and builds a network; `slack` is a bus id.
    pub fn new(buses: Vec<Bus>, branches: Vec<Branch>, slack: usize, base_mva: f64) -> Result<Self> {
        if buses.len() < 2 {
            return Err(Error::InvalidNetwork("at least two buses are required".into()));
        }
        if !(base_mva > 0.0) {
            return Err(Error::InvalidNetwork(format!("base MVA must be positive, got {base_mva}")));
        }
        let mut index = HashMap::with_capacity(buses.len());
        for (k, b) in buses.iter().enumerate() {
            if index.insert(b.id, k).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate bus id {}", b.id)));
            }
            if !(b.voltage > 0.0) || !b.voltage.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "bus {} has non-positive voltage magnitude {}",
                    b.id, b.voltage
                )));
            }
            if !b.injection.is_finite() || !b.shunt_conductance.is_finite() {
                return Err(Error::InvalidNetwork(format!("bus {} has non-finite data", b.id)));
            }
        }
        if !index.contains_key(&slack) {
            return Err(Error::InvalidNetwork(format!("slack bus {slack} does not exist")));
        }
        for (e, br) in branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(Error::InvalidNetwork(format!(
                        "branch {e} references unknown bus {end}"
                    )));
                }
            }
            if br.from == br.to {
                return Err(Error::InvalidNetwork(format!("branch {e} is a self-loop at bus {}", br.from)));
            }
            if !(br.tap > 0.0) || !br.tap.is_finite() {
                return Err(Error::InvalidNetwork(format!("branch {e} has invalid tap {}", br.tap)));
            }
            if !br.conductance.is_finite() || !br.susceptance.is_finite() {
                return Err(Error::InvalidNetwork(format!("branch {e} has non-finite admittance")));
            }
        }
        let net = Self {
            buses,
            branches,
            slack,
            base_mva,
            index,
        };
        net.check_connected()?;
        Ok(net)
    }

    /// Two-bus network: bus 1 injects `p1` over branch `1 -> 2`, bus 2 is the slack.
    pub fn two_bus(g: f64, b: f64, v1: f64, v2: f64, p1: f64) -> Result<Self> {
        let buses = vec![
            Bus {
                id: 1,
                voltage: v1,
                injection: p1,
                shunt_conductance: 0.0,
            },
            Bus {
                id: 2,
                voltage: v2,
                injection: -p1,
                shunt_conductance: 0.0,
            },
        ];
        let branch = Branch {
            from: 1,
            to: 2,
            conductance: g,
            susceptance: b,
            tap: 1.0,
        };
        Self::new(buses, vec![branch], 2, 100.0)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (self.index[&br.from], self.index[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.slack_index()];
        seen[self.slack_index()] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(k) => Err(Error::Topology(format!(
                "bus {} is not connected to the slack bus",
                self.buses[k].id
            ))),
            None => Ok(()),
        }
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Slack bus id.
    pub fn slack(&self) -> usize {
        self.slack
    }

    /// Position of the slack bus in [`Network::buses`].
    pub fn slack_index(&self) -> usize {
        self.index[&self.slack]
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    /// Position of bus `id` in [`Network::buses`].
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Branch endpoints as bus positions.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.branches
            .iter()
            .map(|b| (self.index[&b.from], self.index[&b.to]))
            .collect()
    }

    /// Ids of the non-slack buses in reduced order.
    pub fn reduced_ids(&self) -> Vec<usize> {
        self.non_slack().map(|b| b.id).collect()
    }

    fn non_slack(&self) -> impl Iterator<Item = &Bus> {
        let s = self.slack_index();
        self.buses
            .iter()
            .enumerate()
            .filter(move |&(k, _)| k != s)
            .map(|(_, b)| b)
    }

    /// Non-slack injections `P_r`.
    pub fn injections_reduced(&self) -> Vec<f64> {
        self.non_slack().map(|b| b.injection).collect()
    }

    /// Non-slack voltage magnitudes `V_r`.
    pub fn voltages_reduced(&self) -> Vec<f64> {
        self.non_slack().map(|b| b.voltage).collect()
    }

    /// Number of non-slack buses `n`.
    pub fn n(&self) -> usize {
        self.buses.len() - 1
    }

    /// Number of branches `m`.
    pub fn m(&self) -> usize {
        self.branches.len()
    }

    /// Copy with every non-slack injection multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s = self.slack_index();
        let mut out = self.clone();
        for (k, b) in out.buses.iter_mut().enumerate() {
            if k != s {
                b.injection *= lambda;
            }
        }
        out
    }

    /// Copy with non-slack injections replaced by `p_r`.
    pub fn with_injections(&self, p_r: &[f64]) -> Result<Self> {
        if p_r.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: p_r.len(),
            });
        }
        let s = self.slack_index();
        let mut out = self.clone();
        let targets = out.buses.iter_mut().enumerate().filter(|&(k, _)| k != s);
        for ((_, b), &p) in targets.zip(p_r) {
            b.injection = p;
        }
        Ok(out)
    }

    /// Copy with every voltage magnitude set to `v`.
    pub fn with_flat_voltage(&self, v: f64) -> Result<Self> {
        let buses = self
            .buses
            .iter()
            .map(|b| Bus { voltage: v, ..b.clone() })
            .collect();
        Self::new(buses, self.branches.clone(), self.slack, self.base_mva)
    }

    /// True when all taps equal one.
    pub fn has_taps(&self) -> bool {
        self.branches.iter().any(|b| b.tap != 1.0)
    }
}
