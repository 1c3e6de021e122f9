use super::Network;
use crate::error::Result;
use crate::splinalg::CscMatrix;

/// Bus admittance `Y = G + jB` over all buses, indexed by bus position.
///
/// Off-diagonals are `G_ij = -g/t`, `B_ij = b/t`. The from-side diagonal carries
/// `g/t^2` and `-b/t^2`, the to-side `g` and `-b`. Bus shunt conductance adds to
/// `G_ii`. Line charging and shunt susceptance are not modelled.
#[derive(Debug, Clone, PartialEq)]
pub struct BusAdmittance {
    pub g: CscMatrix,
    pub b: CscMatrix,
}

impl BusAdmittance {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Diagonal conductances `G_ii` by bus position.
    pub fn g_diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.g.get(i, i)).collect()
    }
}

pub fn build_admittance(net: &Network) -> Result<BusAdmittance> {
    let n = net.buses().len();
    let mut gt = Vec::with_capacity(4 * net.m() + n);
    let mut bt = Vec::with_capacity(4 * net.m());
    for (br, (f, t)) in net.branches().iter().zip(net.edge_list()) {
        let (g, b, tap) = (br.conductance, br.susceptance, br.tap);
        gt.extend([
            (f, t, -g / tap),
            (t, f, -g / tap),
            (f, f, g / (tap * tap)),
            (t, t, g),
        ]);
        bt.extend([
            (f, t, b / tap),
            (t, f, b / tap),
            (f, f, -b / (tap * tap)),
            (t, t, -b),
        ]);
    }
    for (k, bus) in net.buses().iter().enumerate() {
        if bus.shunt_conductance != 0.0 {
            gt.push((k, k, bus.shunt_conductance));
        }
    }
    Ok(BusAdmittance {
        g: CscMatrix::from_triplets(n, &gt)?,
        b: CscMatrix::from_triplets(n, &bt)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Branch, Bus};

    #[test]
    fn lossless_two_bus() {
        let y = build_admittance(&Network::two_bus(0.0, 1.0, 1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(y.b.get(0, 1), 1.0);
        assert_eq!(y.g.get(0, 1), 0.0);
        assert_eq!(y.b.get(0, 0), -1.0);
        assert_eq!(y.b.get(1, 1), -1.0);
    }

    #[test]
    fn lossy_two_bus() {
        let y = build_admittance(&Network::two_bus(1.0, 5.0, 1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(y.g.get(0, 1), -1.0);
        assert_eq!(y.b.get(0, 1), 5.0);
        assert_eq!(y.g.get(0, 0), 1.0);
    }

    #[test]
    fn tap_scaling_and_shunt() {
        let bus = |id, gs| Bus {
            id,
            voltage: 1.0,
            injection: 0.0,
            shunt_conductance: gs,
        };
        let br = Branch {
            from: 1,
            to: 2,
            conductance: 1.0,
            susceptance: 5.0,
            tap: 1.05,
        };
        let net = Network::new(vec![bus(1, 0.25), bus(2, 0.0)], vec![br], 2, 100.0).unwrap();
        let y = build_admittance(&net).unwrap();
        assert!((y.b.get(0, 1) - 5.0 / 1.05).abs() < 1e-15);
        assert!((y.g.get(1, 0) + 1.0 / 1.05).abs() < 1e-15);
        assert!((y.b.get(0, 0) + 5.0 / 1.1025).abs() < 1e-14);
        assert!((y.g.get(0, 0) - (1.0 / 1.1025 + 0.25)).abs() < 1e-15);
        assert_eq!(y.b.get(1, 1), -5.0);
    }
}
