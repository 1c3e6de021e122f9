use std::collections::VecDeque;
use std::sync::Arc;

use super::{BusAdmittance, Network, ReducedIncidence};
use crate::error::{Error, Result};
use crate::splinalg::{AngleRecovery, CscMatrix, SpdOperator, Symbolic};

/// BFS spanning tree rooted at the slack bus, in bus positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    parent: Vec<Option<usize>>,
    parent_edge: Vec<Option<usize>>,
    order: Vec<usize>,
    in_tree: Vec<bool>,
}

impl SpanningTree {
    fn bfs(buses: usize, root: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); buses];
        for (e, &(f, t)) in edges.iter().enumerate() {
            adj[f].push((t, e));
            adj[t].push((f, e));
        }
        let mut parent = vec![None; buses];
        let mut parent_edge = vec![None; buses];
        let mut seen = vec![false; buses];
        let mut in_tree = vec![false; edges.len()];
        let mut order = Vec::with_capacity(buses);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    parent_edge[v] = Some(e);
                    in_tree[e] = true;
                    queue.push_back(v);
                }
            }
        }
        if order.len() != buses {
            return Err(Error::Topology(format!(
                "{} of {buses} buses reachable from the slack",
                order.len()
            )));
        }
        Ok(Self {
            parent,
            parent_edge,
            order,
            in_tree,
        })
    }

    pub fn parent(&self, bus: usize) -> Option<usize> {
        self.parent[bus]
    }

    pub fn parent_edge(&self, bus: usize) -> Option<usize> {
        self.parent_edge[bus]
    }

    /// Buses in BFS order, root first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.in_tree[e]
    }

    fn depth(&self, mut bus: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[bus] {
            bus = p;
            d += 1;
        }
        d
    }
}

/// Edge-cycle incidence `C` stored column-wise as `(edge, sign)` lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleBasis {
    edges: usize,
    columns: Vec<Vec<(usize, i8)>>,
}

impl CycleBasis {
    pub fn new(edges: usize, columns: Vec<Vec<(usize, i8)>>) -> Self {
        Self { edges, columns }
    }

    /// Fundamental cycles of `tree`: one per non-tree edge.
    pub fn fundamental(tree: &SpanningTree, edges: &[(usize, usize)]) -> Self {
        let mut columns = Vec::new();
        for (e, &(f, t)) in edges.iter().enumerate() {
            if tree.is_tree_edge(e) {
                continue;
            }
            // walk f -> t along e, then back from t to f through the tree
            let mut col = vec![(e, 1i8)];
            let (mut a, mut b) = (t, f);
            let (mut da, mut db) = (tree.depth(a), tree.depth(b));
            let mut down = Vec::new();
            while a != b {
                if da >= db {
                    let pe = tree.parent_edge(a).expect("non-root has a parent edge");
                    // traversal a -> parent
                    col.push((pe, if edges[pe].0 == a { 1 } else { -1 }));
                    a = tree.parent(a).expect("non-root has a parent");
                    da -= 1;
                } else {
                    let pe = tree.parent_edge(b).expect("non-root has a parent edge");
                    // traversal parent -> b, recorded later in path order
                    down.push((pe, if edges[pe].1 == b { 1 } else { -1 }));
                    b = tree.parent(b).expect("non-root has a parent");
                    db -= 1;
                }
            }
            col.extend(down.into_iter().rev());
            columns.push(col);
        }
        Self {
            edges: edges.len(),
            columns,
        }
    }

    /// Number of cycles `c`.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Vec<(usize, i8)>] {
        &self.columns
    }

    /// `C x` for a cycle vector `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.edges];
        for (col, &xk) in self.columns.iter().zip(x) {
            for &(e, s) in col {
                out[e] += f64::from(s) * xk;
            }
        }
        out
    }

    /// `C^T v` for a branch vector `v`.
    pub fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(e, s)| f64::from(s) * v[e]).sum())
            .collect()
    }

    /// Dense row-major `m x c` copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let c = self.len();
        let mut d = vec![0.0; self.edges * c];
        for (k, col) in self.columns.iter().enumerate() {
            for &(e, s) in col {
                d[e * c + k] += f64::from(s);
            }
        }
        d
    }

    /// `A C = 0` in integer arithmetic and `C` has full column rank `m - n`.
    pub fn verify(&self, buses: usize, edges: &[(usize, usize)]) -> bool {
        if edges.len() != self.edges || self.len() + buses != self.edges + 1 {
            return false;
        }
        for col in &self.columns {
            let mut node = vec![0i64; buses];
            for &(e, s) in col {
                if e >= edges.len() {
                    return false;
                }
                let (f, t) = edges[e];
                node[f] += i64::from(s);
                node[t] -= i64::from(s);
            }
            if node.iter().any(|&v| v != 0) {
                return false;
            }
        }
        column_rank(self.edges, self.len(), self.to_dense()) == self.len()
    }
}

fn column_rank(rows: usize, cols: usize, mut a: Vec<f64>) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let pivot = (rank..rows)
            .max_by(|&i, &j| a[i * cols + c].abs().total_cmp(&a[j * cols + c].abs()));
        let Some(p) = pivot.filter(|&p| a[p * cols + c].abs() > 1e-9) else {
            continue;
        };
        for k in 0..cols {
            a.swap(p * cols + k, rank * cols + k);
        }
        let d = a[rank * cols + c];
        for i in rank + 1..rows {
            let f = a[i * cols + c] / d;
            if f != 0.0 {
                for k in c..cols {
                    a[i * cols + k] -= f * a[rank * cols + k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Graph and matrix objects shared read-only by every solver run.
#[derive(Debug, Clone)]
pub struct TopologyCache {
    buses: usize,
    slack: usize,
    edges: Vec<(usize, usize)>,
    incidence: ReducedIncidence,
    tree: SpanningTree,
    cycles: CycleBasis,
    d_b: Vec<f64>,
    d_g: Vec<f64>,
    g_diag: Vec<f64>,
    v_r: Vec<f64>,
    symbolic: Arc<Symbolic>,
    laplacian: SpdOperator,
    recovery: AngleRecovery,
    cycle_operator: Option<SpdOperator>,
}

pub fn build_topology(net: &Network, admittance: &BusAdmittance) -> Result<TopologyCache> {
    let buses = net.buses().len();
    if admittance.dim() != buses {
        return Err(Error::DimensionMismatch {
            expected: buses,
            got: admittance.dim(),
        });
    }
    let slack = net.slack_index();
    let edges = net.edge_list();
    let incidence = ReducedIncidence::new(buses, slack, &edges)?;
    let tree = SpanningTree::bfs(buses, slack, &edges)?;
    let cycles = CycleBasis::fundamental(&tree, &edges);

    let v: Vec<f64> = net.buses().iter().map(|b| b.voltage).collect();
    let mut d_b = Vec::with_capacity(edges.len());
    let mut d_g = Vec::with_capacity(edges.len());
    for (e, (br, &(f, t))) in net.branches().iter().zip(&edges).enumerate() {
        let vv = v[f] * v[t] / br.tap;
        let w = vv * br.susceptance;
        if !(w > 0.0) {
            return Err(Error::NonInductiveBranch {
                branch: e,
                from: br.from,
                to: br.to,
                weight: w,
            });
        }
        d_b.push(w);
        d_g.push(vv * br.conductance);
    }
    let g_all = admittance.g_diag();
    let keep = |k: &usize| *k != slack;
    let g_diag: Vec<f64> = (0..buses).filter(keep).map(|k| g_all[k]).collect();
    let v_r: Vec<f64> = (0..buses).filter(keep).map(|k| v[k]).collect();

    let lb = incidence.weighted_laplacian(&d_b)?;
    let symbolic = Arc::new(Symbolic::analyze(&lb));
    let laplacian = SpdOperator::factorize_with(Arc::clone(&symbolic), &lb)?;
    let recovery = AngleRecovery::with_symbolic(&incidence, Arc::clone(&symbolic))?;
    let cycle_operator = if cycles.is_empty() {
        None
    } else {
        Some(SpdOperator::factorize(&cycle_gram(&cycles, &d_b)?)?)
    };
    Ok(TopologyCache {
        buses,
        slack,
        edges,
        incidence,
        tree,
        cycles,
        d_b,
        d_g,
        g_diag,
        v_r,
        symbolic,
        laplacian,
        recovery,
        cycle_operator,
    })
}

/// `C^T D_B^{-1} C`.
fn cycle_gram(cycles: &CycleBasis, d_b: &[f64]) -> Result<CscMatrix> {
    let mut by_edge: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d_b.len()];
    for (k, col) in cycles.columns().iter().enumerate() {
        for &(e, s) in col {
            by_edge[e].push((k, f64::from(s)));
        }
    }
    let mut trip = Vec::new();
    for (e, list) in by_edge.iter().enumerate() {
        for &(i, si) in list {
            for &(j, sj) in list {
                trip.push((i, j, si * sj / d_b[e]));
            }
        }
    }
    CscMatrix::from_triplets(cycles.len(), &trip)
}

/// Checks the cached cycle basis against the cached edge list.
pub fn cycle_basis_check(cache: &TopologyCache) -> bool {
    cache.cycles.verify(cache.buses, &cache.edges)
}

impl TopologyCache {
    /// Number of non-slack buses `n`.
    pub fn n(&self) -> usize {
        self.buses - 1
    }

    /// Number of branches `m`.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Number of independent cycles `c = m - n`.
    pub fn c(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_radial(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Slack position among all buses.
    pub fn slack(&self) -> usize {
        self.slack
    }

    /// Branch endpoints as bus positions, in input order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn incidence(&self) -> &ReducedIncidence {
        &self.incidence
    }

    pub fn tree(&self) -> &SpanningTree {
        &self.tree
    }

    pub fn cycles(&self) -> &CycleBasis {
        &self.cycles
    }

    /// Branch weights `V_i V_j b / t`.
    pub fn d_b(&self) -> &[f64] {
        &self.d_b
    }

    /// Branch weights `V_i V_j g / t`.
    pub fn d_g(&self) -> &[f64] {
        &self.d_g
    }

    /// Non-slack diagonal conductances `G_ii`.
    pub fn g_diag(&self) -> &[f64] {
        &self.g_diag
    }

    /// Non-slack voltage magnitudes.
    pub fn v_r(&self) -> &[f64] {
        &self.v_r
    }

    /// Shunt-like term `G_diag V_r^2`.
    pub fn g_diag_v2(&self) -> Vec<f64> {
        self.g_diag
            .iter()
            .zip(&self.v_r)
            .map(|(g, v)| g * v * v)
            .collect()
    }

    /// Factorized reduced Laplacian `L_B = A_r D_B A_r^T`.
    pub fn laplacian(&self) -> &SpdOperator {
        &self.laplacian
    }

    /// Fill-reducing analysis of the `L_B` pattern, shared with Jacobians.
    pub fn symbolic(&self) -> &Arc<Symbolic> {
        &self.symbolic
    }

    pub fn recovery(&self) -> &AngleRecovery {
        &self.recovery
    }

    /// Factorized `C^T D_B^{-1} C`, absent for radial networks.
    pub fn cycle_operator(&self) -> Option<&SpdOperator> {
        self.cycle_operator.as_ref()
    }

    /// Convenience: admittance and topology in one call.
    pub fn build(net: &Network) -> Result<Self> {
        build_topology(net, &super::build_admittance(net)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{build_admittance, Branch, Bus};

    fn unit_net(buses: usize, slack: usize, edges: &[(usize, usize)]) -> Network {
        let bs = (1..=buses)
            .map(|id| Bus {
                id,
                voltage: 1.0,
                injection: 0.0,
                shunt_conductance: 0.0,
            })
            .collect();
        let brs = edges
            .iter()
            .map(|&(f, t)| Branch {
                from: f,
                to: t,
                conductance: 0.0,
                susceptance: 1.0,
                tap: 1.0,
            })
            .collect();
        Network::new(bs, brs, slack, 100.0).unwrap()
    }

    #[test]
    fn radial_path() {
        let cache = TopologyCache::build(&unit_net(3, 3, &[(1, 2), (2, 3)])).unwrap();
        assert_eq!(cache.c(), 0);
        assert!(cache.is_radial());
        assert_eq!(cache.incidence().to_dense(), vec![1.0, 0.0, -1.0, 1.0]);
        assert_eq!(
            cache.laplacian().matrix().to_dense(),
            vec![1.0, -1.0, -1.0, 2.0]
        );
        assert!(cycle_basis_check(&cache));
    }

    #[test]
    fn triangle_has_one_cycle() {
        let cache = TopologyCache::build(&unit_net(3, 1, &[(1, 2), (2, 3), (3, 1)])).unwrap();
        assert_eq!(cache.c(), 1);
        assert_eq!(cache.cycles().columns()[0].len(), 3);
        assert!(cycle_basis_check(&cache));
        let d = cache.cycles().to_dense();
        assert!(d.iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn flipped_sign_fails_check() {
        let cache = TopologyCache::build(&unit_net(3, 1, &[(1, 2), (2, 3), (3, 1)])).unwrap();
        let mut cols = cache.cycles().columns().to_vec();
        cols[0][1].1 = -cols[0][1].1;
        let bad = CycleBasis::new(3, cols);
        assert!(!bad.verify(3, cache.edges()));
    }

    #[test]
    fn rank_deficient_basis_fails_check() {
        let cache = TopologyCache::build(&unit_net(2, 1, &[(1, 2), (1, 2), (2, 1)])).unwrap();
        assert_eq!(cache.c(), 2);
        assert!(cycle_basis_check(&cache));
        let col = cache.cycles().columns()[0].clone();
        let bad = CycleBasis::new(3, vec![col.clone(), col]);
        assert!(!bad.verify(2, cache.edges()));
    }

    #[test]
    fn two_bus_weights() {
        let net = Network::two_bus(0.5, 1.0, 1.0, 1.0, 0.0).unwrap();
        let cache = build_topology(&net, &build_admittance(&net).unwrap()).unwrap();
        assert_eq!(cache.d_b(), &[1.0]);
        assert_eq!(cache.d_g(), &[0.5]);
        assert_eq!(cache.laplacian().matrix().to_dense(), vec![1.0]);
        assert_eq!(cache.g_diag(), &[0.5]);
    }

    #[test]
    fn capacitive_branch_is_rejected() {
        let net = Network::two_bus(0.1, -1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            TopologyCache::build(&net),
            Err(Error::NonInductiveBranch { branch: 0, .. })
        ));
    }

    #[test]
    fn cycle_gram_matches_dense_product() {
        let net = unit_net(4, 1, &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)]);
        let cache = TopologyCache::build(&net).unwrap();
        assert_eq!(cache.c(), 2);
        let c = cache.cycles().to_dense();
        let gram = cache.cycle_operator().unwrap().matrix().to_dense();
        for i in 0..2 {
            for j in 0..2 {
                let want: f64 = (0..5).map(|e| c[e * 2 + i] * c[e * 2 + j]).sum();
                assert_eq!(gram[i * 2 + j], want);
            }
        }
    }
}
