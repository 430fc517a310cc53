//! Divided differences `f^[n](λ₁, …, λ_{n+1})` with confluent nodes.
//!
//! Evaluation uses a Newton table over nodes sorted so that clustered points
//! are adjacent. Entries spanning a single cluster of multiplicity `m` are the
//! Taylor coefficients `f^(k)(λ)/k!`; all others use the quotient recursion.

use crate::error::{Error, Result};
use crate::functions::{cayley_eta, sup_norm, CircleFunction, DerivStack, SUP_GRID};
use crate::C64;

/// Points closer than this are treated as one confluent node.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Tolerance on `|z| = 1` for circle nodes.
pub const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeDomain {
    Circle,
    Line,
}

/// Group of (numerically) equal nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub point: C64,
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Node tuple with its cluster partition, clusters ordered by argument
/// (circle) or value (line).
#[derive(Clone, Debug)]
pub struct NodeTuple {
    points: Vec<C64>,
    domain: NodeDomain,
    clusters: Vec<Cluster>,
    near_cluster: bool,
}

impl NodeTuple {
    pub fn circle(points: &[C64]) -> Result<Self> {
        if let Some(z) = points.iter().find(|z| (z.norm() - 1.0).abs() > UNIT_TOL || !z.re.is_finite()) {
            return Err(Error::domain(format!("node {z} is not on the unit circle")));
        }
        Self::build(points.to_vec(), NodeDomain::Circle)
    }

    pub fn line(points: &[f64]) -> Result<Self> {
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("line nodes must be finite"));
        }
        Self::build(points.iter().map(|&x| C64::new(x, 0.0)).collect(), NodeDomain::Line)
    }

    fn build(points: Vec<C64>, domain: NodeDomain) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("a divided difference needs at least one node"));
        }
        let (clusters, near_cluster) = cluster_points(&points, domain);
        Ok(Self {
            points,
            domain,
            clusters,
            near_cluster,
        })
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn domain(&self) -> NodeDomain {
        self.domain
    }

    /// Divided-difference order `n` (one less than the node count).
    pub fn order(&self) -> usize {
        self.points.len() - 1
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// True when two distinct clusters are closer than `10 τ`.
    pub fn near_cluster(&self) -> bool {
        self.near_cluster
    }

    pub fn max_multiplicity(&self) -> usize {
        self.clusters.iter().map(Cluster::multiplicity).max().unwrap_or(0)
    }
}

fn sort_key(z: C64, domain: NodeDomain) -> f64 {
    match domain {
        NodeDomain::Circle => z.arg(),
        NodeDomain::Line => z.re,
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Union-find clustering under `|z_i − z_j| ≤ τ`. The representative point
/// is the lowest-index member.
pub(crate) fn cluster_points(points: &[C64], domain: NodeDomain) -> (Vec<Cluster>, bool) {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= CLUSTER_TOL {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Cluster {
                point: points[root],
                members: Vec::new(),
            });
        }
        clusters[slot[root]].members.push(i);
    }
    clusters.sort_by(|a, b| sort_key(a.point, domain).total_cmp(&sort_key(b.point, domain)));
    let mut near = false;
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            if (clusters[i].point - clusters[j].point).norm() < 10.0 * CLUSTER_TOL {
                near = true;
            }
        }
    }
    (clusters, near)
}

/// Confluent Newton table over clustered nodes `(point, multiplicity)`.
/// `deriv(c, k)` must return `f^(k)` at cluster `c` for `k < multiplicity`.
pub fn confluent_table(clusters: &[(C64, usize)], mut deriv: impl FnMut(usize, usize) -> C64) -> C64 {
    let mut nodes: Vec<(C64, usize)> = Vec::new();
    for (c, &(z, mult)) in clusters.iter().enumerate() {
        nodes.extend(std::iter::repeat_n((z, c), mult));
    }
    let len = nodes.len();
    let mut factorial = vec![1.0f64; len];
    for k in 1..len {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let mut cluster_values: Vec<Vec<Option<C64>>> = clusters.iter().map(|&(_, m)| vec![None; m]).collect();
    let mut taylor = |c: usize, k: usize| -> C64 {
        *cluster_values[c][k].get_or_insert_with(|| deriv(c, k) / factorial[k])
    };
    let mut column: Vec<C64> = nodes.iter().map(|&(_, c)| taylor(c, 0)).collect();
    for width in 1..len {
        for i in 0..len - width {
            let (zi, ci) = nodes[i];
            let (zj, cj) = nodes[i + width];
            column[i] = if ci == cj {
                taylor(ci, width)
            } else {
                (column[i + 1] - column[i]) / (zj - zi)
            };
        }
    }
    column[0]
}

/// Taylor corrections kept for table entries inside one cluster.
pub const CLUSTER_TERMS: usize = 2;

/// Newton table over actual nodes `(point, cluster)` with clusters contiguous.
/// An entry of width `w` spanning one cluster with centre `c` is
/// `Σ_{r ≤ CLUSTER_TERMS} f^(w+r)(c)/(w+r)! · h_r(z − c)`, `h_r` the complete
/// homogeneous symmetric polynomial of the offsets; terms beyond `max_order`
/// are dropped. Exactly coincident nodes reduce to `f^(w)(c)/w!`.
/// `deriv(c, k)` returns `f^(k)` at centre `c`.
pub fn clustered_table(
    nodes: &[(C64, usize)],
    centres: &[C64],
    max_order: usize,
    mut deriv: impl FnMut(usize, usize) -> C64,
) -> C64 {
    let len = nodes.len();
    let top = max_order.min(len - 1 + CLUSTER_TERMS);
    let mut factorial = vec![1.0f64; top + 1];
    for k in 1..=top {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let mut cache: Vec<Vec<Option<C64>>> = vec![vec![None; top + 1]; centres.len()];
    let mut taylor = |c: usize, k: usize| -> C64 { *cache[c][k].get_or_insert_with(|| deriv(c, k) / factorial[k]) };
    let mut inside = |i: usize, w: usize, c: usize| -> C64 {
        let mut h = [C64::new(0.0, 0.0); CLUSTER_TERMS + 1];
        h[0] = C64::new(1.0, 0.0);
        for &(z, _) in &nodes[i..=i + w] {
            let d = z - centres[c];
            for r in 1..=CLUSTER_TERMS {
                h[r] += d * h[r - 1];
            }
        }
        let terms = CLUSTER_TERMS.min(top.saturating_sub(w));
        (0..=terms).fold(C64::new(0.0, 0.0), |acc, r| acc + taylor(c, w + r) * h[r])
    };
    let mut column: Vec<C64> = (0..len).map(|i| inside(i, 0, nodes[i].1)).collect();
    for width in 1..len {
        for i in 0..len - width {
            let (zi, ci) = nodes[i];
            let (zj, cj) = nodes[i + width];
            column[i] = if ci == cj {
                inside(i, width, ci)
            } else {
                (column[i + 1] - column[i]) / (zj - zi)
            };
        }
    }
    column[0]
}

/// Value of a divided difference with a cancellation warning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivDiff {
    pub value: C64,
    pub near_cluster: bool,
}

/// `f^[n]` at the given nodes.
pub fn divided_difference(f: &dyn DerivStack, nodes: &NodeTuple) -> Result<DivDiff> {
    let needed = nodes.max_multiplicity() - 1;
    if needed > f.order() {
        return Err(Error::domain(format!(
            "confluent node of multiplicity {} needs derivative order {needed}, function {} has order {}",
            needed + 1,
            f.label(),
            f.order()
        )));
    }
    for c in nodes.clusters() {
        f.check_point(c.point)?;
    }
    let centres: Vec<C64> = nodes.clusters().iter().map(|c| c.point).collect();
    let ordered: Vec<(C64, usize)> = nodes
        .clusters()
        .iter()
        .enumerate()
        .flat_map(|(c, cl)| cl.members.iter().map(move |&m| (nodes.points()[m], c)))
        .collect();
    let value = clustered_table(&ordered, &centres, f.order(), |c, k| f.deriv(k, centres[c]));
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Numeric {
            msg: format!("divided difference of {} is not finite", f.label()),
            residual: f64::NAN,
        });
    }
    Ok(DivDiff {
        value,
        near_cluster: nodes.near_cluster(),
    })
}

/// Empirical `max |f^[n]| / ‖f^(n)‖∞` over sampled tuples. Returns 0 when both
/// vanish.
pub fn divdiff_bound_ratio(f: &dyn CircleFunction, n: usize, samples: &[NodeTuple]) -> Result<f64> {
    if f.order() < n {
        return Err(Error::domain(format!("function order {} is below {n}", f.order())));
    }
    let mut top = 0.0f64;
    for nodes in samples {
        if nodes.order() != n {
            return Err(Error::Dimension {
                expected: n + 1,
                found: nodes.points().len(),
            });
        }
        top = top.max(divided_difference(f, nodes)?.value.norm());
    }
    let sup = sup_norm(f, n, SUP_GRID);
    if sup == 0.0 {
        return Ok(if top <= 1e-12 { 0.0 } else { f64::INFINITY });
    }
    Ok(top / sup)
}

/// `(f∘η)^[m](λ₁, …, λ_{m+1})` through the expansion over index chains
/// `1 = i₀ < ⋯ < i_k = m+1` in terms of `f^[k]` at the Cayley images:
///
/// ```text
/// (i/2)^m Σ_k Σ_chains f^[k](η(λ_{i₀}), …, η(λ_{i_k}))
///        · Π_{interior j} (η(λ_{i_j}) − 1)^2 · Π_{l not interior} (η(λ_l) − 1)
/// ```
pub fn cayley_divdiff_expansion(f: &dyn CircleFunction, m: usize, line_nodes: &[f64]) -> Result<C64> {
    if m == 0 || line_nodes.len() != m + 1 {
        return Err(Error::Dimension {
            expected: m + 1,
            found: line_nodes.len(),
        });
    }
    if f.order() < m {
        return Err(Error::domain(format!("function order {} is below {m}", f.order())));
    }
    let images: Vec<C64> = line_nodes.iter().map(|&x| cayley_eta(C64::new(x, 0.0))).collect();
    if let Some(z) = images.iter().find(|z| (*z - 1.0).norm() < 1e-8 || !z.re.is_finite()) {
        return Err(Error::domain(format!("node image {z} is too close to the Cayley pole")));
    }
    let shifted: Vec<C64> = images.iter().map(|&z| z - 1.0).collect();
    let i = C64::new(0.0, 1.0);
    let mut total = C64::new(0.0, 0.0);
    // Interior chain indices are subsets of {1, …, m-1} (0-based).
    for mask in 0u64..(1u64 << (m - 1)) {
        let interior: Vec<usize> = (1..m).filter(|&l| mask & (1 << (l - 1)) != 0).collect();
        let mut chain = vec![0];
        chain.extend(&interior);
        chain.push(m);
        let coeff = (i / 2.0).powu(m as u32);
        let nodes = NodeTuple::circle(&chain.iter().map(|&l| images[l]).collect::<Vec<_>>())?;
        let dd = divided_difference(f, &nodes)?.value;
        let squares: C64 = interior.iter().map(|&l| shifted[l] * shifted[l]).product();
        let rest: C64 = (0..=m).filter(|l| !interior.contains(l)).map(|l| shifted[l]).product();
        total += coeff * dd * squares * rest;
    }
    Ok(total)
}
