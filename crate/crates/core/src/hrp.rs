//! Hierarchical risk parity allocation in three phases: agglomerative
//! Ward-linkage clustering on a correlation-derived distance,
//! quasi-diagonalization (seriation of the covariance matrix by
//! dendrogram leaf order), and top-down recursive bisection with
//! inverse-variance splits.
//!
//! Everything here is deterministic: no randomness, and equal-cost merge
//! candidates are broken by the lexicographically smallest (left id,
//! right id) pair so results are identical across platforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{CorrelationMatrix, CovarianceMatrix};

/// Pairwise asset distances `d_ij = sqrt((1 - rho_ij) / 2)`, so perfectly
/// correlated assets are at distance 0 and perfectly anticorrelated ones
/// at distance 1.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    tickers: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tickers.len() + j]
    }
}

/// One agglomerative merge: children may be leaves (`0..n-1`) or earlier
/// merges (`n + k` for merge `k`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

/// The full merge history of the clustering: `n - 1` merges over `n`
/// leaves, with non-decreasing linkage distances.
#[derive(Debug, Clone)]
pub struct LinkageTree {
    n_leaves: usize,
    merges: Vec<Merge>,
}

impl LinkageTree {
    pub fn new(n_leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        if n_leaves == 0 || merges.len() + 1 != n_leaves {
            return Err(Error::MalformedTree(format!(
                "{} merges for {} leaves",
                merges.len(),
                n_leaves
            )));
        }
        let mut referenced = vec![false; 2 * n_leaves - 1];
        for (k, m) in merges.iter().enumerate() {
            let node = n_leaves + k;
            for child in [m.left, m.right] {
                if child >= node {
                    return Err(Error::MalformedTree(format!(
                        "merge {k} references node {child} not created yet"
                    )));
                }
                if referenced[child] {
                    return Err(Error::MalformedTree(format!(
                        "node {child} referenced twice as a child"
                    )));
                }
                referenced[child] = true;
            }
            let child_size = |id: usize| {
                if id < n_leaves {
                    1
                } else {
                    merges[id - n_leaves].size
                }
            };
            if m.size != child_size(m.left) + child_size(m.right) {
                return Err(Error::MalformedTree(format!(
                    "merge {k} size {} inconsistent with children",
                    m.size
                )));
            }
            if k > 0 && m.distance + 1e-9 < merges[k - 1].distance {
                return Err(Error::MalformedTree(format!(
                    "linkage distance decreases at merge {k}"
                )));
            }
        }
        Ok(LinkageTree { n_leaves, merges })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn root(&self) -> usize {
        2 * self.n_leaves - 2
    }
}

/// Dendrogram leaf order: a permutation of `0..n-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafOrder {
    permutation: Vec<usize>,
}

impl LeafOrder {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!(
                    "leaf order is not a permutation of 0..{n}"
                )));
            }
            seen[p] = true;
        }
        Ok(LeafOrder { permutation })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }
}

/// Long-only portfolio weights on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    tickers: Vec<String>,
    weights: Vec<f64>,
}

impl WeightVector {
    /// Validating constructor: entries in [0, 1], summing to 1 within 1e-9.
    pub fn new(tickers: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if tickers.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} tickers",
                weights.len(),
                tickers.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidInput(format!("weight {w} outside [0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector { tickers, weights })
    }

    /// Constructor without the simplex check, for solutions that may
    /// legitimately leave the long-only region (the closed-form
    /// minimum-variance weights).
    pub fn new_unchecked(tickers: Vec<String>, weights: Vec<f64>) -> Self {
        WeightVector { tickers, weights }
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Whether every entry lies in [0, 1] (the long-only simplex, given
    /// the weights sum to one).
    pub fn is_long_only(&self) -> bool {
        self.weights.iter().all(|w| (0.0..=1.0).contains(w))
    }

    /// Herfindahl concentration index: the sum of squared weights.
    /// Lower values mean a more diversified portfolio.
    pub fn herfindahl(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Map correlations into the distance `d = sqrt((1 - rho) / 2)`.
pub fn distance_from_correlation(corr: &CorrelationMatrix) -> DistanceMatrix {
    let n = corr.n();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                // rho is clamped to [-1, 1] upstream, so the argument is
                // in [0, 1] up to rounding.
                values[i * n + j] = ((1.0 - corr.at(i, j)) / 2.0).max(0.0).sqrt();
            }
        }
    }
    DistanceMatrix {
        tickers: corr.tickers().to_vec(),
        values,
    }
}

/// Child ordering within a merge, chosen so the stored (left, right)
/// pair — and therefore the leaf order — is invariant under relabeling
/// of the input assets: larger cluster first; equal-size internal nodes
/// by merge order; two leaves by their sorted distance profiles to the
/// remaining active clusters, falling back to input order only when the
/// profiles tie exactly.
fn canonical_children(
    a: usize,
    b: usize,
    n: usize,
    total: usize,
    size: &[usize],
    d2: &[f64],
    active: &[usize],
) -> (usize, usize) {
    let (lo, hi) = (a.min(b), a.max(b));
    if size[a] != size[b] {
        return if size[a] > size[b] { (a, b) } else { (b, a) };
    }
    if lo >= n {
        // Both internal with equal size: earlier merge goes left.
        return (lo, hi);
    }
    if hi < n {
        let profile = |x: usize| -> Vec<f64> {
            let mut row: Vec<f64> = active
                .iter()
                .filter(|&&c| c != a && c != b)
                .map(|&c| d2[x * total + c])
                .collect();
            row.sort_by(f64::total_cmp);
            row
        };
        let (pa, pb) = (profile(a), profile(b));
        for (x, y) in pa.iter().zip(&pb) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Less => return (a, b),
                std::cmp::Ordering::Greater => return (b, a),
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    (lo, hi)
}

/// Agglomerative clustering under the Ward criterion.
///
/// The Lance-Williams recurrence with Ward coefficients is applied to
/// squared distances; the recorded linkage distance is the square root
/// of the merged pair's squared dissimilarity. At each step the merge
/// with the smallest cost wins, ties going to the lexicographically
/// smallest (min id, max id) pair.
pub fn ward_linkage(dist: &DistanceMatrix) -> Result<LinkageTree> {
    let n = dist.n();
    if n < 2 {
        return Err(Error::InvalidInput(
            "clustering needs at least two assets".to_string(),
        ));
    }
    let total = 2 * n - 1;
    let mut d2 = vec![f64::INFINITY; total * total];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = dist.at(i, j);
                d2[i * total + j] = d * d;
            }
        }
    }
    let mut size = vec![1usize; total];
    // Active node ids, kept sorted: merged nodes get ids n+k, which are
    // strictly increasing, and push preserves order after retain.
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for k in 0..n - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = d2[a * total + b];
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        let (a, b, dab) = best.expect("at least one active pair");
        let (left, right) = canonical_children(a, b, n, total, &size, &d2, &active);
        let new_id = n + k;
        let (na, nb) = (size[a], size[b]);
        size[new_id] = na + nb;
        merges.push(Merge {
            left,
            right,
            distance: dab.max(0.0).sqrt(),
            size: na + nb,
        });
        active.retain(|&x| x != a && x != b);
        for &c in &active {
            let nc = size[c];
            let updated = ((na + nc) as f64 * d2[a * total + c]
                + (nb + nc) as f64 * d2[b * total + c]
                - nc as f64 * dab)
                / (na + nb + nc) as f64;
            d2[new_id * total + c] = updated;
            d2[c * total + new_id] = updated;
        }
        active.push(new_id);
    }
    LinkageTree::new(n, merges)
}

/// Seriate the assets: depth-first expansion of the root merge, each
/// internal node expanding into (left, right) in stored order. Sorting
/// the covariance matrix by this permutation concentrates large entries
/// near the diagonal.
pub fn quasi_diagonalize(tree: &LinkageTree) -> Result<LeafOrder> {
    let n = tree.n_leaves();
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![tree.root()];
    while let Some(node) = stack.pop() {
        if node < n {
            order.push(node);
        } else {
            let merge = tree
                .merges()
                .get(node - n)
                .ok_or_else(|| Error::MalformedTree(format!("dangling node id {node}")))?;
            // Right first so the left child is expanded first.
            stack.push(merge.right);
            stack.push(merge.left);
        }
    }
    LeafOrder::new(order)
}

/// Variance of a cluster under inverse-variance weighting of its members:
/// `w_i  1/S_ii` normalized within the cluster, then `w' S_sub w`.
pub fn cluster_variance(cov: &CovarianceMatrix, members: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidInput(
            "cluster variance of an empty member set".to_string(),
        ));
    }
    let mut inv = Vec::with_capacity(members.len());
    for &m in members {
        let v = cov.at(m, m);
        if v <= 0.0 {
            return Err(Error::ZeroVariance {
                ticker: cov.tickers()[m].clone(),
            });
        }
        inv.push(1.0 / v);
    }
    let total: f64 = inv.iter().sum();
    let weights: Vec<f64> = inv.iter().map(|v| v / total).collect();
    let mut var = 0.0;
    for (wi, &i) in weights.iter().zip(members) {
        for (wj, &j) in weights.iter().zip(members) {
            var += wi * wj * cov.at(i, j);
        }
    }
    Ok(var)
}

/// Top-down recursive bisection over the seriated asset list.
///
/// Each contiguous segment splits at the midpoint (ceil(k/2) assets on
/// the left); the left branch's weight multiplier is scaled by
/// `1 - V_L / (V_L + V_R)` and the right branch by the complement, where
/// each side's variance comes from [`cluster_variance`].
pub fn recursive_bisection(cov: &CovarianceMatrix, order: &LeafOrder) -> Result<WeightVector> {
    let n = cov.n();
    if order.permutation().len() != n {
        return Err(Error::InvalidInput(format!(
            "leaf order over {} assets, covariance over {n}",
            order.permutation().len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty covariance".to_string()));
    }
    // Weights indexed by position in the seriated order.
    let mut weights = vec![1.0; n];
    let mut stack = vec![(0usize, n)];
    while let Some((lo, hi)) = stack.pop() {
        let k = hi - lo;
        if k < 2 {
            continue;
        }
        let mid = lo + k.div_ceil(2);
        let left = &order.permutation()[lo..mid];
        let right = &order.permutation()[mid..hi];
        let v_left = cluster_variance(cov, left)?;
        let v_right = cluster_variance(cov, right)?;
        let total = v_left + v_right;
        // Degenerate zero-variance split falls back to an even split; the
        // clamp guards against tiny negative cluster variances from a
        // numerically non-PSD input.
        let alpha = if total > 0.0 {
            (1.0 - v_left / total).clamp(0.0, 1.0)
        } else {
            0.5
        };
        for w in &mut weights[lo..mid] {
            *w *= alpha;
        }
        for w in &mut weights[mid..hi] {
            *w *= 1.0 - alpha;
        }
        stack.push((lo, mid));
        stack.push((mid, hi));
    }
    let mut by_asset = vec![0.0; n];
    for (pos, &asset) in order.permutation().iter().enumerate() {
        by_asset[asset] = weights[pos];
    }
    WeightVector::new(cov.tickers().to_vec(), by_asset)
}

/// The composed HRP result, with intermediates kept for reporting.
#[derive(Debug, Clone)]
pub struct HrpOutput {
    pub weights: WeightVector,
    pub tree: LinkageTree,
    pub order: LeafOrder,
}

/// Run the three HRP phases end to end.
pub fn hrp_weights(cov: &CovarianceMatrix, corr: &CorrelationMatrix) -> Result<HrpOutput> {
    if cov.tickers() != corr.tickers() {
        return Err(Error::InvalidInput(
            "covariance and correlation ticker sets differ".to_string(),
        ));
    }
    let dist = distance_from_correlation(corr);
    let tree = ward_linkage(&dist)?;
    let order = quasi_diagonalize(&tree)?;
    let weights = recursive_bisection(cov, &order)?;
    Ok(HrpOutput {
        weights,
        tree,
        order,
    })
}

/// Serializable dendrogram: the merge list plus the leaf-order
/// permutation, enough to redraw the clustering or cut it at any
/// threshold.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Dendrogram {
    pub tickers: Vec<String>,
    pub nodes: Vec<DendrogramNode>,
    pub leaf_order: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DendrogramNode {
    pub id: usize,
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

impl Dendrogram {
    pub fn new(tree: &LinkageTree, order: &LeafOrder, tickers: &[String]) -> Self {
        let n = tree.n_leaves();
        Dendrogram {
            tickers: tickers.to_vec(),
            nodes: tree
                .merges()
                .iter()
                .enumerate()
                .map(|(k, m)| DendrogramNode {
                    id: n + k,
                    left: m.left,
                    right: m.right,
                    distance: m.distance,
                    size: m.size,
                })
                .collect(),
            leaf_order: order.permutation().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}
