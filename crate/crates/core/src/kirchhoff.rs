//! Constructive kernel vectors for Laplacians via the matrix-tree route.
//!
//! For a flow Laplacian `L` the vector of first-row cofactors
//! `σ_j = (-1)^{1+j} det(minor_{1j})` satisfies `Lσ = 0`, every entry is
//! a sum of spanning-tree weight products (trees directed towards `j`),
//! and `σ` is entrywise positive exactly when the graph is strongly
//! connected. `Σ = diag(σ)` turns `L` into the balanced `𝓛 = LΣ`, which
//! splits into a skew part `J` and a positive-semidefinite part `R`.
//!
//! The primary numeric path evaluates cofactors by LU factorization per
//! minor and cross-checks the support against reachability in the
//! sparsity pattern; an exact path over arbitrary-precision rationals is
//! available at small sizes to anchor tests.

use nalgebra::{DMatrix, DVector};
use num::rational::BigRational;
use num::Zero;

use crate::laplacian::{LaplacianKind, LaplacianMatrix};
use crate::linalg::inf_norm;
use crate::{Error, Result};

/// Entries below `1e-12 * max_j σ_j` count as structural zeros.
pub const POSITIVITY_TOL_SCALE: f64 = 1e-12;

/// Kernel residual bound: `‖Lσ‖_∞ ≤ 1e-9 * ‖L‖_∞ * ‖σ‖_∞`.
pub const KERNEL_RESIDUAL_SCALE: f64 = 1e-9;

/// Size cap for the exact rational determinant path.
pub const EXACT_LIMIT: usize = 10;

/// A nonnegative kernel vector of a Laplacian together with a rescaled
/// copy and a structural positivity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaVector {
    values: DVector<f64>,
    normalized: DVector<f64>,
    strictly_positive: bool,
}

impl SigmaVector {
    fn from_values(values: DVector<f64>, strictly_positive: bool) -> Self {
        let max = values.max();
        let normalized = if max > 0.0 { &values / max } else { values.clone() };
        Self { values, normalized, strictly_positive }
    }

    /// Raw cofactor values: sums of spanning-tree weight products.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Copy rescaled so the largest entry is 1 (all zeros stay zero).
    pub fn normalized(&self) -> &DVector<f64> {
        &self.normalized
    }

    /// True when every entry clears the positivity threshold.
    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    /// `Σ = diag(σ)` over the raw values.
    pub fn diagonal(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.values)
    }
}

/// Skew/symmetric split `𝓛 = -J + R` of a balanced Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct JRDecomposition {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl JRDecomposition {
    /// Skew-symmetric part, `J = (𝓛ᵀ - 𝓛)/2 = -Jᵀ`.
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// Symmetric positive-semidefinite part, `R = (𝓛 + 𝓛ᵀ)/2`.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `-J + R`, which reconstructs the decomposed matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.r - &self.j
    }
}

/// Adjugate (classical adjoint): entry `(i,j)` is the cofactor `C_ji`, so
/// that `M · adj(M) = det(M) · I`.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "adjugate requires a square matrix");
    assert!(n >= 1, "adjugate requires n >= 1");
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            adj[(i, j)] = cofactor(m, j, i);
        }
    }
    adj
}

/// Cofactor `C_ij = (-1)^{i+j} det(minor_{ij})` (0-based indices).
fn cofactor(m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let minor = m.clone().remove_row(i).remove_column(j);
    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
    if minor.nrows() == 0 {
        return sign;
    }
    sign * minor.determinant()
}

/// Right kernel vector of a Laplacian with vanishing column sums (flow,
/// balanced, or symmetric kind): first-row cofactors, support-checked
/// against reachability in the sparsity pattern.
///
/// The input must have a single weak component; decompose first (or use
/// [`sigma_per_component`]) otherwise.
pub fn sigma_right(l: &LaplacianMatrix) -> Result<SigmaVector> {
    match l.kind() {
        LaplacianKind::Flow | LaplacianKind::Balanced | LaplacianKind::Symmetric => {}
        found => return Err(Error::WrongKind { expected: "flow", found }),
    }
    let components = sparsity_components(l.entries());
    if components.len() > 1 {
        return Err(Error::DisconnectedInput { components: components.len() });
    }
    cofactor_kernel(l.entries())
}

/// Left kernel vector of a Laplacian with vanishing row sums (consensus,
/// balanced, or symmetric kind): `σ L = 0`, entry `i` summing weight
/// products of spanning trees directed from vertex `i`. Computed as the
/// right kernel of `Lᵀ`.
pub fn sigma_left(l: &LaplacianMatrix) -> Result<SigmaVector> {
    match l.kind() {
        LaplacianKind::Consensus | LaplacianKind::Balanced | LaplacianKind::Symmetric => {}
        found => return Err(Error::WrongKind { expected: "consensus", found }),
    }
    let lt = l.entries().transpose();
    let components = sparsity_components(&lt);
    if components.len() > 1 {
        return Err(Error::DisconnectedInput { components: components.len() });
    }
    cofactor_kernel(&lt)
}

/// Kernel vector assembled per weak component: each component's entries
/// are the cofactors of its principal submatrix. Scales of distinct
/// components are unrelated. The flag is true only when every component
/// is strictly positive (every component strongly connected).
pub fn sigma_per_component(l: &LaplacianMatrix) -> Result<SigmaVector> {
    match l.kind() {
        LaplacianKind::Flow | LaplacianKind::Balanced | LaplacianKind::Symmetric => {}
        found => return Err(Error::WrongKind { expected: "flow", found }),
    }
    let entries = l.entries();
    let n = entries.nrows();
    let mut values = DVector::<f64>::zeros(n);
    let mut strictly_positive = true;
    for comp in sparsity_components(entries) {
        let sub = principal_submatrix(entries, &comp);
        let sigma = cofactor_kernel(&sub)?;
        strictly_positive &= sigma.is_strictly_positive();
        for (local, &global) in comp.iter().enumerate() {
            values[global] = sigma.values()[local];
        }
    }
    Ok(SigmaVector::from_values(values, strictly_positive))
}

/// Balancing transformation `𝓛 = LΣ` with `Σ = diag(σ)` from the raw
/// per-component cofactors. Defined only when every weak component is
/// strongly connected, which is exactly when `σ` is entrywise positive.
pub fn balance(l: &LaplacianMatrix) -> Result<(LaplacianMatrix, SigmaVector)> {
    let sigma = sigma_per_component(l)?;
    if !sigma.is_strictly_positive() {
        let max = sigma.values().max();
        let threshold = POSITIVITY_TOL_SCALE * max;
        let vertex = (0..sigma.len())
            .find(|&i| sigma.values()[i] <= threshold)
            .unwrap_or(0);
        return Err(Error::NotStronglyConnected { vertex });
    }
    let balanced_entries = l.entries() * sigma.diagonal();
    let balanced = LaplacianMatrix::from_entries(balanced_entries, LaplacianKind::Balanced)
        .map_err(|e| Error::NumericallyIndeterminate {
            detail: format!("balancing left residual sums: {e}"),
        })?;
    debug_assert!(balanced.is_balanced());
    Ok((balanced, sigma))
}

/// Predicted consensus value `c = σᵀ x0 / Σ_i σ_i` with `σ` the left
/// kernel vector. Requires a spanning tree in the consensus graph;
/// entries of `x0` at zero-σ vertices do not influence the value.
pub fn consensus_value(l: &LaplacianMatrix, x0: &DVector<f64>) -> Result<f64> {
    if x0.len() != l.n() {
        return Err(Error::DimensionMismatch { expected: l.n(), found: x0.len() });
    }
    let sigma = match sigma_left(l) {
        Ok(s) => s,
        Err(Error::DisconnectedInput { .. }) => return Err(Error::NoSpanningTree),
        Err(e) => return Err(e),
    };
    let total: f64 = sigma.values().sum();
    if !(total > 0.0) {
        return Err(Error::NoSpanningTree);
    }
    Ok(sigma.values().dot(x0) / total)
}

/// Splits a balanced Laplacian into `𝓛 = -J + R` with `J` skew-symmetric
/// and `R` symmetric positive-semidefinite.
pub fn jr_decomposition(l: &LaplacianMatrix) -> Result<JRDecomposition> {
    if !l.is_balanced() {
        return Err(Error::NotBalanced {
            row_sum: l.max_row_sum_magnitude(),
            col_sum: l.max_col_sum_magnitude(),
        });
    }
    let entries = l.entries();
    let j = (entries.transpose() - entries) * 0.5;
    let r = (entries.transpose() + entries) * 0.5;
    let min_eig = crate::linalg::min_symmetric_eigenvalue(&r);
    assert!(
        min_eig >= -l.eigenvalue_tolerance(),
        "symmetric part of a balanced Laplacian must be PSD (min eig {min_eig})"
    );
    Ok(JRDecomposition { j, r })
}

/// First-row cofactor kernel with support and residual verification.
/// Assumes vanishing column sums (so the cofactor is row-independent).
fn cofactor_kernel(l: &DMatrix<f64>) -> Result<SigmaVector> {
    let n = l.nrows();
    let mut raw = DVector::<f64>::zeros(n);
    for j in 0..n {
        raw[j] = cofactor(l, 0, j);
    }
    let max_abs = raw.amax();
    // Rounding noise in an (n-1)x(n-1) determinant grows with the
    // matrix scale even when the exact value is zero, so the zero test
    // combines a relative threshold with that absolute floor.
    let noise_floor = (n as f64).powi(2)
        * f64::EPSILON
        * inf_norm(l).max(1.0).powi(n as i32 - 1);
    let threshold = POSITIVITY_TOL_SCALE * max_abs + noise_floor;
    let structural = structural_support(l);

    let mut values = DVector::<f64>::zeros(n);
    for j in 0..n {
        if raw[j] < -threshold {
            return Err(Error::NumericallyIndeterminate {
                detail: format!("cofactor {j} is negative ({})", raw[j]),
            });
        }
        let numeric_positive = raw[j] > threshold;
        if numeric_positive != structural[j] {
            return Err(Error::NumericallyIndeterminate {
                detail: format!(
                    "cofactor {j} = {} but reachability says the entry should be {}",
                    raw[j],
                    if structural[j] { "positive" } else { "zero" }
                ),
            });
        }
        values[j] = if structural[j] { raw[j] } else { 0.0 };
    }

    let residual = inf_norm(&DMatrix::from_column_slice(n, 1, (l * &values).as_slice()));
    let bound = KERNEL_RESIDUAL_SCALE * inf_norm(l) * values.amax();
    if residual > bound && max_abs > 0.0 {
        return Err(Error::NumericallyIndeterminate {
            detail: format!("kernel residual {residual} exceeds bound {bound}"),
        });
    }

    let strictly_positive = structural.iter().all(|&p| p);
    Ok(SigmaVector::from_values(values, strictly_positive))
}

/// Per-entry structural positivity: `σ_j > 0` exactly when every vertex
/// reaches `j` in the digraph read off the off-diagonal sparsity pattern
/// (an edge `u → v` corresponds to a nonzero at `(v, u)`).
fn structural_support(l: &DMatrix<f64>) -> Vec<bool> {
    let n = l.nrows();
    (0..n)
        .map(|root| {
            let mut seen = vec![false; n];
            let mut stack = vec![root];
            seen[root] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for u in 0..n {
                    if u != v && !seen[u] && l[(v, u)] != 0.0 {
                        seen[u] = true;
                        count += 1;
                        stack.push(u);
                    }
                }
            }
            count == n
        })
        .collect()
}

/// Weak components of the off-diagonal sparsity pattern, each sorted
/// ascending, ordered by smallest member.
fn sparsity_components(l: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = l.nrows();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for u in 0..n {
                if u != v && !seen[u] && (l[(v, u)] != 0.0 || l[(u, v)] != 0.0) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

fn principal_submatrix(l: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let k = idx.len();
    DMatrix::from_fn(k, k, |i, j| l[(idx[i], idx[j])])
}

/// Exact first-row cofactors over arbitrary-precision rationals (each
/// float entry converted exactly). Capped at [`EXACT_LIMIT`] rows.
pub fn sigma_right_exact(l: &DMatrix<f64>) -> Result<Vec<BigRational>> {
    let n = l.nrows();
    if n != l.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: l.ncols() });
    }
    if n > EXACT_LIMIT {
        return Err(Error::GraphTooLargeForOracle { n, limit: EXACT_LIMIT });
    }
    let exact: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    BigRational::from_float(l[(i, j)]).ok_or_else(|| {
                        Error::InvalidInput(format!("entry ({i},{j}) is not finite"))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n)
        .map(|j| {
            let minor: Vec<Vec<BigRational>> = exact
                .iter()
                .skip(1)
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let det = determinant_exact(minor);
            if j % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect())
}

/// Exact determinant by Gaussian elimination with row pivoting.
fn determinant_exact(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    if n == 0 {
        return BigRational::from_integer(1.into());
    }
    let mut det = BigRational::from_integer(1.into());
    for col in 0..n {
        let pivot_row = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(r) => r,
            None => return BigRational::zero(),
        };
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= pivot.clone();
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::laplacian::{consensus_laplacian, flow_laplacian, symmetric_laplacian};
    use approx::assert_abs_diff_eq;
    use num::{Signed, ToPrimitive};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_cycle() -> DirectedGraph {
        // a = 2 on 0 -> 1, b = 3 on 1 -> 0.
        DirectedGraph::from_triples(2, &[(0, 1, 2.0), (1, 0, 3.0)]).unwrap()
    }

    fn unit_three_cycle() -> DirectedGraph {
        DirectedGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DirectedGraph {
        let triples: Vec<_> = (0..m)
            .map(|_| {
                let tail = rng.gen_range(0..n);
                let head = (tail + rng.gen_range(1..n)) % n;
                (tail, head, rng.gen_range(0.2..3.0))
            })
            .collect();
        DirectedGraph::from_triples(n, &triples).unwrap()
    }

    /// Strongly connected by construction: a directed cycle plus chords.
    fn random_strongly_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> DirectedGraph {
        let mut triples: Vec<_> = (0..n)
            .map(|i| (i, (i + 1) % n, rng.gen_range(0.2..3.0)))
            .collect();
        for _ in 0..extra {
            let tail = rng.gen_range(0..n);
            let head = (tail + rng.gen_range(1..n)) % n;
            triples.push((tail, head, rng.gen_range(0.2..3.0)));
        }
        DirectedGraph::from_triples(n, &triples).unwrap()
    }

    #[test]
    fn adjugate_of_identity() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(adjugate(&i2), i2);
    }

    #[test]
    fn adjugate_two_by_two_flow() {
        // [[a,-b],[-a,b]] has constant-row adjugate [[b,b],[a,a]].
        let l = DMatrix::from_row_slice(2, 2, &[2.0, -3.0, -2.0, 3.0]);
        let expected = DMatrix::from_row_slice(2, 2, &[3.0, 3.0, 2.0, 2.0]);
        assert_eq!(adjugate(&l), expected);
    }

    #[test]
    fn adjugate_identity_relation_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let m = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-2.0..2.0));
            let det = m.determinant();
            let product = &m * adjugate(&m);
            for i in 0..4 {
                for j in 0..4 {
                    let expected = if i == j { det } else { 0.0 };
                    assert_abs_diff_eq!(product[(i, j)], expected, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn adjugate_one_by_one() {
        let m = DMatrix::from_element(1, 1, 7.0);
        assert_eq!(adjugate(&m), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn sigma_of_two_cycle_matches_tree_oracle() {
        let g = two_cycle();
        let sigma = sigma_right(&flow_laplacian(&g)).unwrap();
        assert_eq!(sigma.values().as_slice(), &[3.0, 2.0]);
        assert!(sigma.is_strictly_positive());
        assert_abs_diff_eq!(sigma.normalized()[0], 1.0);
        assert_abs_diff_eq!(sigma.normalized()[1], 2.0 / 3.0);
        for root in 0..2 {
            assert_abs_diff_eq!(
                sigma.values()[root],
                g.tree_weight_sum_towards(root).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sigma_of_unit_three_cycle() {
        let sigma = sigma_right(&flow_laplacian(&unit_three_cycle())).unwrap();
        assert_eq!(sigma.values().as_slice(), &[1.0, 1.0, 1.0]);
        assert!(sigma.is_strictly_positive());
    }

    #[test]
    fn sigma_of_path_has_structural_zero() {
        let g = DirectedGraph::from_triples(2, &[(0, 1, 4.0)]).unwrap();
        let sigma = sigma_right(&flow_laplacian(&g)).unwrap();
        assert_eq!(sigma.values().as_slice(), &[0.0, 4.0]);
        assert!(!sigma.is_strictly_positive());
    }

    #[test]
    fn sigma_of_single_vertex() {
        let g = DirectedGraph::from_triples(1, &[]).unwrap();
        let sigma = sigma_right(&flow_laplacian(&g)).unwrap();
        assert_eq!(sigma.values().as_slice(), &[1.0]);
        assert!(sigma.is_strictly_positive());
    }

    #[test]
    fn sigma_rejects_disconnected_input() {
        let g = DirectedGraph::from_triples(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)])
            .unwrap();
        assert!(matches!(
            sigma_right(&flow_laplacian(&g)).unwrap_err(),
            Error::DisconnectedInput { components: 2 }
        ));
    }

    #[test]
    fn sigma_rejects_wrong_kind() {
        let g = two_cycle();
        assert!(matches!(
            sigma_right(&consensus_laplacian(&g)).unwrap_err(),
            Error::WrongKind { expected: "flow", .. }
        ));
        assert!(matches!(
            sigma_left(&flow_laplacian(&g)).unwrap_err(),
            Error::WrongKind { expected: "consensus", .. }
        ));
    }

    #[test]
    fn sigma_matches_tree_oracle_exhaustively_n3() {
        // All 64 digraphs on 3 vertices over the 6 possible arcs,
        // randomized weights.
        let arcs: Vec<(usize, usize)> = (0..3)
            .flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for mask in 0u32..64 {
            let triples: Vec<_> = arcs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &(a, b))| (a, b, rng.gen_range(0.25..2.0)))
                .collect();
            let g = DirectedGraph::from_triples(3, &triples).unwrap();
            check_sigma_against_oracle(&g);
        }
    }

    #[test]
    fn sigma_matches_tree_oracle_random_n4_n5() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..60 {
            let n = rng.gen_range(4..=5);
            let m = rng.gen_range(1..=2 * n);
            let g = random_graph(&mut rng, n, m);
            check_sigma_against_oracle(&g);
        }
    }

    /// sigma (whole-graph or per-component) must match the brute-force
    /// spanning-tree enumeration to relative tolerance 1e-8.
    fn check_sigma_against_oracle(g: &DirectedGraph) {
        let l = flow_laplacian(g);
        let comps = g.connected_components();
        if comps.len() == 1 {
            let sigma = sigma_right(&l).unwrap();
            for root in 0..g.vertex_count() {
                let oracle = g.tree_weight_sum_towards(root).unwrap();
                let tol = 1e-8 * oracle.max(1.0);
                assert_abs_diff_eq!(sigma.values()[root], oracle, epsilon = tol);
            }
        } else {
            assert!(matches!(
                sigma_right(&l).unwrap_err(),
                Error::DisconnectedInput { .. }
            ));
            let sigma = sigma_per_component(&l).unwrap();
            for comp in comps {
                let sub = induced_subgraph(g, &comp);
                for (local, &global) in comp.iter().enumerate() {
                    let oracle = sub.tree_weight_sum_towards(local).unwrap();
                    let tol = 1e-8 * oracle.max(1.0);
                    assert_abs_diff_eq!(sigma.values()[global], oracle, epsilon = tol);
                }
            }
        }
    }

    fn induced_subgraph(g: &DirectedGraph, vertices: &[usize]) -> DirectedGraph {
        let index_of = |v: usize| vertices.iter().position(|&u| u == v);
        let triples: Vec<_> = g
            .edges()
            .iter()
            .filter_map(|e| {
                let t = index_of(e.tail)?;
                let h = index_of(e.head)?;
                Some((t, h, e.weight))
            })
            .collect();
        DirectedGraph::from_triples(vertices.len(), &triples).unwrap()
    }

    #[test]
    fn strict_positivity_iff_strongly_connected() {
        let arcs: Vec<(usize, usize)> = (0..3)
            .flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        for mask in 0u32..64 {
            let triples: Vec<_> = arcs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &(a, b))| (a, b, 1.0))
                .collect();
            let g = DirectedGraph::from_triples(3, &triples).unwrap();
            if g.connected_components().len() != 1 {
                continue;
            }
            let sigma = sigma_right(&flow_laplacian(&g)).unwrap();
            assert_eq!(
                sigma.is_strictly_positive(),
                g.is_strongly_connected(),
                "mask {mask:b}"
            );
        }
    }

    #[test]
    fn kernel_residual_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..30 {
            let n = rng.gen_range(2..=7);
            let extra = rng.gen_range(0..=n);
            let g = random_strongly_connected(&mut rng, n, extra);
            let l = flow_laplacian(&g);
            let sigma = sigma_right(&l).unwrap();
            let residual = (l.entries() * sigma.values()).amax();
            assert!(residual <= KERNEL_RESIDUAL_SCALE * inf_norm(l.entries()) * sigma.values().amax());
        }
    }

    #[test]
    fn sigma_direction_matches_numeric_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let n = rng.gen_range(3..=6);
            let g = random_strongly_connected(&mut rng, n, 2);
            let l = flow_laplacian(&g);
            let sigma = sigma_right(&l).unwrap();
            let svd = l.entries().clone().svd(true, true);
            let v_t = svd.v_t.unwrap();
            let null = v_t.row(n - 1).transpose();
            let cosine = sigma.normalized().dot(&null).abs()
                / (sigma.normalized().norm() * null.norm());
            assert!(cosine > 1.0 - 1e-6, "cosine {cosine}");
        }
    }

    #[test]
    fn sigma_left_leader_example() {
        // Edge 1 -> 0 weight a: agent 0 listens to agent 1.
        let g = DirectedGraph::from_triples(2, &[(1, 0, 2.0)]).unwrap();
        let sigma = sigma_left(&consensus_laplacian(&g)).unwrap();
        assert_eq!(sigma.values()[0], 0.0);
        assert!(sigma.values()[1] > 0.0);
        assert_eq!(sigma.normalized().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn sigma_left_symmetric_pair() {
        let g = DirectedGraph::from_triples(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let sigma = sigma_left(&consensus_laplacian(&g)).unwrap();
        assert_eq!(sigma.values().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn sigma_left_is_sigma_right_of_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let m = rng.gen_range(1..=2 * n);
            let g = random_graph(&mut rng, n, m);
            let lc = consensus_laplacian(&g);
            if sparsity_components(lc.entries()).len() != 1 {
                continue;
            }
            let left = sigma_left(&lc).unwrap();
            let via_transpose = LaplacianMatrix::from_entries(
                lc.entries().transpose(),
                LaplacianKind::Flow,
            )
            .unwrap();
            let right = sigma_right(&via_transpose).unwrap();
            assert_eq!(left.values(), right.values());
        }
    }

    #[test]
    fn balance_two_cycle_example() {
        let l = flow_laplacian(&two_cycle());
        let (balanced, sigma) = balance(&l).unwrap();
        assert_eq!(sigma.diagonal(), DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0]));
        let expected = DMatrix::from_row_slice(2, 2, &[6.0, -6.0, -6.0, 6.0]);
        assert_eq!(balanced.entries(), &expected);
        assert_eq!(balanced.kind(), LaplacianKind::Balanced);
        assert!(balanced.is_balanced());
    }

    #[test]
    fn balance_of_unit_cofactor_input_is_identity_transform() {
        // Unit 3-cycle: raw cofactors are all 1, so Sigma = I and the
        // transform returns the input unchanged.
        let l = flow_laplacian(&unit_three_cycle());
        let (balanced, sigma) = balance(&l).unwrap();
        assert_eq!(sigma.values().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(balanced.entries(), l.entries());
    }

    #[test]
    fn balance_rejects_path() {
        let g = DirectedGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            balance(&flow_laplacian(&g)).unwrap_err(),
            Error::NotStronglyConnected { vertex: 0 }
        ));
    }

    #[test]
    fn balance_handles_components_independently() {
        // Two disjoint 2-cycles; each component balances on its own scale.
        let g = DirectedGraph::from_triples(
            4,
            &[(0, 1, 2.0), (1, 0, 3.0), (2, 3, 5.0), (3, 2, 7.0)],
        )
        .unwrap();
        let (balanced, sigma) = balance(&flow_laplacian(&g)).unwrap();
        assert!(balanced.is_balanced());
        assert_eq!(sigma.values().as_slice(), &[3.0, 2.0, 7.0, 5.0]);
    }

    #[test]
    fn balanced_output_is_psd_forward_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let extra = rng.gen_range(0..=n);
            let g = random_strongly_connected(&mut rng, n, extra);
            let (balanced, _) = balance(&flow_laplacian(&g)).unwrap();
            assert!(balanced.is_balanced());
            let min_eig = crate::linalg::min_symmetric_eigenvalue(balanced.entries());
            assert!(min_eig >= -balanced.eigenvalue_tolerance());
        }
    }

    #[test]
    fn consensus_value_leader_wins() {
        let g = DirectedGraph::from_triples(2, &[(1, 0, 2.0)]).unwrap();
        let lc = consensus_laplacian(&g);
        let x0 = DVector::from_vec(vec![5.0, 9.0]);
        assert_abs_diff_eq!(consensus_value(&lc, &x0).unwrap(), 9.0);
    }

    #[test]
    fn consensus_value_symmetric_mean() {
        let g = DirectedGraph::from_triples(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let lc = consensus_laplacian(&g);
        let x0 = DVector::from_vec(vec![0.0, 4.0]);
        assert_abs_diff_eq!(consensus_value(&lc, &x0).unwrap(), 2.0);
    }

    #[test]
    fn consensus_value_ignores_non_rooted_vertices() {
        let g = DirectedGraph::from_triples(2, &[(1, 0, 2.0)]).unwrap();
        let lc = consensus_laplacian(&g);
        let a = consensus_value(&lc, &DVector::from_vec(vec![5.0, 9.0])).unwrap();
        let b = consensus_value(&lc, &DVector::from_vec(vec![-100.0, 9.0])).unwrap();
        assert_abs_diff_eq!(a, b);
    }

    #[test]
    fn consensus_value_requires_spanning_tree() {
        // Two isolated pairs: no spanning tree of the whole graph.
        let g = DirectedGraph::from_triples(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)])
            .unwrap();
        let lc = consensus_laplacian(&g);
        assert!(matches!(
            consensus_value(&lc, &DVector::zeros(4)).unwrap_err(),
            Error::NoSpanningTree
        ));
    }

    #[test]
    fn jr_of_symmetric_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let g = random_graph(&mut rng, 4, 6);
        let l = symmetric_laplacian(&g);
        let jr = jr_decomposition(&l).unwrap();
        assert!(jr.j().iter().all(|&v| v == 0.0));
        assert_eq!(jr.r(), l.entries());
    }

    #[test]
    fn jr_of_balanced_three_cycle() {
        let l = flow_laplacian(&unit_three_cycle());
        let jr = jr_decomposition(&l).unwrap();
        // R is half the symmetric Laplacian of the same cycle.
        let half_sym = symmetric_laplacian(&unit_three_cycle()).entries() * 0.5;
        assert_eq!(jr.r(), &half_sym);
        // J is exactly skew and the split reconstructs the input.
        assert_eq!(jr.j().transpose(), -jr.j());
        let reconstructed = jr.reconstruct();
        for (a, b) in reconstructed.iter().zip(l.entries().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn jr_rejects_unbalanced() {
        let g = DirectedGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            jr_decomposition(&flow_laplacian(&g)).unwrap_err(),
            Error::NotBalanced { .. }
        ));
    }

    #[test]
    fn jr_symmetric_part_psd_on_randomized_balanced_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let extra = rng.gen_range(0..=2 * n);
            let g = random_strongly_connected(&mut rng, n, extra);
            let (balanced, _) = balance(&flow_laplacian(&g)).unwrap();
            let jr = jr_decomposition(&balanced).unwrap();
            let min_eig = crate::linalg::min_symmetric_eigenvalue(jr.r());
            assert!(min_eig >= -balanced.eigenvalue_tolerance());
        }
    }

    #[test]
    fn exact_cofactors_match_float_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..10 {
            let n = rng.gen_range(2..=5);
            // Dyadic weights keep the rationals small.
            let triples: Vec<_> = (0..2 * n)
                .map(|_| {
                    let tail = rng.gen_range(0..n);
                    let head = (tail + rng.gen_range(1..n)) % n;
                    (tail, head, rng.gen_range(1..=16) as f64 / 8.0)
                })
                .collect();
            let g = DirectedGraph::from_triples(n, &triples).unwrap();
            let l = flow_laplacian(&g);
            if sparsity_components(l.entries()).len() != 1 {
                continue;
            }
            let float_sigma = sigma_right(&l).unwrap();
            let exact = sigma_right_exact(l.entries()).unwrap();
            for j in 0..n {
                let e = exact[j].to_f64().unwrap();
                assert_abs_diff_eq!(float_sigma.values()[j], e, epsilon = 1e-9 * e.abs().max(1.0));
                assert!(!exact[j].is_negative());
            }
        }
    }

    #[test]
    fn exact_path_rejects_oversize() {
        let l = DMatrix::<f64>::zeros(11, 11);
        assert!(matches!(
            sigma_right_exact(&l).unwrap_err(),
            Error::GraphTooLargeForOracle { n: 11, limit: EXACT_LIMIT }
        ));
    }
}
