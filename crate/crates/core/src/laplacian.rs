//! The three Laplacian flavors and their classification.
//!
//! For a directed graph with incidence matrix `D` and positive edge
//! weights `r_j` (collected in `R = diag(r)`) this module builds:
//!
//! * the symmetric Laplacian `L = D R Dᵀ`, which is orientation-independent
//!   and positive semidefinite with `L𝟙 = 0`;
//! * the flow Laplacian `L = -D K`, where row `j` of `K` carries the weight
//!   `k_j` at the tail vertex of edge `j`; its column sums vanish and it
//!   splits as `Δ - A` with `Δ` the out-weight diagonal;
//! * the consensus Laplacian, whose row sums vanish; its transpose is a
//!   flow Laplacian of the reversed graph.
//!
//! A flow or consensus Laplacian is *balanced* when both row and column
//! sums vanish; exactly then `L + Lᵀ` is positive semidefinite.

use nalgebra::DMatrix;

use crate::graph::DirectedGraph;
use crate::linalg::{inf_norm, min_symmetric_eigenvalue};
use crate::{Error, Result};

/// Balance test scale: row/column sums count as zero below
/// `1e-9 * (1 + ‖L‖_∞)`. Relative so the test survives weight rescaling.
pub const BALANCE_TOL_SCALE: f64 = 1e-9;

/// Semidefiniteness scale: eigenvalues of the symmetric part above
/// `-1e-8 * ‖L‖_∞` count as nonnegative.
pub const EIG_TOL_SCALE: f64 = 1e-8;

/// Structural family a Laplacian belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    /// `L = Lᵀ ⪰ 0`, zero row and column sums, nonpositive off-diagonal.
    Symmetric,
    /// Zero column sums, nonnegative diagonal, nonpositive off-diagonal.
    Flow,
    /// Zero row sums; the transpose is a flow Laplacian.
    Consensus,
    /// Zero row and column sums both.
    Balanced,
}

impl LaplacianKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LaplacianKind::Symmetric => "symmetric",
            LaplacianKind::Flow => "flow",
            LaplacianKind::Consensus => "consensus",
            LaplacianKind::Balanced => "balanced",
        }
    }
}

/// A Laplacian matrix tagged with its structural kind and a record of how
/// it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    entries: DMatrix<f64>,
    kind: LaplacianKind,
    provenance: String,
}

impl LaplacianMatrix {
    /// Validates externally supplied entries against the invariants of
    /// `kind` (sign pattern and vanishing sums, scale-relative tolerances).
    pub fn from_entries(entries: DMatrix<f64>, kind: LaplacianKind) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let candidate = Self {
            entries,
            kind,
            provenance: format!("validated {} entries", kind.as_str()),
        };
        candidate.validate()?;
        Ok(candidate)
    }

    fn new_unchecked(entries: DMatrix<f64>, kind: LaplacianKind, provenance: String) -> Self {
        Self { entries, kind, provenance }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Side length of the matrix.
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// `(L + Lᵀ) / 2`.
    pub fn symmetric_part(&self) -> DMatrix<f64> {
        (&self.entries + self.entries.transpose()) * 0.5
    }

    /// Largest row-sum magnitude of `L`.
    pub fn max_row_sum_magnitude(&self) -> f64 {
        (0..self.n())
            .map(|i| self.entries.row(i).sum().abs())
            .fold(0.0, f64::max)
    }

    /// Largest column-sum magnitude of `L`.
    pub fn max_col_sum_magnitude(&self) -> f64 {
        (0..self.n())
            .map(|j| self.entries.column(j).sum().abs())
            .fold(0.0, f64::max)
    }

    /// Scale-relative tolerance for treating sums as zero.
    pub fn balance_tolerance(&self) -> f64 {
        BALANCE_TOL_SCALE * (1.0 + inf_norm(&self.entries))
    }

    /// Scale-relative tolerance for treating eigenvalues as nonnegative.
    pub fn eigenvalue_tolerance(&self) -> f64 {
        EIG_TOL_SCALE * inf_norm(&self.entries)
    }

    /// True when both row and column sums vanish within the balance
    /// tolerance. For a flow or consensus Laplacian this is equivalent to
    /// `L + Lᵀ ⪰ 0`, which is asserted as a cross-check.
    pub fn is_balanced(&self) -> bool {
        let tol = self.balance_tolerance();
        let balanced =
            self.max_row_sum_magnitude() <= tol && self.max_col_sum_magnitude() <= tol;
        if balanced {
            let min_eig = min_symmetric_eigenvalue(&self.entries);
            assert!(
                min_eig >= -self.eigenvalue_tolerance(),
                "balanced Laplacian with indefinite symmetric part (min eig {min_eig})"
            );
        }
        balanced
    }

    fn validate(&self) -> Result<()> {
        let tol = self.balance_tolerance();
        let fail = |detail: String| Error::InvalidLaplacian { kind: self.kind, detail };
        let check_signs = |l: &Self| -> Result<()> {
            for i in 0..l.n() {
                if l.entries[(i, i)] < -tol {
                    return Err(fail(format!(
                        "diagonal entry ({i},{i}) = {} is negative",
                        l.entries[(i, i)]
                    )));
                }
                for j in 0..l.n() {
                    if i != j && l.entries[(i, j)] > tol {
                        return Err(fail(format!(
                            "off-diagonal entry ({i},{j}) = {} is positive",
                            l.entries[(i, j)]
                        )));
                    }
                }
            }
            Ok(())
        };
        let row_sums_zero = self.max_row_sum_magnitude() <= tol;
        let col_sums_zero = self.max_col_sum_magnitude() <= tol;
        match self.kind {
            LaplacianKind::Symmetric => {
                let asym = inf_norm(&(&self.entries - self.entries.transpose()));
                if asym > tol {
                    return Err(fail(format!("not symmetric (‖L - Lᵀ‖_∞ = {asym})")));
                }
                if !row_sums_zero || !col_sums_zero {
                    return Err(fail("row/column sums do not vanish".into()));
                }
                check_signs(self)?;
                let min_eig = min_symmetric_eigenvalue(&self.entries);
                if min_eig < -self.eigenvalue_tolerance() {
                    return Err(fail(format!("not positive semidefinite (min eig {min_eig})")));
                }
            }
            LaplacianKind::Flow => {
                if !col_sums_zero {
                    return Err(fail(format!(
                        "column sums do not vanish (max magnitude {})",
                        self.max_col_sum_magnitude()
                    )));
                }
                check_signs(self)?;
            }
            LaplacianKind::Consensus => {
                if !row_sums_zero {
                    return Err(fail(format!(
                        "row sums do not vanish (max magnitude {})",
                        self.max_row_sum_magnitude()
                    )));
                }
                check_signs(self)?;
            }
            LaplacianKind::Balanced => {
                if !row_sums_zero || !col_sums_zero {
                    return Err(fail("row/column sums do not vanish".into()));
                }
                check_signs(self)?;
            }
        }
        Ok(())
    }
}

/// The m×n transportation matrix: row `j` carries edge `j`'s weight at the
/// column of its tail vertex and zeros elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrixK {
    entries: DMatrix<f64>,
}

impl WeightMatrixK {
    pub fn from_graph(g: &DirectedGraph) -> Self {
        let mut k = DMatrix::<f64>::zeros(g.edge_count(), g.vertex_count());
        for (j, e) in g.edges().iter().enumerate() {
            k[(j, e.tail)] = e.weight;
        }
        Self { entries: k }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// `L = D R Dᵀ` with `R = diag(edge weights)`. Symmetric, positive
/// semidefinite, and independent of edge orientation.
pub fn symmetric_laplacian(g: &DirectedGraph) -> LaplacianMatrix {
    let d = g.incidence_matrix().to_f64();
    let r = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        g.edge_count(),
        g.edges().iter().map(|e| e.weight),
    ));
    let l = &d * r * d.transpose();
    LaplacianMatrix::new_unchecked(
        l,
        LaplacianKind::Symmetric,
        format!("DRD^T of graph (n={}, m={})", g.vertex_count(), g.edge_count()),
    )
}

/// `L = -D K`: the flow Laplacian. Column sums vanish, the diagonal holds
/// total out-weights, and off-diagonal entry `(head, tail)` is `-k_j`
/// (parallel edges accumulate).
pub fn flow_laplacian(g: &DirectedGraph) -> LaplacianMatrix {
    let d = g.incidence_matrix().to_f64();
    let k = WeightMatrixK::from_graph(g);
    let l = -(&d * k.entries());
    LaplacianMatrix::new_unchecked(
        l,
        LaplacianKind::Flow,
        format!("-DK of graph (n={}, m={})", g.vertex_count(), g.edge_count()),
    )
}

/// The out-weight diagonal `Δ` and in-adjacency `A` with `A[head, tail]`
/// accumulating edge weights, so that the flow Laplacian is `Δ - A`.
pub fn degree_adjacency_split(g: &DirectedGraph) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = g.vertex_count();
    let mut delta = DMatrix::<f64>::zeros(n, n);
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        delta[(e.tail, e.tail)] += e.weight;
        adj[(e.head, e.tail)] += e.weight;
    }
    (delta, adj)
}

/// Consensus Laplacian: an edge tail → head of weight `w` means the head
/// agent tracks the tail agent, contributing `+w` at `(head, head)` and
/// `-w` at `(head, tail)`. Row sums vanish.
pub fn consensus_laplacian(g: &DirectedGraph) -> LaplacianMatrix {
    let n = g.vertex_count();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        l[(e.head, e.head)] += e.weight;
        l[(e.head, e.tail)] -= e.weight;
    }
    LaplacianMatrix::new_unchecked(
        l,
        LaplacianKind::Consensus,
        format!("consensus of graph (n={}, m={})", g.vertex_count(), g.edge_count()),
    )
}

/// Embeds a column-diagonally-dominant Metzler matrix into an
/// `(n+1)×(n+1)` flow Laplacian by appending a sink vertex that absorbs
/// each column's surplus: `m[n, j] = -Σ_i m[i, j]` with a zero last
/// column, returned negated.
pub fn metzler_augment(m: &DMatrix<f64>) -> Result<LaplacianMatrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] < 0.0 {
                return Err(Error::NotMetzler { row: i, col: j, value: m[(i, j)] });
            }
        }
        let off_sum: f64 = (0..n).filter(|&i| i != j).map(|i| m[(i, j)]).sum();
        let deficit = off_sum + m[(j, j)];
        if deficit > 0.0 {
            return Err(Error::NotDiagonallyDominant { col: j, deficit });
        }
    }
    let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
    for j in 0..n {
        let mut col_sum = 0.0;
        for i in 0..n {
            aug[(i, j)] = -m[(i, j)];
            col_sum += m[(i, j)];
        }
        aug[(n, j)] = col_sum;
    }
    LaplacianMatrix::from_entries(aug, LaplacianKind::Flow).map(|mut l| {
        l.provenance = format!("sink augmentation of {n}x{n} Metzler matrix");
        l
    })
}
