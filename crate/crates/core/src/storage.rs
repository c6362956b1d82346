//! Available storage: the maximal extractable energy of a passive
//! network system.
//!
//! For additive strictly convex `H` on a connected graph, the available
//! storage at state `x` is `S_a(x) = H(x) - H(x*)` where `x*` minimizes
//! `H` subject to preserving the total `Σ x_i`. Optimality forces all
//! component derivatives to agree at a multiplier `λ`, so the minimizer
//! is found by a one-dimensional root search in `λ`:
//! `Σ_i (dH_i)⁻¹(λ) = Σ_i x_i`, whose left side is increasing in `λ`.
//!
//! For quadratic energy there is a closed form, for kinetic energy the
//! result is the classical pairwise motion energy, and the generalized
//! source/resistive edge split reduces to the same value whenever the
//! Kalman-style reachability test passes.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::HamiltonianSpec;
use crate::graph::DirectedGraph;
use crate::linalg::{hstack, numeric_rank};
use crate::{Error, Result};

/// Constraint residual scale for the multiplier search: the search stops
/// once `|Σ x*(λ) - Σ x| < 1e-12 * (1 + |Σ x|)`.
pub const CONSTRAINT_RESIDUAL_SCALE: f64 = 1e-12;

/// KKT verification scale: derivative agreement within `1e-9 * (1 + |λ|)`
/// and constraint agreement within `1e-9 * (1 + |Σ x|)`.
pub const KKT_TOL_SCALE: f64 = 1e-9;

const MAX_SEARCH_ITERATIONS: usize = 100;

/// Outcome of the constrained minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageResult {
    value: f64,
    minimizer: DVector<f64>,
    lagrange_multiplier: f64,
}

impl StorageResult {
    /// `S_a(x) = H(x) - H(x*)`, nonnegative up to roundoff.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The constrained minimizer `x*` (total preserved, derivatives equal).
    pub fn minimizer(&self) -> &DVector<f64> {
        &self.minimizer
    }

    /// The common derivative value `λ = dH_i(x*_i)`.
    pub fn lagrange_multiplier(&self) -> f64 {
        self.lagrange_multiplier
    }
}

/// Closed-form available storage for unit quadratic energy
/// `H(x) = ½‖x‖²`: the half squared distance to the mean state.
pub fn available_storage_quadratic(x: &DVector<f64>) -> StorageResult {
    assert!(!x.is_empty(), "state must have at least one component");
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let value = 0.5 * x.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>();
    StorageResult {
        value,
        minimizer: DVector::from_element(x.len(), mean),
        lagrange_multiplier: mean,
    }
}

/// Minimizes `H` over the hyperplane `Σ x*_i = Σ x_i` by the multiplier
/// search. Requires every component to expose the inverse of its
/// derivative; see [`constrained_minimizer_with_numeric_inverse`] for the
/// bisection fallback.
pub fn constrained_minimizer(h: &HamiltonianSpec, x: &DVector<f64>) -> Result<StorageResult> {
    minimize(h, x, &|i, y| h.component_inverse_derivative(i, y))
}

/// As [`constrained_minimizer`], but components lacking an inverse
/// derivative are inverted numerically by monotone bisection on `dH_i`.
/// Opt-in: numeric inversion can hide poor conditioning of `dH_i`.
pub fn constrained_minimizer_with_numeric_inverse(
    h: &HamiltonianSpec,
    x: &DVector<f64>,
) -> Result<StorageResult> {
    minimize(h, x, &|i, y| {
        if h.has_inverse_derivative(i) {
            h.component_inverse_derivative(i, y)
        } else {
            numeric_inverse(h, i, y, x[i])
        }
    })
}

/// Available storage `S_a(x) = H(x) - H(x*)` for general strictly convex
/// additive energy. The value depends only on `H` and the vertex totals,
/// not on the interconnection structure (any connected graph gives the
/// same answer).
pub fn available_storage_general(h: &HamiltonianSpec, x: &DVector<f64>) -> Result<StorageResult> {
    constrained_minimizer(h, x)
}

fn minimize(
    h: &HamiltonianSpec,
    x: &DVector<f64>,
    inverse: &dyn Fn(usize, f64) -> Result<f64>,
) -> Result<StorageResult> {
    let n = x.len();
    if h.len() != n {
        return Err(Error::DimensionMismatch { expected: h.len(), found: n });
    }
    assert!(n >= 1, "state must have at least one component");
    check_strict_convexity(h, x)?;

    let total: f64 = x.sum();
    let tol = CONSTRAINT_RESIDUAL_SCALE * (1.0 + total.abs());
    // The inverses are only defined on each derivative's range, so a
    // probe can land outside some component's domain. Those probes are
    // classified as infeasible rather than fatal; only a structurally
    // missing inverse aborts the search.
    enum Probe {
        Feasible(f64, DVector<f64>),
        Infeasible,
    }
    let probe = |lambda: f64| -> Result<Probe> {
        let mut star = DVector::zeros(n);
        for i in 0..n {
            match inverse(i, lambda) {
                Ok(v) if v.is_finite() => star[i] = v,
                Ok(_) => return Ok(Probe::Infeasible),
                Err(Error::NoInverseProvided { component }) => {
                    return Err(Error::NoInverseProvided { component });
                }
                Err(_) => return Ok(Probe::Infeasible),
            }
        }
        Ok(Probe::Feasible(star.sum() - total, star))
    };

    // Each dH_i(x_i) lies inside its own component's range, and the
    // extremes bound the multiplier: g(min) ≤ 0 ≤ g(max) wherever g is
    // defined, by monotonicity of the inverses.
    let derivatives: Vec<f64> = (0..n).map(|i| h.component_derivative(i, x[i])).collect();
    let mut lo = derivatives.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = derivatives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Feasible endpoint residuals; None marks an endpoint outside some
    // component's domain.
    let mut g_lo = match probe(lo)? {
        Probe::Feasible(g, star) => {
            if g.abs() < tol {
                return finish(h, x, lo, star);
            }
            if g > 0.0 {
                return Err(Error::BracketingFailed { lo, hi });
            }
            Some(g)
        }
        Probe::Infeasible => None,
    };
    let mut g_hi = match probe(hi)? {
        Probe::Feasible(g, star) => {
            if g.abs() < tol {
                return finish(h, x, hi, star);
            }
            if g < 0.0 {
                return Err(Error::BracketingFailed { lo, hi });
            }
            Some(g)
        }
        Probe::Infeasible => None,
    };

    // When both extremes are infeasible, reseed from any data-point
    // derivative inside the common domain. The domain is an interval,
    // so one feasible interior point makes the walls one-sided.
    if g_lo.is_none() && g_hi.is_none() {
        let mut seeded = false;
        for &seed in &derivatives {
            if let Probe::Feasible(g, star) = probe(seed)? {
                if g.abs() < tol {
                    return finish(h, x, seed, star);
                }
                if g < 0.0 {
                    lo = seed;
                    g_lo = Some(g);
                } else {
                    hi = seed;
                    g_hi = Some(g);
                }
                seeded = true;
                break;
            }
        }
        if !seeded {
            return Err(Error::BracketingFailed { lo, hi });
        }
    }

    for _ in 0..MAX_SEARCH_ITERATIONS {
        let width = hi - lo;
        let candidate = match (g_lo, g_hi) {
            // Secant proposal, safeguarded by bisection when it leaves
            // the bracket or stalls near an endpoint.
            (Some(gl), Some(gh)) => {
                let secant = lo - gl * width / (gh - gl);
                if secant.is_finite()
                    && secant > lo + 1e-3 * width
                    && secant < hi - 1e-3 * width
                {
                    secant
                } else {
                    0.5 * (lo + hi)
                }
            }
            // One wall still infeasible: plain bisection toward it.
            _ => 0.5 * (lo + hi),
        };
        match probe(candidate)? {
            Probe::Feasible(g, star) => {
                if g.abs() < tol || width < f64::EPSILON * (1.0 + lo.abs() + hi.abs()) {
                    return finish(h, x, candidate, star);
                }
                if g < 0.0 {
                    lo = candidate;
                    g_lo = Some(g);
                } else {
                    hi = candidate;
                    g_hi = Some(g);
                }
            }
            // The domain is an interval containing the root, so an
            // infeasible candidate replaces whichever wall is already
            // infeasible.
            Probe::Infeasible => {
                if g_lo.is_none() {
                    lo = candidate;
                } else {
                    hi = candidate;
                }
            }
        }
    }
    Err(Error::BracketingFailed { lo, hi })
}

fn finish(
    h: &HamiltonianSpec,
    x: &DVector<f64>,
    lambda: f64,
    star: DVector<f64>,
) -> Result<StorageResult> {
    let kkt_tol = KKT_TOL_SCALE * (1.0 + lambda.abs());
    for i in 0..star.len() {
        // Negated form so a NaN deviation fails rather than passes.
        let deviation = (h.component_derivative(i, star[i]) - lambda).abs();
        if !(deviation <= kkt_tol) {
            return Err(Error::NumericallyIndeterminate {
                detail: format!(
                    "derivative at minimizer component {i} misses the multiplier by {deviation}"
                ),
            });
        }
    }
    let total: f64 = x.sum();
    let constraint = (star.sum() - total).abs();
    if !(constraint <= KKT_TOL_SCALE * (1.0 + total.abs())) {
        return Err(Error::NumericallyIndeterminate {
            detail: format!("minimizer changes the conserved total by {constraint}"),
        });
    }
    Ok(StorageResult {
        value: h.value(x) - h.value(&star),
        minimizer: star,
        lagrange_multiplier: lambda,
    })
}

/// Strict convexity probe: each `dH_i` must be strictly increasing on a
/// window spanning the data.
fn check_strict_convexity(h: &HamiltonianSpec, x: &DVector<f64>) -> Result<()> {
    let span = x.amax().max(1.0);
    let lo = -2.0 * span - 1.0;
    let hi = 2.0 * span + 1.0;
    const SAMPLES: usize = 9;
    for i in 0..h.len() {
        let mut prev = h.component_derivative(i, lo);
        for k in 1..SAMPLES {
            let t = lo + (hi - lo) * k as f64 / (SAMPLES - 1) as f64;
            let cur = h.component_derivative(i, t);
            if !(cur > prev) {
                return Err(Error::NotStrictlyConvex { component: i });
            }
            prev = cur;
        }
    }
    Ok(())
}

/// Solves `dH_i(z) = y` by expanding a bracket around `hint` and
/// bisecting. Assumes `dH_i` strictly increasing.
fn numeric_inverse(h: &HamiltonianSpec, i: usize, y: f64, hint: f64) -> Result<f64> {
    let mut lo = hint - 1.0;
    let mut hi = hint + 1.0;
    let mut step = 1.0;
    for _ in 0..200 {
        if h.component_derivative(i, lo) <= y {
            break;
        }
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    for _ in 0..200 {
        if h.component_derivative(i, hi) >= y {
            break;
        }
        hi += step;
        step *= 2.0;
    }
    if h.component_derivative(i, lo) > y || h.component_derivative(i, hi) < y {
        return Err(Error::BracketingFailed { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h.component_derivative(i, mid) <= y {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < f64::EPSILON * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Motion energy of point masses: the kinetic energy in excess of the
/// common-velocity (momentum-preserving) state,
/// `½ Σ_{i<j} (m_i m_j / Σm) ‖p_i/m_i - p_j/m_j‖²`.
///
/// Momenta are laid out as `dim` consecutive coordinates per mass.
pub fn motion_energy(m: &DVector<f64>, p: &DVector<f64>, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidInput("spatial dimension must be at least 1".into()));
    }
    if let Some(i) = (0..m.len()).find(|&i| !(m[i] > 0.0)) {
        return Err(Error::NonPositiveMass { index: i, mass: m[i] });
    }
    if p.len() != m.len() * dim {
        return Err(Error::DimensionMismatch { expected: m.len() * dim, found: p.len() });
    }
    let total_mass: f64 = m.sum();
    let n = m.len();
    let mut energy = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut diff_sq = 0.0;
            for c in 0..dim {
                let vi = p[i * dim + c] / m[i];
                let vj = p[j * dim + c] / m[j];
                diff_sq += (vi - vj) * (vi - vj);
            }
            energy += 0.5 * (m[i] * m[j] / total_mass) * diff_sq;
        }
    }
    Ok(energy)
}

/// A network system with the incidence matrix split into source columns
/// (actuated edges) and resistive columns with positive weights.
#[derive(Debug, Clone)]
pub struct GeneralizedSystem {
    d_s: DMatrix<f64>,
    d_u: DMatrix<f64>,
    r_u: DVector<f64>,
    hamiltonian: HamiltonianSpec,
}

impl GeneralizedSystem {
    /// Builds and validates a system from raw incidence blocks. Every
    /// column must contain exactly one `-1` and one `+1`.
    pub fn new(
        d_s: DMatrix<f64>,
        d_u: DMatrix<f64>,
        r_u: DVector<f64>,
        hamiltonian: HamiltonianSpec,
    ) -> Result<Self> {
        if d_s.nrows() != d_u.nrows() {
            return Err(Error::DimensionMismatch { expected: d_s.nrows(), found: d_u.nrows() });
        }
        if hamiltonian.len() != d_s.nrows() {
            return Err(Error::DimensionMismatch {
                expected: d_s.nrows(),
                found: hamiltonian.len(),
            });
        }
        if r_u.len() != d_u.ncols() {
            return Err(Error::DimensionMismatch { expected: d_u.ncols(), found: r_u.len() });
        }
        for (j, &w) in r_u.iter().enumerate() {
            if !(w > 0.0) {
                return Err(Error::NonPositiveWeight { edge: j, weight: w });
            }
        }
        for (label, block) in [("source", &d_s), ("resistive", &d_u)] {
            for j in 0..block.ncols() {
                let col = block.column(j);
                let minus = col.iter().filter(|&&v| v == -1.0).count();
                let plus = col.iter().filter(|&&v| v == 1.0).count();
                let zero = col.iter().filter(|&&v| v == 0.0).count();
                if minus != 1 || plus != 1 || minus + plus + zero != col.len() {
                    return Err(Error::InvalidInput(format!(
                        "{label} column {j} is not an incidence column"
                    )));
                }
            }
        }
        Ok(Self { d_s, d_u, r_u, hamiltonian })
    }

    /// Splits a graph's incidence matrix: `source_edges` index the
    /// actuated columns, every remaining edge is resistive with its
    /// graph weight.
    pub fn from_graph(
        g: &DirectedGraph,
        source_edges: &[usize],
        hamiltonian: HamiltonianSpec,
    ) -> Result<Self> {
        let m = g.edge_count();
        let mut is_source = vec![false; m];
        for &j in source_edges {
            if j >= m {
                return Err(Error::InvalidInput(format!(
                    "source edge index {j} out of range for {m} edges"
                )));
            }
            if is_source[j] {
                return Err(Error::InvalidInput(format!("duplicate source edge index {j}")));
            }
            is_source[j] = true;
        }
        let d = g.incidence_matrix().to_f64();
        let source_cols: Vec<usize> = source_edges.to_vec();
        let resistive_cols: Vec<usize> = (0..m).filter(|&j| !is_source[j]).collect();
        let n = g.vertex_count();
        let pick = |cols: &[usize]| {
            DMatrix::from_fn(n, cols.len(), |i, k| d[(i, cols[k])])
        };
        let r_u = DVector::from_iterator(
            resistive_cols.len(),
            resistive_cols.iter().map(|&j| g.edges()[j].weight),
        );
        Self::new(pick(&source_cols), pick(&resistive_cols), r_u, hamiltonian)
    }

    pub fn source_incidence(&self) -> &DMatrix<f64> {
        &self.d_s
    }

    pub fn resistive_incidence(&self) -> &DMatrix<f64> {
        &self.d_u
    }

    pub fn resistive_weights(&self) -> &DVector<f64> {
        &self.r_u
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.hamiltonian
    }

    pub fn vertex_count(&self) -> usize {
        self.d_s.nrows()
    }

    /// `[D_s D_u]`: the full incidence matrix up to column order.
    pub fn full_incidence(&self) -> DMatrix<f64> {
        hstack(&[&self.d_s, &self.d_u])
    }

    /// `A = D_u R_u D_uᵀ`: the resistive diffusion operator.
    pub fn resistive_laplacian(&self) -> DMatrix<f64> {
        let r = DMatrix::from_diagonal(&self.r_u);
        &self.d_u * r * self.d_u.transpose()
    }
}

/// Kalman-style reachability on the incidence subspace: true when the
/// Krylov space of `(D_u R_u D_uᵀ, D_s)` fills the column space of the
/// full incidence matrix. Stated for quadratic energy; for other kinds
/// the same linear test is applied to the edge structure unchanged.
pub fn controllability_check(sys: &GeneralizedSystem) -> bool {
    krylov_and_incidence_ranks(sys).map_or(false, |(k, d)| k == d)
}

fn krylov_and_incidence_ranks(sys: &GeneralizedSystem) -> Option<(usize, usize)> {
    let n = sys.vertex_count();
    if sys.d_s.ncols() == 0 {
        let incidence_rank = numeric_rank(&sys.full_incidence());
        return Some((0, incidence_rank));
    }
    let a = sys.resistive_laplacian();
    let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut cur = sys.d_s.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = &a * cur;
    }
    let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
    let krylov = hstack(&refs);
    Some((numeric_rank(&krylov), numeric_rank(&sys.full_incidence())))
}

/// Available storage of the source/resistive system. Requires the
/// reachability check: when it fails, the constrained-minimum formula is
/// not certified and no value is returned.
pub fn available_storage_generalized(
    sys: &GeneralizedSystem,
    x: &DVector<f64>,
) -> Result<StorageResult> {
    if x.len() != sys.vertex_count() {
        return Err(Error::DimensionMismatch { expected: sys.vertex_count(), found: x.len() });
    }
    let (krylov_rank, incidence_rank) =
        krylov_and_incidence_ranks(sys).expect("ranks are defined for validated systems");
    if krylov_rank != incidence_rank {
        return Err(Error::NotControllable { krylov_rank, incidence_rank });
    }
    available_storage_general(sys.hamiltonian(), x)
}
