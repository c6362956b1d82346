//! Chain complexes with exact integer boundary operators, plus heat
//! exchange dynamics on two-dimensional complexes.
//!
//! A complex of order `k` is a sequence of integer matrices `∂_k, …, ∂_1`
//! with compatible shapes. Validity means every consecutive composition
//! `∂_{j−1}·∂_j` vanishes exactly in integer arithmetic; no tolerance is
//! involved. Directed graphs are the order-1 case, where `∂_1` is the
//! incidence matrix.
//!
//! On an order-2 complex, faces carry internal energies `u` and a
//! per-face entropy `s`. The induced exchange dynamics move energy
//! along edges proportionally to differences of the intensities
//! `ds/du`, so total energy is conserved on closed complexes while
//! entropy never decreases.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Scalar function shared by entropy closures.
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Map from face intensities to an edge-space conduction matrix.
type ConductionFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Relative symmetry slack accepted when validating conduction matrices.
const SYMMETRY_TOL_SCALE: f64 = 1e-12;

/// Relative eigenvalue slack accepted when checking conduction positivity.
const CONDUCTION_EIG_SCALE: f64 = 1e-10;

/// A finite chain complex: integer boundary operators between cell levels.
///
/// Level `j` has `cell_counts[j]` cells; the boundary `∂_j` is an
/// integer matrix with one column per `j`-cell and one row per
/// `(j−1)`-cell. Construction checks shapes only; use
/// [`validate_complex`] to test the composition law `∂_{j−1}∂_j = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainComplex {
    cell_counts: Vec<usize>,
    /// `boundaries[j - 1]` is `∂_j`, sized `cell_counts[j-1] × cell_counts[j]`.
    boundaries: Vec<DMatrix<i64>>,
}

impl ChainComplex {
    /// Builds a complex from cell counts `[n_0, …, n_k]` and boundary
    /// operators `[∂_1, …, ∂_k]`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] when the counts are empty or the number of
    /// boundaries is not `k`; [`Error::DimensionChainBroken`] when some
    /// `∂_j` does not have shape `n_{j−1} × n_j`.
    pub fn new(cell_counts: Vec<usize>, boundaries: Vec<DMatrix<i64>>) -> Result<Self> {
        if cell_counts.is_empty() {
            return Err(Error::InvalidInput(
                "a complex needs at least the level-0 cell count".into(),
            ));
        }
        if boundaries.len() + 1 != cell_counts.len() {
            return Err(Error::InvalidInput(format!(
                "{} cell levels need {} boundary operators, got {}",
                cell_counts.len(),
                cell_counts.len() - 1,
                boundaries.len()
            )));
        }
        for (idx, boundary) in boundaries.iter().enumerate() {
            let level = idx + 1;
            let (rows, cols) = (cell_counts[level - 1], cell_counts[level]);
            if boundary.nrows() != rows || boundary.ncols() != cols {
                return Err(Error::DimensionChainBroken {
                    level,
                    detail: format!(
                        "boundary must be {rows}x{cols}, got {}x{}",
                        boundary.nrows(),
                        boundary.ncols()
                    ),
                });
            }
        }
        Ok(Self {
            cell_counts,
            boundaries,
        })
    }

    /// Wraps a directed graph as an order-1 complex whose single
    /// boundary operator is the incidence matrix.
    pub fn from_graph(graph: &DirectedGraph) -> Self {
        let incidence = graph.incidence_matrix();
        Self {
            cell_counts: vec![graph.vertex_count(), graph.edge_count()],
            boundaries: vec![incidence.entries().clone()],
        }
    }

    /// Highest cell level `k`.
    pub fn order(&self) -> usize {
        self.cell_counts.len() - 1
    }

    /// Cell counts per level, `[n_0, …, n_k]`.
    pub fn cell_counts(&self) -> &[usize] {
        &self.cell_counts
    }

    /// Number of cells at `level`. Panics when `level > k`.
    pub fn cells(&self, level: usize) -> usize {
        assert!(level <= self.order(), "level {level} exceeds order");
        self.cell_counts[level]
    }

    /// Boundary operator `∂_j` for `1 ≤ j ≤ k`.
    ///
    /// # Errors
    ///
    /// [`Error::LevelOutOfRange`] outside that range.
    pub fn boundary(&self, level: usize) -> Result<&DMatrix<i64>> {
        if level == 0 || level > self.order() {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.order(),
            });
        }
        Ok(&self.boundaries[level - 1])
    }

    /// First level whose composition with the previous boundary fails,
    /// with a description of the offending entry.
    fn composition_defect(&self) -> Option<(usize, String)> {
        for level in 2..=self.order() {
            let product = &self.boundaries[level - 2] * &self.boundaries[level - 1];
            for row in 0..product.nrows() {
                for col in 0..product.ncols() {
                    let value = product[(row, col)];
                    if value != 0 {
                        return Some((
                            level,
                            format!(
                                "composition with the previous boundary has entry {value} at ({row}, {col})"
                            ),
                        ));
                    }
                }
            }
        }
        None
    }

    /// Filled oriented triangle: 3 vertices, 3 edges, 1 face.
    pub fn triangle() -> Self {
        let d1 = DMatrix::from_row_slice(3, 3, &[-1, 0, 1, 1, -1, 0, 0, 1, -1]);
        let d2 = DMatrix::from_row_slice(3, 1, &[1, 1, 1]);
        Self::new(vec![3, 3, 1], vec![d1, d2]).expect("triangle shapes are consistent")
    }

    /// Two oriented triangles glued along one shared edge: 4 vertices,
    /// 5 edges, 2 faces. Edge 2 is the shared one; edges 0, 1, 3, 4
    /// lie on the outer rim.
    pub fn two_face_strip() -> Self {
        #[rustfmt::skip]
        let d1 = DMatrix::from_row_slice(4, 5, &[
            -1,  0,  1,  0,  1,
             1, -1,  0,  0,  0,
             0,  1, -1, -1,  0,
             0,  0,  0,  1, -1,
        ]);
        #[rustfmt::skip]
        let d2 = DMatrix::from_row_slice(5, 2, &[
            1,  0,
            1,  0,
            1, -1,
            0,  1,
            0,  1,
        ]);
        Self::new(vec![4, 5, 2], vec![d1, d2]).expect("strip shapes are consistent")
    }

    /// Boundary surface of a tetrahedron: 4 vertices, 6 edges, 4 faces.
    /// Every edge borders exactly two faces with opposite orientations,
    /// so the rows of `∂_2` sum to zero and the complex is closed.
    pub fn tetrahedron_boundary() -> Self {
        #[rustfmt::skip]
        let d1 = DMatrix::from_row_slice(4, 6, &[
            -1, -1, -1,  0,  0,  0,
             1,  0,  0, -1, -1,  0,
             0,  1,  0,  1,  0, -1,
             0,  0,  1,  0,  1,  1,
        ]);
        #[rustfmt::skip]
        let d2 = DMatrix::from_row_slice(6, 4, &[
             0,  0,  1, -1,
             0, -1,  0,  1,
             0,  1, -1,  0,
             1,  0,  0, -1,
            -1,  0,  1,  0,
             1, -1,  0,  0,
        ]);
        Self::new(vec![4, 6, 4], vec![d1, d2]).expect("tetrahedron shapes are consistent")
    }
}

/// Checks the composition law `∂_{j−1}·∂_j = 0` for every consecutive
/// pair, in exact integer arithmetic. Order-1 complexes are vacuously
/// valid.
pub fn validate_complex(complex: &ChainComplex) -> bool {
    complex.composition_defect().is_none()
}

/// Coboundary operator `d_j = ∂_jᵀ` for `1 ≤ j ≤ k`.
///
/// # Errors
///
/// [`Error::LevelOutOfRange`] outside that range.
pub fn coboundary(complex: &ChainComplex, level: usize) -> Result<DMatrix<i64>> {
    Ok(complex.boundary(level)?.transpose())
}

/// Edge-space conduction law for heat exchange.
#[derive(Clone)]
pub enum Conduction {
    /// One fixed symmetric positive semidefinite matrix.
    Constant(DMatrix<f64>),
    /// Nonnegative per-edge conductivities.
    Diagonal(DVector<f64>),
    /// Conduction matrix recomputed from the face intensities at every
    /// evaluation. Each returned matrix must be symmetric positive
    /// semidefinite; this is checked per call.
    StateDependent(ConductionFn),
}

impl Conduction {
    /// Uniform conductivity `r` on every one of `edges` edges.
    pub fn uniform(edges: usize, r: f64) -> Self {
        Conduction::Diagonal(DVector::from_element(edges, r))
    }
}

impl fmt::Debug for Conduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conduction::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Conduction::Diagonal(d) => f.debug_tuple("Diagonal").field(d).finish(),
            Conduction::StateDependent(_) => f.write_str("StateDependent(..)"),
        }
    }
}

/// Per-face entropy function, applied componentwise to face energies.
#[derive(Clone)]
pub enum Entropy {
    /// `s(u) = Σ log u_i`, defined for strictly positive energies. The
    /// intensity of face `i` is `1 / u_i`.
    Logarithmic,
    /// User-supplied strictly concave scalar entropy with its derivative.
    Custom { value: ScalarFn, derivative: ScalarFn },
}

impl Entropy {
    /// Wraps a custom scalar entropy and its derivative.
    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Entropy::Custom {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    fn value_at(&self, face: usize, u: f64) -> Result<f64> {
        let s = match self {
            Entropy::Logarithmic => {
                if u <= 0.0 {
                    return Err(Error::OutOfEntropyDomain { face, value: u });
                }
                u.ln()
            }
            Entropy::Custom { value, .. } => value(u),
        };
        if !s.is_finite() {
            return Err(Error::OutOfEntropyDomain { face, value: u });
        }
        Ok(s)
    }

    fn derivative_at(&self, face: usize, u: f64) -> Result<f64> {
        let e = match self {
            Entropy::Logarithmic => {
                if u <= 0.0 {
                    return Err(Error::OutOfEntropyDomain { face, value: u });
                }
                1.0 / u
            }
            Entropy::Custom { derivative, .. } => derivative(u),
        };
        if !e.is_finite() {
            return Err(Error::OutOfEntropyDomain { face, value: u });
        }
        Ok(e)
    }
}

impl fmt::Debug for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entropy::Logarithmic => f.write_str("Logarithmic"),
            Entropy::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// Heat exchange system on an order-2 complex.
///
/// Faces hold internal energies `u`; the induced dynamics are
/// `du/dt = ∂₂ᵀ · R(e_u) · ∂₂ · e_u` with intensities `e_u = ds/du`.
/// Energy moves from faces of low intensity (hot, under logarithmic
/// entropy) toward faces of high intensity, and the entropy production
/// `eᵀ R e` with `e = ∂₂ e_u` is nonnegative whenever `R` is positive
/// semidefinite.
#[derive(Debug)]
pub struct HeatComplexSystem {
    complex: ChainComplex,
    conduction: Conduction,
    entropy: Entropy,
    /// `∂_2` cached as floats; shape `edges × faces`.
    d2: DMatrix<f64>,
}

impl HeatComplexSystem {
    /// Assembles a heat system over a valid order-2 complex.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] when the complex order is not 2 or a
    /// constant conduction matrix is not symmetric positive
    /// semidefinite; [`Error::DimensionChainBroken`] when `∂₁∂₂ ≠ 0`;
    /// [`Error::DimensionMismatch`] when conduction dimensions do not
    /// match the edge count.
    pub fn new(complex: ChainComplex, conduction: Conduction, entropy: Entropy) -> Result<Self> {
        if complex.order() != 2 {
            return Err(Error::InvalidInput(format!(
                "heat exchange needs a complex of order 2, got order {}",
                complex.order()
            )));
        }
        if let Some((level, detail)) = complex.composition_defect() {
            return Err(Error::DimensionChainBroken { level, detail });
        }
        let edges = complex.cells(1);
        match &conduction {
            Conduction::Constant(matrix) => {
                check_conduction_matrix(matrix, edges)?;
            }
            Conduction::Diagonal(diag) => {
                if diag.len() != edges {
                    return Err(Error::DimensionMismatch {
                        expected: edges,
                        found: diag.len(),
                    });
                }
                for (i, &r) in diag.iter().enumerate() {
                    if !(r.is_finite() && r >= 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "conductivity of edge {i} must be finite and nonnegative, got {r}"
                        )));
                    }
                }
            }
            Conduction::StateDependent(_) => {}
        }
        let d2 = complex.boundary(2)?.map(|v| v as f64);
        Ok(Self {
            complex,
            conduction,
            entropy,
            d2,
        })
    }

    /// The underlying complex.
    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    /// Number of faces, the dimension of the energy state.
    pub fn face_count(&self) -> usize {
        self.complex.cells(2)
    }

    /// Number of edges, the dimension of the exchange channels.
    pub fn edge_count(&self) -> usize {
        self.complex.cells(1)
    }

    /// Face intensities `e_u = ds/du` at energies `u`.
    ///
    /// # Errors
    ///
    /// [`Error::OutOfEntropyDomain`] when some face energy leaves the
    /// entropy's domain; [`Error::DimensionMismatch`] on wrong length.
    pub fn intensities(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.face_count() {
            return Err(Error::DimensionMismatch {
                expected: self.face_count(),
                found: u.len(),
            });
        }
        let mut e_u = DVector::zeros(u.len());
        for (face, &value) in u.iter().enumerate() {
            e_u[face] = self.entropy.derivative_at(face, value)?;
        }
        Ok(e_u)
    }

    /// Total entropy `Σ s(u_i)`.
    ///
    /// # Errors
    ///
    /// Same conditions as [`HeatComplexSystem::intensities`].
    pub fn entropy_value(&self, u: &DVector<f64>) -> Result<f64> {
        if u.len() != self.face_count() {
            return Err(Error::DimensionMismatch {
                expected: self.face_count(),
                found: u.len(),
            });
        }
        let mut total = 0.0;
        for (face, &value) in u.iter().enumerate() {
            total += self.entropy.value_at(face, value)?;
        }
        Ok(total)
    }

    /// Conduction matrix at the given intensities.
    fn conduction_matrix(&self, e_u: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.conduction {
            Conduction::Constant(matrix) => Ok(matrix.clone()),
            Conduction::Diagonal(diag) => Ok(DMatrix::from_diagonal(diag)),
            Conduction::StateDependent(map) => {
                let matrix = map(e_u);
                check_conduction_matrix(&matrix, self.edge_count())?;
                Ok(matrix)
            }
        }
    }

    /// Per-face energy rates `du/dt = ∂₂ᵀ R(e_u) ∂₂ e_u`.
    ///
    /// # Errors
    ///
    /// Domain and dimension failures as in
    /// [`HeatComplexSystem::intensities`], plus conduction validation
    /// failures for state-dependent laws.
    pub fn energy_rates(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let e_u = self.intensities(u)?;
        let edge_differences = &self.d2 * &e_u;
        let conduction = self.conduction_matrix(&e_u)?;
        let flux = conduction * edge_differences;
        Ok(self.d2.transpose() * flux)
    }
}

/// Shape, symmetry, and positivity checks shared by constant and
/// state-dependent conduction matrices.
fn check_conduction_matrix(matrix: &DMatrix<f64>, edges: usize) -> Result<()> {
    if matrix.nrows() != edges || matrix.ncols() != edges {
        return Err(Error::DimensionMismatch {
            expected: edges,
            found: matrix.nrows().max(matrix.ncols()),
        });
    }
    let scale = 1.0 + crate::linalg::inf_norm(matrix);
    let asymmetry = crate::linalg::inf_norm(&(matrix - matrix.transpose()));
    if asymmetry > SYMMETRY_TOL_SCALE * scale {
        return Err(Error::InvalidInput(format!(
            "conduction matrix is not symmetric, asymmetry {asymmetry:.3e}"
        )));
    }
    let min_eig = crate::linalg::min_symmetric_eigenvalue(matrix);
    if min_eig < -CONDUCTION_EIG_SCALE * scale {
        return Err(Error::InvalidInput(format!(
            "conduction matrix is not positive semidefinite, min eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

/// Vector field of the heat exchange dynamics, suitable for
/// [`crate::dynamics::try_simulate`].
pub fn heat_field(
    system: &HeatComplexSystem,
) -> impl Fn(&DVector<f64>) -> Result<DVector<f64>> + '_ {
    move |u| system.energy_rates(u)
}

/// Entropy production rate `eᵀ R(e_u) e` with `e = ∂₂ e_u`.
///
/// Nonnegative up to eigenvalue tolerance whenever the conduction
/// matrix is positive semidefinite, which makes total entropy
/// non-decreasing along trajectories.
///
/// # Errors
///
/// Same conditions as [`HeatComplexSystem::energy_rates`].
pub fn entropy_rate(system: &HeatComplexSystem, u: &DVector<f64>) -> Result<f64> {
    let e_u = system.intensities(u)?;
    let edge_differences = &system.d2 * &e_u;
    let conduction = system.conduction_matrix(&e_u)?;
    Ok((&conduction * &edge_differences).dot(&edge_differences))
}
