//! Gradient-flow vector fields, fixed-step integration, and energy
//! diagnostics.
//!
//! The central object is the flow `ẋ = -L ∂H/∂x(x)` for a Laplacian `L`
//! and an additive Hamiltonian `H(x) = Σ_i H_i(x_i)`. For symmetric or
//! balanced `L` the Hamiltonian is a Lyapunov function; for consensus
//! dynamics the left kernel vector yields the conserved quantity `σᵀx`
//! and the predicted agreement value.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::kirchhoff::{self, JRDecomposition, SigmaVector};
use crate::laplacian::{LaplacianKind, LaplacianMatrix};
use crate::{Error, Result};

/// Early-stop threshold: integration halts once `‖ẋ‖_∞` falls below this.
pub const CONVERGENCE_FIELD_NORM: f64 = 1e-10;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One strictly convex per-vertex energy given by closures.
#[derive(Clone)]
pub struct CustomEnergy {
    value: ScalarFn,
    derivative: ScalarFn,
    inverse_derivative: Option<ScalarFn>,
}

impl CustomEnergy {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            inverse_derivative: None,
        }
    }

    /// Attaches the inverse of the derivative (needed by storage searches).
    pub fn with_inverse(
        mut self,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.inverse_derivative = Some(Arc::new(inverse));
        self
    }
}

impl fmt::Debug for CustomEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomEnergy")
            .field("has_inverse", &self.inverse_derivative.is_some())
            .finish()
    }
}

/// Additive Hamiltonian `H(x) = Σ_i H_i(x_i)` in one of three forms.
#[derive(Debug, Clone)]
pub enum HamiltonianSpec {
    /// `H_i(x) = a_i x² / 2` with `a_i > 0`.
    Quadratic { coefficients: DVector<f64> },
    /// `H_i(p) = p² / (2 m_i)` with `m_i > 0`.
    Kinetic { masses: DVector<f64> },
    /// Arbitrary per-vertex energies given by closures.
    Custom { components: Vec<CustomEnergy> },
}

impl HamiltonianSpec {
    /// Quadratic energies; every coefficient must be strictly positive.
    pub fn quadratic(coefficients: DVector<f64>) -> Result<Self> {
        if let Some(i) = (0..coefficients.len()).find(|&i| !(coefficients[i] > 0.0)) {
            return Err(Error::NotStrictlyConvex { component: i });
        }
        Ok(Self::Quadratic { coefficients })
    }

    /// Unit quadratic energies `H_i = x²/2` on `n` vertices.
    pub fn unit_quadratic(n: usize) -> Self {
        Self::Quadratic { coefficients: DVector::from_element(n, 1.0) }
    }

    /// Kinetic energies; every mass must be strictly positive.
    pub fn kinetic(masses: DVector<f64>) -> Result<Self> {
        if let Some(i) = (0..masses.len()).find(|&i| !(masses[i] > 0.0)) {
            return Err(Error::NonPositiveMass { index: i, mass: masses[i] });
        }
        Ok(Self::Kinetic { masses })
    }

    /// Exponential energies `H_i = e^x` on `n` vertices: strictly convex
    /// and bounded below, with derivative `e^x` and inverse `ln`.
    pub fn exponential(n: usize) -> Self {
        let components = (0..n)
            .map(|_| {
                CustomEnergy::new(f64::exp, f64::exp).with_inverse(f64::ln)
            })
            .collect();
        Self::Custom { components }
    }

    pub fn custom(components: Vec<CustomEnergy>) -> Self {
        Self::Custom { components }
    }

    /// Number of per-vertex components.
    pub fn len(&self) -> usize {
        match self {
            Self::Quadratic { coefficients } => coefficients.len(),
            Self::Kinetic { masses } => masses.len(),
            Self::Custom { components } => components.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component_value(&self, i: usize, x: f64) -> f64 {
        match self {
            Self::Quadratic { coefficients } => 0.5 * coefficients[i] * x * x,
            Self::Kinetic { masses } => 0.5 * x * x / masses[i],
            Self::Custom { components } => (components[i].value)(x),
        }
    }

    pub fn component_derivative(&self, i: usize, x: f64) -> f64 {
        match self {
            Self::Quadratic { coefficients } => coefficients[i] * x,
            Self::Kinetic { masses } => x / masses[i],
            Self::Custom { components } => (components[i].derivative)(x),
        }
    }

    /// Inverse of `dH_i`, solving `dH_i(x) = y` for `x`.
    pub fn component_inverse_derivative(&self, i: usize, y: f64) -> Result<f64> {
        match self {
            Self::Quadratic { coefficients } => Ok(y / coefficients[i]),
            Self::Kinetic { masses } => Ok(masses[i] * y),
            Self::Custom { components } => components[i]
                .inverse_derivative
                .as_ref()
                .map(|f| f(y))
                .ok_or(Error::NoInverseProvided { component: i }),
        }
    }

    pub fn has_inverse_derivative(&self, i: usize) -> bool {
        match self {
            Self::Custom { components } => components[i].inverse_derivative.is_some(),
            _ => true,
        }
    }

    /// Total energy `Σ_i H_i(x_i)`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (0..x.len()).map(|i| self.component_value(i, x[i])).sum()
    }

    /// Componentwise gradient `(dH_1(x_1), …, dH_n(x_n))ᵀ`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| self.component_derivative(i, x[i]))
    }
}

/// Componentwise rescaling `𝓗_i = H_i / σ_i` by the raw kernel values.
/// The rescaled Hamiltonian generates the same trajectories through the
/// balanced Laplacian: `LΣ · d𝓗 = L · dH`.
pub fn transformed_hamiltonian(h: &HamiltonianSpec, sigma: &SigmaVector) -> Result<HamiltonianSpec> {
    if sigma.len() != h.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), found: sigma.len() });
    }
    if let Some(i) = (0..sigma.len()).find(|&i| !(sigma.values()[i] > 0.0)) {
        return Err(Error::ZeroSigmaEntry { index: i });
    }
    let s = sigma.values();
    Ok(match h {
        HamiltonianSpec::Quadratic { coefficients } => HamiltonianSpec::Quadratic {
            coefficients: coefficients.component_div(s),
        },
        HamiltonianSpec::Kinetic { masses } => HamiltonianSpec::Kinetic {
            masses: masses.component_mul(s),
        },
        HamiltonianSpec::Custom { components } => HamiltonianSpec::Custom {
            components: components
                .iter()
                .zip(s.iter())
                .map(|(c, &si)| {
                    let value = c.value.clone();
                    let derivative = c.derivative.clone();
                    let mut scaled = CustomEnergy {
                        value: Arc::new(move |x| value(x) / si),
                        derivative: Arc::new(move |x| derivative(x) / si),
                        inverse_derivative: None,
                    };
                    if let Some(inv) = &c.inverse_derivative {
                        let inv = inv.clone();
                        scaled.inverse_derivative = Some(Arc::new(move |y| inv(si * y)));
                    }
                    scaled
                })
                .collect(),
        },
    })
}

/// The vector field `x ↦ -L · dH(x)`.
pub fn gradient_flow_field(
    l: &LaplacianMatrix,
    h: &HamiltonianSpec,
) -> Result<impl Fn(&DVector<f64>) -> DVector<f64>> {
    if l.n() != h.len() {
        return Err(Error::DimensionMismatch { expected: l.n(), found: h.len() });
    }
    let entries = l.entries().clone();
    let h = h.clone();
    Ok(move |x: &DVector<f64>| -(&entries * h.gradient(x)))
}

/// A simulated path: time grid, states, and named per-time diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    diagnostics: BTreeMap<String, Vec<f64>>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn diagnostics(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.diagnostics
    }

    /// Number of recorded samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least the initial sample")
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds at least the initial sample")
    }

    /// Records `energy` (H along the path), `conserved` (the weighted sum
    /// `wᵀx`), and `dissipation_rate` (`-dHᵀ L dH`) at every sample.
    pub fn attach_diagnostics(
        &mut self,
        l: &LaplacianMatrix,
        h: &HamiltonianSpec,
        conserved_weights: &DVector<f64>,
    ) {
        let energy: Vec<f64> = self.states.iter().map(|x| h.value(x)).collect();
        let conserved: Vec<f64> = self.states.iter().map(|x| conserved_weights.dot(x)).collect();
        let rate: Vec<f64> = self.states.iter().map(|x| energy_rate(l, h, x)).collect();
        self.diagnostics.insert("energy".into(), energy);
        self.diagnostics.insert("conserved".into(), conserved);
        self.diagnostics.insert("dissipation_rate".into(), rate);
    }
}

/// Classical fixed-step fourth-order Runge-Kutta over a fallible field.
/// Steps of size `dt` cover `[0, T]`, with one shorter final step when
/// `T` is not a multiple of `dt`. Integration stops early once the field
/// norm drops below [`CONVERGENCE_FIELD_NORM`], and aborts with the
/// partial trajectory if the state leaves the finite range.
pub fn try_simulate<F>(
    mut field: F,
    x0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step size {dt} must be positive and finite")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "horizon {t_end} must be finite and at least one step {dt}"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state has non-finite entries".into()));
    }

    let whole_steps = (t_end / dt + 1e-9).floor() as usize;
    let remainder = t_end - whole_steps as f64 * dt;
    let tail = if remainder > 1e-9 * dt { Some(remainder) } else { None };

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        diagnostics: BTreeMap::new(),
    };
    let mut x = x0.clone();
    let steps = (0..whole_steps).map(|_| dt).chain(tail);
    let mut t = 0.0;
    for h in steps {
        let k1 = field(&x)?;
        if k1.amax() < CONVERGENCE_FIELD_NORM {
            break;
        }
        let k2 = field(&(&x + &k1 * (h / 2.0)))?;
        let k3 = field(&(&x + &k2 * (h / 2.0)))?;
        let k4 = field(&(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: t, partial: Box::new(traj) });
        }
        traj.times.push(t);
        traj.states.push(x.clone());
    }
    Ok(traj)
}

/// [`try_simulate`] over an infallible field.
pub fn simulate<F>(mut field: F, x0: &DVector<f64>, dt: f64, t_end: f64) -> Result<Trajectory>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    try_simulate(|x| Ok(field(x)), x0, dt, t_end)
}

/// Step size `1e-3 / ‖L‖_∞` (one thousandth of the characteristic time).
pub fn default_time_step(l: &LaplacianMatrix) -> f64 {
    let norm = crate::linalg::inf_norm(l.entries());
    if norm > 0.0 {
        1e-3 / norm
    } else {
        1e-3
    }
}

/// Largest deviation `max_t |wᵀx(t) - wᵀx(0)|` of a weighted vertex sum
/// along a trajectory. With `w = σ` (consensus) or `w = 𝟙` (flow) the
/// sum is conserved by the dynamics, so the drift measures integrator
/// error.
pub fn conserved_quantity_drift(trajectory: &Trajectory, weights: &DVector<f64>) -> f64 {
    let initial = weights.dot(&trajectory.states()[0]);
    trajectory
        .states()
        .iter()
        .map(|x| (weights.dot(x) - initial).abs())
        .fold(0.0, f64::max)
}

/// Energy derivative `-dH(x)ᵀ L dH(x)` along the flow; signed, with no
/// balance requirement on `L`.
pub fn energy_rate(l: &LaplacianMatrix, h: &HamiltonianSpec, x: &DVector<f64>) -> f64 {
    let grad = h.gradient(x);
    -grad.dot(&(l.entries() * &grad))
}

/// Energy derivative for a symmetric or balanced Laplacian, where it is
/// guaranteed nonpositive up to the eigenvalue tolerance.
pub fn lyapunov_rate(l: &LaplacianMatrix, h: &HamiltonianSpec, x: &DVector<f64>) -> Result<f64> {
    if l.kind() != LaplacianKind::Symmetric && !l.is_balanced() {
        return Err(Error::NotBalanced {
            row_sum: l.max_row_sum_magnitude(),
            col_sum: l.max_col_sum_magnitude(),
        });
    }
    Ok(energy_rate(l, h, x))
}

/// The storage-scaling weights `1/σ_i` with the balanced certificate.
#[derive(Debug, Clone)]
pub struct ScaledPassivity {
    weights: DVector<f64>,
    certificate: JRDecomposition,
    sigma: SigmaVector,
}

impl ScaledPassivity {
    /// Per-vertex weights `1/σ_i` for the combined storage function.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Skew/symmetric split of the balanced `LΣ`; its symmetric part
    /// certifies nonnegativity of the scaled dissipation form.
    pub fn certificate(&self) -> &JRDecomposition {
        &self.certificate
    }

    pub fn sigma(&self) -> &SigmaVector {
        &self.sigma
    }
}

/// Weights `1/σ_i` making the weighted sum of subsystem storages a common
/// storage function for the interconnection `u = -L y`: the symmetric
/// part of `Σ⁻¹ (LΣ) Σ⁻¹` is PSD by congruence with the balanced split.
pub fn scaled_passivity_weights(l: &LaplacianMatrix) -> Result<ScaledPassivity> {
    let (balanced, sigma) = kirchhoff::balance(l)?;
    let certificate = kirchhoff::jr_decomposition(&balanced)?;
    let weights = DVector::from_fn(sigma.len(), |i, _| 1.0 / sigma.values()[i]);
    let scaled_sym = DMatrix::from_fn(weights.len(), weights.len(), |i, j| {
        weights[i] * certificate.r()[(i, j)] * weights[j]
    });
    let min_eig = crate::linalg::min_symmetric_eigenvalue(&scaled_sym);
    let tol = crate::laplacian::EIG_TOL_SCALE * crate::linalg::inf_norm(&scaled_sym);
    assert!(min_eig >= -tol, "scaled symmetric part must stay PSD (min eig {min_eig})");
    Ok(ScaledPassivity { weights, certificate, sigma })
}
