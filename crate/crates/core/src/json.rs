//! JSON schemas for the external interfaces: graphs, Laplacian
//! matrices, chain complexes, and the system descriptions consumed by
//! the simulation and storage front-ends.
//!
//! Vertex and edge indices are 1-based in every external format and
//! 0-based inside the library. Conversion happens here, and every
//! rejection names the offending field in external (1-based) terms.
//! Floats are emitted in shortest round-trip form, so serializing and
//! re-parsing reproduces each value bit for bit.

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::complexes::{ChainComplex, Conduction, Entropy, HeatComplexSystem};
use crate::dynamics::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Edge};
use crate::kirchhoff::SigmaVector;
use crate::laplacian::{LaplacianKind, LaplacianMatrix};
use crate::storage::{GeneralizedSystem, StorageResult};

fn default_weight() -> f64 {
    1.0
}

/// Parses a JSON document into a DTO, mapping syntax errors to
/// [`Error::InvalidInput`] with serde's line/column diagnostics.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("JSON parse error: {e}")))
}

/// Serializes any DTO as pretty-printed JSON. Output is deterministic:
/// field order follows the struct definitions and floats use shortest
/// round-trip formatting.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("DTOs serialize without error")
}

/// One edge of the graph schema. `tail` and `head` are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDto {
    pub tail: usize,
    pub head: usize,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

/// Graph schema: `{"n": <int>, "edges": [{"tail", "head", "weight"}]}`.
/// Weight defaults to 1.0 when omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDto {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<EdgeDto>,
}

impl GraphDto {
    /// Converts to the internal 0-based representation.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] naming the offending field for any
    /// schema violation (indices out of `1..=n`, nonpositive weight,
    /// self-loop, `n = 0`).
    pub fn to_graph(&self) -> Result<DirectedGraph> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, edge) in self.edges.iter().enumerate() {
            for (field, value) in [("tail", edge.tail), ("head", edge.head)] {
                if value == 0 || value > self.n {
                    return Err(Error::InvalidInput(format!(
                        "edges[{i}].{field} = {value} is out of range 1..={}",
                        self.n
                    )));
                }
            }
            if edge.tail == edge.head {
                return Err(Error::InvalidInput(format!(
                    "edges[{i}] is a self-loop at vertex {}",
                    edge.tail
                )));
            }
            if !(edge.weight.is_finite() && edge.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "edges[{i}].weight = {} must be finite and positive",
                    edge.weight
                )));
            }
            edges.push(Edge::new(edge.tail - 1, edge.head - 1, edge.weight));
        }
        DirectedGraph::new(self.n, edges).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Builds the external 1-based view of a graph.
    pub fn from_graph(graph: &DirectedGraph) -> Self {
        Self {
            n: graph.vertex_count(),
            edges: graph
                .edges()
                .iter()
                .map(|e| EdgeDto { tail: e.tail + 1, head: e.head + 1, weight: e.weight })
                .collect(),
        }
    }
}

/// Parses a graph JSON document directly into a [`DirectedGraph`].
pub fn graph_from_json(text: &str) -> Result<DirectedGraph> {
    from_json::<GraphDto>(text)?.to_graph()
}

/// Serializes a graph in the external schema.
pub fn graph_to_json(graph: &DirectedGraph) -> String {
    to_json_pretty(&GraphDto::from_graph(graph))
}

/// Dense matrix schema: row-major entries with an explicit kind tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDto {
    pub kind: String,
    pub entries: Vec<Vec<f64>>,
}

fn kind_from_str(text: &str) -> Result<LaplacianKind> {
    match text {
        "symmetric" => Ok(LaplacianKind::Symmetric),
        "flow" => Ok(LaplacianKind::Flow),
        "consensus" => Ok(LaplacianKind::Consensus),
        "balanced" => Ok(LaplacianKind::Balanced),
        other => Err(Error::InvalidInput(format!(
            "kind = {other:?} is not one of symmetric, flow, consensus, balanced"
        ))),
    }
}

/// Converts row-major JSON entries to a dense matrix, rejecting ragged
/// or empty data with a message that names the field.
fn dense_from_rows(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{field} must not be empty")));
    }
    let cols = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidInput(format!(
                "{field}[{i}] has length {}, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.iter().flat_map(|r| r.iter().copied()),
    ))
}

fn rows_from_dense(matrix: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..matrix.nrows())
        .map(|i| matrix.row(i).iter().copied().collect())
        .collect()
}

impl MatrixDto {
    /// Validates the entries against the tagged kind.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] for unknown kinds or ragged entries;
    /// [`Error::InvalidLaplacian`] when the matrix violates the kind's
    /// sign pattern or vanishing-sum law.
    pub fn to_laplacian(&self) -> Result<LaplacianMatrix> {
        let kind = kind_from_str(&self.kind)?;
        let entries = dense_from_rows(&self.entries, "entries")?;
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidInput(format!(
                "entries must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        LaplacianMatrix::from_entries(entries, kind)
    }

    /// External view of a validated Laplacian.
    pub fn from_laplacian(laplacian: &LaplacianMatrix) -> Self {
        Self {
            kind: laplacian.kind().as_str().to_owned(),
            entries: rows_from_dense(laplacian.entries()),
        }
    }
}

/// Parses a matrix JSON document into a validated [`LaplacianMatrix`].
pub fn laplacian_from_json(text: &str) -> Result<LaplacianMatrix> {
    from_json::<MatrixDto>(text)?.to_laplacian()
}

/// Serializes a Laplacian in the external matrix schema.
pub fn laplacian_to_json(laplacian: &LaplacianMatrix) -> String {
    to_json_pretty(&MatrixDto::from_laplacian(laplacian))
}

/// Boundary operators of the complex schema, dense integer arrays with
/// explicit orientation signs. `d2` is omitted for order-1 complexes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundariesDto {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<Vec<Vec<i64>>>,
    pub d1: Vec<Vec<i64>>,
}

/// Complex schema: `{"cells": [n0, n1, n2], "boundaries": {"d2": ..., "d1": ...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDto {
    pub cells: Vec<usize>,
    pub boundaries: BoundariesDto,
}

/// Converts dense integer rows to a matrix of the exact declared
/// shape. Zero-width rows are legal, so the expected dimensions come
/// from the cell counts rather than the data.
fn int_matrix_from_rows(
    rows: &[Vec<i64>],
    nrows: usize,
    ncols: usize,
    field: &str,
) -> Result<DMatrix<i64>> {
    if rows.len() != nrows {
        return Err(Error::InvalidInput(format!(
            "{field} has {} rows, cells require {nrows}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidInput(format!(
                "{field}[{i}] has length {}, cells require {ncols}",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flat_map(|r| r.iter().copied()),
    ))
}

fn int_rows_from_matrix(matrix: &DMatrix<i64>) -> Vec<Vec<i64>> {
    (0..matrix.nrows())
        .map(|i| matrix.row(i).iter().copied().collect())
        .collect()
}

impl ComplexDto {
    /// Converts to a [`ChainComplex`], checking shapes against the
    /// declared cell counts. Composition validity is not checked here;
    /// that is [`crate::complexes::validate_complex`]'s job.
    pub fn to_complex(&self) -> Result<ChainComplex> {
        match self.cells.len() {
            2 => {
                if self.boundaries.d2.is_some() {
                    return Err(Error::InvalidInput(
                        "boundaries.d2 given but cells lists only 2 levels".into(),
                    ));
                }
                let d1 =
                    int_matrix_from_rows(&self.boundaries.d1, self.cells[0], self.cells[1], "boundaries.d1")?;
                Ok(ChainComplex::new(self.cells.clone(), vec![d1])
                    .expect("shapes were checked against cells"))
            }
            3 => {
                let d2_rows = self.boundaries.d2.as_ref().ok_or_else(|| {
                    Error::InvalidInput("boundaries.d2 is required for 3 cell levels".into())
                })?;
                let d1 =
                    int_matrix_from_rows(&self.boundaries.d1, self.cells[0], self.cells[1], "boundaries.d1")?;
                let d2 = int_matrix_from_rows(d2_rows, self.cells[1], self.cells[2], "boundaries.d2")?;
                Ok(ChainComplex::new(self.cells.clone(), vec![d1, d2])
                    .expect("shapes were checked against cells"))
            }
            other => Err(Error::InvalidInput(format!(
                "cells must list 2 or 3 levels, got {other}"
            ))),
        }
    }

    /// External view of an order-1 or order-2 complex.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] for other orders, which have no schema.
    pub fn from_complex(complex: &ChainComplex) -> Result<Self> {
        let d1 = int_rows_from_matrix(complex.boundary(1)?);
        let d2 = match complex.order() {
            1 => None,
            2 => Some(int_rows_from_matrix(complex.boundary(2)?)),
            other => {
                return Err(Error::InvalidInput(format!(
                    "only orders 1 and 2 serialize, got order {other}"
                )));
            }
        };
        Ok(Self {
            cells: complex.cell_counts().to_vec(),
            boundaries: BoundariesDto { d2, d1 },
        })
    }
}

/// Parses a complex JSON document into a [`ChainComplex`].
pub fn complex_from_json(text: &str) -> Result<ChainComplex> {
    from_json::<ComplexDto>(text)?.to_complex()
}

/// Serializes an order-1 or order-2 complex in the external schema.
pub fn complex_to_json(complex: &ChainComplex) -> Result<String> {
    Ok(to_json_pretty(&ComplexDto::from_complex(complex)?))
}

/// Hamiltonian schema: `{"kind": ..., "params": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum HamiltonianDto {
    /// `H(x) = ½ Σ a_i x_i²` with `params = {"coefficients": [...]}`.
    Quadratic { coefficients: Vec<f64> },
    /// `H(p) = Σ p_i²/(2 m_i)` with `params = {"masses": [...]}`.
    Kinetic { masses: Vec<f64> },
    /// `H(x) = Σ exp(x_i)` with `params = {"dimension": n}`.
    Exponential { dimension: usize },
}

impl HamiltonianDto {
    /// Instantiates the described Hamiltonian.
    ///
    /// # Errors
    ///
    /// [`Error::NotStrictlyConvex`] or [`Error::NonPositiveMass`] when
    /// the parameters violate convexity requirements.
    pub fn to_spec(&self) -> Result<HamiltonianSpec> {
        match self {
            HamiltonianDto::Quadratic { coefficients } => {
                HamiltonianSpec::quadratic(DVector::from_vec(coefficients.clone()))
            }
            HamiltonianDto::Kinetic { masses } => {
                HamiltonianSpec::kinetic(DVector::from_vec(masses.clone()))
            }
            HamiltonianDto::Exponential { dimension } => {
                Ok(HamiltonianSpec::exponential(*dimension))
            }
        }
    }
}

/// Simulation system schema consumed by `simulate`:
/// `{"laplacian": ..., "hamiltonian": ..., "x0": [...], "dt": f, "T": f}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSystemDto {
    pub laplacian: MatrixDto,
    pub hamiltonian: HamiltonianDto,
    pub x0: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

/// Parses a simulation system JSON document.
pub fn simulation_from_json(text: &str) -> Result<SimulationSystemDto> {
    from_json(text)
}

/// Source/resistive split of a graph for generalized storage systems.
/// `source_edges` are 1-based indices into the graph's edge list; the
/// remaining edges are resistive with their graph weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralizedDto {
    pub graph: GraphDto,
    pub source_edges: Vec<usize>,
}

impl GeneralizedDto {
    /// Builds the split system with the given Hamiltonian.
    pub fn to_system(&self, hamiltonian: HamiltonianSpec) -> Result<GeneralizedSystem> {
        let graph = self.graph.to_graph()?;
        let mut source = Vec::with_capacity(self.source_edges.len());
        for (i, &index) in self.source_edges.iter().enumerate() {
            if index == 0 || index > graph.edge_count() {
                return Err(Error::InvalidInput(format!(
                    "source_edges[{i}] = {index} is out of range 1..={}",
                    graph.edge_count()
                )));
            }
            source.push(index - 1);
        }
        GeneralizedSystem::from_graph(&graph, &source, hamiltonian)
    }
}

/// Storage system schema: a Hamiltonian, an optional default state,
/// and an optional generalized source/resistive split.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSystemDto {
    pub hamiltonian: HamiltonianDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generalized: Option<GeneralizedDto>,
}

/// Parses a storage system JSON document.
pub fn storage_system_from_json(text: &str) -> Result<StorageSystemDto> {
    from_json(text)
}

/// Input schema of the `consensus` subcommand: the Laplacian whose left
/// kernel weights the prediction, and the initial state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusDto {
    pub laplacian: MatrixDto,
    pub x0: Vec<f64>,
}

/// Parses a consensus prediction JSON document.
pub fn consensus_from_json(text: &str) -> Result<ConsensusDto> {
    from_json(text)
}

/// Conduction schema: `{"kind": "uniform", "r": f}`, `{"kind":
/// "diagonal", "values": [...]}`, or `{"kind": "matrix", "entries":
/// [[...]]}`. State-dependent laws are code, not data, so they have no
/// JSON form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConductionDto {
    Uniform { r: f64 },
    Diagonal { values: Vec<f64> },
    Matrix { entries: Vec<Vec<f64>> },
}

impl ConductionDto {
    /// Instantiates the conduction law for a complex with `edges`
    /// exchange channels.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] for ragged matrix entries.
    pub fn to_conduction(&self, edges: usize) -> Result<Conduction> {
        match self {
            ConductionDto::Uniform { r } => Ok(Conduction::uniform(edges, *r)),
            ConductionDto::Diagonal { values } => {
                Ok(Conduction::Diagonal(DVector::from_vec(values.clone())))
            }
            ConductionDto::Matrix { entries } => Ok(Conduction::Constant(dense_from_rows(
                entries,
                "conduction.entries",
            )?)),
        }
    }
}

/// Entropy schema. Only the logarithmic law is expressible as data;
/// custom laws require code.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyDto {
    #[default]
    Logarithmic,
}

impl EntropyDto {
    pub fn to_entropy(self) -> Entropy {
        match self {
            EntropyDto::Logarithmic => Entropy::Logarithmic,
        }
    }
}

/// Heat system schema consumed by `complex simulate`: `{"complex": ...,
/// "conduction": ..., "entropy": "logarithmic", "u0": [...], "dt": f,
/// "T": f}`. `entropy` defaults to logarithmic when omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSystemDto {
    pub complex: ComplexDto,
    pub conduction: ConductionDto,
    #[serde(default)]
    pub entropy: EntropyDto,
    pub u0: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl HeatSystemDto {
    /// Builds the validated heat system (initial state handled by the
    /// caller, which also owns dt/T overrides).
    pub fn to_system(&self) -> Result<HeatComplexSystem> {
        let complex = self.complex.to_complex()?;
        let conduction = self.conduction.to_conduction(complex.cells(1))?;
        HeatComplexSystem::new(complex, conduction, self.entropy.to_entropy())
    }
}

/// Parses a heat system JSON document.
pub fn heat_system_from_json(text: &str) -> Result<HeatSystemDto> {
    from_json(text)
}

/// Output schema of the `sigma` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaDto {
    pub sigma: Vec<f64>,
    pub normalized: Vec<f64>,
    pub strictly_positive: bool,
}

impl SigmaDto {
    pub fn from_sigma(sigma: &SigmaVector) -> Self {
        Self {
            sigma: sigma.values().iter().copied().collect(),
            normalized: sigma.normalized().iter().copied().collect(),
            strictly_positive: sigma.is_strictly_positive(),
        }
    }
}

/// Output schema of the `storage` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StorageResultDto {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub lambda: f64,
}

impl StorageResultDto {
    pub fn from_result(result: &StorageResult) -> Self {
        Self {
            value: result.value(),
            minimizer: result.minimizer().iter().copied().collect(),
            lambda: result.lagrange_multiplier(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::validate_complex;

    #[test]
    fn graph_round_trip_preserves_everything() {
        let graph = DirectedGraph::from_triples(
            3,
            &[(0, 1, 2.5), (1, 2, 0.1), (2, 0, std::f64::consts::PI)],
        )
        .unwrap();
        let text = graph_to_json(&graph);
        let back = graph_from_json(&text).unwrap();
        assert_eq!(back, graph);
    }

    #[test]
    fn graph_weight_defaults_to_one() {
        let graph =
            graph_from_json(r#"{"n": 2, "edges": [{"tail": 1, "head": 2}]}"#).unwrap();
        assert_eq!(graph.edges()[0].weight, 1.0);
        assert_eq!(graph.edges()[0].tail, 0);
        assert_eq!(graph.edges()[0].head, 1);
    }

    #[test]
    fn graph_schema_violations_name_the_field() {
        let cases = [
            (r#"{"n": 0, "edges": []}"#, "n must be"),
            (r#"{"n": 2, "edges": [{"tail": 0, "head": 2}]}"#, "edges[0].tail"),
            (r#"{"n": 2, "edges": [{"tail": 1, "head": 3}]}"#, "edges[0].head"),
            (
                r#"{"n": 2, "edges": [{"tail": 1, "head": 2, "weight": -2.0}]}"#,
                "edges[0].weight",
            ),
            (r#"{"n": 2, "edges": [{"tail": 1, "head": 1}]}"#, "self-loop"),
            (r#"{"n": 2, "edgs": []}"#, "parse error"),
            (r#"{"n": 2, "edges": [{"tail": 1}]}"#, "parse error"),
        ];
        for (text, needle) in cases {
            let err = graph_from_json(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text} gave {err}");
        }
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let graph = DirectedGraph::from_triples(
            3,
            &[(0, 1, 0.1), (1, 2, 1.0 / 3.0), (2, 0, 1e-300)],
        )
        .unwrap();
        let laplacian = crate::laplacian::flow_laplacian(&graph);
        let text = laplacian_to_json(&laplacian);
        let back = laplacian_from_json(&text).unwrap();
        assert_eq!(back.entries(), laplacian.entries());
        assert_eq!(back.kind(), laplacian.kind());

        // Serializing the re-parsed matrix is byte-identical.
        assert_eq!(laplacian_to_json(&back), text);
    }

    #[test]
    fn matrix_kinds_and_shapes_are_validated() {
        let err = laplacian_from_json(r#"{"kind": "spectral", "entries": [[0.0]]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("spectral"), "{err}");

        let err = laplacian_from_json(r#"{"kind": "flow", "entries": [[0.0], [0.0, 1.0]]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("entries[1]"), "{err}");

        let err = laplacian_from_json(r#"{"kind": "flow", "entries": [[0.0, 0.0]]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("square"), "{err}");

        // Sign-pattern violations surface as Laplacian validation, not
        // schema, failures.
        assert!(matches!(
            laplacian_from_json(r#"{"kind": "flow", "entries": [[1.0, 1.0], [-1.0, -1.0]]}"#)
                .unwrap_err(),
            Error::InvalidLaplacian { .. }
        ));
    }

    #[test]
    fn complex_round_trip_both_orders() {
        let strip = ChainComplex::two_face_strip();
        let text = complex_to_json(&strip).unwrap();
        let back = complex_from_json(&text).unwrap();
        assert_eq!(back, strip);
        assert!(validate_complex(&back));

        let graph = DirectedGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let order_one = ChainComplex::from_graph(&graph);
        let text = complex_to_json(&order_one).unwrap();
        assert!(!text.contains("d2"));
        assert_eq!(complex_from_json(&text).unwrap(), order_one);
    }

    #[test]
    fn complex_schema_violations_name_the_field() {
        let cases = [
            (
                r#"{"cells": [3, 3, 1], "boundaries": {"d1": [[1, 0, -1], [-1, 1, 0], [0, -1, 1]]}}"#,
                "d2 is required",
            ),
            (
                r#"{"cells": [2, 1], "boundaries": {"d1": [[-1], [1]], "d2": [[1]]}}"#,
                "only 2 levels",
            ),
            (
                r#"{"cells": [2, 1], "boundaries": {"d1": [[-1], [1], [0]]}}"#,
                "boundaries.d1 has 3 rows",
            ),
            (
                r#"{"cells": [2, 1], "boundaries": {"d1": [[-1, 0], [1]]}}"#,
                "boundaries.d1[0]",
            ),
            (r#"{"cells": [2], "boundaries": {"d1": []}}"#, "2 or 3 levels"),
        ];
        for (text, needle) in cases {
            let err = complex_from_json(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text} gave {err}");
        }
    }

    #[test]
    fn edgeless_graph_serializes_with_zero_width_boundary() {
        let graph = DirectedGraph::new(2, vec![]).unwrap();
        let complex = ChainComplex::from_graph(&graph);
        let text = complex_to_json(&complex).unwrap();
        let back = complex_from_json(&text).unwrap();
        assert_eq!(back.cell_counts(), &[2, 0]);
    }

    #[test]
    fn hamiltonian_kinds_parse_and_instantiate() {
        let quadratic: HamiltonianDto =
            from_json(r#"{"kind": "quadratic", "params": {"coefficients": [1.0, 2.0]}}"#).unwrap();
        let spec = quadratic.to_spec().unwrap();
        assert_eq!(spec.value(&DVector::from_vec(vec![1.0, 1.0])), 1.5);

        let kinetic: HamiltonianDto =
            from_json(r#"{"kind": "kinetic", "params": {"masses": [2.0]}}"#).unwrap();
        let spec = kinetic.to_spec().unwrap();
        assert_eq!(spec.value(&DVector::from_vec(vec![2.0])), 1.0);

        let exponential: HamiltonianDto =
            from_json(r#"{"kind": "exponential", "params": {"dimension": 3}}"#).unwrap();
        assert_eq!(exponential.to_spec().unwrap().len(), 3);

        assert!(from_json::<HamiltonianDto>(r#"{"kind": "cubic", "params": {}}"#).is_err());
        assert!(
            from_json::<HamiltonianDto>(r#"{"kind": "quadratic", "params": {"masses": [1.0]}}"#)
                .is_err()
        );

        // Parameter validation happens at instantiation.
        let flat: HamiltonianDto =
            from_json(r#"{"kind": "quadratic", "params": {"coefficients": [0.0]}}"#).unwrap();
        assert!(matches!(flat.to_spec(), Err(Error::NotStrictlyConvex { .. })));
    }

    #[test]
    fn simulation_system_parses_all_fields() {
        let dto = simulation_from_json(
            r#"{
                "laplacian": {"kind": "flow", "entries": [[2.0, -3.0], [-2.0, 3.0]]},
                "hamiltonian": {"kind": "quadratic", "params": {"coefficients": [1.0, 1.0]}},
                "x0": [1.0, -1.0],
                "dt": 0.001,
                "T": 5.0
            }"#,
        )
        .unwrap();
        assert_eq!(dto.horizon, 5.0);
        assert_eq!(dto.dt, 0.001);
        assert_eq!(dto.x0, vec![1.0, -1.0]);
        let laplacian = dto.laplacian.to_laplacian().unwrap();
        assert_eq!(laplacian.kind(), LaplacianKind::Flow);
    }

    #[test]
    fn storage_system_builds_generalized_split() {
        let dto = storage_system_from_json(
            r#"{
                "hamiltonian": {"kind": "quadratic", "params": {"coefficients": [1.0, 1.0, 1.0]}},
                "x": [3.0, 1.0, 2.0],
                "generalized": {
                    "graph": {"n": 3, "edges": [
                        {"tail": 1, "head": 2, "weight": 1.0},
                        {"tail": 2, "head": 3, "weight": 2.0}
                    ]},
                    "source_edges": [1]
                }
            }"#,
        )
        .unwrap();
        let spec = dto.hamiltonian.to_spec().unwrap();
        let system = dto.generalized.as_ref().unwrap().to_system(spec).unwrap();
        assert_eq!(system.vertex_count(), 3);
        assert_eq!(system.source_incidence().ncols(), 1);
        assert_eq!(system.resistive_incidence().ncols(), 1);
        assert_eq!(system.resistive_weights()[0], 2.0);

        let bad = GeneralizedDto {
            graph: GraphDto::from_graph(&DirectedGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap()),
            source_edges: vec![0],
        };
        let err = bad
            .to_system(HamiltonianSpec::unit_quadratic(2))
            .unwrap_err()
            .to_string();
        assert!(err.contains("source_edges[0]"), "{err}");
    }

    #[test]
    fn consensus_schema_parses_and_rejects_extras() {
        let dto = consensus_from_json(
            r#"{
                "laplacian": {"kind": "consensus", "entries": [[0.0, 0.0], [-1.0, 1.0]]},
                "x0": [0.7, 0.1]
            }"#,
        )
        .unwrap();
        let laplacian = dto.laplacian.to_laplacian().unwrap();
        let value =
            crate::kirchhoff::consensus_value(&laplacian, &DVector::from_vec(dto.x0)).unwrap();
        assert!((value - 0.7).abs() < 1e-12);

        let err = consensus_from_json(
            r#"{
                "laplacian": {"kind": "consensus", "entries": [[0.0]]},
                "x0": [0.0],
                "extra": 1
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn heat_system_schema_builds_every_conduction_kind() {
        let complex = r#"{
            "cells": [3, 3, 1],
            "boundaries": {
                "d2": [[1], [1], [1]],
                "d1": [[-1, 0, 1], [1, -1, 0], [0, 1, -1]]
            }
        }"#;
        for conduction in [
            r#"{"kind": "uniform", "r": 0.5}"#,
            r#"{"kind": "diagonal", "values": [0.5, 1.0, 2.0]}"#,
            r#"{"kind": "matrix", "entries": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]}"#,
        ] {
            let text = format!(
                r#"{{"complex": {complex}, "conduction": {conduction},
                    "u0": [1.0], "dt": 0.01, "T": 1.0}}"#
            );
            let dto = heat_system_from_json(&text).unwrap();
            let system = dto.to_system().unwrap();
            assert_eq!(system.face_count(), 1);
            assert_eq!(system.edge_count(), 3);
        }
    }

    #[test]
    fn heat_system_schema_defaults_to_logarithmic_entropy() {
        let text = r#"{
            "complex": {"cells": [3, 3, 1], "boundaries": {
                "d2": [[1], [1], [1]],
                "d1": [[-1, 0, 1], [1, -1, 0], [0, 1, -1]]
            }},
            "conduction": {"kind": "uniform", "r": 1.0},
            "u0": [2.0], "dt": 0.01, "T": 1.0
        }"#;
        let dto = heat_system_from_json(text).unwrap();
        assert!(matches!(dto.entropy, EntropyDto::Logarithmic));
        let system = dto.to_system().unwrap();
        let s = system.entropy_value(&DVector::from_vec(vec![2.0])).unwrap();
        assert!((s - 2.0f64.ln()).abs() < 1e-15);

        let ragged = r#"{"kind": "matrix", "entries": [[1.0, 0.0], [0.0]]}"#;
        let dto: ConductionDto = from_json(ragged).unwrap();
        let err = dto.to_conduction(2).unwrap_err().to_string();
        assert!(err.contains("conduction.entries[1]"), "{err}");
    }

    #[test]
    fn output_dtos_have_the_documented_keys() {
        let graph = DirectedGraph::from_triples(2, &[(0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        let laplacian = crate::laplacian::flow_laplacian(&graph);
        let sigma = crate::kirchhoff::sigma_right(&laplacian).unwrap();
        let value = serde_json::to_value(SigmaDto::from_sigma(&sigma)).unwrap();
        let keys: Vec<&str> = value.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, vec!["normalized", "sigma", "strictly_positive"]);

        let result = crate::storage::available_storage_quadratic(&DVector::from_vec(vec![3.0, 1.0]));
        let value = serde_json::to_value(StorageResultDto::from_result(&result)).unwrap();
        let keys: Vec<&str> = value.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, vec!["lambda", "minimizer", "value"]);
    }
}
