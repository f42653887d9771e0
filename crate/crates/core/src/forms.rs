//! Form representations of mixed graphs and the linear transformation law.
//!
//! A mixed graph carries undirected edges (bilinear forms) and directed
//! edges (sesquilinear forms, linear in the first argument and conjugate
//! linear in the second). A representation assigns `C^{n_i}` to vertex `i`
//! and one matrix per edge, with the convention `M[k][l] = A(e_k, e_l)`.
//!
//! Transformation direction: `apply_transform` maps a representation `B`
//! and a family `S_1, ..., S_t` to the representation `A` with
//! `M_A = S_i^T M_B S_j` on bilinear edges and
//! `M_A = S_i^T M_B conj(S_j)` on sesquilinear edges, i.e. the conjugation
//! sits on the second-argument side. Equivalently `A(u, v) = B(S_i u, S_j v)`
//! for every edge `i -> j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FormError, Result};
use crate::matrix::{
    check_finite, max_abs, require_invertible, CMatrix, CVector, INVERTIBILITY_THRESHOLD,
};

/// Kind of a form: bilinear (undirected edge) or sesquilinear (directed edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Bilinear,
    Sesquilinear,
}

impl FormKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormKind::Bilinear => "bilinear",
            FormKind::Sesquilinear => "sesquilinear",
        }
    }
}

impl std::str::FromStr for FormKind {
    type Err = FormError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(FormKind::Bilinear),
            "sesquilinear" => Ok(FormKind::Sesquilinear),
            other => Err(FormError::Parse {
                context: "form kind".into(),
                reason: format!("expected `bilinear` or `sesquilinear`, got `{other}`"),
            }),
        }
    }
}

/// Edge of a mixed graph. Vertex indices are 1-based, matching the usual
/// presentation and the JSON file format. A loop has `tail == head`;
/// multiple edges between the same endpoints are allowed, but ids must be
/// unique because form matrices are keyed by them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub kind: FormKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl MixedGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.tail == 0 || e.tail > vertex_count || e.head == 0 || e.head > vertex_count {
                return Err(FormError::InvalidInput {
                    reason: format!(
                        "edge `{}` endpoints ({}, {}) outside 1..={}",
                        e.id, e.tail, e.head, vertex_count
                    ),
                });
            }
        }
        let mut ids: Vec<&str> = edges.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(FormError::InvalidInput {
                reason: "edge ids must be unique".into(),
            });
        }
        Ok(Self { vertex_count, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: &str) -> Result<&Edge> {
        self.edges
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| FormError::UnknownEdge { id: id.to_string() })
    }
}

/// A mixed graph, a dimension per vertex, and one complex matrix per edge.
/// The matrix of edge `alpha: i -> j` has shape `n_i x n_j` (rows index the
/// first argument).
#[derive(Debug, Clone, PartialEq)]
pub struct FormRepresentation {
    graph: MixedGraph,
    dims: Vec<usize>,
    matrices: Vec<CMatrix>, // aligned with graph.edges
}

impl FormRepresentation {
    /// Builds a representation, validating shapes, finiteness, and that the
    /// supplied matrices are exactly one per edge.
    pub fn new<I>(graph: MixedGraph, dims: Vec<usize>, matrices: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, CMatrix)>,
    {
        if dims.len() != graph.vertex_count() {
            return Err(FormError::DimensionMismatch {
                context: "dimension vector".into(),
                expected: format!("{} entries", graph.vertex_count()),
                actual: format!("{} entries", dims.len()),
            });
        }
        let mut supplied: Vec<(String, CMatrix)> = matrices.into_iter().collect();
        let mut aligned: Vec<CMatrix> = Vec::with_capacity(graph.edges().len());
        for edge in graph.edges() {
            let pos = supplied.iter().position(|(id, _)| id == &edge.id).ok_or_else(|| {
                FormError::InvalidInput {
                    reason: format!("missing matrix for edge `{}`", edge.id),
                }
            })?;
            let (_, m) = supplied.swap_remove(pos);
            let (ni, nj) = (dims[edge.tail - 1], dims[edge.head - 1]);
            if m.shape() != (ni, nj) {
                return Err(FormError::DimensionMismatch {
                    context: format!("matrix of edge `{}`", edge.id),
                    expected: format!("{}x{}", ni, nj),
                    actual: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
            check_finite(&m, &format!("matrix of edge `{}`", edge.id))?;
            aligned.push(m);
        }
        if let Some((id, _)) = supplied.first() {
            return Err(FormError::InvalidInput {
                reason: format!("matrix supplied for unknown edge `{id}`"),
            });
        }
        Ok(Self { graph, dims, matrices: aligned })
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self, edge_id: &str) -> Result<&CMatrix> {
        let idx = self
            .graph
            .edges()
            .iter()
            .position(|e| e.id == edge_id)
            .ok_or_else(|| FormError::UnknownEdge { id: edge_id.to_string() })?;
        Ok(&self.matrices[idx])
    }

    /// Edges in graph order with their matrices.
    pub fn edge_matrices(&self) -> impl Iterator<Item = (&Edge, &CMatrix)> {
        self.graph.edges().iter().zip(self.matrices.iter())
    }

    /// Evaluates the form of `edge_id` at `(u, v)`: `u^T M v` for bilinear
    /// edges, `u^T M conj(v)` for sesquilinear ones.
    pub fn eval_form(&self, edge_id: &str, u: &CVector, v: &CVector) -> Result<Complex64> {
        let edge = self.graph.edge(edge_id)?;
        let m = self.matrix(edge_id)?;
        let (ni, nj) = (self.dims[edge.tail - 1], self.dims[edge.head - 1]);
        if u.len() != ni {
            return Err(FormError::DimensionMismatch {
                context: format!("first argument of edge `{edge_id}`"),
                expected: format!("{ni}"),
                actual: format!("{}", u.len()),
            });
        }
        if v.len() != nj {
            return Err(FormError::DimensionMismatch {
                context: format!("second argument of edge `{edge_id}`"),
                expected: format!("{nj}"),
                actual: format!("{}", v.len()),
            });
        }
        if ni == 0 || nj == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let rhs = match edge.kind {
            FormKind::Bilinear => m * v,
            FormKind::Sesquilinear => m * v.map(|z| z.conj()),
        };
        Ok((u.transpose() * rhs)[(0, 0)])
    }

    /// Matrix of the form of `edge_id` in the bases given by the columns of
    /// `basis_u` (first argument) and `basis_v` (second argument):
    /// entry `(k, l)` is the form evaluated at (column k, column l).
    pub fn matrix_of_form_in_bases(
        &self,
        edge_id: &str,
        basis_u: &CMatrix,
        basis_v: &CMatrix,
    ) -> Result<CMatrix> {
        let edge = self.graph.edge(edge_id)?;
        let m = self.matrix(edge_id)?;
        let (ni, nj) = (self.dims[edge.tail - 1], self.dims[edge.head - 1]);
        if basis_u.shape() != (ni, ni) {
            return Err(FormError::DimensionMismatch {
                context: format!("first basis of edge `{edge_id}`"),
                expected: format!("{ni}x{ni}"),
                actual: format!("{}x{}", basis_u.nrows(), basis_u.ncols()),
            });
        }
        if basis_v.shape() != (nj, nj) {
            return Err(FormError::DimensionMismatch {
                context: format!("second basis of edge `{edge_id}`"),
                expected: format!("{nj}x{nj}"),
                actual: format!("{}x{}", basis_v.nrows(), basis_v.ncols()),
            });
        }
        require_invertible(basis_u, INVERTIBILITY_THRESHOLD, "first basis matrix")?;
        require_invertible(basis_v, INVERTIBILITY_THRESHOLD, "second basis matrix")?;
        Ok(transform_edge_matrix(m, basis_u, basis_v, edge.kind))
    }

    /// Applies a family of linear bijections: returns the representation `A`
    /// with `M_A = S_i^T M_B S_j^{(conj)}` per edge, where `self` plays `B`.
    pub fn apply_transform(&self, family: &TransformFamily) -> Result<FormRepresentation> {
        family.check_dims(&self.dims)?;
        let matrices = self
            .edge_matrices()
            .map(|(edge, m)| {
                let si = family.matrix(edge.tail - 1);
                let sj = family.matrix(edge.head - 1);
                (edge.id.clone(), transform_edge_matrix(m, si, sj, edge.kind))
            })
            .collect::<Vec<_>>();
        FormRepresentation::new(self.graph.clone(), self.dims.clone(), matrices)
    }
}

fn transform_edge_matrix(m: &CMatrix, si: &CMatrix, sj: &CMatrix, kind: FormKind) -> CMatrix {
    match kind {
        FormKind::Bilinear => si.transpose() * m * sj,
        FormKind::Sesquilinear => si.transpose() * m * sj.map(|z| z.conj()),
    }
}

/// One invertible square matrix per vertex, the linear side of the
/// transformation law. Invertibility is checked at construction with the
/// scale-aware threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformFamily {
    matrices: Vec<CMatrix>,
}

impl TransformFamily {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        for (i, s) in matrices.iter().enumerate() {
            if s.nrows() != s.ncols() {
                return Err(FormError::DimensionMismatch {
                    context: format!("family matrix {}", i + 1),
                    expected: "square matrix".into(),
                    actual: format!("{}x{}", s.nrows(), s.ncols()),
                });
            }
            check_finite(s, &format!("family matrix {}", i + 1))?;
            require_invertible(s, INVERTIBILITY_THRESHOLD, &format!("family matrix {}", i + 1))?;
        }
        Ok(Self { matrices })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            matrices: dims.iter().map(|&n| CMatrix::identity(n, n)).collect(),
        }
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, vertex_index: usize) -> &CMatrix {
        &self.matrices[vertex_index]
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Vertex-wise product: `(self ∘ other)_i = self_i * other_i`. Applying
    /// `other` then `self` to a representation equals applying the
    /// composition once.
    pub fn compose(&self, other: &TransformFamily) -> Result<TransformFamily> {
        if self.len() != other.len() {
            return Err(FormError::DimensionMismatch {
                context: "family composition".into(),
                expected: format!("{} matrices", self.len()),
                actual: format!("{} matrices", other.len()),
            });
        }
        let matrices = self
            .matrices
            .iter()
            .zip(other.matrices.iter())
            .map(|(a, b)| a * b)
            .collect();
        TransformFamily::new(matrices)
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.matrices.len() != dims.len() {
            return Err(FormError::DimensionMismatch {
                context: "transform family".into(),
                expected: format!("{} matrices", dims.len()),
                actual: format!("{} matrices", self.matrices.len()),
            });
        }
        for (i, (s, &n)) in self.matrices.iter().zip(dims.iter()).enumerate() {
            if s.nrows() != n {
                return Err(FormError::DimensionMismatch {
                    context: format!("family matrix {}", i + 1),
                    expected: format!("{n}x{n}"),
                    actual: format!("{}x{}", s.nrows(), s.ncols()),
                });
            }
        }
        Ok(())
    }
}

/// Residual of one edge in a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeResidual {
    pub edge: String,
    /// `max_abs(M_A - S_i^T M_B S_j^{(conj)}) / max(1, max_abs(M_A))`
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub max_residual: f64,
    pub worst_edge: Option<String>,
    pub edges: Vec<EdgeResidual>,
}

/// Checks whether `family` transforms `rep_b` to `rep_a` within `tol`.
///
/// The two representations must share the same graph (same vertex count and
/// identical edge list, including order and kinds) and dimensions; anything
/// else is a structural error, not a `false` verdict. Residuals are relative
/// to `max(1, max_abs(M_A))` per edge, so zero forms are handled stably.
pub fn verify_linear_isomorphism(
    rep_a: &FormRepresentation,
    rep_b: &FormRepresentation,
    family: &TransformFamily,
    tol: f64,
) -> Result<VerificationReport> {
    if rep_a.graph() != rep_b.graph() {
        return Err(FormError::StructuralMismatch {
            reason: "representations have different graphs".into(),
        });
    }
    if rep_a.dims() != rep_b.dims() {
        return Err(FormError::StructuralMismatch {
            reason: format!(
                "dimension vectors differ: {:?} vs {:?}",
                rep_a.dims(),
                rep_b.dims()
            ),
        });
    }
    let transformed = rep_b.apply_transform(family)?;
    let mut edges = Vec::with_capacity(rep_a.graph().edges().len());
    let mut max_residual = 0.0f64;
    let mut worst_edge = None;
    for ((edge, ma), (_, mt)) in rep_a.edge_matrices().zip(transformed.edge_matrices()) {
        let scale = max_abs(ma).max(1.0);
        let residual = max_abs(&(ma - mt)) / scale;
        if worst_edge.is_none() || residual > max_residual {
            max_residual = residual;
            worst_edge = Some(edge.id.clone());
        }
        edges.push(EdgeResidual { edge: edge.id.clone(), residual });
    }
    Ok(VerificationReport {
        ok: max_residual <= tol,
        max_residual,
        worst_edge,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, cr};

    /// Independent oracle: the defining double sum, conjugating the second
    /// argument for sesquilinear forms.
    fn eval_brute(m: &CMatrix, kind: FormKind, u: &CVector, v: &CVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..u.len() {
            for l in 0..v.len() {
                let vl = match kind {
                    FormKind::Bilinear => v[l],
                    FormKind::Sesquilinear => v[l].conj(),
                };
                acc += u[k] * m[(k, l)] * vl;
            }
        }
        acc
    }

    fn loop_rep(m: CMatrix, kind: FormKind) -> FormRepresentation {
        let n = m.nrows();
        let graph = MixedGraph::new(
            1,
            vec![Edge { id: "a".into(), tail: 1, head: 1, kind }],
        )
        .unwrap();
        FormRepresentation::new(graph, vec![n], vec![("a".to_string(), m)]).unwrap()
    }

    fn e(n: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[k] = cr(1.0);
        v
    }

    #[test]
    fn eval_bilinear_identity_off_diagonal() {
        let rep = loop_rep(CMatrix::identity(2, 2), FormKind::Bilinear);
        let val = rep.eval_form("a", &e(2, 0), &e(2, 1)).unwrap();
        assert_eq!(val, cr(0.0));
    }

    #[test]
    fn eval_reads_entry() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(-1.0), cr(0.0)]);
        let rep = loop_rep(m, FormKind::Bilinear);
        let val = rep.eval_form("a", &e(2, 0), &e(2, 1)).unwrap();
        assert_eq!(val, cr(1.0));
    }

    #[test]
    fn eval_sesquilinear_conjugates_second_argument() {
        // M = [[i]], u = (1), v = (i): 1 * i * conj(i) = 1
        let m = CMatrix::from_row_slice(1, 1, &[c(0.0, 1.0)]);
        let rep = loop_rep(m.clone(), FormKind::Sesquilinear);
        let u = CVector::from_vec(vec![cr(1.0)]);
        let v = CVector::from_vec(vec![c(0.0, 1.0)]);
        let val = rep.eval_form("a", &u, &v).unwrap();
        let oracle = eval_brute(&m, FormKind::Sesquilinear, &u, &v);
        assert!((val - oracle).norm() < 1e-15);
        assert!((val - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_matches_brute_force_on_random_vectors() {
        let mut rng = crate::rng::rng_from(3, 17);
        let m = CMatrix::from_fn(3, 3, |_, _| crate::rng::complex_normal(&mut rng));
        for kind in [FormKind::Bilinear, FormKind::Sesquilinear] {
            let rep = loop_rep(m.clone(), kind);
            for _ in 0..20 {
                let u = crate::rng::random_complex_vector(&mut rng, 3);
                let v = crate::rng::random_complex_vector(&mut rng, 3);
                let got = rep.eval_form("a", &u, &v).unwrap();
                let want = eval_brute(&m, kind, &u, &v);
                assert!((got - want).norm() < 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn eval_error_paths_are_distinct() {
        let rep = loop_rep(CMatrix::identity(2, 2), FormKind::Bilinear);
        let err = rep.eval_form("nope", &e(2, 0), &e(2, 1)).unwrap_err();
        assert!(matches!(err, FormError::UnknownEdge { .. }));
        let err = rep.eval_form("a", &e(3, 0), &e(2, 1)).unwrap_err();
        assert!(matches!(err, FormError::DimensionMismatch { .. }));
    }

    #[test]
    fn apply_identity_family_is_exact() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.5), c(1.0, 2.0), cr(-3.0), c(0.0, -1.0)]);
        let rep = loop_rep(m, FormKind::Bilinear);
        let out = rep.apply_transform(&TransformFamily::identity(rep.dims())).unwrap();
        assert_eq!(rep.matrix("a").unwrap(), out.matrix("a").unwrap());
    }

    #[test]
    fn apply_bilinear_loop_congruence() {
        // S^T M S with M = [[0,1],[-1,0]], S = [[1,1],[0,1]] stays [[0,1],[-1,0]]
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(-1.0), cr(0.0)]);
        let s = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(0.0), cr(1.0)]);
        let rep = loop_rep(m.clone(), FormKind::Bilinear);
        let family = TransformFamily::new(vec![s.clone()]).unwrap();
        let out = rep.apply_transform(&family).unwrap();
        let expected = s.transpose() * &m * &s;
        assert!(max_abs(&(out.matrix("a").unwrap() - &expected)) < 1e-15);
        assert!(max_abs(&(out.matrix("a").unwrap() - &m)) < 1e-15);
    }

    #[test]
    fn apply_sesquilinear_loop_star_congruence() {
        // M = [[1]], S = [[i]]: S^T M conj(S) = i * 1 * (-i) = [[1]]
        let m = CMatrix::from_row_slice(1, 1, &[cr(1.0)]);
        let s = CMatrix::from_row_slice(1, 1, &[c(0.0, 1.0)]);
        let rep = loop_rep(m, FormKind::Sesquilinear);
        let family = TransformFamily::new(vec![s]).unwrap();
        let out = rep.apply_transform(&family).unwrap();
        assert!((out.matrix("a").unwrap()[(0, 0)] - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_in_standard_bases_is_stored_matrix() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), c(2.0, 1.0), cr(3.0), cr(4.0)]);
        let rep = loop_rep(m.clone(), FormKind::Bilinear);
        let id = CMatrix::identity(2, 2);
        let got = rep.matrix_of_form_in_bases("a", &id, &id).unwrap();
        assert_eq!(got, m);
    }

    #[test]
    fn matrix_in_bases_matches_eval_on_columns() {
        let mut rng = crate::rng::rng_from(9, 4);
        let m = CMatrix::from_fn(2, 2, |_, _| crate::rng::complex_normal(&mut rng));
        for kind in [FormKind::Bilinear, FormKind::Sesquilinear] {
            let rep = loop_rep(m.clone(), kind);
            let bu = CMatrix::from_fn(2, 2, |_, _| crate::rng::complex_normal(&mut rng));
            let bv = CMatrix::from_fn(2, 2, |_, _| crate::rng::complex_normal(&mut rng));
            let got = rep.matrix_of_form_in_bases("a", &bu, &bv).unwrap();
            for k in 0..2 {
                for l in 0..2 {
                    let want = rep
                        .eval_form("a", &bu.column(k).into_owned(), &bv.column(l).into_owned())
                        .unwrap();
                    assert!((got[(k, l)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn matrix_in_bases_rejects_singular_basis() {
        let rep = loop_rep(CMatrix::identity(2, 2), FormKind::Bilinear);
        let singular = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(1.0), cr(1.0)]);
        let id = CMatrix::identity(2, 2);
        let err = rep.matrix_of_form_in_bases("a", &singular, &id).unwrap_err();
        assert!(matches!(err, FormError::SingularMatrix { .. }));
    }

    #[test]
    fn verify_roundtrip_and_rank_obstruction() {
        let m = CMatrix::from_row_slice(1, 1, &[cr(1.0)]);
        let rep_b = loop_rep(m, FormKind::Bilinear);
        let s = CMatrix::from_row_slice(1, 1, &[c(1.5, 0.5)]);
        let family = TransformFamily::new(vec![s]).unwrap();
        let rep_a = rep_b.apply_transform(&family).unwrap();
        let report = verify_linear_isomorphism(&rep_a, &rep_b, &family, 1e-12).unwrap();
        assert!(report.ok);
        assert!(report.max_residual <= 1e-12);

        let zero = loop_rep(CMatrix::zeros(1, 1), FormKind::Bilinear);
        let report = verify_linear_isomorphism(&rep_a, &zero, &family, 1e-9).unwrap();
        assert!(!report.ok);
        assert_eq!(report.worst_edge.as_deref(), Some("a"));
    }

    #[test]
    fn verify_structural_mismatch_is_an_error() {
        let rep1 = loop_rep(CMatrix::identity(2, 2), FormKind::Bilinear);
        let rep2 = loop_rep(CMatrix::identity(2, 2), FormKind::Sesquilinear);
        let family = TransformFamily::identity(rep1.dims());
        let err = verify_linear_isomorphism(&rep1, &rep2, &family, 1e-9).unwrap_err();
        assert!(matches!(err, FormError::StructuralMismatch { .. }));
    }

    #[test]
    fn zero_dimensional_spaces_are_vacuous() {
        let graph = MixedGraph::new(
            2,
            vec![Edge { id: "a".into(), tail: 1, head: 2, kind: FormKind::Bilinear }],
        )
        .unwrap();
        let rep = FormRepresentation::new(
            graph,
            vec![0, 2],
            vec![("a".to_string(), CMatrix::zeros(0, 2))],
        )
        .unwrap();
        let val = rep
            .eval_form("a", &CVector::zeros(0), &CVector::from_vec(vec![cr(1.0), cr(2.0)]))
            .unwrap();
        assert_eq!(val, cr(0.0));
        let family = TransformFamily::identity(rep.dims());
        let out = rep.apply_transform(&family).unwrap();
        let report = verify_linear_isomorphism(&out, &rep, &family, 1e-12).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn family_rejects_singular_member() {
        let s = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(1.0), cr(1.0)]);
        assert!(matches!(
            TransformFamily::new(vec![s]),
            Err(FormError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn graph_rejects_duplicate_ids_and_bad_endpoints() {
        let dup = MixedGraph::new(
            1,
            vec![
                Edge { id: "a".into(), tail: 1, head: 1, kind: FormKind::Bilinear },
                Edge { id: "a".into(), tail: 1, head: 1, kind: FormKind::Bilinear },
            ],
        );
        assert!(dup.is_err());
        let bad = MixedGraph::new(
            1,
            vec![Edge { id: "a".into(), tail: 1, head: 2, kind: FormKind::Bilinear }],
        );
        assert!(bad.is_err());
    }
}
