//! JSON file formats shared with the command-line tool.
//!
//! All files carry `"schema": "formrep/1"`. Complex numbers are `[re, im]`
//! pairs, matrices are arrays of rows, vertex indices are 1-based. Floats
//! serialise in shortest round-trip form with stable field ordering, so
//! equal inputs produce byte-identical output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::{CanonicalBlock, CanonicalBlockMultiset};
use crate::error::{FormError, Result};
use crate::forms::{Edge, FormKind, FormRepresentation, MixedGraph, TransformFamily};
use crate::generators::{render_oracle_spec, OracleSpec, WitnessBundle};
use crate::matrix::{c, CMatrix, CVector};

pub const SCHEMA: &str = "formrep/1";

fn default_schema() -> String {
    SCHEMA.to_string()
}

fn check_schema(schema: &str, context: &str) -> Result<()> {
    if schema != SCHEMA {
        return Err(FormError::Parse {
            context: context.to_string(),
            reason: format!("unsupported schema `{schema}` (expected `{SCHEMA}`)"),
        });
    }
    Ok(())
}

type JsonMatrix = Vec<Vec<[f64; 2]>>;

fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(rows: &JsonMatrix, context: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(FormError::Parse {
            context: context.to_string(),
            reason: "ragged matrix rows".into(),
        });
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    id: String,
    tail: usize,
    head: usize,
    kind: FormKind,
    matrix: JsonMatrix,
}

#[derive(Serialize, Deserialize)]
struct RepresentationFile {
    #[serde(default = "default_schema")]
    schema: String,
    vertices: Vec<usize>,
    edges: Vec<EdgeFile>,
}

pub fn representation_to_json(rep: &FormRepresentation) -> String {
    let file = RepresentationFile {
        schema: SCHEMA.to_string(),
        vertices: rep.dims().to_vec(),
        edges: rep
            .edge_matrices()
            .map(|(edge, m)| EdgeFile {
                id: edge.id.clone(),
                tail: edge.tail,
                head: edge.head,
                kind: edge.kind,
                matrix: matrix_to_json(m),
            })
            .collect(),
    };
    pretty(&file)
}

pub fn representation_from_json(text: &str, context: &str) -> Result<FormRepresentation> {
    let file: RepresentationFile = parse(text, context)?;
    check_schema(&file.schema, context)?;
    let edges: Vec<Edge> = file
        .edges
        .iter()
        .map(|e| Edge { id: e.id.clone(), tail: e.tail, head: e.head, kind: e.kind })
        .collect();
    let graph = MixedGraph::new(file.vertices.len(), edges)?;
    let matrices = file
        .edges
        .iter()
        .map(|e| Ok((e.id.clone(), matrix_from_json(&e.matrix, context)?)))
        .collect::<Result<Vec<_>>>()?;
    // edge matrices with zero rows lose their column count in JSON; restore
    // the declared shape before validation
    let matrices = matrices
        .into_iter()
        .zip(file.edges.iter())
        .map(|((id, m), e)| {
            let (ni, nj) = (
                file.vertices.get(e.tail.wrapping_sub(1)).copied().unwrap_or(0),
                file.vertices.get(e.head.wrapping_sub(1)).copied().unwrap_or(0),
            );
            let m = if m.nrows() == 0 && ni == 0 {
                CMatrix::zeros(0, nj)
            } else if m.ncols() == 0 && nj == 0 {
                CMatrix::zeros(ni, 0)
            } else {
                m
            };
            (id, m)
        })
        .collect::<Vec<_>>();
    FormRepresentation::new(graph, file.vertices, matrices)
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    #[serde(default = "default_schema")]
    schema: String,
    matrices: Vec<JsonMatrix>,
}

pub fn family_to_json(family: &TransformFamily) -> String {
    let file = FamilyFile {
        schema: SCHEMA.to_string(),
        matrices: family.matrices().iter().map(matrix_to_json).collect(),
    };
    pretty(&file)
}

pub fn family_from_json(text: &str, context: &str) -> Result<TransformFamily> {
    let file: FamilyFile = parse(text, context)?;
    check_schema(&file.schema, context)?;
    let matrices = file
        .matrices
        .iter()
        .map(|m| matrix_from_json(m, context))
        .collect::<Result<Vec<_>>>()?;
    TransformFamily::new(matrices)
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    #[serde(default = "default_schema")]
    schema: String,
    matrix: JsonMatrix,
}

pub fn matrix_to_json_file(m: &CMatrix) -> String {
    pretty(&MatrixFile { schema: SCHEMA.to_string(), matrix: matrix_to_json(m) })
}

pub fn matrix_from_json_file(text: &str, context: &str) -> Result<CMatrix> {
    let file: MatrixFile = parse(text, context)?;
    check_schema(&file.schema, context)?;
    matrix_from_json(&file.matrix, context)
}

#[derive(Serialize, Deserialize)]
struct VectorFile {
    #[serde(default = "default_schema")]
    schema: String,
    vector: Vec<[f64; 2]>,
}

pub fn vector_to_json_file(v: &CVector) -> String {
    pretty(&VectorFile {
        schema: SCHEMA.to_string(),
        vector: v.iter().map(|z| [z.re, z.im]).collect(),
    })
}

pub fn vector_from_json_file(text: &str, context: &str) -> Result<CVector> {
    let file: VectorFile = parse(text, context)?;
    check_schema(&file.schema, context)?;
    Ok(CVector::from_iterator(
        file.vector.len(),
        file.vector.iter().map(|p| c(p[0], p[1])),
    ))
}

#[derive(Serialize, Deserialize)]
struct BlockFile {
    variant: String,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct MultisetFile {
    #[serde(default = "default_schema")]
    schema: String,
    kind: FormKind,
    blocks: Vec<BlockFile>,
}

pub fn multiset_to_json(ms: &CanonicalBlockMultiset) -> String {
    let blocks = ms
        .blocks()
        .iter()
        .map(|b| match b {
            CanonicalBlock::Singular { n } => {
                BlockFile { variant: "singular".into(), n: *n, lambda: None, mu: None }
            }
            CanonicalBlock::Gamma { n, lambda } => BlockFile {
                variant: "gamma".into(),
                n: *n,
                lambda: match ms.kind() {
                    FormKind::Bilinear => None,
                    FormKind::Sesquilinear => Some([lambda.re, lambda.im]),
                },
                mu: None,
            },
            CanonicalBlock::HPair { n, mu } => BlockFile {
                variant: "hpair".into(),
                n: *n,
                lambda: None,
                mu: Some([mu.re, mu.im]),
            },
        })
        .collect();
    pretty(&MultisetFile { schema: SCHEMA.to_string(), kind: ms.kind(), blocks })
}

pub fn multiset_from_json(text: &str, context: &str) -> Result<CanonicalBlockMultiset> {
    let file: MultisetFile = parse(text, context)?;
    check_schema(&file.schema, context)?;
    let blocks = file
        .blocks
        .iter()
        .map(|b| match b.variant.as_str() {
            "singular" => Ok(CanonicalBlock::Singular { n: b.n }),
            "gamma" => Ok(CanonicalBlock::Gamma {
                n: b.n,
                lambda: b.lambda.map(|p| c(p[0], p[1])).unwrap_or(c(1.0, 0.0)),
            }),
            "hpair" => {
                let mu = b.mu.ok_or_else(|| FormError::Parse {
                    context: context.to_string(),
                    reason: "hpair block missing mu".into(),
                })?;
                Ok(CanonicalBlock::HPair { n: b.n, mu: c(mu[0], mu[1]) })
            }
            other => Err(FormError::Parse {
                context: context.to_string(),
                reason: format!("unknown block variant `{other}`"),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    CanonicalBlockMultiset::new(file.kind, blocks)
}

#[derive(Serialize, Deserialize)]
struct WitnessSpecFile {
    #[serde(default = "default_schema")]
    schema: String,
    oracles: Vec<String>,
}

pub fn witness_specs_to_json(oracles: &[String]) -> String {
    pretty(&WitnessSpecFile { schema: SCHEMA.to_string(), oracles: oracles.to_vec() })
}

pub fn witness_specs_from_json(text: &str, context: &str) -> Result<Vec<String>> {
    let file: WitnessSpecFile = parse(text, context)?;
    check_schema(&file.schema, context)?;
    Ok(file.oracles)
}

/// Parses an oracle spec string, resolving file references relative to
/// `base_dir`.
pub fn resolve_oracle_spec(text: &str, base_dir: &Path) -> Result<OracleSpec> {
    let load_matrix = |path: &str| -> Result<CMatrix> {
        let full = base_dir.join(path);
        matrix_from_json_file(&read_file(&full)?, &full.display().to_string())
    };
    let load_vector = |path: &str| -> Result<CVector> {
        let full = base_dir.join(path);
        vector_from_json_file(&read_file(&full)?, &full.display().to_string())
    };
    crate::generators::parse_oracle_spec(text, &load_matrix, &load_vector)
}

/// Paths produced by [`write_witness_bundle`].
#[derive(Debug, Clone, Serialize)]
pub struct WitnessBundlePaths {
    pub rep_a: String,
    pub rep_b: String,
    pub witness: String,
    pub aux_files: Vec<String>,
}

/// Writes a witness bundle into `dir` as `<prefix>_rep_a.json`,
/// `<prefix>_rep_b.json`, `<prefix>_witness.json` plus auxiliary matrix and
/// vector files referenced by the oracle specs. File names are
/// deterministic in the bundle content order.
pub fn write_witness_bundle(
    bundle: &WitnessBundle,
    dir: &Path,
    prefix: &str,
) -> Result<WitnessBundlePaths> {
    let rep_a_name = format!("{prefix}_rep_a.json");
    let rep_b_name = format!("{prefix}_rep_b.json");
    let witness_name = format!("{prefix}_witness.json");
    write_file(&dir.join(&rep_a_name), &representation_to_json(&bundle.rep_a))?;
    write_file(&dir.join(&rep_b_name), &representation_to_json(&bundle.rep_b))?;

    let aux_files = std::cell::RefCell::new(Vec::new());
    let matrix_count = std::cell::Cell::new(0usize);
    let vector_count = std::cell::Cell::new(0usize);
    let mut specs = Vec::with_capacity(bundle.specs.len());
    for spec in &bundle.specs {
        let mut store_matrix = |m: &CMatrix| -> Result<String> {
            let name = format!("{prefix}_m{}.json", matrix_count.get());
            matrix_count.set(matrix_count.get() + 1);
            write_file(&dir.join(&name), &matrix_to_json_file(m))?;
            aux_files.borrow_mut().push(name.clone());
            Ok(name)
        };
        let mut store_vector = |v: &CVector| -> Result<String> {
            let name = format!("{prefix}_k{}.json", vector_count.get());
            vector_count.set(vector_count.get() + 1);
            write_file(&dir.join(&name), &vector_to_json_file(v))?;
            aux_files.borrow_mut().push(name.clone());
            Ok(name)
        };
        specs.push(render_oracle_spec(spec, &mut store_matrix, &mut store_vector)?);
    }
    write_file(&dir.join(&witness_name), &witness_specs_to_json(&specs))?;
    Ok(WitnessBundlePaths {
        rep_a: rep_a_name,
        rep_b: rep_b_name,
        witness: witness_name,
        aux_files: aux_files.into_inner(),
    })
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| FormError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| FormError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable");
    out.push('\n');
    out
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| FormError::Parse {
        context: context.to_string(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{example_two_vertex_graph, random_representation};
    use crate::matrix::cr;

    #[test]
    fn representation_roundtrip() {
        let graph = example_two_vertex_graph();
        let rep = random_representation(&graph, &[2, 3], 5).unwrap();
        let text = representation_to_json(&rep);
        let back = representation_from_json(&text, "test").unwrap();
        assert_eq!(rep, back);
        // byte-identical re-serialisation
        assert_eq!(text, representation_to_json(&back));
    }

    #[test]
    fn family_roundtrip() {
        let family = TransformFamily::new(vec![
            CMatrix::identity(2, 2),
            crate::generators::random_invertible(3, 10.0, 4),
        ])
        .unwrap();
        let text = family_to_json(&family);
        let back = family_from_json(&text, "test").unwrap();
        assert_eq!(family.matrices(), back.matrices());
    }

    #[test]
    fn multiset_roundtrip_and_bilinear_gamma_omits_lambda() {
        let ms = CanonicalBlockMultiset::new(
            FormKind::Bilinear,
            vec![
                CanonicalBlock::Singular { n: 2 },
                CanonicalBlock::Gamma { n: 1, lambda: cr(1.0) },
                CanonicalBlock::HPair { n: 1, mu: c(3.0, 0.0) },
            ],
        )
        .unwrap();
        let text = multiset_to_json(&ms);
        assert!(!text.contains("lambda"));
        let back = multiset_from_json(&text, "test").unwrap();
        assert_eq!(ms, back);
    }

    #[test]
    fn schema_is_checked() {
        let err = representation_from_json(
            r#"{"schema": "formrep/2", "vertices": [], "edges": []}"#,
            "test",
        )
        .unwrap_err();
        assert!(matches!(err, FormError::Parse { .. }));
        // absent schema is accepted
        representation_from_json(r#"{"vertices": [], "edges": []}"#, "test").unwrap();
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = representation_from_json("{oops", "test").unwrap_err();
        assert!(matches!(err, FormError::Parse { .. }));
    }

    #[test]
    fn zero_dimension_edges_survive_roundtrip() {
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
        let back = representation_from_json(&representation_to_json(&rep), "test").unwrap();
        assert_eq!(rep, back);
    }
}
