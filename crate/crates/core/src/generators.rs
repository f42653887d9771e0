//! Seeded construction of test inputs: random representations, random
//! invertible matrices, oracle specs with a small grammar, form-preserving
//! homeomorphism witnesses, and canonical block multisets.
//!
//! Everything here is a deterministic function of its inputs and a `u64`
//! seed.

use num_complex::Complex64;
use rand::Rng;

use crate::canonical::{CanonicalBlock, CanonicalBlockMultiset};
use crate::error::{FormError, Result};
use crate::forms::{FormKind, FormRepresentation, MixedGraph, TransformFamily};
use crate::linearize::{HomeomorphismOracle, TopologicalIsomorphismWitness};
use crate::matrix::{
    cr, max_abs, null_space, require_invertible, CMatrix, CVector, INVERTIBILITY_THRESHOLD,
};
use crate::rng::{complex_normal, random_complex_vector, rng_from, subseed};

/// Scalar function fed to a kernel shear; evaluated on the projection of
/// the input onto the complement of the shear direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GFunction {
    Zero,
    /// `sin(|y|^2) * (1 + i)` — smooth and bounded.
    SinNormSq,
    /// Bounded-frequency sawtooth-like oscillation, rough but continuous;
    /// stresses the perturbation search.
    Oscillation,
}

impl GFunction {
    pub fn eval(&self, y: &CVector) -> Complex64 {
        match self {
            GFunction::Zero => Complex64::new(0.0, 0.0),
            GFunction::SinNormSq => {
                let s = y.norm_squared().sin();
                Complex64::new(s, s)
            }
            GFunction::Oscillation => {
                let t: f64 = y.iter().map(|z| z.re + 0.7 * z.im).sum();
                let mut acc = 0.0;
                let mut amp = 0.5;
                let mut freq = 3.0;
                for _ in 0..12 {
                    acc += amp * (freq * t).sin();
                    amp *= 0.5;
                    freq *= 3.0;
                }
                Complex64::new(acc, 0.5 * acc)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GFunction::Zero => "zero",
            GFunction::SinNormSq => "sinq",
            GFunction::Oscillation => "osc",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(GFunction::Zero),
            "sinq" => Ok(GFunction::SinNormSq),
            "osc" => Ok(GFunction::Oscillation),
            other => Err(FormError::Parse {
                context: "g-function name".into(),
                reason: format!("unknown g `{other}` (expected zero|sinq|osc)"),
            }),
        }
    }
}

/// Constructive description of a homeomorphism of `C^n`.
///
/// `Compose` applies its members left to right on the forward pass (the
/// first spec acts first); inverses run in reverse order.
#[derive(Debug, Clone)]
pub enum OracleSpec {
    /// Invertible linear map `x -> L x`.
    Linear(CMatrix),
    /// Radial stretch `x -> x * (1 + c * |x|^p)`, inverted by a 1-D
    /// bisection on the monotone radius map.
    Radial { c: f64, p: f64 },
    /// Shear `x -> x + g(pi(x)) * k` along `k`, where `pi` projects onto
    /// the orthogonal complement of `span(k)`; a homeomorphism for any
    /// continuous `g` because the shifted component does not feed back
    /// into the shift amount.
    KernelShear { k: CVector, g: GFunction },
    Compose(Vec<OracleSpec>),
}

impl OracleSpec {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            OracleSpec::Linear(l) => {
                if l.shape() != (n, n) {
                    return Err(FormError::DimensionMismatch {
                        context: "linear oracle".into(),
                        expected: format!("{n}x{n}"),
                        actual: format!("{}x{}", l.nrows(), l.ncols()),
                    });
                }
                require_invertible(l, INVERTIBILITY_THRESHOLD, "linear oracle matrix")
            }
            OracleSpec::Radial { c, p } => {
                if *c <= 0.0 || *p <= 0.0 || !c.is_finite() || !p.is_finite() {
                    return Err(FormError::InvalidInput {
                        reason: format!("radial oracle needs positive finite c, p; got c={c}, p={p}"),
                    });
                }
                Ok(())
            }
            OracleSpec::KernelShear { k, .. } => {
                if k.len() != n {
                    return Err(FormError::DimensionMismatch {
                        context: "kernel shear direction".into(),
                        expected: format!("length {n}"),
                        actual: format!("length {}", k.len()),
                    });
                }
                if k.norm() < 1e-12 {
                    return Err(FormError::InvalidInput {
                        reason: "kernel shear direction is numerically zero".into(),
                    });
                }
                Ok(())
            }
            OracleSpec::Compose(parts) => {
                if parts.is_empty() {
                    return Err(FormError::InvalidInput {
                        reason: "compose oracle needs at least one part".into(),
                    });
                }
                parts.iter().try_for_each(|p| p.validate(n))
            }
        }
    }
}

/// Builds the callable oracle for a spec acting on `C^n`.
pub fn make_oracle(spec: &OracleSpec, n: usize) -> Result<HomeomorphismOracle> {
    spec.validate(n)?;
    Ok(build_oracle(spec, n))
}

fn build_oracle(spec: &OracleSpec, n: usize) -> HomeomorphismOracle {
    match spec {
        OracleSpec::Linear(l) => {
            let inv = l.clone().try_inverse().expect("validated invertible");
            let fwd = l.clone();
            HomeomorphismOracle::new(
                n,
                Box::new(move |x: &CVector| &fwd * x),
                Box::new(move |x: &CVector| &inv * x),
            )
        }
        OracleSpec::Radial { c, p } => {
            let (c, p) = (*c, *p);
            HomeomorphismOracle::new(
                n,
                Box::new(move |x: &CVector| {
                    let r = x.norm();
                    x * cr(1.0 + c * r.powf(p))
                }),
                Box::new(move |y: &CVector| {
                    let s = y.norm();
                    if s == 0.0 {
                        return y.clone();
                    }
                    let r = radial_invert(c, p, s);
                    y * cr(r / s)
                }),
            )
        }
        OracleSpec::KernelShear { k, g } => {
            let khat = k / cr(k.norm());
            let k_fwd = k.clone();
            let k_inv = k.clone();
            let khat_fwd = khat.clone();
            let khat_inv = khat;
            let g_fwd = *g;
            let g_inv = *g;
            HomeomorphismOracle::new(
                n,
                Box::new(move |x: &CVector| {
                    let coeff = khat_fwd.dotc(x);
                    let proj = x - &khat_fwd * coeff;
                    x + &k_fwd * g_fwd.eval(&proj)
                }),
                Box::new(move |x: &CVector| {
                    let coeff = khat_inv.dotc(x);
                    let proj = x - &khat_inv * coeff;
                    x - &k_inv * g_inv.eval(&proj)
                }),
            )
        }
        OracleSpec::Compose(parts) => {
            let oracles: Vec<HomeomorphismOracle> =
                parts.iter().map(|p| build_oracle(p, n)).collect();
            let oracles = std::sync::Arc::new(oracles);
            let fwd = oracles.clone();
            HomeomorphismOracle::new(
                n,
                Box::new(move |x: &CVector| {
                    fwd.iter().fold(x.clone(), |acc, o| o.forward(&acc))
                }),
                Box::new(move |x: &CVector| {
                    oracles.iter().rev().fold(x.clone(), |acc, o| o.inverse(&acc))
                }),
            )
        }
    }
}

/// Solves `r * (1 + c * r^p) = s` for `r` in `[0, s]` by bisection.
fn radial_invert(c: f64, p: f64, s: f64) -> f64 {
    let f = |r: f64| r * (1.0 + c * r.powf(p)) - s;
    let (mut lo, mut hi) = (0.0f64, s);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * s.max(1.0) {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random invertible matrix with condition number at most `cond_max`,
/// built from two Householder-orthonormal factors and a log-uniform
/// singular value profile in `[1, cond_max]`.
pub fn random_invertible(n: usize, cond_max: f64, seed: u64) -> CMatrix {
    assert!(cond_max >= 1.0, "cond_max must be >= 1");
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let mut rng = rng_from(seed, 0x1272);
    let q1 = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng)).qr().q();
    let q2 = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng)).qr().q();
    let log_max = cond_max.ln();
    let diag = CVector::from_fn(n, |_, _| {
        let u: f64 = rng.gen();
        cr((u * log_max).exp())
    });
    q1 * CMatrix::from_diagonal(&diag) * q2
}

/// Random representation: every edge matrix gets independent standard
/// complex normal entries, one sub-stream per edge.
pub fn random_representation(
    graph: &MixedGraph,
    dims: &[usize],
    seed: u64,
) -> Result<FormRepresentation> {
    let matrices: Vec<(String, CMatrix)> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, edge)| {
            let mut rng = rng_from(seed, 0xed6e ^ (idx as u64));
            let (ni, nj) = (dims[edge.tail - 1], dims[edge.head - 1]);
            let m = CMatrix::from_fn(ni, nj, |_, _| complex_normal(&mut rng));
            (edge.id.clone(), m)
        })
        .collect();
    FormRepresentation::new(graph.clone(), dims.to_vec(), matrices)
}

/// Random representation with engineered degeneracy: for a seeded nonempty
/// subset of vertices, the incident matrices are zeroed along the last
/// coordinate (rows for outgoing slots, columns for incoming ones), so the
/// vertex acquires a joint kernel and admits a nonlinear kernel-shear
/// witness.
pub fn random_degenerate_representation(
    graph: &MixedGraph,
    dims: &[usize],
    seed: u64,
) -> Result<FormRepresentation> {
    let rep = random_representation(graph, dims, seed)?;
    let mut rng = rng_from(seed, 0xde6e);
    let t = graph.vertex_count();
    let eligible: Vec<usize> = (0..t).filter(|&i| dims[i] >= 1).collect();
    let mut degenerate = vec![false; t];
    if !eligible.is_empty() {
        for &i in &eligible {
            degenerate[i] = rng.gen_bool(0.5);
        }
        if !degenerate.iter().any(|&d| d) {
            let pick = eligible[rng.gen_range(0..eligible.len())];
            degenerate[pick] = true;
        }
    }
    let matrices: Vec<(String, CMatrix)> = rep
        .edge_matrices()
        .map(|(edge, m)| {
            let mut m = m.clone();
            if degenerate[edge.tail - 1] && m.nrows() > 0 {
                let last = m.nrows() - 1;
                m.row_mut(last).fill(cr(0.0));
            }
            if degenerate[edge.head - 1] && m.ncols() > 0 {
                let last = m.ncols() - 1;
                m.column_mut(last).fill(cr(0.0));
            }
            (edge.id.clone(), m)
        })
        .collect();
    FormRepresentation::new(graph.clone(), dims.to_vec(), matrices)
}

/// A witness bundle: the target representation `rep_b`, the source `rep_a`
/// it transforms from, per-vertex oracle specs (the homeomorphisms mapping
/// the `rep_a` side into the `rep_b` side), and the linear family that the
/// nonlinear layers wrap.
#[derive(Debug)]
pub struct WitnessBundle {
    pub rep_a: FormRepresentation,
    pub rep_b: FormRepresentation,
    pub specs: Vec<OracleSpec>,
    pub linear_family: TransformFamily,
    /// True when no vertex admitted a nonlinear layer.
    pub linear_only: bool,
}

impl WitnessBundle {
    pub fn witness(&self) -> Result<TopologicalIsomorphismWitness> {
        let dims = self.rep_b.dims();
        let oracles = self
            .specs
            .iter()
            .zip(dims.iter())
            .map(|(spec, &n)| make_oracle(spec, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(TopologicalIsomorphismWitness::new(oracles))
    }
}

const WITNESS_SAMPLES_PER_EDGE: usize = 50;
const WITNESS_CHECK_TOL: f64 = 1e-9;
const JOINT_KERNEL_TOL: f64 = 1e-10;

/// Manufactures a genuine topological witness targeting `rep` (played as
/// `B`): each vertex gets a random linear layer; vertices whose incident
/// forms share a joint kernel vector additionally get a kernel shear, and
/// vertices all of whose incident forms vanish get a radial stretch on
/// top. The matching `rep_a` (the `A` side of the transformation law) is
/// emitted alongside, and the whole bundle is verified on sampled vector
/// pairs before being returned.
///
/// With `require_nonlinear` set, a bundle where no vertex admits a
/// nonlinear layer is an error instead of being flagged `linear_only`.
pub fn form_preserving_witness(
    rep: &FormRepresentation,
    seed: u64,
    require_nonlinear: bool,
) -> Result<WitnessBundle> {
    let dims = rep.dims().to_vec();
    let t = dims.len();
    let mut specs = Vec::with_capacity(t);
    let mut linear_parts = Vec::with_capacity(t);
    let mut any_nonlinear = false;

    for i in 0..t {
        let n = dims[i];
        if n == 0 {
            specs.push(OracleSpec::Linear(CMatrix::zeros(0, 0)));
            linear_parts.push(CMatrix::zeros(0, 0));
            continue;
        }
        let linear = random_invertible(n, 20.0, subseed(seed, 2 * i as u64));
        linear_parts.push(linear.clone());
        let mut layers = vec![OracleSpec::Linear(linear)];

        let (kernel, all_zero) = joint_kernel(rep, i + 1)?;
        if kernel.ncols() > 0 {
            let mut rng = rng_from(seed, 0x5ea2 ^ (i as u64));
            let combo = random_complex_vector(&mut rng, kernel.ncols());
            let mut k = &kernel * combo;
            let norm = k.norm();
            if norm > 1e-10 {
                k /= cr(norm);
                let g = if rng.gen_bool(0.7) {
                    GFunction::SinNormSq
                } else {
                    GFunction::Oscillation
                };
                layers.push(OracleSpec::KernelShear { k, g });
                any_nonlinear = true;
                if all_zero {
                    let c = 0.5 + rng.gen::<f64>();
                    let p = 0.5 + 1.5 * rng.gen::<f64>();
                    layers.push(OracleSpec::Radial { c, p });
                }
            }
        }
        specs.push(if layers.len() == 1 {
            layers.pop().unwrap()
        } else {
            OracleSpec::Compose(layers)
        });
    }

    if require_nonlinear && !any_nonlinear {
        return Err(FormError::NoNonlinearWitness);
    }

    let linear_family = TransformFamily::new(linear_parts)?;
    let rep_a = rep.apply_transform(&linear_family)?;
    let bundle = WitnessBundle {
        rep_a,
        rep_b: rep.clone(),
        specs,
        linear_family,
        linear_only: !any_nonlinear,
    };
    check_witness_bundle(&bundle, seed)?;
    Ok(bundle)
}

/// Joint kernel at `vertex` (1-based): vectors `k` with `M^T k = 0` for
/// every edge leaving the vertex and `M k = 0` (conjugated for
/// sesquilinear) for every edge entering it. Returns an orthonormal basis
/// and whether every incident matrix is identically zero.
fn joint_kernel(rep: &FormRepresentation, vertex: usize) -> Result<(CMatrix, bool)> {
    let n = rep.dims()[vertex - 1];
    let mut rows: Vec<CMatrix> = Vec::new();
    let mut all_zero = true;
    for (edge, m) in rep.edge_matrices() {
        if edge.tail == vertex {
            all_zero &= max_abs(m) == 0.0;
            rows.push(m.transpose());
        }
        if edge.head == vertex {
            all_zero &= max_abs(m) == 0.0;
            match edge.kind {
                FormKind::Bilinear => rows.push(m.clone()),
                FormKind::Sesquilinear => rows.push(m.map(|z| z.conj())),
            }
        }
    }
    if rows.is_empty() {
        return Ok((CMatrix::identity(n, n), true));
    }
    let total_rows: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut stacked = CMatrix::zeros(total_rows, n);
    let mut offset = 0;
    for r in rows {
        stacked.view_mut((offset, 0), (r.nrows(), n)).copy_from(&r);
        offset += r.nrows();
    }
    Ok((null_space(&stacked, JOINT_KERNEL_TOL), all_zero))
}

/// Samples vector pairs per edge and checks the transformation identity
/// `A(u, v) = B(phi_i u, phi_j v)` before a bundle is released.
fn check_witness_bundle(bundle: &WitnessBundle, seed: u64) -> Result<()> {
    let witness = bundle.witness()?;
    let oracles = witness.oracles();
    let mut rng = rng_from(seed, 0xc2ec);
    for (edge, _) in bundle.rep_b.edge_matrices() {
        let ni = bundle.rep_b.dims()[edge.tail - 1];
        let nj = bundle.rep_b.dims()[edge.head - 1];
        for _ in 0..WITNESS_SAMPLES_PER_EDGE {
            let u = random_complex_vector(&mut rng, ni);
            let v = random_complex_vector(&mut rng, nj);
            let lhs = bundle.rep_a.eval_form(&edge.id, &u, &v)?;
            let rhs = bundle.rep_b.eval_form(
                &edge.id,
                &oracles[edge.tail - 1].forward(&u),
                &oracles[edge.head - 1].forward(&v),
            )?;
            let residual = (lhs - rhs).norm() / lhs.norm().max(1.0);
            if residual > WITNESS_CHECK_TOL {
                return Err(FormError::WitnessSelfCheck {
                    edge: edge.id.clone(),
                    residual,
                });
            }
        }
    }
    Ok(())
}

/// Random valid canonical block multiset of the requested total size, with
/// parameters drawn away from the exclusion boundaries: `|mu|` in
/// `[1.2, 5]`, `lambda` uniform on the unit circle.
pub fn sample_canonical_multiset(
    total_size: usize,
    kind: FormKind,
    seed: u64,
) -> CanonicalBlockMultiset {
    let mut rng = rng_from(seed, 0xca20);
    let mut remaining = total_size;
    let mut blocks = Vec::new();
    while remaining > 0 {
        let choice = rng.gen_range(0..3u8);
        match choice {
            0 => {
                let n = rng.gen_range(1..=remaining);
                blocks.push(CanonicalBlock::Singular { n });
                remaining -= n;
            }
            1 => {
                let n = rng.gen_range(1..=remaining);
                let lambda = match kind {
                    FormKind::Bilinear => cr(1.0),
                    FormKind::Sesquilinear => {
                        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                        Complex64::from_polar(1.0, theta)
                    }
                };
                blocks.push(CanonicalBlock::Gamma { n, lambda });
                remaining -= n;
            }
            _ => {
                if remaining < 2 {
                    continue;
                }
                let n = rng.gen_range(1..=remaining / 2);
                let radius = 1.2 + 3.8 * rng.gen::<f64>();
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                let mu = Complex64::from_polar(radius, theta);
                blocks.push(CanonicalBlock::HPair { n, mu });
                remaining -= 2 * n;
            }
        }
    }
    CanonicalBlockMultiset::new(kind, blocks).expect("sampled parameters are always valid")
}

/// Parses the oracle spec grammar:
///
/// ```text
/// linear:<matrix-file>
/// radial:<c>:<p>
/// shear:<vector-file>:<g-name>        g-name in {zero, sinq, osc}
/// compose:[spec,spec,...]
/// ```
///
/// File paths are resolved through `load_matrix` / `load_vector`, so the
/// caller decides the base directory. Paths may not contain `,`, `[`, `]`;
/// the shear path may not contain `:`.
pub fn parse_oracle_spec(
    text: &str,
    load_matrix: &dyn Fn(&str) -> Result<CMatrix>,
    load_vector: &dyn Fn(&str) -> Result<CVector>,
) -> Result<OracleSpec> {
    let text = text.trim();
    let bad = |reason: String| FormError::InvalidOracleSpec {
        spec: text.to_string(),
        reason,
    };
    if let Some(rest) = text.strip_prefix("linear:") {
        return Ok(OracleSpec::Linear(load_matrix(rest.trim())?));
    }
    if let Some(rest) = text.strip_prefix("radial:") {
        let mut it = rest.splitn(2, ':');
        let c = it.next().ok_or_else(|| bad("missing c".into()))?;
        let p = it.next().ok_or_else(|| bad("missing p".into()))?;
        let c: f64 = c.trim().parse().map_err(|e| bad(format!("bad c: {e}")))?;
        let p: f64 = p.trim().parse().map_err(|e| bad(format!("bad p: {e}")))?;
        return Ok(OracleSpec::Radial { c, p });
    }
    if let Some(rest) = text.strip_prefix("shear:") {
        let (path, gname) = rest
            .rsplit_once(':')
            .ok_or_else(|| bad("shear needs <vector-file>:<g-name>".into()))?;
        let g = GFunction::from_name(gname.trim())?;
        return Ok(OracleSpec::KernelShear { k: load_vector(path.trim())?, g });
    }
    if let Some(rest) = text.strip_prefix("compose:") {
        let rest = rest.trim();
        let inner = rest
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| bad("compose needs [spec,spec,...]".into()))?;
        let parts = split_top_level(inner);
        if parts.is_empty() {
            return Err(bad("compose needs at least one part".into()));
        }
        let specs = parts
            .into_iter()
            .map(|p| parse_oracle_spec(p, load_matrix, load_vector))
            .collect::<Result<Vec<_>>>()?;
        return Ok(OracleSpec::Compose(specs));
    }
    Err(bad("expected linear:|radial:|shear:|compose:".into()))
}

/// Renders a spec back into grammar form, writing referenced matrices and
/// vectors through the callbacks (which return the path to embed).
pub fn render_oracle_spec(
    spec: &OracleSpec,
    store_matrix: &mut dyn FnMut(&CMatrix) -> Result<String>,
    store_vector: &mut dyn FnMut(&CVector) -> Result<String>,
) -> Result<String> {
    Ok(match spec {
        OracleSpec::Linear(l) => format!("linear:{}", store_matrix(l)?),
        OracleSpec::Radial { c, p } => format!("radial:{c}:{p}"),
        OracleSpec::KernelShear { k, g } => {
            format!("shear:{}:{}", store_vector(k)?, g.name())
        }
        OracleSpec::Compose(parts) => {
            let rendered = parts
                .iter()
                .map(|p| render_oracle_spec(p, store_matrix, store_vector))
                .collect::<Result<Vec<_>>>()?;
            format!("compose:[{}]", rendered.join(","))
        }
    })
}

fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in text.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        parts.push(tail);
    }
    parts
}

/// The two-vertex example graph: a bilinear loop at vertex 1, a bilinear
/// edge 1—2, a sesquilinear edge 2→1, and a sesquilinear loop at vertex 2.
pub fn example_two_vertex_graph() -> MixedGraph {
    MixedGraph::new(
        2,
        vec![
            crate::forms::Edge { id: "alpha".into(), tail: 1, head: 1, kind: FormKind::Bilinear },
            crate::forms::Edge { id: "beta".into(), tail: 1, head: 2, kind: FormKind::Bilinear },
            crate::forms::Edge { id: "gamma".into(), tail: 2, head: 1, kind: FormKind::Sesquilinear },
            crate::forms::Edge { id: "delta".into(), tail: 2, head: 2, kind: FormKind::Sesquilinear },
        ],
    )
    .expect("static graph is valid")
}
