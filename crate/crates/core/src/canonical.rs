//! Canonical block structure of a single form under congruence and
//! *congruence.
//!
//! A square matrix, viewed as a bilinear form (`S^T M S` changes of basis)
//! or sesquilinear form (`S^T M conj(S)`), decomposes into a direct sum of
//! canonical blocks of three kinds:
//!
//! - `Singular(n)`: the nilpotent Jordan block `J_n(0)`;
//! - `Gamma(n, lambda)`: a nonsingular block whose cosquare is one Jordan
//!   block of size `n` at `(-1)^(n+1)` (bilinear, `lambda = 1`) or at
//!   `lambda * (-1)^(n+1)` with `|lambda| = 1` (sesquilinear);
//! - `HPair(n, mu)`: a `2n x 2n` block `[[0, I], [J_n(mu), 0]]` whose
//!   cosquare carries the eigenvalue pair `{mu, 1/mu}` (bilinear, with
//!   `mu` normalised under `mu <-> 1/mu`) or `{mu, 1/conj(mu)}` with
//!   `|mu| > 1` (sesquilinear).
//!
//! Concrete block matrices are never trusted as transcriptions: the defining
//! contract is the cosquare similarity law above, and the tests validate
//! every assembled block against it through rank sequences.
//!
//! Classification runs entirely off congruence invariants: the singular
//! block sizes from regularization and the Jordan structure of the cosquare
//! of the regular part. For bilinear forms this is a complete invariant of
//! congruence. For sesquilinear forms, blocks whose cosquare eigenvalue has
//! unit modulus additionally carry a sign (an inertia-like invariant: `[1]`
//! and `[-1]` share the cosquare `[1]` but are not *congruent); that sign is
//! not part of the block parameters here, so the sesquilinear decision
//! identifies forms up to that sign. See the crate README for the exact
//! contract.
//!
//! Arithmetic is double precision with tolerance-based rank and eigenvalue
//! decisions. Recovering Jordan structure is intrinsically unstable, so the
//! honest contract is a failure budget: decisions that fall inside an
//! ambiguity band raise [`FormError::IllConditioned`] rather than returning
//! a plausible-looking wrong answer.

use num_complex::Complex64;

use crate::error::{FormError, Result};
use crate::forms::{FormKind, TransformFamily};
use crate::jordan::{cluster_jordan_structures, EigenCluster};
use crate::matrix::{
    c, cr, check_finite, direct_sum, jordan_block, max_abs, null_space, rank_with_gap,
    require_invertible, solve_left, CMatrix, CVector, INVERTIBILITY_THRESHOLD, RANK_REL_TOL,
};
use crate::rng::{complex_normal, rng_from};

pub use crate::jordan::jordan_sizes_at as jordan_structure_at;

/// Band (relative to 1) inside which a modulus counts as exactly 1 when
/// normalising block parameters.
const UNIT_BAND: f64 = 1e-12;

/// One canonical block. Parameters are stored normalised; see
/// [`CanonicalBlockMultiset::new`].
#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalBlock {
    /// `J_n(0)`, size `n`.
    Singular { n: usize },
    /// Cosquare is a single `J_n` at `(-1)^(n+1)` scaled by `lambda`
    /// (`lambda = 1` for bilinear blocks, `|lambda| = 1` always).
    Gamma { n: usize, lambda: Complex64 },
    /// `[[0, I_n], [J_n(mu), 0]]`, total size `2n`.
    HPair { n: usize, mu: Complex64 },
}

impl CanonicalBlock {
    /// Dimension contributed to the direct sum (`2n` for an H pair).
    pub fn size(&self) -> usize {
        match self {
            CanonicalBlock::Singular { n } | CanonicalBlock::Gamma { n, .. } => *n,
            CanonicalBlock::HPair { n, .. } => 2 * n,
        }
    }

    fn sort_key(&self) -> (u8, usize, f64, f64) {
        match self {
            CanonicalBlock::Singular { n } => (0, *n, 0.0, 0.0),
            CanonicalBlock::Gamma { n, lambda } => (1, *n, lambda.re, lambda.im),
            CanonicalBlock::HPair { n, mu } => (2, *n, mu.re, mu.im),
        }
    }
}

/// Multiset of canonical blocks classifying one form of the given kind.
/// Blocks are kept in a canonical sorted order, so equal multisets compare
/// equal structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalBlockMultiset {
    kind: FormKind,
    blocks: Vec<CanonicalBlock>,
}

/// Normalises a bilinear H-pair parameter: representative of
/// `{mu, 1/mu}` with `|mu| >= 1`, and argument in `[0, pi]` when the
/// modulus is 1. Idempotent.
pub fn normalize_mu_bilinear(mu: Complex64) -> Complex64 {
    let r = mu.norm();
    if (r - 1.0).abs() <= UNIT_BAND {
        if mu.im < 0.0 {
            mu.conj()
        } else {
            mu
        }
    } else if r < 1.0 {
        mu.inv()
    } else {
        mu
    }
}

impl CanonicalBlockMultiset {
    /// Builds a multiset, normalising parameters and validating the block
    /// constraints:
    ///
    /// - `n >= 1` everywhere;
    /// - `Gamma`: bilinear blocks must carry `lambda = 1`; sesquilinear
    ///   `lambda` is projected onto the unit circle (it must be within 1e-6
    ///   of it);
    /// - `HPair`: `mu != 0`; bilinear `mu` is normalised under
    ///   `mu <-> 1/mu` and must avoid `(-1)^(n+1)`; sesquilinear `mu` must
    ///   have `|mu| > 1`.
    pub fn new(kind: FormKind, blocks: Vec<CanonicalBlock>) -> Result<Self> {
        let mut normalised = Vec::with_capacity(blocks.len());
        for b in blocks {
            let nb = match b {
                CanonicalBlock::Singular { n } => {
                    if n == 0 {
                        return Err(FormError::InvalidBlock {
                            reason: "singular block of size 0".into(),
                        });
                    }
                    CanonicalBlock::Singular { n }
                }
                CanonicalBlock::Gamma { n, lambda } => {
                    if n == 0 {
                        return Err(FormError::InvalidBlock {
                            reason: "gamma block of size 0".into(),
                        });
                    }
                    let lambda = match kind {
                        FormKind::Bilinear => {
                            if (lambda - cr(1.0)).norm() > 1e-9 {
                                return Err(FormError::InvalidBlock {
                                    reason: format!(
                                        "bilinear gamma block carries lambda = {lambda}, expected 1"
                                    ),
                                });
                            }
                            cr(1.0)
                        }
                        FormKind::Sesquilinear => {
                            let r = lambda.norm();
                            if (r - 1.0).abs() > 1e-6 {
                                return Err(FormError::InvalidBlock {
                                    reason: format!(
                                        "gamma parameter must be unimodular, |lambda| = {r}"
                                    ),
                                });
                            }
                            lambda / cr(r)
                        }
                    };
                    CanonicalBlock::Gamma { n, lambda }
                }
                CanonicalBlock::HPair { n, mu } => {
                    if n == 0 {
                        return Err(FormError::InvalidBlock {
                            reason: "h-pair block of size 0".into(),
                        });
                    }
                    if mu.norm() == 0.0 {
                        return Err(FormError::InvalidBlock {
                            reason: "h-pair parameter must be nonzero".into(),
                        });
                    }
                    let mu = match kind {
                        FormKind::Bilinear => {
                            let mu = normalize_mu_bilinear(mu);
                            let excluded = cr((-1.0f64).powi(n as i32 + 1));
                            if (mu - excluded).norm() <= 1e-9 {
                                return Err(FormError::InvalidBlock {
                                    reason: format!(
                                        "bilinear h-pair of half-size {n} may not have mu = {excluded}"
                                    ),
                                });
                            }
                            mu
                        }
                        FormKind::Sesquilinear => {
                            if mu.norm() <= 1.0 + UNIT_BAND {
                                return Err(FormError::InvalidBlock {
                                    reason: format!(
                                        "sesquilinear h-pair parameter must have |mu| > 1, got {}",
                                        mu.norm()
                                    ),
                                });
                            }
                            mu
                        }
                    };
                    CanonicalBlock::HPair { n, mu }
                }
            };
            normalised.push(nb);
        }
        normalised.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
        Ok(Self { kind, blocks: normalised })
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn blocks(&self) -> &[CanonicalBlock] {
        &self.blocks
    }

    pub fn total_size(&self) -> usize {
        self.blocks.iter().map(|b| b.size()).sum()
    }

    /// Multiset comparison with parameter tolerance: same kind, same counts
    /// per `(variant, n)` group, and parameters matched one-to-one within
    /// `param_tol * max(1, |p|)`.
    pub fn matches(&self, other: &CanonicalBlockMultiset, param_tol: f64) -> bool {
        if self.kind != other.kind || self.blocks.len() != other.blocks.len() {
            return false;
        }
        let mut used = vec![false; other.blocks.len()];
        'outer: for mine in &self.blocks {
            for (j, theirs) in other.blocks.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let ok = match (mine, theirs) {
                    (CanonicalBlock::Singular { n: a }, CanonicalBlock::Singular { n: b }) => {
                        a == b
                    }
                    (
                        CanonicalBlock::Gamma { n: a, lambda: la },
                        CanonicalBlock::Gamma { n: b, lambda: lb },
                    ) => a == b && (la - lb).norm() <= param_tol * la.norm().max(1.0),
                    (
                        CanonicalBlock::HPair { n: a, mu: ma },
                        CanonicalBlock::HPair { n: b, mu: mb },
                    ) => a == b && (ma - mb).norm() <= param_tol * ma.norm().max(1.0),
                    _ => false,
                };
                if ok {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

/// The nonsingular block with cosquare similar to `J_n((-1)^(n+1))`:
/// alternating signs on the anti-diagonal and the diagonal just above it.
fn gamma_matrix(n: usize) -> CMatrix {
    let mut g = CMatrix::zeros(n, n);
    for i in 1..=n {
        let sign = (-1.0f64).powi(i as i32 + 1);
        g[(i - 1, n - i)] = cr(sign);
        if i >= 2 {
            g[(i - 1, n + 1 - i)] = cr(-sign);
        }
    }
    g
}

fn h_pair_matrix(n: usize, mu: Complex64) -> CMatrix {
    let mut h = CMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, n), (n, n)).copy_from(&CMatrix::identity(n, n));
    h.view_mut((n, 0), (n, n)).copy_from(&jordan_block(n, mu));
    h
}

/// Direct sum of the concrete canonical block matrices, in the multiset's
/// canonical order.
pub fn assemble_canonical_matrix(multiset: &CanonicalBlockMultiset) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(0, 0);
    for block in multiset.blocks() {
        let m = match block {
            CanonicalBlock::Singular { n } => jordan_block(*n, cr(0.0)),
            CanonicalBlock::Gamma { n, lambda } => match multiset.kind() {
                FormKind::Bilinear => gamma_matrix(*n),
                FormKind::Sesquilinear => gamma_matrix(*n) * lambda.sqrt(),
            },
            CanonicalBlock::HPair { n, mu } => h_pair_matrix(*n, *mu),
        };
        out = direct_sum(&out, &m);
    }
    Ok(out)
}

/// Result of splitting a form into its regular part and singular blocks.
#[derive(Debug, Clone)]
pub struct Regularization {
    /// Nonsingular matrix congruent (resp. *congruent) to the regular part;
    /// empty when the form is entirely singular.
    pub regular: CMatrix,
    /// Sizes of the singular canonical blocks, descending.
    pub singular_sizes: Vec<usize>,
}

fn apply_congruence(m: &CMatrix, s: &CMatrix, kind: FormKind) -> CMatrix {
    match kind {
        FormKind::Bilinear => s.transpose() * m * s,
        FormKind::Sesquilinear => s.transpose() * m * s.map(|z| z.conj()),
    }
}

/// Splits `m` by congruence into a nonsingular regular part and singular
/// Jordan blocks `J_k(0)`, returning the regular part and the multiset of
/// singular sizes (a congruence invariant).
///
/// One peeling round splits off the size-1 blocks of the current matrix and
/// reduces the remainder so that every deeper singular block loses one
/// dimension; blocks of size `k` therefore surface at round `k`.
pub fn regularize(m: &CMatrix, kind: FormKind, rank_rel_tol: f64) -> Result<Regularization> {
    if m.nrows() != m.ncols() {
        return Err(FormError::DimensionMismatch {
            context: "regularize".into(),
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    check_finite(m, "regularize input")?;
    let mut current = m.clone();
    let mut sizes: Vec<usize> = Vec::new();
    let mut level = 1usize;
    loop {
        let n = current.nrows();
        if n == 0 {
            return Ok(Regularization { regular: current, singular_sizes: sorted_desc(sizes) });
        }
        let r = rank_with_gap(&current, rank_rel_tol, "regularize")?;
        if r == n {
            return Ok(Regularization { regular: current, singular_sizes: sorted_desc(sizes) });
        }

        // Congruence with V (conj(V) for sesquilinear) zeroes the last
        // n - r columns; the matrix becomes [[B, 0], [C, 0]].
        let svd = current.clone().svd(true, true);
        let v_t = svd.v_t.clone().expect("svd with v_t");
        let v = v_t.adjoint();
        let s1 = match kind {
            FormKind::Bilinear => v,
            FormKind::Sesquilinear => v.map(|z| z.conj()),
        };
        let m1 = apply_congruence(&current, &s1, kind);
        let b = m1.view((0, 0), (r, r)).into_owned();
        let c_block = m1.view((r, 0), (n - r, r)).into_owned();

        // Row-compress C with a unitary factor.
        let d = if c_block.nrows() == 0 || c_block.ncols() == 0 {
            0
        } else {
            rank_with_gap(&c_block, rank_rel_tol, "regularize coupling block")?
        };
        let p = n - r - d;
        for _ in 0..p {
            sizes.push(level);
        }

        if d == 0 {
            // no coupling: current = B + zero rows/cols; B is nonsingular
            // because the first r columns of m1 have full column rank
            current = b;
            level += 1;
            // B nonsingular terminates on the next pass
            continue;
        }

        let c_svd = c_block.clone().svd(true, true);
        let u_c = {
            // recover full U of the compressed C from its SVD factors
            let ut = c_svd.u.clone().expect("svd with u");
            // nalgebra returns the thin U; extend to a square unitary by
            // appending an orthonormal completion
            complete_unitary(&ut)
        };
        let t = u_c.map(|z| z.conj());
        let mut s2 = CMatrix::identity(n, n);
        s2.view_mut((r, r), (n - r, n - r)).copy_from(&t);
        let m2 = apply_congruence(&m1, &s2, kind);
        let c1 = m2.view((r, 0), (d, r)).into_owned();

        // Column-reduce C1 to [0 | I_d] inside the first r coordinates.
        let g_right = {
            let ns = null_space(&c1, rank_rel_tol);
            if ns.ncols() != r - d {
                return Err(FormError::IllConditioned {
                    reason: format!(
                        "regularize: coupling null space has dimension {}, expected {}",
                        ns.ncols(),
                        r - d
                    ),
                });
            }
            // pseudo-inverse columns: C1 * P = I_d
            let c1_adj = c1.adjoint();
            let gram = &c1 * &c1_adj;
            let pinv_cols = solve_left(&gram, &CMatrix::identity(d, d), "regularize pinv")?;
            let p_cols = &c1_adj * pinv_cols;
            let mut g = CMatrix::zeros(r, r);
            g.view_mut((0, 0), (r, r - d)).copy_from(&ns);
            g.view_mut((0, r - d), (r, d)).copy_from(&p_cols);
            g
        };
        let g = match kind {
            FormKind::Bilinear => g_right.clone(),
            FormKind::Sesquilinear => g_right.map(|z| z.conj()),
        };
        require_invertible(&g, INVERTIBILITY_THRESHOLD, "regularize basis change")?;
        let mut s3 = CMatrix::identity(n, n);
        s3.view_mut((0, 0), (r, r)).copy_from(&g);
        let m3 = apply_congruence(&m2, &s3, kind);

        // Kill the B-blocks over the identity coupling: with the row block
        // [0, I_d] at rows r..r+d, adding Z^T / Y^T times that row block to
        // the first two row blocks clears columns r-d..r of B; the mirrored
        // column operations only touch the zero columns.
        let b12 = m3.view((0, r - d), (r - d, d)).into_owned();
        let b22 = m3.view((r - d, r - d), (d, d)).into_owned();
        let mut s4 = CMatrix::identity(n, n);
        s4.view_mut((r, 0), (d, r - d)).copy_from(&(-b12.transpose()));
        s4.view_mut((r, r - d), (d, d)).copy_from(&(-b22.transpose()));
        let m4 = apply_congruence(&m3, &s4, kind);

        current = m4.view((0, 0), (r, r)).into_owned();
        level += 1;
    }
}

fn sorted_desc(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Extends a thin matrix with orthonormal columns to a square unitary.
fn complete_unitary(thin: &CMatrix) -> CMatrix {
    let n = thin.nrows();
    let k = thin.ncols();
    if k == n {
        return thin.clone();
    }
    let mut cols: Vec<CVector> = (0..k).map(|j| thin.column(j).into_owned()).collect();
    let mut rng = rng_from(0x0c0, n as u64);
    while cols.len() < n {
        let mut w = crate::rng::random_complex_vector(&mut rng, n);
        for c in &cols {
            let coeff = c.dotc(&w);
            w -= c * coeff;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            w /= cr(norm);
            cols.push(w);
        }
    }
    CMatrix::from_columns(&cols)
}

/// Cosquare `M^{-T} M` (bilinear) or `M^{-*} M` (sesquilinear) of a
/// nonsingular matrix.
pub fn cosquare(m: &CMatrix, kind: FormKind) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(FormError::DimensionMismatch {
            context: "cosquare".into(),
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    require_invertible(m, INVERTIBILITY_THRESHOLD, "cosquare input")?;
    if m.nrows() == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let lhs = match kind {
        FormKind::Bilinear => m.transpose(),
        FormKind::Sesquilinear => m.adjoint(),
    };
    solve_left(&lhs, m, "cosquare")
}

/// Computes the canonical block multiset of `m` under congruence
/// (bilinear) or *congruence (sesquilinear), with parameter tolerance
/// `param_tol` and the default rank threshold.
pub fn canonical_blocks(
    m: &CMatrix,
    kind: FormKind,
    param_tol: f64,
) -> Result<CanonicalBlockMultiset> {
    canonical_blocks_with(m, kind, param_tol, RANK_REL_TOL)
}

pub fn canonical_blocks_with(
    m: &CMatrix,
    kind: FormKind,
    param_tol: f64,
    rank_rel_tol: f64,
) -> Result<CanonicalBlockMultiset> {
    if m.nrows() != m.ncols() {
        return Err(FormError::DimensionMismatch {
            context: "canonical_blocks".into(),
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    check_finite(m, "canonical_blocks input")?;
    let reg = regularize(m, kind, rank_rel_tol)?;
    let mut blocks: Vec<CanonicalBlock> = reg
        .singular_sizes
        .iter()
        .map(|&n| CanonicalBlock::Singular { n })
        .collect();

    if reg.regular.nrows() > 0 {
        let cosq = cosquare(&reg.regular, kind)?;
        let clusters = cluster_jordan_structures(&cosq, param_tol, rank_rel_tol)?;
        let nonsingular = match kind {
            FormKind::Bilinear => pair_bilinear(&clusters, param_tol)?,
            FormKind::Sesquilinear => pair_sesquilinear(&clusters, param_tol)?,
        };
        blocks.extend(nonsingular);
    }

    let ms = CanonicalBlockMultiset::new(kind, blocks)?;
    if ms.total_size() != m.nrows() {
        return Err(FormError::IllConditioned {
            reason: format!(
                "recovered blocks cover dimension {}, input has {}",
                ms.total_size(),
                m.nrows()
            ),
        });
    }
    Ok(ms)
}

/// Maps cosquare eigenstructure to blocks for bilinear forms.
///
/// Eigenvalue `(-1)^(n+1)` with a Jordan block of size `n` is a Gamma
/// block; the opposite-parity self-inverse eigenvalue must pair its blocks
/// two by two into H pairs; everything else pairs across `mu <-> 1/mu`.
fn pair_bilinear(clusters: &[EigenCluster], param_tol: f64) -> Result<Vec<CanonicalBlock>> {
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = (-clusters[a].mu.norm(), clusters[a].mu.re, clusters[a].mu.im);
        let kb = (-clusters[b].mu.norm(), clusters[b].mu.re, clusters[b].mu.im);
        ka.partial_cmp(&kb).unwrap()
    });
    let mut consumed = vec![false; clusters.len()];
    let mut blocks = Vec::new();
    for &i in &order {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        let cl = &clusters[i];
        let mu = cl.mu;
        if (mu - cr(1.0)).norm() <= param_tol {
            blocks.extend(self_paired_bilinear(&cl.sizes, 1.0)?);
        } else if (mu + cr(1.0)).norm() <= param_tol {
            blocks.extend(self_paired_bilinear(&cl.sizes, -1.0)?);
        } else {
            let partner_target = mu.inv();
            let j = clusters.iter().enumerate().position(|(j, other)| {
                !consumed[j]
                    && (other.mu - partner_target).norm()
                        <= param_tol * partner_target.norm().max(1.0)
            });
            let Some(j) = j else {
                return Err(FormError::PairingFailure {
                    reason: format!("no partner for cosquare eigenvalue {mu} (expected {partner_target})"),
                });
            };
            consumed[j] = true;
            let mut a = cl.sizes.clone();
            let mut b = clusters[j].sizes.clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(FormError::PairingFailure {
                    reason: format!(
                        "Jordan sizes at {mu} and {} differ: {:?} vs {:?}",
                        clusters[j].mu, a, b
                    ),
                });
            }
            let representative = if mu.norm() >= clusters[j].mu.norm() {
                mu
            } else {
                clusters[j].mu
            };
            for &n in &a {
                blocks.push(CanonicalBlock::HPair { n, mu: normalize_mu_bilinear(representative) });
            }
        }
    }
    Ok(blocks)
}

/// Blocks at a self-inverse eigenvalue `epsilon = ±1`: sizes of matching
/// parity become Gamma blocks, the rest must pair up into H pairs.
fn self_paired_bilinear(sizes: &[usize], epsilon: f64) -> Result<Vec<CanonicalBlock>> {
    let mut blocks = Vec::new();
    let mut odd_pool: std::collections::BTreeMap<usize, usize> = Default::default();
    for &n in sizes {
        let gamma_eig = (-1.0f64).powi(n as i32 + 1);
        if (gamma_eig - epsilon).abs() < 0.5 {
            blocks.push(CanonicalBlock::Gamma { n, lambda: cr(1.0) });
        } else {
            *odd_pool.entry(n).or_insert(0) += 1;
        }
    }
    for (n, count) in odd_pool {
        if count % 2 != 0 {
            return Err(FormError::PairingFailure {
                reason: format!(
                    "eigenvalue {epsilon} has an odd number ({count}) of Jordan blocks of size {n} \
                     with mismatched parity"
                ),
            });
        }
        for _ in 0..count / 2 {
            blocks.push(CanonicalBlock::HPair { n, mu: cr(epsilon) });
        }
    }
    Ok(blocks)
}

/// Maps cosquare eigenstructure to blocks for sesquilinear forms: unit
/// eigenvalues are Gamma blocks with `lambda = mu * (-1)^(n+1)`, the rest
/// pair across `mu <-> 1/conj(mu)` with the outside-the-circle member as
/// the stored parameter.
fn pair_sesquilinear(clusters: &[EigenCluster], param_tol: f64) -> Result<Vec<CanonicalBlock>> {
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = (-clusters[a].mu.norm(), clusters[a].mu.re, clusters[a].mu.im);
        let kb = (-clusters[b].mu.norm(), clusters[b].mu.re, clusters[b].mu.im);
        ka.partial_cmp(&kb).unwrap()
    });
    let mut consumed = vec![false; clusters.len()];
    let mut blocks = Vec::new();
    for &i in &order {
        if consumed[i] {
            continue;
        }
        let cl = &clusters[i];
        let mu = cl.mu;
        let r = mu.norm();
        if (r - 1.0).abs() <= param_tol {
            consumed[i] = true;
            for &n in &cl.sizes {
                let lambda = mu * cr((-1.0f64).powi(n as i32 + 1));
                blocks.push(CanonicalBlock::Gamma { n, lambda: lambda / cr(lambda.norm()) });
            }
        } else if r > 1.0 {
            consumed[i] = true;
            let partner_target = mu.conj().inv();
            let j = clusters.iter().enumerate().position(|(j, other)| {
                !consumed[j]
                    && (other.mu - partner_target).norm()
                        <= param_tol * partner_target.norm().max(1.0)
            });
            let Some(j) = j else {
                return Err(FormError::PairingFailure {
                    reason: format!(
                        "no partner for cosquare eigenvalue {mu} (expected {partner_target})"
                    ),
                });
            };
            consumed[j] = true;
            let mut a = cl.sizes.clone();
            let mut b = clusters[j].sizes.clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(FormError::PairingFailure {
                    reason: format!(
                        "Jordan sizes at {mu} and {} differ: {:?} vs {:?}",
                        clusters[j].mu, a, b
                    ),
                });
            }
            for &n in &a {
                blocks.push(CanonicalBlock::HPair { n, mu });
            }
        }
        // |mu| < 1 clusters are consumed by their outside partner
    }
    if let Some(i) = (0..clusters.len()).find(|&i| !consumed[i]) {
        return Err(FormError::PairingFailure {
            reason: format!(
                "cosquare eigenvalue {} inside the unit circle has no partner outside",
                clusters[i].mu
            ),
        });
    }
    Ok(blocks)
}

#[derive(Debug)]
pub struct CongruenceDecision {
    pub equivalent: bool,
    /// Witnessing transform with `S^T M2 S^{(conj)} = M1`, when the search
    /// succeeds (best effort, small dimensions only).
    pub certificate: Option<TransformFamily>,
}

#[derive(Debug, Clone)]
pub struct DecisionOptions {
    pub certificate_max_dim: usize,
    pub certificate_restarts: usize,
    pub rank_rel_tol: f64,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        Self {
            certificate_max_dim: 4,
            certificate_restarts: 1000,
            rank_rel_tol: RANK_REL_TOL,
        }
    }
}

/// Decides congruence (resp. *congruence) of two square matrices by
/// comparing canonical block multisets at parameter tolerance `tol`.
pub fn congruent_decision(
    m1: &CMatrix,
    m2: &CMatrix,
    kind: FormKind,
    tol: f64,
) -> Result<CongruenceDecision> {
    congruent_decision_with(m1, m2, kind, tol, &DecisionOptions::default())
}

pub fn congruent_decision_with(
    m1: &CMatrix,
    m2: &CMatrix,
    kind: FormKind,
    tol: f64,
    opts: &DecisionOptions,
) -> Result<CongruenceDecision> {
    if m1.shape() != m2.shape() {
        return Ok(CongruenceDecision { equivalent: false, certificate: None });
    }
    let b1 = canonical_blocks_with(m1, kind, tol, opts.rank_rel_tol)?;
    let b2 = canonical_blocks_with(m2, kind, tol, opts.rank_rel_tol)?;
    let equivalent = b1.matches(&b2, tol);
    let certificate = if equivalent && m1.nrows() <= opts.certificate_max_dim && m1.nrows() > 0 {
        certificate_search(m1, m2, kind, opts.certificate_restarts)
            .map(|s| TransformFamily::new(vec![s]).ok())
            .unwrap_or(None)
    } else {
        None
    };
    Ok(CongruenceDecision { equivalent, certificate })
}

/// Gauss-Newton search for `S` with `S^T M2 S^{(conj)} = M1`, randomly
/// restarted. Returns only verified certificates.
fn certificate_search(
    m1: &CMatrix,
    m2: &CMatrix,
    kind: FormKind,
    restarts: usize,
) -> Option<CMatrix> {
    let n = m1.nrows();
    let scale = max_abs(m1).max(1.0);
    for restart in 0..restarts {
        let mut rng = rng_from(0xce27, restart as u64);
        let mut s = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng));
        let mut converged = false;
        for _ in 0..40 {
            let res = residual(&s, m1, m2, kind);
            if max_abs(&res) <= 1e-11 * scale {
                converged = true;
                break;
            }
            let Some(step) = gauss_newton_step(&s, &res, m2, kind) else {
                break;
            };
            s += step;
        }
        if converged {
            let res = residual(&s, m1, m2, kind);
            if max_abs(&res) <= 1e-8 * scale
                && crate::matrix::is_invertible(&s, INVERTIBILITY_THRESHOLD)
            {
                return Some(s);
            }
        }
    }
    None
}

fn residual(s: &CMatrix, m1: &CMatrix, m2: &CMatrix, kind: FormKind) -> CMatrix {
    apply_congruence(m2, s, kind) - m1
}

/// One Gauss-Newton step on the real parametrisation of `S`.
fn gauss_newton_step(s: &CMatrix, res: &CMatrix, m2: &CMatrix, kind: FormKind) -> Option<CMatrix> {
    let n = s.nrows();
    let params = 2 * n * n;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(params, params);
    let mut rhs = nalgebra::DVector::<f64>::zeros(params);
    for (idx, z) in res.iter().enumerate() {
        rhs[2 * idx] = -z.re;
        rhs[2 * idx + 1] = -z.im;
    }
    for p in 0..params {
        let (entry, is_im) = (p / 2, p % 2 == 1);
        let mut ds = CMatrix::zeros(n, n);
        let unit = if is_im { c(0.0, 1.0) } else { cr(1.0) };
        ds[(entry % n, entry / n)] = unit; // column-major to match iter()
        let dres = match kind {
            FormKind::Bilinear => ds.transpose() * m2 * s + s.transpose() * m2 * &ds,
            FormKind::Sesquilinear => {
                ds.transpose() * m2 * s.map(|z| z.conj())
                    + s.transpose() * m2 * ds.map(|z| z.conj())
            }
        };
        for (idx, z) in dres.iter().enumerate() {
            jac[(2 * idx, p)] = z.re;
            jac[(2 * idx + 1, p)] = z.im;
        }
    }
    // damped normal equations
    let jt = jac.transpose();
    let mut a = &jt * &jac;
    for i in 0..params {
        a[(i, i)] += 1e-10;
    }
    let b = &jt * rhs;
    let delta = a.lu().solve(&b)?;
    let mut step = CMatrix::zeros(n, n);
    for entry in 0..n * n {
        step[(entry % n, entry / n)] = c(delta[2 * entry], delta[2 * entry + 1]);
    }
    Some(step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_invertible;
    use crate::matrix::RANK_REL_TOL;

    fn blocks(kind: FormKind, list: Vec<CanonicalBlock>) -> CanonicalBlockMultiset {
        CanonicalBlockMultiset::new(kind, list).unwrap()
    }

    #[test]
    fn cosquare_examples() {
        // identity
        let id = CMatrix::identity(2, 2);
        let cs = cosquare(&id, FormKind::Bilinear).unwrap();
        assert!(max_abs(&(&cs - &id)) < 1e-14);

        // M = [[0,1],[2,0]] bilinear: M^{-T} M = [[2,0],[0,1/2]]
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(2.0), cr(0.0)]);
        let cs = cosquare(&m, FormKind::Bilinear).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[cr(2.0), cr(0.0), cr(0.0), cr(0.5)]);
        assert!(max_abs(&(&cs - &expected)) < 1e-14);

        // M = [[i]] sesquilinear: M^{-*} M = (conj(i))^{-1} * i = (-i)^{-1} i = -1
        let m = CMatrix::from_row_slice(1, 1, &[c(0.0, 1.0)]);
        let cs = cosquare(&m, FormKind::Sesquilinear).unwrap();
        assert!((cs[(0, 0)] - cr(-1.0)).norm() < 1e-14);

        // singular input is an error
        let err = cosquare(&CMatrix::zeros(2, 2), FormKind::Bilinear).unwrap_err();
        assert!(matches!(err, FormError::SingularMatrix { .. }));
    }

    #[test]
    fn regularize_trivial_cases() {
        let m = random_invertible(3, 10.0, 5);
        let reg = regularize(&m, FormKind::Bilinear, RANK_REL_TOL).unwrap();
        assert!(reg.singular_sizes.is_empty());
        assert_eq!(reg.regular.nrows(), 3);

        let z = CMatrix::zeros(4, 4);
        let reg = regularize(&z, FormKind::Bilinear, RANK_REL_TOL).unwrap();
        assert_eq!(reg.regular.nrows(), 0);
        assert_eq!(reg.singular_sizes, vec![1, 1, 1, 1]);
    }

    #[test]
    fn regularize_single_j2_block() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        for kind in [FormKind::Bilinear, FormKind::Sesquilinear] {
            let reg = regularize(&m, kind, RANK_REL_TOL).unwrap();
            assert_eq!(reg.singular_sizes, vec![2], "kind {kind:?}");
            assert_eq!(reg.regular.nrows(), 0);
        }
    }

    #[test]
    fn regularize_mixed_sum_under_congruence() {
        // J_3(0) + J_1(0) + regular 2x2, shuffled by a congruence
        let m0 = direct_sum(
            &direct_sum(&jordan_block(3, cr(0.0)), &CMatrix::zeros(1, 1)),
            &CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(2.0), cr(0.0)]),
        );
        for kind in [FormKind::Bilinear, FormKind::Sesquilinear] {
            let s = random_invertible(6, 30.0, 77);
            let m = apply_congruence(&m0, &s, kind);
            let reg = regularize(&m, kind, RANK_REL_TOL).unwrap();
            assert_eq!(reg.singular_sizes, vec![3, 1], "kind {kind:?}");
            assert_eq!(reg.regular.nrows(), 2);
            // regular part stays congruent to the original regular summand:
            // cosquare eigenvalues {2, 1/2}
            let cs = cosquare(&reg.regular, kind).unwrap();
            let mut eigs = crate::jordan::eigenvalues(&cs).unwrap();
            eigs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
            assert!((eigs[0] - cr(2.0)).norm() < 1e-6, "kind {kind:?} eigs {eigs:?}");
            assert!((eigs[1] - cr(0.5)).norm() < 1e-6);
        }
    }

    #[test]
    fn gamma_block_cosquare_law() {
        for n in 1..=6 {
            let g = gamma_matrix(n);
            let cs = cosquare(&g, FormKind::Bilinear).unwrap();
            let eps = cr((-1.0f64).powi(n as i32 + 1));
            let sizes = jordan_structure_at(&cs, eps, RANK_REL_TOL).unwrap();
            assert_eq!(sizes, vec![n], "gamma_{n}");
        }
    }

    #[test]
    fn canonical_blocks_examples() {
        // [0] -> one singular block
        let ms = canonical_blocks(&CMatrix::zeros(1, 1), FormKind::Bilinear, 1e-6).unwrap();
        assert_eq!(ms.blocks(), &[CanonicalBlock::Singular { n: 1 }]);

        // [1] bilinear -> Gamma(1)
        let ms = canonical_blocks(&CMatrix::identity(1, 1), FormKind::Bilinear, 1e-6).unwrap();
        assert_eq!(ms.blocks(), &[CanonicalBlock::Gamma { n: 1, lambda: cr(1.0) }]);

        // diag(2, 5) bilinear -> two Gamma(1); any nonsingular symmetric
        // form is congruent to the identity
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(2.0), cr(5.0)]));
        let ms = canonical_blocks(&m, FormKind::Bilinear, 1e-6).unwrap();
        assert_eq!(
            ms.blocks(),
            &[
                CanonicalBlock::Gamma { n: 1, lambda: cr(1.0) },
                CanonicalBlock::Gamma { n: 1, lambda: cr(1.0) }
            ]
        );

        // [[0,1],[2,0]] bilinear -> HPair(1, 2)
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(2.0), cr(0.0)]);
        let ms = canonical_blocks(&m, FormKind::Bilinear, 1e-6).unwrap();
        assert_eq!(ms.blocks(), &[CanonicalBlock::HPair { n: 1, mu: cr(2.0) }]);
    }

    #[test]
    fn assemble_examples() {
        let ms = blocks(FormKind::Bilinear, vec![CanonicalBlock::Singular { n: 1 }]);
        assert_eq!(assemble_canonical_matrix(&ms).unwrap(), CMatrix::zeros(1, 1));

        let ms = blocks(
            FormKind::Bilinear,
            vec![CanonicalBlock::Gamma { n: 1, lambda: cr(1.0) }],
        );
        assert_eq!(assemble_canonical_matrix(&ms).unwrap(), CMatrix::identity(1, 1));

        // HPair(1, 3): cosquare eigenvalues {3, 1/3}
        let ms = blocks(FormKind::Bilinear, vec![CanonicalBlock::HPair { n: 1, mu: cr(3.0) }]);
        let m = assemble_canonical_matrix(&ms).unwrap();
        let cs = cosquare(&m, FormKind::Bilinear).unwrap();
        let mut eigs = crate::jordan::eigenvalues(&cs).unwrap();
        eigs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        assert!((eigs[0] - cr(3.0)).norm() < 1e-10);
        assert!((eigs[1] - cr(1.0 / 3.0)).norm() < 1e-10);
    }

    #[test]
    fn invalid_blocks_are_rejected() {
        // bilinear HPair with mu = (-1)^(n+1)
        let err = CanonicalBlockMultiset::new(
            FormKind::Bilinear,
            vec![CanonicalBlock::HPair { n: 1, mu: cr(1.0) }],
        )
        .unwrap_err();
        assert!(matches!(err, FormError::InvalidBlock { .. }));

        // sesquilinear HPair needs |mu| > 1
        let err = CanonicalBlockMultiset::new(
            FormKind::Sesquilinear,
            vec![CanonicalBlock::HPair { n: 1, mu: c(0.3, 0.2) }],
        )
        .unwrap_err();
        assert!(matches!(err, FormError::InvalidBlock { .. }));

        // zero mu
        let err = CanonicalBlockMultiset::new(
            FormKind::Bilinear,
            vec![CanonicalBlock::HPair { n: 2, mu: cr(0.0) }],
        )
        .unwrap_err();
        assert!(matches!(err, FormError::InvalidBlock { .. }));
    }

    #[test]
    fn mu_normalization_idempotent_and_inversion_stable() {
        for mu in [c(3.0, 1.0), c(0.2, -0.1), c(0.6, 0.8), c(-0.6, -0.8), cr(-2.0)] {
            let once = normalize_mu_bilinear(mu);
            let twice = normalize_mu_bilinear(once);
            assert_eq!(once, twice, "mu {mu}");
            let via_inv = normalize_mu_bilinear(mu.inv());
            assert!(
                (once - via_inv).norm() <= 1e-12 * once.norm().max(1.0),
                "mu {mu}: {once} vs {via_inv}"
            );
        }
    }

    #[test]
    fn hpair_mu_and_inverse_mu_canonicalize_identically() {
        let mu = c(2.0, 1.0);
        let a = blocks(FormKind::Bilinear, vec![CanonicalBlock::HPair { n: 1, mu }]);
        let b = blocks(FormKind::Bilinear, vec![CanonicalBlock::HPair { n: 1, mu: mu.inv() }]);
        let ma = assemble_canonical_matrix(&a).unwrap();
        let mb = assemble_canonical_matrix(&b).unwrap();
        let ca = canonical_blocks(&ma, FormKind::Bilinear, 1e-6).unwrap();
        let cb = canonical_blocks(&mb, FormKind::Bilinear, 1e-6).unwrap();
        assert!(ca.matches(&cb, 1e-6));
    }

    #[test]
    fn decision_examples() {
        // (M, S^T M S) equivalent
        let mut rng = rng_from(41, 0);
        let m = CMatrix::from_fn(3, 3, |_, _| complex_normal(&mut rng));
        let s = random_invertible(3, 10.0, 8);
        let m2 = apply_congruence(&m, &s, FormKind::Bilinear);
        let d = congruent_decision_with(
            &m,
            &m2,
            FormKind::Bilinear,
            1e-6,
            &DecisionOptions { certificate_restarts: 0, ..Default::default() },
        )
        .unwrap();
        assert!(d.equivalent);

        // ([1], [0]) not equivalent
        let d = congruent_decision(&CMatrix::identity(1, 1), &CMatrix::zeros(1, 1), FormKind::Bilinear, 1e-6)
            .unwrap();
        assert!(!d.equivalent);

        // diag(1,1) vs [[0,1],[1,0]] bilinear: both two Gamma(1)
        let sym = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let d = congruent_decision_with(
            &CMatrix::identity(2, 2),
            &sym,
            FormKind::Bilinear,
            1e-6,
            &DecisionOptions { certificate_restarts: 50, ..Default::default() },
        )
        .unwrap();
        assert!(d.equivalent);
        if let Some(cert) = d.certificate {
            let s = &cert.matrices()[0];
            let recon = apply_congruence(&sym, s, FormKind::Bilinear);
            assert!(max_abs(&(recon - CMatrix::identity(2, 2))) < 1e-7);
        }

        // different sizes trivially inequivalent
        let d = congruent_decision(&CMatrix::identity(2, 2), &CMatrix::identity(3, 3), FormKind::Bilinear, 1e-6)
            .unwrap();
        assert!(!d.equivalent);
    }
}
