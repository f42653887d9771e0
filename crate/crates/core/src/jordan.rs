//! Jordan structure recovery through numerical rank sequences.
//!
//! Eigenvalues come from a complex Schur decomposition; Jordan block sizes
//! at an eigenvalue come from the Weyr sequence `rank((C - mu I)^k)`.
//! Defective eigenvalues of a perturbed matrix split into rings whose radius
//! grows like `noise^(1/k)`, far beyond any fixed clustering tolerance, so
//! clustering is escalated: starting from the caller's tolerance, clusters
//! are validated against their own rank sequences (a cluster of algebraic
//! multiplicity `m` must absorb exactly `m` dimensions, no more, no fewer)
//! and the tolerance grows by factors of ten until every cluster is
//! consistent. Inputs that never stabilise raise `IllConditioned` instead
//! of returning a structure that merely looks plausible.

use num_complex::Complex64;

use crate::error::{FormError, Result};
use crate::matrix::{largest_singular_value, rank_with_gap_at, CMatrix};

/// Eigenvalue cluster with its Jordan block sizes (descending).
#[derive(Debug, Clone)]
pub(crate) struct EigenCluster {
    pub mu: Complex64,
    pub sizes: Vec<usize>,
}

/// Assumed relative noise floor used to judge whether an eigenvalue ring is
/// explainable by a defective block of the recovered size.
const NOISE_FLOOR: f64 = 1e-12;
const SPREAD_FACTOR: f64 = 100.0;
const TAU_CEILING: f64 = 1e-2;

/// Jordan block sizes of `c` at the (exact) eigenvalue `mu`, from the rank
/// sequence of `(c - mu I)^k` at the given relative threshold. Stops once
/// the ranks stabilise. This is also the test-side oracle for validating
/// assembled canonical blocks.
pub fn jordan_sizes_at(c: &CMatrix, mu: Complex64, rank_rel_tol: f64) -> Result<Vec<usize>> {
    let n = c.nrows();
    debug_assert_eq!(n, c.ncols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let shifted = c - CMatrix::identity(n, n) * mu;
    let base = largest_singular_value(&shifted);
    if base == 0.0 {
        // the whole space is the eigenspace: n simple blocks
        return Ok(vec![1; n]);
    }
    let mut ranks = Vec::new();
    let mut power = CMatrix::identity(n, n);
    let mut prev = n;
    for k in 1..=n {
        power = &power * &shifted;
        let r = rank_with_gap_at(
            &power,
            rank_rel_tol * base.powi(k as i32),
            &format!("rank((C - mu I)^{k})"),
        )?;
        ranks.push(r);
        if r == prev {
            break;
        }
        prev = r;
    }
    Ok(sizes_from_ranks(n, &ranks))
}

/// Weyr sequence to block sizes: `w_k = r_{k-1} - r_k` counts blocks of size
/// at least `k`; blocks of size exactly `k` number `w_k - w_{k+1}`.
fn sizes_from_ranks(n: usize, ranks: &[usize]) -> Vec<usize> {
    let mut weyr = Vec::with_capacity(ranks.len());
    let mut prev = n;
    for &r in ranks {
        weyr.push(prev.saturating_sub(r));
        prev = r;
    }
    let mut sizes = Vec::new();
    for k in 0..weyr.len() {
        let next = if k + 1 < weyr.len() { weyr[k + 1] } else { 0 };
        for _ in 0..weyr[k].saturating_sub(next) {
            sizes.push(k + 1);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Eigenvalues of `c` via complex Schur decomposition.
pub(crate) fn eigenvalues(c: &CMatrix) -> Result<Vec<Complex64>> {
    let n = c.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = c
        .clone()
        .try_schur(1e-14, 200_000)
        .ok_or_else(|| FormError::IllConditioned {
            reason: "Schur iteration did not converge".into(),
        })?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

fn find(parent: &mut Vec<usize>, i: usize) -> usize {
    if parent[i] != i {
        let root = find(parent, parent[i]);
        parent[i] = root;
    }
    parent[i]
}

fn cluster_eigenvalues(eigs: &[Complex64], tau: f64) -> Vec<Vec<usize>> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = eigs[i].norm().max(eigs[j].norm()).max(1.0);
            if (eigs[i] - eigs[j]).norm() <= tau * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Validates one cluster against its rank sequence. Returns mean, block
/// sizes and spread when the cluster absorbs exactly its multiplicity;
/// `None` when the evidence is inconsistent at this clustering tolerance.
fn validate_cluster(
    c: &CMatrix,
    members: &[Complex64],
    rank_rel_tol: f64,
) -> Option<(Complex64, Vec<usize>, f64)> {
    let n = c.nrows();
    let m = members.len();
    let mu: Complex64 = members.iter().sum::<Complex64>() / Complex64::new(m as f64, 0.0);
    let spread = members.iter().map(|z| (z - mu).norm()).fold(0.0, f64::max);
    let shifted = c - CMatrix::identity(n, n) * mu;
    let base = largest_singular_value(&shifted);
    if base == 0.0 {
        return if m == n { Some((mu, vec![1; n], spread)) } else { None };
    }
    let k_max = (m + 1).min(n);
    let mut power = CMatrix::identity(n, n);
    let mut ranks = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        power = &power * &shifted;
        let threshold = rank_rel_tol * base.powi(k as i32);
        let r = match rank_with_gap_at(&power, threshold, "cluster rank sequence") {
            Ok(r) => r,
            Err(_) => return None, // ambiguous at this tolerance; caller escalates
        };
        if n - r > m {
            return None; // absorbs more than its multiplicity
        }
        ranks.push(r);
    }
    if n - ranks[m.min(ranks.len()) - 1] != m {
        return None; // never absorbs its full multiplicity
    }
    if k_max > m && n - ranks[k_max - 1] != m {
        return None; // keeps absorbing past its multiplicity
    }
    // ranks must be non-increasing for the Weyr counts to make sense
    if ranks.windows(2).any(|w| w[1] > w[0]) {
        return None;
    }
    let sizes = sizes_from_ranks(n, &ranks[..m.min(ranks.len())]);
    if sizes.iter().sum::<usize>() != m {
        return None;
    }
    Some((mu, sizes, spread))
}

/// Clusters the eigenvalues of `c` and recovers per-cluster Jordan sizes,
/// escalating the clustering tolerance until the picture is consistent.
pub(crate) fn cluster_jordan_structures(
    c: &CMatrix,
    param_tol: f64,
    rank_rel_tol: f64,
) -> Result<Vec<EigenCluster>> {
    let n = c.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eigs = eigenvalues(c)?;
    let mut tau = param_tol.max(1e-12);
    loop {
        let groups = cluster_eigenvalues(&eigs, tau);
        let mut clusters = Vec::with_capacity(groups.len());
        let mut consistent = true;
        for idx_group in &groups {
            let members: Vec<Complex64> = idx_group.iter().map(|&i| eigs[i]).collect();
            match validate_cluster(c, &members, rank_rel_tol) {
                Some((mu, sizes, spread)) => {
                    let k_big = sizes.first().copied().unwrap_or(1) as f64;
                    let allowed = param_tol.max(SPREAD_FACTOR * NOISE_FLOOR.powf(1.0 / k_big))
                        * mu.norm().max(1.0);
                    if spread > allowed {
                        consistent = false;
                        break;
                    }
                    clusters.push(EigenCluster { mu, sizes });
                }
                None => {
                    consistent = false;
                    break;
                }
            }
        }
        if consistent {
            return Ok(clusters);
        }
        if tau >= TAU_CEILING {
            return Err(FormError::IllConditioned {
                reason: format!(
                    "eigenvalue clustering did not stabilise up to tolerance {TAU_CEILING:.0e}"
                ),
            });
        }
        tau = (tau * 10.0).min(TAU_CEILING);
    }
}
