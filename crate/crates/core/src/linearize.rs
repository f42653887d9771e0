//! Turning homeomorphisms into linear bijections.
//!
//! The central algorithm, [`extract_basis_pair`], takes a black-box
//! homeomorphism `phi` of `C^n` (forward and inverse callables) and produces
//! a basis `u_1, ..., u_n` whose image `v_k = phi(u_k)` is again a basis.
//! It proceeds by induction: extend the accepted `u`-list with a candidate
//! that keeps the `u`-side independent; if the image breaks independence on
//! the `v`-side, nudge the image by `a * w` along a direction `w` orthogonal
//! to the accepted `v`-span and pull back through the inverse, shrinking
//! `a` until both sides pass the numerical independence test. Continuity
//! guarantees a small enough `a` works for an exact homeomorphism; when the
//! schedule runs out the algorithm reports exhaustion instead of returning
//! a bad basis.
//!
//! [`linearize_topological_isomorphism`] runs the extraction per vertex and
//! assembles the family `S_i = V_i * U_i^{-1}`, the unique linear map with
//! `S_i u_k = v_k`, then verifies the transformation law and reports the
//! residuals.

use num_complex::Complex64;

use crate::error::{FormError, Result};
use crate::forms::{verify_linear_isomorphism, FormRepresentation, TransformFamily, VerificationReport};
use crate::matrix::{smallest_singular_value, solve_right, CMatrix, CVector};
use crate::rng::{random_unit_vector, rng_from, subseed};

/// Black-box continuous bijection of `C^n` with an inverse callable.
///
/// The round-trip property `inverse(forward(x)) ~ x` is not assumed: it is
/// checked by [`oracle_self_test`], which [`extract_basis_pair`] runs before
/// trusting the oracle.
pub struct HomeomorphismOracle {
    dim: usize,
    forward: Box<dyn Fn(&CVector) -> CVector + Send + Sync>,
    inverse: Box<dyn Fn(&CVector) -> CVector + Send + Sync>,
}

impl HomeomorphismOracle {
    pub fn new(
        dim: usize,
        forward: Box<dyn Fn(&CVector) -> CVector + Send + Sync>,
        inverse: Box<dyn Fn(&CVector) -> CVector + Send + Sync>,
    ) -> Self {
        Self { dim, forward, inverse }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            forward: Box::new(|x: &CVector| x.clone()),
            inverse: Box::new(|x: &CVector| x.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self, x: &CVector) -> CVector {
        debug_assert_eq!(x.len(), self.dim);
        (self.forward)(x)
    }

    pub fn inverse(&self, x: &CVector) -> CVector {
        debug_assert_eq!(x.len(), self.dim);
        (self.inverse)(x)
    }
}

impl std::fmt::Debug for HomeomorphismOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HomeomorphismOracle").field("dim", &self.dim).finish()
    }
}

/// One oracle per vertex of a mixed graph.
pub struct TopologicalIsomorphismWitness {
    oracles: Vec<HomeomorphismOracle>,
}

impl TopologicalIsomorphismWitness {
    pub fn new(oracles: Vec<HomeomorphismOracle>) -> Self {
        Self { oracles }
    }

    pub fn oracles(&self) -> &[HomeomorphismOracle] {
        &self.oracles
    }

    pub fn len(&self) -> usize {
        self.oracles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oracles.is_empty()
    }
}

/// Tunables of the extraction algorithm. `max_candidates = None` means
/// `n + 50` candidates per induction step.
#[derive(Debug, Clone)]
pub struct LinearizeConfig {
    /// Relative smallest-singular-value threshold for independence tests.
    pub basis_rank_threshold: f64,
    /// Verification tolerance for the assembled family.
    pub residual_tol: f64,
    /// Candidate budget per induction step (`None` = dimension + 50).
    pub max_candidates: Option<usize>,
    /// Number of halvings in the perturbation magnitude schedule.
    pub halvings: usize,
    /// Tolerance of the oracle round-trip self-test.
    pub oracle_roundtrip_tol: f64,
}

impl Default for LinearizeConfig {
    fn default() -> Self {
        Self {
            basis_rank_threshold: 1e-8,
            residual_tol: 1e-8,
            max_candidates: None,
            halvings: 60,
            oracle_roundtrip_tol: 1e-8,
        }
    }
}

const SELF_TEST_TRIALS: usize = 24;

/// Basis pair returned by the extraction: columns of `v` are the oracle
/// images of the columns of `u`, stored exactly as evaluated.
#[derive(Debug, Clone)]
pub struct BasisPair {
    u: CMatrix,
    v: CMatrix,
}

impl BasisPair {
    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }
}

/// Counters exposed for tests and diagnostics.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ExtractTrace {
    pub candidates_tried: usize,
    /// Number of times the perturbation branch was entered.
    pub perturbation_steps: usize,
    /// Number of accepted vectors that came out of the perturbation branch.
    pub accepted_via_perturbation: usize,
    pub min_sigma_u: f64,
    pub min_sigma_v: f64,
}

#[derive(Debug)]
pub struct ExtractOutcome {
    pub basis: BasisPair,
    pub trace: ExtractTrace,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SelfTestReport {
    pub ok: bool,
    pub max_roundtrip_error: f64,
    pub trials: usize,
}

/// Samples seeded random points and checks both round-trip directions
/// against `1e-8 * max(1, norm)`.
pub fn oracle_self_test(phi: &HomeomorphismOracle, trials: usize, seed: u64) -> SelfTestReport {
    oracle_self_test_with_tol(phi, trials, seed, 1e-8)
}

pub fn oracle_self_test_with_tol(
    phi: &HomeomorphismOracle,
    trials: usize,
    seed: u64,
    tol: f64,
) -> SelfTestReport {
    let mut rng = rng_from(seed, 0x5e1f);
    let n = phi.dim();
    let mut max_err = 0.0f64;
    for trial in 0..trials {
        let mut x = crate::rng::random_complex_vector(&mut rng, n);
        // cycle through magnitudes so both small and large points are hit
        let scale = [0.01, 0.1, 1.0, 10.0][trial % 4];
        x *= Complex64::new(scale, 0.0);
        let there = phi.forward(&x);
        let back = phi.inverse(&there);
        let err_fwd = (&back - &x).norm() / x.norm().max(1.0);
        let again = phi.forward(&back);
        let err_inv = (&again - &there).norm() / there.norm().max(1.0);
        max_err = max_err.max(err_fwd).max(err_inv);
    }
    SelfTestReport {
        ok: max_err <= tol,
        max_roundtrip_error: max_err,
        trials,
    }
}

/// Relative smallest singular value of `[cols | candidate]`: sigma_min
/// divided by the largest column norm.
fn independence_sigma(cols: &[CVector], candidate: &CVector) -> f64 {
    let n = candidate.len();
    let k = cols.len() + 1;
    let mut m = CMatrix::zeros(n, k);
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, col);
    }
    m.set_column(k - 1, candidate);
    let col_scale = cols
        .iter()
        .map(|c| c.norm())
        .chain(std::iter::once(candidate.norm()))
        .fold(0.0f64, f64::max);
    if col_scale == 0.0 {
        return 0.0;
    }
    smallest_singular_value(&m) / col_scale
}

/// Unit vector orthogonal to the span of `cols`, seeded deterministically.
/// Redraws when the random direction is (numerically) inside the span.
fn orthogonal_complement_vector<R: rand::Rng>(cols: &[CVector], n: usize, rng: &mut R) -> CVector {
    loop {
        let mut w = random_unit_vector(rng, n);
        for c in cols {
            let cn = c.norm();
            if cn == 0.0 {
                continue;
            }
            let chat = c / Complex64::new(cn, 0.0);
            let coeff = chat.dotc(&w);
            w -= chat * coeff;
        }
        let norm = w.norm();
        if norm > 1e-12 {
            return w / Complex64::new(norm, 0.0);
        }
    }
}

const PHASES: [Complex64; 4] = [
    Complex64 { re: 1.0, im: 0.0 },
    Complex64 { re: 0.0, im: 1.0 },
    Complex64 { re: -1.0, im: 0.0 },
    Complex64 { re: 0.0, im: -1.0 },
];

/// Extracts a basis pair from a homeomorphism oracle.
///
/// Candidate policy: standard basis vectors in index order first, then
/// seeded random unit vectors, at most `max_candidates` per step. For a
/// candidate whose image lands in the accepted `v`-span, the perturbation
/// schedule tries `a = a0, a0/2, ...` over `halvings` magnitudes and four
/// phases `a * {1, i, -1, -i}`, accepting the first value for which both
/// column families pass the independence threshold.
pub fn extract_basis_pair(
    phi: &HomeomorphismOracle,
    cfg: &LinearizeConfig,
    seed: u64,
) -> Result<ExtractOutcome> {
    let n = phi.dim();
    if n == 0 {
        return Err(FormError::InvalidInput {
            reason: "basis extraction requires dimension >= 1".into(),
        });
    }
    let self_test = oracle_self_test_with_tol(phi, SELF_TEST_TRIALS, seed, cfg.oracle_roundtrip_tol);
    if !self_test.ok {
        return Err(FormError::OracleRoundTrip {
            max_error: self_test.max_roundtrip_error,
            tol: cfg.oracle_roundtrip_tol,
        });
    }

    let thr = cfg.basis_rank_threshold;
    let max_candidates = cfg.max_candidates.unwrap_or(n + 50);
    let mut rng = rng_from(seed, 0xba515);
    let mut us: Vec<CVector> = Vec::with_capacity(n);
    let mut vs: Vec<CVector> = Vec::with_capacity(n);
    let mut trace = ExtractTrace::default();

    for step in 0..n {
        let mut accepted = false;
        let mut best_sigma = 0.0f64;
        for cand_idx in 0..max_candidates {
            let u = if cand_idx < n {
                let mut e = CVector::zeros(n);
                e[cand_idx] = Complex64::new(1.0, 0.0);
                e
            } else {
                random_unit_vector(&mut rng, n)
            };
            trace.candidates_tried += 1;
            if independence_sigma(&us, &u) <= thr {
                continue;
            }
            let v = phi.forward(&u);
            let sigma_v = independence_sigma(&vs, &v);
            if sigma_v > thr {
                us.push(u);
                vs.push(v);
                accepted = true;
                break;
            }
            best_sigma = best_sigma.max(sigma_v);

            // perturbation branch: nudge the image off the accepted span
            trace.perturbation_steps += 1;
            let w = orthogonal_complement_vector(&vs, n, &mut rng);
            let a0 = v.norm().max(1.0);
            let mut found = false;
            'schedule: for h in 0..cfg.halvings {
                let magnitude = a0 / f64::powi(2.0, h as i32);
                for phase in PHASES {
                    let a = phase * Complex64::new(magnitude, 0.0);
                    let target = &v + &w * a;
                    let u_b = phi.inverse(&target);
                    let v_b = phi.forward(&u_b);
                    let sigma_u = independence_sigma(&us, &u_b);
                    let sigma_v = independence_sigma(&vs, &v_b);
                    best_sigma = best_sigma.max(sigma_u.min(sigma_v));
                    if sigma_u > thr && sigma_v > thr {
                        assert!(sigma_u > thr && sigma_v > thr);
                        us.push(u_b);
                        vs.push(v_b);
                        found = true;
                        break 'schedule;
                    }
                }
            }
            if found {
                trace.accepted_via_perturbation += 1;
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(FormError::BasisExtractionExhausted {
                step: step + 1,
                best_sigma,
                threshold: thr,
            });
        }
    }

    let u = CMatrix::from_columns(&us);
    let v = CMatrix::from_columns(&vs);
    let scale_u = us.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let scale_v = vs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    trace.min_sigma_u = smallest_singular_value(&u) / scale_u;
    trace.min_sigma_v = smallest_singular_value(&v) / scale_v;
    Ok(ExtractOutcome {
        basis: BasisPair { u, v },
        trace,
    })
}

#[derive(Debug)]
pub struct LinearizationOutcome {
    pub family: TransformFamily,
    pub verification: VerificationReport,
    pub traces: Vec<ExtractTrace>,
}

/// Runs the full pipeline: per vertex, extract a basis pair from the
/// witness oracle and form `S_i = V_i * U_i^{-1}`; then verify that the
/// family transforms `rep_b` to `rep_a` at `cfg.residual_tol`.
///
/// A verification failure is not an `Err`: the outcome carries the report
/// (with `ok = false` and per-edge residuals), which signals that the
/// supplied oracles do not actually intertwine the two representations or
/// that the numerics broke down. Errors are reserved for structural
/// mismatches and extraction failures.
pub fn linearize_topological_isomorphism(
    rep_a: &FormRepresentation,
    rep_b: &FormRepresentation,
    witness: &TopologicalIsomorphismWitness,
    cfg: &LinearizeConfig,
    seed: u64,
) -> Result<LinearizationOutcome> {
    if rep_a.graph() != rep_b.graph() {
        return Err(FormError::StructuralMismatch {
            reason: "representations have different graphs".into(),
        });
    }
    if rep_a.dims() != rep_b.dims() {
        return Err(FormError::StructuralMismatch {
            reason: format!("dimension vectors differ: {:?} vs {:?}", rep_a.dims(), rep_b.dims()),
        });
    }
    let dims = rep_a.dims();
    if witness.len() != dims.len() {
        return Err(FormError::DimensionMismatch {
            context: "witness".into(),
            expected: format!("{} oracles", dims.len()),
            actual: format!("{}", witness.len()),
        });
    }
    for (i, (oracle, &n)) in witness.oracles().iter().zip(dims.iter()).enumerate() {
        if oracle.dim() != n {
            return Err(FormError::DimensionMismatch {
                context: format!("witness oracle {}", i + 1),
                expected: format!("dimension {n}"),
                actual: format!("dimension {}", oracle.dim()),
            });
        }
    }

    let mut matrices = Vec::with_capacity(dims.len());
    let mut traces = Vec::with_capacity(dims.len());
    for (i, oracle) in witness.oracles().iter().enumerate() {
        if dims[i] == 0 {
            matrices.push(CMatrix::zeros(0, 0));
            traces.push(ExtractTrace::default());
            continue;
        }
        let outcome = extract_basis_pair(oracle, cfg, subseed(seed, i as u64))?;
        let s = solve_right(
            outcome.basis.u(),
            outcome.basis.v(),
            &format!("basis matrix U at vertex {}", i + 1),
        )?;
        matrices.push(s);
        traces.push(outcome.trace);
    }
    let family = TransformFamily::new(matrices)?;
    let verification = verify_linear_isomorphism(rep_a, rep_b, &family, cfg.residual_tol)?;
    Ok(LinearizationOutcome { family, verification, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{Edge, MixedGraph};
    use crate::matrix::{c, cr, max_abs};

    fn radial_oracle(n: usize) -> HomeomorphismOracle {
        // x -> x * (1 + |x|), inverse by solving r(1+r) = s
        HomeomorphismOracle::new(
            n,
            Box::new(|x: &CVector| {
                let r = x.norm();
                x * Complex64::new(1.0 + r, 0.0)
            }),
            Box::new(|y: &CVector| {
                let s = y.norm();
                if s == 0.0 {
                    return y.clone();
                }
                // positive root of r^2 + r - s = 0
                let r = (-1.0 + (1.0 + 4.0 * s).sqrt()) / 2.0;
                y * Complex64::new(r / s, 0.0)
            }),
        )
    }

    #[test]
    fn identity_oracle_yields_standard_basis() {
        let phi = HomeomorphismOracle::identity(2);
        let out = extract_basis_pair(&phi, &LinearizeConfig::default(), 7).unwrap();
        assert!(max_abs(&(out.basis.u() - CMatrix::identity(2, 2))) < 1e-15);
        assert!(max_abs(&(out.basis.v() - out.basis.u())) < 1e-15);
        assert_eq!(out.trace.perturbation_steps, 0);
    }

    #[test]
    fn radial_oracle_gives_well_conditioned_pair() {
        let phi = radial_oracle(3);
        let out = extract_basis_pair(&phi, &LinearizeConfig::default(), 3).unwrap();
        assert!(out.trace.min_sigma_u > 1e-8);
        assert!(out.trace.min_sigma_v > 1e-8);
        // v columns are forward images of u columns, stored exactly
        for k in 0..3 {
            let img = phi.forward(&out.basis.u().column(k).into_owned());
            assert_eq!(img, out.basis.v().column(k).into_owned());
        }
    }

    #[test]
    fn self_test_reports() {
        let id = HomeomorphismOracle::identity(4);
        let rep = oracle_self_test(&id, 100, 5);
        assert!(rep.ok);
        assert_eq!(rep.max_roundtrip_error, 0.0);

        let rad = radial_oracle(3);
        let rep = oracle_self_test(&rad, 100, 5);
        assert!(rep.ok);
        assert!(rep.max_roundtrip_error <= 1e-10);

        let wrong = HomeomorphismOracle::new(
            2,
            Box::new(|x: &CVector| x * cr(2.0)),
            Box::new(|x: &CVector| x * cr(3.0)),
        );
        let rep = oracle_self_test(&wrong, 10, 5);
        assert!(!rep.ok);
    }

    #[test]
    fn extract_rejects_broken_oracle() {
        let wrong = HomeomorphismOracle::new(
            2,
            Box::new(|x: &CVector| x * cr(2.0)),
            Box::new(|x: &CVector| x * cr(3.0)),
        );
        let err = extract_basis_pair(&wrong, &LinearizeConfig::default(), 0).unwrap_err();
        assert!(matches!(err, FormError::OracleRoundTrip { .. }));
    }

    #[test]
    fn linear_oracle_recovers_its_matrix() {
        let l = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.5), cr(2.0), cr(-1.0), c(0.0, 1.0)],
        );
        let l_inv = l.clone().try_inverse().unwrap();
        let lc = l.clone();
        let phi = HomeomorphismOracle::new(
            2,
            Box::new(move |x: &CVector| &lc * x),
            Box::new(move |x: &CVector| &l_inv * x),
        );
        let rep_b = single_loop_rep(CMatrix::zeros(2, 2));
        let rep_a = rep_b.clone();
        let witness = TopologicalIsomorphismWitness::new(vec![phi]);
        let out = linearize_topological_isomorphism(
            &rep_a,
            &rep_b,
            &witness,
            &LinearizeConfig::default(),
            11,
        )
        .unwrap();
        let s = &out.family.matrices()[0];
        assert!(max_abs(&(s - &l)) <= 1e-8 * max_abs(&l));
        assert!(out.verification.ok);
    }

    fn single_loop_rep(m: CMatrix) -> FormRepresentation {
        let n = m.nrows();
        let graph = MixedGraph::new(
            1,
            vec![Edge { id: "a".into(), tail: 1, head: 1, kind: crate::forms::FormKind::Bilinear }],
        )
        .unwrap();
        FormRepresentation::new(graph, vec![n], vec![("a".to_string(), m)]).unwrap()
    }

    #[test]
    fn zero_form_with_radial_witness_verifies_exactly() {
        let rep = single_loop_rep(CMatrix::zeros(2, 2));
        let witness = TopologicalIsomorphismWitness::new(vec![radial_oracle(2)]);
        let out = linearize_topological_isomorphism(
            &rep,
            &rep,
            &witness,
            &LinearizeConfig::default(),
            23,
        )
        .unwrap();
        assert!(out.verification.ok);
        assert_eq!(out.verification.max_residual, 0.0);
    }

    #[test]
    fn kernel_shear_witness_verifies() {
        // M = [[1,0],[0,0]] is preserved by (x1, x2) -> (x1, x2 + g(x1))
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]);
        let rep = single_loop_rep(m);
        let g = |z: Complex64| Complex64::new((z.re * 1.7).sin(), (z.im + z.re).cos() - 1.0);
        let phi = HomeomorphismOracle::new(
            2,
            Box::new(move |x: &CVector| {
                let mut y = x.clone();
                y[1] += g(x[0]);
                y
            }),
            Box::new(move |x: &CVector| {
                let mut y = x.clone();
                y[1] -= g(x[0]);
                y
            }),
        );
        let witness = TopologicalIsomorphismWitness::new(vec![phi]);
        let out = linearize_topological_isomorphism(
            &rep,
            &rep,
            &witness,
            &LinearizeConfig::default(),
            29,
        )
        .unwrap();
        assert!(out.verification.ok, "max residual {}", out.verification.max_residual);
        assert!(out.verification.max_residual <= 1e-8);
    }

    #[test]
    fn mismatched_rep_flags_verification_failure() {
        let rep_a = single_loop_rep(CMatrix::identity(2, 2));
        let rep_b = single_loop_rep(CMatrix::zeros(2, 2));
        let witness = TopologicalIsomorphismWitness::new(vec![radial_oracle(2)]);
        let out = linearize_topological_isomorphism(
            &rep_a,
            &rep_b,
            &witness,
            &LinearizeConfig::default(),
            31,
        )
        .unwrap();
        assert!(!out.verification.ok);
    }

    #[test]
    fn zero_dim_vertex_is_handled() {
        let graph = MixedGraph::new(
            1,
            vec![Edge { id: "a".into(), tail: 1, head: 1, kind: crate::forms::FormKind::Bilinear }],
        )
        .unwrap();
        let rep =
            FormRepresentation::new(graph, vec![0], vec![("a".to_string(), CMatrix::zeros(0, 0))])
                .unwrap();
        let witness = TopologicalIsomorphismWitness::new(vec![HomeomorphismOracle::identity(0)]);
        let out = linearize_topological_isomorphism(
            &rep,
            &rep,
            &witness,
            &LinearizeConfig::default(),
            1,
        )
        .unwrap();
        assert!(out.verification.ok);
    }
}
