//! The solvable quadratic groups G(n): construction, closed-form solution
//! family, and the non-equivalence witness table.
//!
//! The algebra has basis (D, X_1, Y_1, …, X_n, Y_n, Z) with brackets
//! `[D, X_s] = a_s X_s`, `[D, Y_s] = −a_s Y_s`, `[X_s, Y_s] = Z` for
//! weights `0 < a_1 ≤ … ≤ a_n`, and carries the ad-invariant form
//! `(D, Z) = ½`, `(X_s, Y_s) = 1/(2 a_s)`.
//!
//! The diagonalizing basis is `e_1 = D + Z`, `e_2 = D − Z`,
//! `e_{2s+1} = √a_s (X_s + Y_s)`, `e_{2s+2} = √a_s (X_s − Y_s)`; metrics
//! are diagonal there, `⟨e_i, e_i⟩ = λ_i²`, and the form is
//! `diag(1, −1, 1, −1, …)`. Every λ enters squared, so parameters are kept
//! positive; sign flips give isometric metrics via basis reflections.

use nalgebra::{DMatrix, DVector};

use crate::curvature::ricci_closed_form;
use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::quad_form::{frame_from_orthonormal_basis, AdaptedFrame, InvariantForm, Metric};
use crate::quasi_einstein::{qe_residual, ric_m_x, QEWitness};
use crate::solver::DiagonalMetricTemplate;

/// Shape of a G(n) algebra: the block count and the ordered weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GnSpec {
    n: usize,
    a: Vec<f64>,
}

impl GnSpec {
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("block count must be positive".into()));
        }
        if a.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
            });
        }
        if a[0] <= 0.0 || a.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "weights must satisfy 0 < a_1 <= ... <= a_n".into(),
            ));
        }
        Ok(Self { n, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }
}

/// Diagonal metric scales in the diagonalizing basis: `⟨e_i, e_i⟩ = λ_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnMetricParams {
    lam: Vec<f64>,
}

impl GnMetricParams {
    pub fn new(lam: Vec<f64>) -> Result<Self> {
        if lam.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(Error::InvalidInput(
                "metric scales must be positive (sign flips give isometric metrics)".into(),
            ));
        }
        Ok(Self { lam })
    }

    pub fn lam(&self) -> &[f64] {
        &self.lam
    }

    fn check_dim(&self, spec: &GnSpec) -> Result<()> {
        if self.lam.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: self.lam.len(),
            });
        }
        Ok(())
    }
}

/// Builds the algebra and its invariant form in the (D, X_s, Y_s, Z) basis.
pub fn build_gn(spec: &GnSpec) -> Result<(LieAlgebra, InvariantForm)> {
    let dim = spec.dim();
    let z = dim - 1;
    let mut brackets = Vec::with_capacity(3 * spec.n);
    let mut form = DMatrix::zeros(dim, dim);
    form[(0, z)] = 0.5;
    form[(z, 0)] = 0.5;
    let mut labels = vec!["D".to_string()];
    for s in 1..=spec.n {
        let (xs, ys) = (2 * s - 1, 2 * s);
        let a = spec.a[s - 1];
        brackets.push((0, xs, xs, a));
        brackets.push((0, ys, ys, -a));
        brackets.push((xs, ys, z, 1.0));
        form[(xs, ys)] = 0.5 / a;
        form[(ys, xs)] = 0.5 / a;
        labels.push(format!("X{s}"));
        labels.push(format!("Y{s}"));
    }
    labels.push("Z".to_string());
    let alg = LieAlgebra::from_brackets(dim, &brackets)?.with_labels(labels)?;
    Ok((alg, InvariantForm::new(form)?))
}

/// Columns are the diagonalizing basis vectors e_i in (D, X, Y, Z)
/// coordinates.
pub fn gn_e_basis(spec: &GnSpec) -> DMatrix<f64> {
    let dim = spec.dim();
    let z = dim - 1;
    let mut e = DMatrix::zeros(dim, dim);
    e[(0, 0)] = 1.0;
    e[(z, 0)] = 1.0;
    e[(0, 1)] = 1.0;
    e[(z, 1)] = -1.0;
    for s in 1..=spec.n {
        let r = spec.a[s - 1].sqrt();
        let (xs, ys) = (2 * s - 1, 2 * s);
        e[(xs, 2 * s)] = r;
        e[(ys, 2 * s)] = r;
        e[(xs, 2 * s + 1)] = r;
        e[(ys, 2 * s + 1)] = -r;
    }
    e
}

fn gn_e_basis_inverse(spec: &GnSpec) -> DMatrix<f64> {
    let dim = spec.dim();
    let z = dim - 1;
    let mut inv = DMatrix::zeros(dim, dim);
    inv[(0, 0)] = 0.5;
    inv[(1, 0)] = 0.5;
    inv[(0, z)] = 0.5;
    inv[(1, z)] = -0.5;
    for s in 1..=spec.n {
        let half = 0.5 / spec.a[s - 1].sqrt();
        let (xs, ys) = (2 * s - 1, 2 * s);
        inv[(2 * s, xs)] = half;
        inv[(2 * s + 1, xs)] = half;
        inv[(2 * s, ys)] = half;
        inv[(2 * s + 1, ys)] = -half;
    }
    inv
}

/// The left-invariant metric `⟨e_i, e_j⟩ = δ_ij λ_i²` in (D, X, Y, Z)
/// coordinates.
pub fn gn_metric(spec: &GnSpec, params: &GnMetricParams) -> Result<Metric> {
    params.check_dim(spec)?;
    let inv = gn_e_basis_inverse(spec);
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        spec.dim(),
        params.lam.iter().map(|l| l * l),
    ));
    let raw = inv.transpose() * diag * &inv;
    Metric::new((&raw + raw.transpose()) * 0.5)
}

/// The adapted frame `f_i = e_i / λ_i`, paired with the form as
/// `(f_i, f_i) = ±1/λ_i²` (signs alternating with i).
pub fn gn_frame(spec: &GnSpec, params: &GnMetricParams) -> Result<AdaptedFrame> {
    params.check_dim(spec)?;
    let (alg, _) = build_gn(spec)?;
    let metric = gn_metric(spec, params)?;
    let mut basis = gn_e_basis(spec);
    let mut lambda = Vec::with_capacity(spec.dim());
    for (i, &l) in params.lam.iter().enumerate() {
        basis.column_mut(i).scale_mut(1.0 / l);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        lambda.push(sign / (l * l));
    }
    frame_from_orthonormal_basis(&alg, &metric, basis, lambda)
}

/// Nonzero frame structure constants from the closed forms, as `(i, j, k, c)`
/// records with `i < j` (0-based frame slots).
pub fn gn_frame_records(
    spec: &GnSpec,
    params: &GnMetricParams,
) -> Result<Vec<(usize, usize, usize, f64)>> {
    params.check_dim(spec)?;
    let lam = &params.lam;
    let mut records = Vec::with_capacity(6 * spec.n);
    for s in 1..=spec.n {
        let a = spec.a[s - 1];
        let (p, q) = (2 * s, 2 * s + 1);
        records.push((0, p, q, a * lam[q] / (lam[0] * lam[p])));
        records.push((1, p, q, a * lam[q] / (lam[1] * lam[p])));
        records.push((0, q, p, a * lam[p] / (lam[0] * lam[q])));
        records.push((1, q, p, a * lam[p] / (lam[1] * lam[q])));
        records.push((p, q, 1, a * lam[1] / (lam[p] * lam[q])));
        records.push((p, q, 0, -a * lam[0] / (lam[p] * lam[q])));
    }
    Ok(records)
}

/// Solver template over the diagonalizing basis.
pub fn gn_metric_template(spec: &GnSpec) -> Result<DiagonalMetricTemplate> {
    let (alg, form) = build_gn(spec)?;
    DiagonalMetricTemplate::new(&alg, &form, gn_e_basis(spec))
}

/// Largest relative violation of the solution equations by the given
/// scales: per-block scale pairing, cross-block weight ratios, and the
/// product constraint tying the first two scales to the rest.
pub fn family_equation_defect(spec: &GnSpec, params: &GnMetricParams) -> Result<f64> {
    params.check_dim(spec)?;
    let lam2: Vec<f64> = params.lam.iter().map(|l| l * l).collect();
    Ok(family_defect(spec, &lam2))
}

/// Largest violation of the three solution-family constraints, measured
/// relative to the terms involved. Zero means the squared scales `lam2`
/// lie on the family.
fn family_defect(spec: &GnSpec, lam2: &[f64]) -> f64 {
    let a = &spec.a;
    let mut worst = 0.0_f64;
    for s in 1..=spec.n {
        let (p, q) = (2 * s, 2 * s + 1);
        worst = worst.max((lam2[p] - lam2[q]).abs() / (1.0 + lam2[p].max(lam2[q])));
        let (ri, r1) = (lam2[p] / a[s - 1], lam2[2] / a[0]);
        worst = worst.max((ri - r1).abs() / (1.0 + ri.abs().max(r1.abs())));
    }
    let sum_a2: f64 = a.iter().map(|x| x * x).sum();
    let target = 4.0 * sum_a2 / (a[0] * a[0]) * lam2[2] * lam2[2];
    let prod = lam2[0] * lam2[1];
    worst.max((prod - target).abs() / (1.0 + prod.abs().max(target.abs())))
}

/// Constructs the family point with `λ_3 = c` and the given `λ_1`: the
/// remaining scales follow from the solution equations, the drift is
/// `λ_1 f_1 − λ_2 f_2`, `m` comes from the (f_1, f_2) component, and λ from
/// the (f_1, f_1) component. The returned witness is verified to satisfy
/// the condition to 1e-10 before being handed out.
pub fn qe_family_point(spec: &GnSpec, lambda1: f64, c: f64) -> Result<(GnMetricParams, QEWitness)> {
    if lambda1 == 0.0 || c == 0.0 || !lambda1.is_finite() || !c.is_finite() {
        return Err(Error::InvalidInput(
            "family parameters must be finite and nonzero".into(),
        ));
    }
    let l1 = lambda1.abs();
    let c = c.abs();
    let a1 = spec.a[0];
    let sum_a2: f64 = spec.a.iter().map(|x| x * x).sum();
    let l2 = (4.0 * sum_a2 / (a1 * a1) * c.powi(4) / (l1 * l1)).sqrt();

    let mut lam = vec![l1, l2];
    for s in 1..=spec.n {
        let ls = (spec.a[s - 1] / a1).sqrt() * c;
        lam.push(ls);
        lam.push(ls);
    }
    let params = GnMetricParams::new(lam)?;

    let frame = gn_frame(spec, &params)?;
    let ric = ricci_closed_form(&frame)?;
    let ric01 = ric.matrix[(0, 1)];
    let m = -l1 * l2 / ric01;
    if !m.is_finite() || m <= 0.0 {
        return Err(Error::FamilyConstraint(format!(
            "effective dimension came out as {m} (mixed Ricci component {ric01})"
        )));
    }

    let mut x = DVector::zeros(spec.dim());
    x[0] = l1;
    x[1] = -l2;
    let tensor = ric_m_x(&frame, &ric, &x, m)?;
    let lambda_const = tensor[(0, 0)];
    let residual = qe_residual(&frame, &ric, &x, lambda_const, m)?;
    if residual >= 1e-10 {
        return Err(Error::Numerical(format!(
            "family point missed the condition: residual {residual:.3e}"
        )));
    }
    Ok((
        params,
        QEWitness {
            x,
            lambda_const,
            m,
            residual,
        },
    ))
}

/// Closed-form scalar curvature on the solution family:
/// `S = −(n+1)(λ_1² + λ_2²)·a_1²/(2λ_3⁴)`. Only asserted on the family, so
/// off-family parameters are refused rather than evaluated.
///
/// Derivation sketch: on the family each pair direction contributes
/// `Ric = −κ²(λ_1²+λ_2²)/2` with `κ = a_1/λ_3²` (the common ratio `a_s/λ_{2s+1}²`),
/// while the two split directions contribute
/// `−2Σa_s²/λ_i² + (n/2)κ²λ_i²`; the product equation turns `2Σa_s²/(λ_1²λ_2²)`
/// into `κ²/2` and the sum telescopes.
pub fn gn_scalar_curvature_closed(spec: &GnSpec, params: &GnMetricParams) -> Result<f64> {
    params.check_dim(spec)?;
    let lam2: Vec<f64> = params.lam.iter().map(|l| l * l).collect();
    let defect = family_defect(spec, &lam2);
    if defect > 1e-8 {
        return Err(Error::FamilyConstraint(format!(
            "parameters violate the solution equations by {defect:.3e}"
        )));
    }
    let kappa = spec.a[0] / lam2[2];
    Ok(-((spec.n + 1) as f64) * (lam2[0] + lam2[1]) * kappa * kappa / 2.0)
}

/// One row of the non-equivalence table.
#[derive(Debug, Clone, PartialEq)]
pub struct NonEquivalenceRow {
    pub lambda1: f64,
    /// Determinant of the metric Gram matrix in the frame basis; 1 up to
    /// roundoff by orthonormality.
    pub f_basis_det: f64,
    pub scalar_curvature: f64,
    /// `λ_1²·λ_2²`, constant across the table for fixed `c`.
    pub scale_product: f64,
}

/// Family points at fixed `c` for several `λ_1` values. Scalar curvature
/// separates them whenever `λ_1² + λ_2²` differs, exhibiting arbitrarily
/// many pairwise non-isometric solutions; the λ_1 ↔ λ_2 swap produces the
/// same curvature and is not separated by this invariant.
pub fn non_equivalence_witness(
    spec: &GnSpec,
    c: f64,
    lambda1_list: &[f64],
) -> Result<Vec<NonEquivalenceRow>> {
    for (i, &x) in lambda1_list.iter().enumerate() {
        for &y in &lambda1_list[i + 1..] {
            if (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())) {
                return Err(Error::InvalidInput(format!(
                    "duplicate λ_1 value {x} in the witness list"
                )));
            }
        }
    }
    lambda1_list
        .iter()
        .map(|&lambda1| {
            let (params, _witness) = qe_family_point(spec, lambda1, c)?;
            let frame = gn_frame(spec, &params)?;
            let metric = gn_metric(spec, &params)?;
            let gram = frame.basis.transpose() * metric.matrix() * &frame.basis;
            let lam = params.lam();
            Ok(NonEquivalenceRow {
                lambda1,
                f_basis_det: gram.determinant(),
                scalar_curvature: gn_scalar_curvature_closed(spec, &params)?,
                scale_product: lam[0] * lam[0] * lam[1] * lam[1],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{connection_koszul, ricci_oracle, ricci_trace, scalar_curvature};
    use crate::quad_form::check_ad_invariance;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g1_spec() -> GnSpec {
        GnSpec::new(1, vec![1.0]).unwrap()
    }

    #[test]
    fn spec_validation_enforces_weight_order() {
        assert!(GnSpec::new(0, vec![]).is_err());
        assert!(GnSpec::new(2, vec![2.0, 1.0]).is_err());
        assert!(GnSpec::new(1, vec![-1.0]).is_err());
        assert!(GnSpec::new(3, vec![1.0, 1.0, 2.5]).is_ok());
        assert!(GnMetricParams::new(vec![1.0, 0.0]).is_err());
        assert!(GnMetricParams::new(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn constructed_algebras_pass_all_axioms() {
        for spec in [
            g1_spec(),
            GnSpec::new(2, vec![1.0, 1.0]).unwrap(),
            GnSpec::new(3, vec![0.5, 1.0, 2.0]).unwrap(),
        ] {
            let (alg, form) = build_gn(&spec).unwrap();
            assert!(alg.validate_jacobi(1e-12).unwrap().pass);
            assert!(alg.is_unimodular(1e-12).unwrap().0);
            let inv = check_ad_invariance(&alg, &form, 1e-12).unwrap();
            assert!(inv.pass, "ad-invariance defect {}", inv.max_violation);
            form.check_nondegenerate(1e-9).unwrap();
        }
    }

    #[test]
    fn derived_algebra_has_heisenberg_dimension() {
        for spec in [g1_spec(), GnSpec::new(3, vec![1.0, 2.0, 4.0]).unwrap()] {
            let (alg, _) = build_gn(&spec).unwrap();
            let dim = spec.dim();
            let mut cols = Vec::new();
            for i in 0..dim {
                for j in (i + 1)..dim {
                    cols.push(alg.bracket_basis(i, j));
                }
            }
            let mut span = DMatrix::zeros(dim, cols.len());
            for (c, v) in cols.iter().enumerate() {
                span.set_column(c, v);
            }
            let svd = span.svd(false, false);
            let smax = svd.singular_values.max();
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-10 * smax)
                .count();
            assert_eq!(rank, 2 * spec.n() + 1);
        }
    }

    #[test]
    fn diagonalizing_basis_diagonalizes_the_form() {
        let spec = GnSpec::new(2, vec![1.0, 3.0]).unwrap();
        let (_, form) = build_gn(&spec).unwrap();
        let e = gn_e_basis(&spec);
        let paired = e.transpose() * form.matrix() * &e;
        for i in 0..spec.dim() {
            for j in 0..spec.dim() {
                let expect = match (i == j, i % 2) {
                    (true, 0) => 1.0,
                    (true, _) => -1.0,
                    (false, _) => 0.0,
                };
                assert!(
                    (paired[(i, j)] - expect).abs() < 1e-14,
                    "pairing at ({i},{j}): {}",
                    paired[(i, j)]
                );
            }
        }
        let prod = gn_e_basis(&spec) * gn_e_basis_inverse(&spec);
        assert!((prod - DMatrix::identity(spec.dim(), spec.dim())).amax() < 1e-14);
    }

    #[test]
    fn frame_constants_match_the_closed_forms() {
        let spec = g1_spec();
        let params = GnMetricParams::new(vec![2.0, 1.0, 1.0, 1.0]).unwrap();
        let frame = gn_frame(&spec, &params).unwrap();

        assert_relative_eq!(frame.c(0, 2, 3), 0.5, max_relative = 1e-12);
        assert_relative_eq!(frame.c(1, 2, 3), 1.0, max_relative = 1e-12);
        assert_relative_eq!(frame.c(0, 3, 2), 0.5, max_relative = 1e-12);
        assert_relative_eq!(frame.c(1, 3, 2), 1.0, max_relative = 1e-12);
        assert_relative_eq!(frame.c(2, 3, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(frame.c(2, 3, 0), -2.0, max_relative = 1e-12);
        assert_eq!(frame.lambda, vec![0.25, -1.0, 1.0, -1.0]);

        // All-unit scales.
        let unit = GnMetricParams::new(vec![1.0; 4]).unwrap();
        let frame = gn_frame(&spec, &unit).unwrap();
        for (i, j, k, expect) in [
            (0, 2, 3, 1.0),
            (1, 2, 3, 1.0),
            (0, 3, 2, 1.0),
            (1, 3, 2, 1.0),
            (2, 3, 1, 1.0),
            (2, 3, 0, -1.0),
        ] {
            assert_relative_eq!(frame.c(i, j, k), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn random_frames_satisfy_invariants_and_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(1..=4);
            let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let spec = GnSpec::new(n, a).unwrap();
            let lam: Vec<f64> = (0..spec.dim())
                .map(|_| rng.random_range(0.5..3.0))
                .collect();
            let params = GnMetricParams::new(lam).unwrap();

            let frame = gn_frame(&spec, &params).unwrap();
            let (_, form) = build_gn(&spec).unwrap();
            let metric = gn_metric(&spec, &params).unwrap();
            assert!(frame.max_defect(&metric, &form) < 1e-10);

            let mut expected = vec![0.0; spec.dim().pow(3)];
            for (i, j, k, c) in gn_frame_records(&spec, &params).unwrap() {
                expected[(i * spec.dim() + j) * spec.dim() + k] = c;
            }
            for i in 0..spec.dim() {
                for j in (i + 1)..spec.dim() {
                    for k in 0..spec.dim() {
                        let want = expected[(i * spec.dim() + j) * spec.dim() + k];
                        assert!(
                            (frame.c(i, j, k) - want).abs() < 1e-12 * (1.0 + want.abs()),
                            "constant ({i},{j},{k}): got {}, want {want}",
                            frame.c(i, j, k)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ricci_components_match_the_component_display() {
        // The six-case display specialised to random parameters, against
        // the closed-form pipeline.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let spec = g1_spec();
            let lam: Vec<f64> = (0..4).map(|_| rng.random_range(0.5..3.0)).collect();
            let params = GnMetricParams::new(lam.clone()).unwrap();
            let frame = gn_frame(&spec, &params).unwrap();
            let ric = ricci_closed_form(&frame).unwrap().matrix;

            let (l1, l2, l3, l4) = (lam[0], lam[1], lam[2], lam[3]);
            let (s1, s2, s3, s4) = (l1 * l1, l2 * l2, l3 * l3, l4 * l4);
            let expect01 = -0.5 * ((s3 + s4).powi(2) + s1 * s2) / (l1 * l2 * s3 * s4);
            let expect00 = -0.5 * ((s3 + s4).powi(2) - s1 * s1) / (s1 * s3 * s4);
            let expect11 = -0.5 * ((s3 + s4).powi(2) - s2 * s2) / (s2 * s3 * s4);
            let expect22 = -0.5 * ((s1 + s4).powi(2) - s3 * s3) / (s1 * s3 * s4)
                - 0.5 * ((s2 - s4).powi(2) - s3 * s3) / (s2 * s3 * s4);
            let expect33 = -0.5 * ((s1 - s3).powi(2) - s4 * s4) / (s1 * s3 * s4)
                - 0.5 * ((s2 + s3).powi(2) - s4 * s4) / (s2 * s3 * s4);

            for (got, want) in [
                (ric[(0, 1)], expect01),
                (ric[(0, 0)], expect00),
                (ric[(1, 1)], expect11),
                (ric[(2, 2)], expect22),
                (ric[(3, 3)], expect33),
            ] {
                assert!(
                    (got - want).abs() <= 1e-10 * (1.0 + want.abs()),
                    "component: got {got}, want {want}"
                );
            }
            for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                assert!(ric[(i, j)].abs() < 1e-12, "({i},{j}) should vanish");
            }
        }
    }

    #[test]
    fn golden_family_point() {
        let (params, witness) = qe_family_point(&g1_spec(), 2.0, 1.0).unwrap();
        assert_eq!(params.lam(), &[2.0, 1.0, 1.0, 1.0]);
        assert_relative_eq!(witness.m, 1.0, max_relative = 1e-12);
        assert_relative_eq!(witness.lambda_const, -2.5, max_relative = 1e-12);
        assert!(witness.residual < 1e-10);
        assert_eq!(witness.x.as_slice(), &[2.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_family_point_balances_the_first_two_scales() {
        let (params, _) = qe_family_point(&g1_spec(), std::f64::consts::SQRT_2, 1.0).unwrap();
        let lam = params.lam();
        assert_relative_eq!(lam[0] * lam[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(lam[1] * lam[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn two_block_family_point_follows_the_equations() {
        let spec = GnSpec::new(2, vec![1.0, 2.0]).unwrap();
        let (params, witness) = qe_family_point(&spec, 1.0, 1.0).unwrap();
        let lam = params.lam();
        assert_relative_eq!(lam[4] * lam[4], 2.0, max_relative = 1e-12);
        assert_relative_eq!(lam[5] * lam[5], 2.0, max_relative = 1e-12);
        assert_relative_eq!(lam[1] * lam[1], 20.0, max_relative = 1e-12);
        assert!(witness.residual < 1e-10);
    }

    #[test]
    fn closed_scalar_curvature_matches_the_trace() {
        let spec = g1_spec();
        let (params, _) = qe_family_point(&spec, 2.0, 1.0).unwrap();
        let s_closed = gn_scalar_curvature_closed(&spec, &params).unwrap();
        assert_relative_eq!(s_closed, -5.0, max_relative = 1e-12);

        let frame = gn_frame(&spec, &params).unwrap();
        let conn = connection_koszul(&frame);
        for s_trace in [
            scalar_curvature(&ricci_trace(&frame, &conn).unwrap()),
            scalar_curvature(&ricci_oracle(&frame, &conn)),
        ] {
            assert_relative_eq!(s_closed, s_trace, max_relative = 1e-11);
        }
    }

    #[test]
    fn off_family_parameters_are_refused_by_the_closed_form() {
        let spec = g1_spec();
        let params = GnMetricParams::new(vec![2.0, 1.0, 1.0, 1.01]).unwrap();
        assert!(matches!(
            gn_scalar_curvature_closed(&spec, &params),
            Err(Error::FamilyConstraint(_))
        ));
    }

    #[test]
    fn perturbing_any_scale_breaks_the_condition() {
        // The solution equations are active constraints: a 1% bump in any
        // single scale leaves no (λ, 1/m) making the residual small again.
        let spec = g1_spec();
        let (params, _) = qe_family_point(&spec, 2.0, 1.0).unwrap();
        for bump in 0..4 {
            let mut lam = params.lam().to_vec();
            lam[bump] *= 1.01;
            let perturbed = GnMetricParams::new(lam.clone()).unwrap();
            let frame = gn_frame(&spec, &perturbed).unwrap();
            let ric = ricci_closed_form(&frame).unwrap();
            let mut x = DVector::zeros(4);
            x[0] = lam[0];
            x[1] = -lam[1];

            // Best (λ, ρ) by linear least squares over the residual.
            let base =
                &ric.matrix + crate::quasi_einstein::lie_derivative_metric_frame(&frame, &x) * 0.5;
            let outer = &x * x.transpose();
            let rows = 10;
            let mut a = DMatrix::zeros(rows, 2);
            let mut b = DVector::zeros(rows);
            let mut r = 0;
            for i in 0..4 {
                for j in i..4 {
                    let w = if i == j {
                        1.0
                    } else {
                        std::f64::consts::SQRT_2
                    };
                    a[(r, 0)] = if i == j { w } else { 0.0 };
                    a[(r, 1)] = w * outer[(i, j)];
                    b[r] = w * base[(i, j)];
                    r += 1;
                }
            }
            let theta = (a.transpose() * &a)
                .cholesky()
                .unwrap()
                .solve(&(a.transpose() * &b));
            let best = (&b - &a * theta).norm();
            assert!(best > 1e-4, "scale {bump}: residual {best} too forgiving");
        }
    }

    #[test]
    fn witness_table_separates_family_members() {
        let spec = g1_spec();
        let rows =
            non_equivalence_witness(&spec, 1.0, &[std::f64::consts::SQRT_2, 2.0, 3.0]).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!((row.f_basis_det - 1.0).abs() < 1e-9);
            assert_relative_eq!(row.scale_product, 4.0, max_relative = 1e-10);
        }
        assert_relative_eq!(rows[0].scalar_curvature, -4.0, max_relative = 1e-10);
        assert_relative_eq!(rows[1].scalar_curvature, -5.0, max_relative = 1e-10);
        assert_relative_eq!(
            rows[2].scalar_curvature,
            -(9.0 + 4.0 / 9.0),
            max_relative = 1e-10
        );
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((rows[i].scalar_curvature - rows[j].scalar_curvature).abs() > 0.1);
            }
        }
    }

    #[test]
    fn swapped_scales_share_scalar_curvature() {
        let spec = g1_spec();
        let rows = non_equivalence_witness(&spec, 1.0, &[1.0, 2.0]).unwrap();
        // λ_1 = 1 gives λ_2² = 4: the same unordered pair as λ_1 = 2, so the
        // invariant cannot tell them apart.
        assert_relative_eq!(
            rows[0].scalar_curvature,
            rows[1].scalar_curvature,
            max_relative = 1e-12
        );
        assert!(non_equivalence_witness(&spec, 1.0, &[2.0, 2.0]).is_err());
    }
}
