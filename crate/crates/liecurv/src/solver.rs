//! Numerical search for metrics and drift fields satisfying the
//! quasi-Einstein condition on a fixed algebra.
//!
//! The search space is a diagonal family of metrics: the caller supplies a
//! basis in which the invariant form is diagonal, and the metric is
//! `diag(exp u_1, …, exp u_n)` in that basis. This makes the adapted frame
//! an explicit smooth function of the unknowns (`f_i = b_i·e^{−u_i/2}`),
//! avoiding eigendecompositions inside the residual, whose eigenvalue
//! crossings would otherwise break differentiability.
//!
//! Unknowns: `u` (log squared metric scales), drift coefficients over the
//! Killing subspace of the seed metric, the constant λ, and `ρ = 1/m`
//! (so `m = ∞` is the interior point `ρ = 0`). The resulting least-squares
//! problem is solved by Levenberg-Marquardt with a finite-difference
//! Jacobian and Nielsen damping updates. Solutions form continuous
//! manifolds, so the damping also serves to pick out a nearby point when
//! the Jacobian is rank-deficient along the manifold.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::ricci_closed_form;
use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::par::map_collect;
use crate::quad_form::{frame_from_orthonormal_basis, AdaptedFrame, InvariantForm, Metric};
use crate::quasi_einstein::{killing_subspace, ric_m_x_rho, QEWitness};

/// A diagonal family of metrics over a basis that diagonalizes the
/// invariant form. Parameter vector `u` gives the metric
/// `g(b_i, b_j) = e^{u_i}·δ_ij` in the template basis.
#[derive(Debug, Clone)]
pub struct DiagonalMetricTemplate {
    alg: LieAlgebra,
    basis: DMatrix<f64>,
    basis_inv: DMatrix<f64>,
    form_diag: Vec<f64>,
}

impl DiagonalMetricTemplate {
    /// Checks that `basis` (columns) diagonalizes the form and records the
    /// diagonal values. The form must be nondegenerate on the basis.
    pub fn new(alg: &LieAlgebra, form: &InvariantForm, basis: DMatrix<f64>) -> Result<Self> {
        let n = alg.dim();
        if basis.nrows() != n || basis.ncols() != n || form.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: basis.nrows().max(form.dim()),
            });
        }
        let basis_inv = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("template basis is not invertible".into()))?;
        let paired = basis.transpose() * form.matrix() * &basis;
        let scale = 1.0 + paired.amax();
        let mut form_diag = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && paired[(i, j)].abs() > 1e-10 * scale {
                    return Err(Error::InvalidInput(format!(
                        "form is not diagonal in the template basis at ({i}, {j})"
                    )));
                }
            }
            if paired[(i, i)].abs() <= 1e-10 * scale {
                return Err(Error::DegenerateForm(format!(
                    "form vanishes on template direction {i}"
                )));
            }
            form_diag.push(paired[(i, i)]);
        }
        Ok(Self {
            alg: alg.clone(),
            basis,
            basis_inv,
            form_diag,
        })
    }

    /// Template over the standard basis; requires the form itself to be
    /// diagonal.
    pub fn standard(alg: &LieAlgebra, form: &InvariantForm) -> Result<Self> {
        Self::new(alg, form, DMatrix::identity(alg.dim(), alg.dim()))
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.alg
    }

    pub fn n_params(&self) -> usize {
        self.alg.dim()
    }

    /// Metric in original-basis coordinates for parameters `u`.
    pub fn metric_at(&self, u: &[f64]) -> Result<Metric> {
        let n = self.n_params();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite metric parameter".into()));
        }
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(n, u.iter().map(|&ui| ui.exp())));
        let raw = self.basis_inv.transpose() * diag * &self.basis_inv;
        Metric::new((&raw + raw.transpose()) * 0.5)
    }

    /// Adapted frame for parameters `u`: basis columns scaled by
    /// `e^{−u_i/2}`, pairing eigenvalues `β_i·e^{−u_i}`.
    pub fn frame_at(&self, u: &[f64]) -> Result<AdaptedFrame> {
        let metric = self.metric_at(u)?;
        let mut scaled = self.basis.clone();
        for (i, &ui) in u.iter().enumerate() {
            let s = (-ui / 2.0).exp();
            scaled.column_mut(i).scale_mut(s);
        }
        let lambda: Vec<f64> = self
            .form_diag
            .iter()
            .zip(u)
            .map(|(&beta, &ui)| beta * (-ui).exp())
            .collect();
        frame_from_orthonormal_basis(&self.alg, &metric, scaled, lambda)
    }

    /// Expresses an original-basis vector in template-basis coordinates.
    pub fn to_template_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis_inv * x
    }
}

/// Options for [`solve_qe`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Number of random starting points.
    pub seeds: usize,
    /// Residual (Frobenius norm) below which a point counts as solved.
    pub tol: f64,
    /// Iteration cap per seed.
    pub max_iters: usize,
    /// Rescale each solution so the template-basis metric has determinant 1.
    pub normalize: bool,
    /// Parameter-space distance under which two solutions are merged.
    pub dedup_tol: f64,
    /// Search over all drift directions instead of the Killing subspace.
    /// Exact solutions still end up Killing; this exists to let tests
    /// falsify that claim numerically.
    pub free_x: bool,
    /// Seed for the starting-point generator.
    pub rng_seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            seeds: 16,
            tol: 1e-10,
            max_iters: 200,
            normalize: false,
            dedup_tol: 1e-6,
            free_x: false,
            rng_seed: 0x11ECF00D,
        }
    }
}

/// A converged, post-processed solution.
#[derive(Debug, Clone)]
pub struct SolvedPoint {
    /// Squared metric scales in the template basis (`e^{u_i}`).
    pub metric_diag: Vec<f64>,
    /// Witness with drift in frame coordinates of the solved frame; the
    /// drift is scaled to unit norm (with `m` adjusted accordingly, since
    /// only `X/√m` enters on the Killing locus) or zero.
    pub witness: QEWitness,
    pub iterations: usize,
}

/// Runs the multi-seed search. Returns every converged solution with
/// residual below `opts.tol`, deduplicated and sorted by residual; an
/// empty list means no seed converged, which is not an error.
pub fn solve_qe(
    template: &DiagonalMetricTemplate,
    opts: &SolveOptions,
) -> Result<Vec<SolvedPoint>> {
    let n = template.n_params();

    // Drift directions, in template coordinates. The Killing subspace is
    // taken at the seed metric u = 0 and kept fixed during iteration; the
    // Killing verification at accepted points catches any drift of the
    // subspace with the metric.
    let drift_dirs: Vec<DVector<f64>> = if opts.free_x {
        (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                v
            })
            .collect()
    } else {
        let metric0 = template.metric_at(&vec![0.0; n])?;
        killing_subspace(&template.alg, &metric0, 1e-9)?
            .into_iter()
            .map(|v| template.to_template_coords(&v))
            .collect()
    };
    let k = drift_dirs.len();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let starts: Vec<DVector<f64>> = (0..opts.seeds)
        .map(|_| {
            let mut p = DVector::zeros(n + k + 2);
            for i in 0..n {
                p[i] = rng.random_range(0.25_f64.ln()..9.0_f64.ln());
            }
            for a in 0..k {
                p[n + a] = rng.random_range(-2.0..2.0);
            }
            p[n + k] = rng.random_range(-3.0..1.0);
            p[n + k + 1] = rng.random_range(0.05..1.5);
            p
        })
        .collect();

    let residual_fn = |p: &DVector<f64>| residual_vector(template, &drift_dirs, p);

    let runs = map_collect(starts, |p0: DVector<f64>| {
        levenberg_marquardt(&residual_fn, p0, opts.max_iters)
    });

    let mut points = Vec::new();
    for run in runs.into_iter().flatten() {
        if let Some(point) = finish_point(template, &drift_dirs, run, opts)? {
            points.push(point);
        }
    }

    points.sort_by(|a, b| {
        (a.witness.residual, &a.metric_diag)
            .partial_cmp(&(b.witness.residual, &b.metric_diag))
            .expect("residuals are finite")
    });
    let mut kept: Vec<SolvedPoint> = Vec::new();
    for p in points {
        let duplicate = kept
            .iter()
            .any(|q| solution_distance(&p, q) < opts.dedup_tol);
        if !duplicate {
            kept.push(p);
        }
    }
    Ok(kept)
}

/// Gauge-invariant distance between solutions: compares log metric scales,
/// λ, and the drift strength `ρ·|x|²` (drift and 1/m are only jointly
/// determined on the Killing locus).
fn solution_distance(a: &SolvedPoint, b: &SolvedPoint) -> f64 {
    let mut d = (a.witness.lambda_const - b.witness.lambda_const).abs();
    d = d.max((drift_strength(&a.witness) - drift_strength(&b.witness)).abs());
    for (x, y) in a.metric_diag.iter().zip(&b.metric_diag) {
        d = d.max((x.ln() - y.ln()).abs());
    }
    d
}

fn drift_strength(w: &QEWitness) -> f64 {
    if w.m.is_infinite() {
        0.0
    } else {
        w.x.norm_squared() / w.m
    }
}

/// Weighted upper-triangle flattening whose Euclidean norm equals the
/// Frobenius norm of the symmetric matrix it came from.
fn residual_vector(
    template: &DiagonalMetricTemplate,
    drift_dirs: &[DVector<f64>],
    p: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = template.n_params();
    let k = drift_dirs.len();
    let u = p.as_slice().get(..n)?;
    let lambda_const = p[n + k];
    let rho = p[n + k + 1];

    let frame = template.frame_at(u).ok()?;
    let ric = ricci_closed_form(&frame).ok()?;

    let mut x = DVector::zeros(n);
    for (a, dir) in drift_dirs.iter().enumerate() {
        x.axpy(p[n + a], dir, 1.0);
    }
    // Template coordinates t scale to frame coordinates by e^{u_i/2}.
    for i in 0..n {
        x[i] *= (u[i] / 2.0).exp();
    }

    let t = ric_m_x_rho(&frame, &ric, &x, rho).ok()?;
    let mut r = DVector::zeros(n * (n + 1) / 2);
    let mut row = 0;
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in i..n {
            r[row] = if i == j {
                t[(i, i)] - lambda_const
            } else {
                sqrt2 * t[(i, j)]
            };
            row += 1;
        }
    }
    r.iter().all(|v| v.is_finite()).then_some(r)
}

struct LmRun {
    p: DVector<f64>,
    residual_norm: f64,
    iterations: usize,
}

/// Dense Levenberg-Marquardt with central-difference Jacobian and Nielsen
/// damping control. Returns the best point reached, or None when the
/// residual cannot be evaluated at the start.
fn levenberg_marquardt(
    r_fn: &(impl Fn(&DVector<f64>) -> Option<DVector<f64>> + ?Sized),
    mut p: DVector<f64>,
    max_iters: usize,
) -> Option<LmRun> {
    let mut r = r_fn(&p)?;
    let mut f = 0.5 * r.norm_squared();
    let mut jac = fd_jacobian(r_fn, &p, &r)?;
    let mut a = jac.transpose() * &jac;
    let mut grad = jac.transpose() * &r;

    let mut mu = 1e-3 * a.diagonal().max();
    if mu.is_nan() || mu <= 0.0 {
        mu = 1e-3;
    }
    let mut nu = 2.0;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let n = p.len();
        let damped = &a + DMatrix::identity(n, n) * mu;
        let delta = match damped.cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                mu *= nu;
                nu *= 2.0;
                continue;
            }
        };
        if delta.norm() <= 1e-14 * (p.norm() + 1e-14) {
            break;
        }
        let p_new = &p + &delta;
        let r_new = match r_fn(&p_new) {
            Some(v) => v,
            None => {
                mu *= nu;
                nu *= 2.0;
                if mu > 1e16 {
                    break;
                }
                continue;
            }
        };
        let f_new = 0.5 * r_new.norm_squared();
        let predicted = 0.5 * delta.dot(&(&delta * mu - &grad));
        let gain = (f - f_new) / predicted.max(f64::MIN_POSITIVE);

        if gain > 0.0 && f_new < f {
            p = p_new;
            r = r_new;
            f = f_new;
            jac = match fd_jacobian(r_fn, &p, &r) {
                Some(j) => j,
                None => break,
            };
            a = jac.transpose() * &jac;
            grad = jac.transpose() * &r;
            mu *= (1.0_f64 / 3.0).max(1.0 - (2.0 * gain - 1.0).powi(3));
            nu = 2.0;
            if r.norm() < 1e-14 || grad.amax() < 1e-14 {
                break;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e16 {
                break;
            }
        }
    }

    Some(LmRun {
        residual_norm: r.norm(),
        p,
        iterations,
    })
}

fn fd_jacobian(
    r_fn: &(impl Fn(&DVector<f64>) -> Option<DVector<f64>> + ?Sized),
    p: &DVector<f64>,
    r0: &DVector<f64>,
) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    for col in 0..p.len() {
        let h = 1e-6 * (1.0 + p[col].abs());
        let mut forward = p.clone();
        forward[col] += h;
        let mut backward = p.clone();
        backward[col] -= h;
        let (rf, rb) = (r_fn(&forward)?, r_fn(&backward)?);
        jac.set_column(col, &((rf - rb) / (2.0 * h)));
    }
    Some(jac)
}

/// Normalization, gauge fixing, and witness assembly for one LM run.
fn finish_point(
    template: &DiagonalMetricTemplate,
    drift_dirs: &[DVector<f64>],
    run: LmRun,
    opts: &SolveOptions,
) -> Result<Option<SolvedPoint>> {
    if run.residual_norm >= opts.tol {
        return Ok(None);
    }
    let n = template.n_params();
    let k = drift_dirs.len();
    let mut u: Vec<f64> = run.p.as_slice()[..n].to_vec();
    let mut lambda_const = run.p[n + k];
    let mut rho = run.p[n + k + 1];

    let mut x_template = DVector::zeros(n);
    for (a, dir) in drift_dirs.iter().enumerate() {
        x_template.axpy(run.p[n + a], dir, 1.0);
    }

    if opts.normalize {
        // Uniform rescaling of the metric: the whole equation scales by
        // e^{−t}, the frame drift coordinates by e^{t/2}; λ and ρ follow
        // analytically, so no re-solve is needed.
        let t = -u.iter().sum::<f64>() / n as f64;
        for ui in &mut u {
            *ui += t;
        }
        lambda_const *= (-t).exp();
        rho *= (-2.0 * t).exp();
    }

    let frame = template.frame_at(&u)?;
    let ric = ricci_closed_form(&frame)?;

    let mut x = DVector::zeros(n);
    for i in 0..n {
        x[i] = x_template[i] * (u[i] / 2.0).exp();
    }

    // Gauge: on the Killing locus only ρ·x xᵀ matters, so scale the drift
    // to unit norm and fold the magnitude into ρ.
    let norm = x.norm();
    let drift = rho * norm * norm;
    if norm > 1e-9 && drift.abs() > 1e-12 {
        x /= norm;
        rho *= norm * norm;
        if x.amax() > 0.0 {
            let pivot =
                x.iter().enumerate().fold(
                    0,
                    |best, (i, v)| {
                        if v.abs() > x[best].abs() {
                            i
                        } else {
                            best
                        }
                    },
                );
            if x[pivot] < 0.0 {
                x = -x;
            }
        }
    } else {
        x = DVector::zeros(n);
        rho = 0.0;
    }

    let m = if rho == 0.0 {
        f64::INFINITY
    } else if rho > 0.0 {
        1.0 / rho
    } else {
        // Converged to a negative effective dimension; not a witness under
        // the declared domain.
        return Ok(None);
    };

    let residual = crate::quasi_einstein::qe_residual(&frame, &ric, &x, lambda_const, m)?;
    if residual >= opts.tol {
        return Ok(None);
    }
    Ok(Some(SolvedPoint {
        metric_diag: u.iter().map(|v| v.exp()).collect(),
        witness: QEWitness {
            x,
            lambda_const,
            m,
            residual,
        },
        iterations: run.iterations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gn_family::{gn_metric_template, GnSpec};
    use crate::quasi_einstein::verify_killing_theorem;

    fn family_defects(spec: &GnSpec, point: &SolvedPoint) -> (f64, f64, f64) {
        let lam2 = &point.metric_diag;
        let a = spec.a();
        let n = spec.n();
        let mut pairs = 0.0_f64;
        let mut ratios = 0.0_f64;
        for s in 1..=n {
            pairs = pairs.max((lam2[2 * s] - lam2[2 * s + 1]).abs());
            ratios = ratios.max((lam2[2 * s] / a[s - 1] - lam2[2] / a[0]).abs());
        }
        let sum_a2: f64 = a.iter().map(|x| x * x).sum();
        let product = (lam2[0] * lam2[1] - 4.0 * sum_a2 / (a[0] * a[0]) * lam2[2] * lam2[2]).abs();
        (pairs, ratios, product)
    }

    #[test]
    fn recovers_the_solution_family_on_the_four_dimensional_group() {
        let spec = GnSpec::new(1, vec![1.0]).unwrap();
        let template = gn_metric_template(&spec).unwrap();
        let opts = SolveOptions {
            seeds: 20,
            normalize: true,
            ..Default::default()
        };
        let points = solve_qe(&template, &opts).unwrap();
        assert!(!points.is_empty(), "no seed converged");
        for point in &points {
            let (pairs, _, product) = family_defects(&spec, point);
            assert!(pairs <= 1e-8, "third/fourth scales split by {pairs}");
            assert!(product <= 1e-8, "product constraint off by {product}");
            let det: f64 = point.metric_diag.iter().product();
            assert!((det - 1.0).abs() < 1e-9);
            assert!(point.witness.m > 0.0);

            let u: Vec<f64> = point.metric_diag.iter().map(|v| v.ln()).collect();
            let frame = template.frame_at(&u).unwrap();
            let check = verify_killing_theorem(&frame, &point.witness, 1e-8);
            assert!(check.pass, "drift not Killing: {}", check.defect);
        }
    }

    #[test]
    fn recovers_the_family_constraints_for_two_blocks() {
        let spec = GnSpec::new(2, vec![1.0, 2.0]).unwrap();
        let template = gn_metric_template(&spec).unwrap();
        let opts = SolveOptions {
            seeds: 12,
            normalize: true,
            ..Default::default()
        };
        let points = solve_qe(&template, &opts).unwrap();
        assert!(!points.is_empty());
        for point in &points {
            let (pairs, ratios, product) = family_defects(&spec, point);
            assert!(pairs <= 1e-8 && ratios <= 1e-8 && product <= 1e-8);
        }
    }

    #[test]
    fn flat_abelian_solves_trivially() {
        let alg = LieAlgebra::abelian(3);
        let form = InvariantForm::from_diagonal(&[1.0, -1.0, 1.0]);
        let template = DiagonalMetricTemplate::standard(&alg, &form).unwrap();
        let points = solve_qe(
            &template,
            &SolveOptions {
                seeds: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!points.is_empty());
        for p in &points {
            assert!(p.witness.lambda_const.abs() < 1e-9);
            assert_eq!(p.witness.x, DVector::zeros(3));
            assert!(p.witness.m.is_infinite());
        }
    }

    #[test]
    fn template_rejects_non_diagonalizing_basis() {
        let spec = GnSpec::new(1, vec![1.0]).unwrap();
        let (alg, form) = crate::gn_family::build_gn(&spec).unwrap();
        // The raw basis pairs D with Z off-diagonally.
        let err = DiagonalMetricTemplate::standard(&alg, &form);
        assert!(err.is_err());
    }

    #[test]
    fn template_frames_satisfy_the_frame_identities() {
        let spec = GnSpec::new(2, vec![1.0, 1.5]).unwrap();
        let template = gn_metric_template(&spec).unwrap();
        let u = vec![0.3, -0.2, 0.1, 0.4, -0.5, 0.2];
        let frame = template.frame_at(&u).unwrap();
        let metric = template.metric_at(&u).unwrap();
        let (_, form) = crate::gn_family::build_gn(&spec).unwrap();
        assert!(frame.max_defect(&metric, &form) < 1e-10);
    }
}
