//! Invariant bilinear forms, left-invariant metrics, and adapted frames.
//!
//! The central construction is [`adapted_frame`]: given a metric `g` and an
//! ad-invariant form `B` on the same algebra, it produces a basis that is
//! orthonormal for `g` and diagonalizes `B`. In that basis the form reads
//! `B(f_i, f_j) = λ_i δ_ij` with the `λ_i` sorted in decreasing order, and
//! all downstream curvature formulas take the frame as input.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;

/// A symmetric bilinear form, not assumed definite.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantForm {
    matrix: DMatrix<f64>,
}

impl InvariantForm {
    /// Wraps a symmetric matrix. Symmetry must hold exactly; callers build
    /// these from literal data, so any asymmetry is a bug upstream.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square(&matrix)?;
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.matrix * y)[(0, 0)]
    }

    pub fn max_entry(&self) -> f64 {
        self.matrix.amax()
    }

    /// Nondegeneracy via the singular value ratio; a form with
    /// `σ_min / σ_max` below `tol` is rejected as degenerate.
    pub fn check_nondegenerate(&self, tol: f64) -> Result<()> {
        let svd = self.matrix.clone().svd(false, false);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if max == 0.0 || min / max < tol {
            return Err(Error::DegenerateForm(format!(
                "singular value ratio {:.3e} below {:.3e}",
                if max == 0.0 { 0.0 } else { min / max },
                tol
            )));
        }
        Ok(())
    }
}

/// A positive-definite symmetric matrix acting as a left-invariant metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    matrix: DMatrix<f64>,
}

impl Metric {
    /// Requires exact symmetry and positive definiteness (via Cholesky).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square(&matrix)?;
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        if matrix.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.matrix * y)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).sqrt()
    }

    /// `g^{-1}`, via Cholesky.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.matrix
            .clone()
            .cholesky()
            .expect("checked positive definite at construction")
            .inverse()
    }
}

/// Largest violation of `B([x,y],z) + B(y,[x,z]) = 0` over basis triples,
/// compared against `tol * (1 + max|C|) * (1 + max|B|)`.
pub fn check_ad_invariance(
    alg: &LieAlgebra,
    form: &InvariantForm,
    tol: f64,
) -> Result<crate::lie::ValidationReport> {
    if form.dim() != alg.dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.dim(),
            got: form.dim(),
        });
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = alg.dim();
    let b = form.matrix();
    let mut worst = 0.0_f64;
    for i in 0..n {
        let ad = alg.ad_basis(i);
        // B(ad_i y, z) + B(y, ad_i z) = (ad_i^T B + B ad_i)[y][z]
        let defect = ad.transpose() * b + b * &ad;
        worst = worst.max(defect.amax());
    }
    let threshold = tol * (1.0 + alg.max_constant()) * (1.0 + form.max_entry());
    Ok(crate::lie::ValidationReport {
        max_violation: worst,
        threshold,
        pass: worst <= threshold,
    })
}

/// Solves `g θ = B` for the symmetric-in-g endomorphism relating the metric
/// to the form. Degeneracy of `B` is reported rather than propagated as NaN.
pub fn theta_map(metric: &Metric, form: &InvariantForm) -> Result<DMatrix<f64>> {
    if form.dim() != metric.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            got: form.dim(),
        });
    }
    form.check_nondegenerate(1e-12)?;
    Ok(metric.inverse() * form.matrix())
}

/// A metric-orthonormal basis diagonalizing the invariant form.
///
/// Column `i` of `basis` holds the coefficients of the frame vector `f_i`
/// in the original basis of the algebra. The pairing satisfies
/// `B(f_i, f_j) = λ_i δ_ij` and `g(f_i, f_j) = δ_ij`, with `λ` sorted in
/// decreasing order. `mu[i]` is stored as exactly `1.0 / lambda[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub basis: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// Structure constants in the frame: `c[i][j][k]` with all indices free.
    frame_constants: Vec<f64>,
    dim: usize,
}

impl AdaptedFrame {
    /// Assembles a frame from explicit data. The structure constants are
    /// given as a flat `n³` tensor indexed `(i·n + j)·n + k`; antisymmetry
    /// in the first two indices is validated, everything else (including
    /// the frame identities checked by [`AdaptedFrame::max_defect`]) is the
    /// caller's responsibility. `mu` is always derived as `1/λ`.
    pub fn from_parts(
        basis: DMatrix<f64>,
        lambda: Vec<f64>,
        frame_constants: Vec<f64>,
    ) -> Result<Self> {
        let n = lambda.len();
        if basis.nrows() != n || basis.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: basis.nrows().max(basis.ncols()),
            });
        }
        if frame_constants.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                got: frame_constants.len(),
            });
        }
        if lambda.iter().any(|l| *l == 0.0 || !l.is_finite()) {
            return Err(Error::DegenerateForm(
                "frame eigenvalues must be finite and nonzero".into(),
            ));
        }
        let max_c = frame_constants.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let fw = frame_constants[(i * n + j) * n + k];
                    let bw = frame_constants[(j * n + i) * n + k];
                    if (fw + bw).abs() > 1e-12 * (1.0 + max_c) {
                        return Err(Error::InvalidInput(format!(
                            "frame constants not antisymmetric at ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        let mu = lambda.iter().map(|&l| 1.0 / l).collect();
        Ok(Self {
            basis,
            lambda,
            mu,
            frame_constants,
            dim: n,
        })
    }

    /// Convenience form of [`AdaptedFrame::from_parts`] taking only the
    /// `i < j` constants as `(i, j, k, c)` records; the mirror entries are
    /// filled in.
    pub fn from_upper_records(
        basis: DMatrix<f64>,
        lambda: Vec<f64>,
        records: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let n = lambda.len();
        let mut constants = vec![0.0; n * n * n];
        for &(i, j, k, c) in records {
            if i >= j || j >= n || k >= n {
                return Err(Error::InvalidInput(format!(
                    "frame record ({i}, {j}, {k}) invalid for dimension {n}"
                )));
            }
            constants[(i * n + j) * n + k] += c;
            constants[(j * n + i) * n + k] -= c;
        }
        Self::from_parts(basis, lambda, constants)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Frame structure constant `c_{ij}^k` in `[f_i, f_j] = Σ_k c_{ij}^k f_k`.
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.frame_constants[(i * self.dim + j) * self.dim + k]
    }

    /// Largest absolute frame structure constant.
    pub fn max_constant(&self) -> f64 {
        self.frame_constants.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Frame vector `f_i` in original-basis coordinates.
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    /// Expresses an original-basis vector in frame coordinates.
    pub fn to_frame(&self, metric: &Metric, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        // Frame orthonormality makes the coefficient of f_i equal g(x, f_i).
        Ok(self.basis.transpose() * metric.matrix() * x)
    }

    /// Maps frame coordinates back to the original basis.
    pub fn from_frame(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        if coeffs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coeffs.len(),
            });
        }
        Ok(&self.basis * coeffs)
    }

    /// Largest violation among the defining frame identities:
    /// orthonormality, diagonalization, and the pairing symmetry
    /// `c_{ij}^l λ_l = c_{jl}^i λ_i`.
    pub fn max_defect(&self, metric: &Metric, form: &InvariantForm) -> f64 {
        let n = self.dim;
        let gram = self.basis.transpose() * metric.matrix() * &self.basis;
        let mut worst = (gram - DMatrix::identity(n, n)).amax();

        let paired = self.basis.transpose() * form.matrix() * &self.basis;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { self.lambda[i] } else { 0.0 };
                worst = worst.max((paired[(i, j)] - expect).abs());
            }
        }

        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let lhs = self.c(i, j, l) * self.lambda[l];
                    let rhs = self.c(j, l, i) * self.lambda[i];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }
}

/// Builds the adapted frame for `(g, B)` on `alg`.
///
/// Whitening by the Cholesky factor of `g` turns the problem into a plain
/// symmetric eigendecomposition; eigenvectors are pulled back through the
/// factor and deterministically ordered (eigenvalues decreasing; within a
/// tie the original-basis component of largest index-major magnitude is
/// made positive, which pins signs and makes runs reproducible).
pub fn adapted_frame(
    alg: &LieAlgebra,
    metric: &Metric,
    form: &InvariantForm,
) -> Result<AdaptedFrame> {
    let n = alg.dim();
    if metric.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: metric.dim(),
        });
    }
    if form.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: form.dim(),
        });
    }
    form.check_nondegenerate(1e-12)?;

    let chol = metric
        .matrix()
        .clone()
        .cholesky()
        .expect("checked positive definite at construction");
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("Cholesky factor not invertible".into()))?;

    // Whitened form: L^{-1} B L^{-T}, symmetric by construction.
    let mut w = &l_inv * form.matrix() * l_inv.transpose();
    // Symmetrize away roundoff so SymmetricEigen sees an exact symmetric input.
    w = (&w + w.transpose()) * 0.5;
    let eig = w.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut basis = DMatrix::zeros(n, n);
    let mut lambda = Vec::with_capacity(n);
    for (slot, &src) in order.iter().enumerate() {
        let ev = eig.eigenvalues[src];
        if ev == 0.0 {
            return Err(Error::DegenerateForm(
                "form has a zero eigenvalue in the metric frame".into(),
            ));
        }
        // Pull back through the whitening transform.
        let mut f = l_inv.transpose() * eig.eigenvectors.column(src);
        // Deterministic sign: largest-magnitude component positive, first
        // index winning ties.
        let mut pivot = 0;
        for r in 1..n {
            if f[r].abs() > f[pivot].abs() + 1e-12 {
                pivot = r;
            }
        }
        if f[pivot] < 0.0 {
            f = -f;
        }
        basis.set_column(slot, &f);
        lambda.push(ev);
    }

    frame_from_orthonormal_basis(alg, metric, basis, lambda)
}

/// Builds an [`AdaptedFrame`] from an explicitly given g-orthonormal basis
/// (columns) and the form eigenvalues paired with it. Frame structure
/// constants come from brackets of the basis columns, re-expanded in the
/// frame via g-orthonormality. Callers guarantee the basis actually
/// diagonalizes the form; [`AdaptedFrame::max_defect`] verifies.
pub fn frame_from_orthonormal_basis(
    alg: &LieAlgebra,
    metric: &Metric,
    basis: DMatrix<f64>,
    lambda: Vec<f64>,
) -> Result<AdaptedFrame> {
    let n = alg.dim();
    if basis.nrows() != n || basis.ncols() != n || lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: basis.nrows().max(lambda.len()),
        });
    }
    let g_basis = metric.matrix() * &basis;
    let mut frame_constants = vec![0.0; n * n * n];
    for i in 0..n {
        let fi = basis.column(i).into_owned();
        for j in (i + 1)..n {
            let fj = basis.column(j).into_owned();
            let br = alg.bracket(&fi, &fj)?;
            let coeffs = g_basis.transpose() * &br;
            for k in 0..n {
                frame_constants[(i * n + j) * n + k] = coeffs[k];
                frame_constants[(j * n + i) * n + k] = -coeffs[k];
            }
        }
    }
    AdaptedFrame::from_parts(basis, lambda, frame_constants)
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(())
}
