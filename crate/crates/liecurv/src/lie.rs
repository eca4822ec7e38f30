//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! An algebra of dimension `n` is determined by the constants `C[i][j][k]`
//! in `[e_i, e_j] = Σ_k C[i][j][k] e_k`. Only the entries with `i < j` are
//! stored; the `i > j` entries are mirrored with a sign flip on access, so
//! antisymmetry of the bracket holds at the representation level and can
//! never be violated by construction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A real Lie algebra represented by its structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    /// Packed `C[i][j][k]` for `i < j`: index `pair(i, j) * dim + k`.
    constants: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl LieAlgebra {
    /// Builds an algebra from sparse bracket records `(i, j, k, c)` meaning
    /// `C[i][j][k] = c`, indices 0-based with `i < j`. Repeated records for
    /// the same `(i, j, k)` accumulate.
    pub fn from_brackets(dim: usize, brackets: &[(usize, usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut constants = vec![0.0; dim * (dim - 1) / 2 * dim];
        for &(i, j, k, c) in brackets {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidInput(format!(
                    "bracket index ({i}, {j}, {k}) out of range for dimension {dim}"
                )));
            }
            if i >= j {
                return Err(Error::InvalidInput(format!(
                    "bracket record must have i < j, got ({i}, {j})"
                )));
            }
            constants[pair_index(dim, i, j) * dim + k] += c;
        }
        Ok(Self {
            dim,
            constants,
            labels: None,
        })
    }

    /// The abelian algebra of the given dimension (all brackets zero).
    pub fn abelian(dim: usize) -> Self {
        Self::from_brackets(dim, &[]).expect("positive dimension")
    }

    /// Attaches basis-element names used in reports. Metadata only.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Structure constant `C[i][j][k]`, mirrored for `i > j`.
    #[inline]
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Less => self.constants[pair_index(self.dim, i, j) * self.dim + k],
            Ordering::Greater => -self.constants[pair_index(self.dim, j, i) * self.dim + k],
            Ordering::Equal => 0.0,
        }
    }

    /// Largest absolute structure constant; used to scale validation
    /// tolerances.
    pub fn max_constant(&self) -> f64 {
        self.constants.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Iterates the stored nonzero records as `(i, j, k, c)` with `i < j`.
    pub fn bracket_records(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        (0..self.dim)
            .flat_map(move |i| (i + 1..self.dim).map(move |j| (i, j)))
            .flat_map(move |(i, j)| {
                (0..self.dim).filter_map(move |k| {
                    let c = self.constants[pair_index(self.dim, i, j) * self.dim + k];
                    (c != 0.0).then_some((i, j, k, c))
                })
            })
    }

    /// Bracket `[x, y]` by antisymmetrized accumulation over stored pairs,
    /// so `[x, x] = 0` holds exactly in floating point.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x)?;
        self.check_len(y)?;
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let w = x[i] * y[j] - x[j] * y[i];
                if w == 0.0 {
                    continue;
                }
                let base = pair_index(n, i, j) * n;
                for k in 0..n {
                    out[k] += w * self.constants[base + k];
                }
            }
        }
        Ok(out)
    }

    /// Bracket of basis vectors `[e_i, e_j]` as a coefficient vector.
    pub fn bracket_basis(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| self.structure_constant(i, j, k))
    }

    /// Matrix of `ad x = [x, ·]`: column `j` is `[x, e_j]`.
    pub fn ad_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += x[i] * self.structure_constant(i, j, k);
                }
                m[(k, j)] = acc;
            }
        }
        Ok(m)
    }

    /// Matrix of `ad e_i`.
    pub fn ad_basis(&self, i: usize) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| self.structure_constant(i, j, k))
    }

    /// Checks the Jacobi identity over all basis triples. The reported
    /// violation is the largest coefficient of
    /// `[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]`, and the pass
    /// threshold is `tol * (1 + max|C|)^2` so that families with large
    /// constants validate consistently.
    pub fn validate_jacobi(&self, tol: f64) -> Result<ValidationReport> {
        if tol <= 0.0 {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let mut cycle = self
                        .bracket(&self.bracket_basis(i, j), &basis_vector(n, k))
                        .expect("basis lengths agree");
                    cycle += self
                        .bracket(&self.bracket_basis(j, k), &basis_vector(n, i))
                        .expect("basis lengths agree");
                    cycle += self
                        .bracket(&self.bracket_basis(k, i), &basis_vector(n, j))
                        .expect("basis lengths agree");
                    worst = worst.max(cycle.amax());
                }
            }
        }
        let threshold = tol * (1.0 + self.max_constant()).powi(2);
        Ok(ValidationReport {
            max_violation: worst,
            threshold,
            pass: worst <= threshold,
        })
    }

    /// Unimodularity check: `tr ad e_i = 0` for every basis vector. Returns
    /// the verdict together with the largest trace magnitude.
    pub fn is_unimodular(&self, tol: f64) -> Result<(bool, f64)> {
        if tol <= 0.0 {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        let max_trace = self.max_ad_trace();
        Ok((max_trace <= tol, max_trace))
    }

    /// Largest `|tr ad e_i|` over the basis.
    pub fn max_ad_trace(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| self.structure_constant(i, k, k))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_len(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Outcome of an axiom check, with the scaled threshold that was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub max_violation: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Standard basis vector `e_i` of length `n`.
pub fn basis_vector(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

#[inline]
fn pair_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    i * (2 * dim - i - 1) / 2 + (j - i - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// The 4-dimensional solvable algebra with [D,X]=X, [D,Y]=-Y, [X,Y]=Z
    /// in the basis (D, X, Y, Z).
    fn solvable4() -> LieAlgebra {
        LieAlgebra::from_brackets(4, &[(0, 1, 1, 1.0), (0, 2, 2, -1.0), (1, 2, 3, 1.0)]).unwrap()
    }

    /// so(3): [e1,e2]=e3 cyclic.
    fn so3() -> LieAlgebra {
        LieAlgebra::from_brackets(3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 1, -1.0)]).unwrap()
    }

    #[test]
    fn bracket_matches_structure_constants() {
        let alg = solvable4();
        let d = basis_vector(4, 0);
        let x = basis_vector(4, 1);
        let y = basis_vector(4, 2);
        assert_eq!(alg.bracket(&d, &x).unwrap(), x);
        assert_eq!(alg.bracket(&d, &y).unwrap(), -&y);
        assert_eq!(alg.bracket(&x, &y).unwrap(), basis_vector(4, 3));
        // mirrored access
        assert_eq!(alg.structure_constant(1, 0, 1), -1.0);
        assert_eq!(alg.structure_constant(1, 1, 1), 0.0);
    }

    #[test]
    fn abelian_brackets_vanish() {
        let alg = LieAlgebra::abelian(5);
        let x = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5, -0.1]);
        let y = DVector::from_vec(vec![0.3, 1.0, -1.0, 2.0, 4.0]);
        assert_eq!(alg.bracket(&x, &y).unwrap(), DVector::zeros(5));
    }

    #[test]
    fn bracket_of_vector_with_itself_is_exactly_zero() {
        let alg = so3();
        let x = DVector::from_vec(vec![0.123456, -7.2, 3.000001]);
        let b = alg.bracket(&x, &x).unwrap();
        assert!(b.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn ad_matrix_of_diagonal_generator() {
        let alg = solvable4();
        let ad_d = alg.ad_matrix(&basis_vector(4, 0)).unwrap();
        // [D, X] = X and [D, Y] = -Y: eigenvalues 1, -1, 0, 0 on the diagonal.
        let mut expect = DMatrix::zeros(4, 4);
        expect[(1, 1)] = 1.0;
        expect[(2, 2)] = -1.0;
        assert_eq!(ad_d, expect);
    }

    #[test]
    fn ad_matrix_of_zero_is_zero() {
        let alg = solvable4();
        assert_eq!(
            alg.ad_matrix(&DVector::zeros(4)).unwrap(),
            DMatrix::zeros(4, 4)
        );
    }

    #[test]
    fn jacobi_holds_for_shipped_algebras() {
        for alg in [solvable4(), so3(), LieAlgebra::abelian(3)] {
            let report = alg.validate_jacobi(1e-12).unwrap();
            assert!(report.pass, "violation {}", report.max_violation);
            assert_eq!(report.max_violation, 0.0);
        }
    }

    #[test]
    fn unimodularity_detects_the_affine_algebra() {
        // [e1, e2] = e2 has tr ad e1 = 1.
        let affine = LieAlgebra::from_brackets(2, &[(0, 1, 1, 1.0)]).unwrap();
        let (uni, max_trace) = affine.is_unimodular(1e-12).unwrap();
        assert!(!uni);
        assert_relative_eq!(max_trace, 1.0);

        let (uni, max_trace) = solvable4().is_unimodular(1e-12).unwrap();
        assert!(uni, "max trace {max_trace}");
        assert_eq!(max_trace, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let alg = so3();
        let short = DVector::zeros(2);
        assert!(matches!(
            alg.bracket(&short, &short),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            alg.ad_matrix(&short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn bracket_is_bilinear_and_antisymmetric(
            xs in proptest::collection::vec(-5.0..5.0f64, 4),
            ys in proptest::collection::vec(-5.0..5.0f64, 4),
            zs in proptest::collection::vec(-5.0..5.0f64, 4),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let alg = solvable4();
            let x = DVector::from_vec(xs);
            let y = DVector::from_vec(ys);
            let z = DVector::from_vec(zs);

            let lhs = alg.bracket(&(a * &x + b * &y), &z).unwrap();
            let rhs = a * alg.bracket(&x, &z).unwrap() + b * alg.bracket(&y, &z).unwrap();
            let scale = 1.0 + lhs.amax().max(rhs.amax());
            prop_assert!((lhs - rhs).amax() <= 1e-12 * scale);

            let fw = alg.bracket(&x, &y).unwrap();
            let bw = alg.bracket(&y, &x).unwrap();
            prop_assert!(fw.iter().zip(bw.iter()).all(|(p, q)| *p == -*q));
        }

        #[test]
        fn ad_matrix_applies_the_bracket(
            xs in proptest::collection::vec(-5.0..5.0f64, 3),
            ys in proptest::collection::vec(-5.0..5.0f64, 3),
        ) {
            let alg = so3();
            let x = DVector::from_vec(xs);
            let y = DVector::from_vec(ys);
            let via_matrix = alg.ad_matrix(&x).unwrap() * &y;
            let direct = alg.bracket(&x, &y).unwrap();
            let scale = 1.0 + direct.amax();
            prop_assert!((via_matrix - direct).amax() <= 1e-12 * scale);
        }
    }
}
