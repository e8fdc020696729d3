//! Pointwise algebra of symmetric operators.
//!
//! A [`SymOp`] is a dense symmetric matrix acting on an `m`-dimensional inner
//! product space (in practice the tangent space of a chart, expressed in a
//! g-orthonormal frame). On top of it this module provides the spectrum,
//! elementary symmetric polynomials `S_j`, the Newton operators
//! `P_0 = I, P_j = S_j I - T P_{j-1}` and checkable forms of the classical
//! identities they satisfy:
//!
//! - `P_j e_k = S_j(T_k) e_k`, where `T_k` is `T` restricted to `{e_k}^⊥`;
//! - `tr P_j = (m - j) S_j`;
//! - `tr(T P_j) = (j + 1) S_{j+1}`;
//! - `tr(T² P_j) = S_1 S_{j+1} - (j + 2) S_{j+2}`;
//! - `S_{j+1} = 0` implies `P_j` is semidefinite;
//! - `S_{j-1} = S_j = 0` implies `rank T <= j - 2`.
//!
//! The Newton recursion is evaluated in matrix form. The spectral form is only
//! used for the right-hand sides, so the identity checks cross-validate two
//! independent routes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric operator. Construction symmetrizes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOp {
    matrix: DMatrix<f64>,
}

impl SymOp {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Domain(format!(
                "symmetric operator needs a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite operator entry".into()));
        }
        Ok(Self::symmetrized(matrix))
    }

    fn symmetrized(mut matrix: DMatrix<f64>) -> Self {
        let m = matrix.nrows();
        for i in 0..m {
            for j in (i + 1)..m {
                let s = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
                matrix[(i, j)] = s;
                matrix[(j, i)] = s;
            }
        }
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "operator dimension must be positive");
        Self {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    /// `V diag(λ) Vᵀ` for an orthonormal `V`.
    pub fn from_spectrum(eigenvalues: &[f64], eigenvectors: &DMatrix<f64>) -> Self {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues));
        Self::symmetrized(eigenvectors * d * eigenvectors.transpose())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * s,
        }
    }

    /// Eigendecomposition with eigenvalues sorted ascending.
    pub fn spectrum(&self) -> Spectrum {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum().eigenvalues
    }
}

/// Sorted eigenvalues with an orthonormal eigenvector matrix (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// A spectrum given directly by its eigenvalues, with the standard basis as
    /// eigenvectors. Values are sorted.
    pub fn from_eigenvalues(values: &[f64]) -> Self {
        let mut eigenvalues = values.to_vec();
        eigenvalues.sort_by(f64::total_cmp);
        let m = eigenvalues.len();
        Self {
            eigenvalues,
            eigenvectors: DMatrix::identity(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> SymOp {
        SymOp::from_spectrum(&self.eigenvalues, &self.eigenvectors)
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// All elementary symmetric polynomials `S_0..=S_m` of `values`.
pub fn symmetric_polynomials(values: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; values.len() + 1];
    s[0] = 1.0;
    for (n, &x) in values.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            s[k] += x * s[k - 1];
        }
    }
    s
}

/// `S_k` with the convention `S_k = 0` for `k > m`.
pub(crate) fn sym_or_zero(s: &[f64], k: usize) -> f64 {
    s.get(k).copied().unwrap_or(0.0)
}

pub fn elementary_symmetric(spec: &Spectrum, j: usize) -> Result<f64> {
    if j > spec.dim() {
        return Err(Error::Domain(format!(
            "symmetric polynomial index {j} exceeds dimension {}",
            spec.dim()
        )));
    }
    Ok(symmetric_polynomials(&spec.eigenvalues)[j])
}

/// `S_j(T_k)`: the `j`-th symmetric polynomial of the spectrum with the
/// eigenvalue `λ_k` removed. `k` is 1-based.
pub fn restricted_symmetric(spec: &Spectrum, k: usize, j: usize) -> Result<f64> {
    let m = spec.dim();
    if k == 0 || k > m {
        return Err(Error::Domain(format!(
            "eigenvalue index {k} outside 1..={m}"
        )));
    }
    if j + 1 > m {
        return Err(Error::Domain(format!(
            "restricted polynomial index {j} outside 0..={}",
            m - 1
        )));
    }
    let rest: Vec<f64> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k - 1)
        .map(|(_, &x)| x)
        .collect();
    Ok(symmetric_polynomials(&rest)[j])
}

/// All Newton operators `P_0..=P_m` of `t`, by the matrix recursion.
pub fn newton_operators(t: &SymOp) -> Vec<SymOp> {
    let m = t.dim();
    let s = symmetric_polynomials(&t.eigenvalues());
    let id = DMatrix::<f64>::identity(m, m);
    let mut out = Vec::with_capacity(m + 1);
    let mut prev = id.clone();
    out.push(SymOp::identity(m));
    for sj in s.iter().skip(1) {
        let next = &id * *sj - t.matrix() * &prev;
        out.push(SymOp::symmetrized(next.clone()));
        prev = next;
    }
    out
}

pub fn newton_operator(t: &SymOp, j: usize) -> Result<SymOp> {
    if j > t.dim() {
        return Err(Error::Domain(format!(
            "Newton operator index {j} exceeds dimension {}",
            t.dim()
        )));
    }
    Ok(newton_operators(t).swap_remove(j))
}

/// Relative residuals of the three trace identities for `P_j(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceResiduals {
    /// `tr P_j - (m - j) S_j`
    pub r_b: f64,
    /// `tr(T P_j) - (j + 1) S_{j+1}`
    pub r_c: f64,
    /// `tr(T² P_j) - (S_1 S_{j+1} - (j + 2) S_{j+2})`
    pub r_d: f64,
}

impl TraceResiduals {
    pub fn max(&self) -> f64 {
        self.r_b.max(self.r_c).max(self.r_d)
    }
}

fn relative(lhs: f64, rhs: f64, scale: f64) -> f64 {
    (lhs - rhs).abs() / scale.abs().max(lhs.abs()).max(rhs.abs()).max(1.0)
}

pub fn trace_identities(t: &SymOp, j: usize) -> Result<TraceResiduals> {
    let m = t.dim();
    if j == 0 || j >= m {
        return Err(Error::Domain(format!(
            "trace identities need 1 <= j <= m - 1, got j = {j}, m = {m}"
        )));
    }
    let s = symmetric_polynomials(&t.eigenvalues());
    let p = newton_operator(t, j)?;
    let tp = t.matrix() * p.matrix();
    let ttp = t.matrix() * &tp;

    let sj1 = sym_or_zero(&s, j + 1);
    let sj2 = sym_or_zero(&s, j + 2);

    let rhs_b = (m - j) as f64 * s[j];
    let rhs_c = (j + 1) as f64 * sj1;
    let t1 = s[1] * sj1;
    let t2 = (j + 2) as f64 * sj2;
    Ok(TraceResiduals {
        r_b: relative(p.trace(), rhs_b, 0.0),
        r_c: relative(tp.trace(), rhs_c, 0.0),
        r_d: relative(ttp.trace(), t1 - t2, t1.abs().max(t2.abs())),
    })
}

/// Largest relative deviation of `P_j(T) e_k` from `S_j(T_k) e_k` over the
/// eigenbasis of `T`.
pub fn eigen_identity_residual(t: &SymOp, j: usize) -> Result<f64> {
    let m = t.dim();
    if j >= m {
        return Err(Error::Domain(format!(
            "eigenvector identity needs j <= m - 1, got j = {j}, m = {m}"
        )));
    }
    let spec = t.spectrum();
    let p = newton_operator(t, j)?;
    let scale = p.norm().max(1.0);
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let e = spec.eigenvector(k);
        let expected = restricted_symmetric(&spec, k + 1, j)?;
        let diff = p.apply(&e) - &e * expected;
        worst = worst.max(diff.norm() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    PositiveSemi,
    NegativeSemi,
    Indefinite,
}

/// Classification by eigenvalue signs with slack `tol · max(1, max|λ|)`.
/// The zero operator counts as positive semidefinite.
pub fn semidefinite_class(t: &SymOp, tol: f64) -> Definiteness {
    let spec = t.spectrum();
    let slack = tol * spec.max_abs().max(1.0);
    let lo = spec.eigenvalues[0];
    let hi = spec.eigenvalues[spec.dim() - 1];
    if lo >= -slack {
        Definiteness::PositiveSemi
    } else if hi <= slack {
        Definiteness::NegativeSemi
    } else {
        Definiteness::Indefinite
    }
}

/// Number of singular values above `tol · σ_max`.
pub fn numeric_rank(t: &SymOp, tol: f64) -> usize {
    let spec = t.spectrum();
    let smax = spec.max_abs();
    if smax == 0.0 {
        return 0;
    }
    spec.eigenvalues
        .iter()
        .filter(|x| x.abs() > tol * smax)
        .count()
}

/// Checks the contrapositive of the rank lemma on one instance: returns
/// `false` only if `S_{j-1} ≈ 0`, `S_j ≈ 0` and yet `rank T > j - 2`.
pub fn rank_bound_witness(t: &SymOp, j: usize, tol: f64) -> Result<bool> {
    let m = t.dim();
    if j < 2 || j > m {
        return Err(Error::Domain(format!(
            "rank witness needs 2 <= j <= m, got j = {j}, m = {m}"
        )));
    }
    let spec = t.spectrum();
    let s = symmetric_polynomials(spec.eigenvalues());
    let scale = spec.max_abs().max(1.0);
    let vanishes = |k: usize| s[k].abs() <= tol * scale.powi(k as i32);
    let hypothesis = vanishes(j - 1) && vanishes(j);
    Ok(!(hypothesis && numeric_rank(t, tol) > j - 2))
}

/// Random operators for the identity suites.
pub mod sampling {
    use super::*;

    /// Symmetric matrix with entries uniform in `[-1, 1]`.
    pub fn random_symmetric<R: Rng>(rng: &mut R, m: usize) -> SymOp {
        let a = DMatrix::<f64>::from_fn(m, m, |_, _| rng.random_range(-1.0..=1.0));
        SymOp::symmetrized(a)
    }

    /// Orthogonal matrix from the QR factorization of a Gaussian-like matrix.
    pub fn random_orthogonal<R: Rng>(rng: &mut R, m: usize) -> DMatrix<f64> {
        loop {
            let a = DMatrix::<f64>::from_fn(m, m, |_, _| rng.random_range(-1.0..=1.0));
            let qr = a.qr();
            let r = qr.r();
            if (0..m).all(|i| r[(i, i)].abs() > 1e-3) {
                return qr.q();
            }
        }
    }

    /// Eigenvalues with `S_k = 0` exactly up to rounding: `m - 1` values are
    /// drawn freely and the last one solves the linear equation
    /// `λ_m S_{k-1}(λ') + S_k(λ') = 0`. Draws with a small cofactor are
    /// rejected and resampled.
    pub fn constrained_eigenvalues<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<f64> {
        assert!(k >= 1 && k <= m, "constraint index must lie in 1..=m");
        loop {
            let free: Vec<f64> = (0..m - 1).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let s = symmetric_polynomials(&free);
            let cofactor = s[k - 1];
            let rest = sym_or_zero(&s, k);
            if cofactor.abs() < 0.05 {
                continue;
            }
            let last = -rest / cofactor;
            if last.abs() > 20.0 {
                continue;
            }
            let mut values = free;
            values.push(last);
            return values;
        }
    }

    /// Symmetric operator whose spectrum satisfies `S_k = 0`.
    pub fn operator_with_vanishing<R: Rng>(rng: &mut R, m: usize, k: usize) -> SymOp {
        let values = constrained_eigenvalues(rng, m, k);
        let q = random_orthogonal(rng, m);
        SymOp::from_spectrum(&values, &q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force oracle: sum of products over all `j`-subsets.
    fn subset_sum(values: &[f64], j: usize) -> f64 {
        let m = values.len();
        (0u32..(1 << m))
            .filter(|mask| mask.count_ones() as usize == j)
            .map(|mask| {
                (0..m)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| values[i])
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn elementary_symmetric_examples() {
        let spec = Spectrum::from_eigenvalues(&[1.0, 2.0, 3.0]);
        assert_eq!(subset_sum(&[1.0, 2.0, 3.0], 2), 11.0);
        assert_eq!(elementary_symmetric(&spec, 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&spec, 3).unwrap(), 6.0);
        let ones = Spectrum::from_eigenvalues(&[1.0, 1.0, 1.0]);
        assert_eq!(elementary_symmetric(&ones, 0).unwrap(), 1.0);
        assert!(matches!(
            elementary_symmetric(&spec, 4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn symmetric_polynomials_match_subset_oracle() {
        let values = [0.3, -1.2, 2.5, 0.7, -0.4];
        let s = symmetric_polynomials(&values);
        for (j, &sj) in s.iter().enumerate() {
            assert_abs_diff_eq!(sj, subset_sum(&values, j), epsilon = 1e-12);
        }
    }

    #[test]
    fn newton_operator_examples() {
        let p = newton_operator(&SymOp::identity(3), 1).unwrap();
        assert_eq!(p, SymOp::from_diagonal(&[2.0, 2.0, 2.0]));

        let t = SymOp::from_diagonal(&[1.0, 2.0, 3.0]);
        let p1 = newton_operator(&t, 1).unwrap();
        assert_eq!(p1, SymOp::from_diagonal(&[5.0, 4.0, 3.0]));
        // Oracle: eigenvalue on e_k is S_1 of the other two eigenvalues.
        for k in 0..3 {
            let rest: Vec<f64> = [1.0, 2.0, 3.0]
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, v)| *v)
                .collect();
            assert_eq!(p1.get(k, k), subset_sum(&rest, 1));
        }

        let p3 = newton_operator(&t, 3).unwrap();
        assert_abs_diff_eq!(p3.trace(), 0.0, epsilon = 1e-12);
        assert!(newton_operator(&t, 4).is_err());
    }

    #[test]
    fn restricted_symmetric_examples() {
        let spec = Spectrum::from_eigenvalues(&[1.0, 2.0, 3.0]);
        assert_eq!(restricted_symmetric(&spec, 1, 1).unwrap(), 5.0);
        assert_eq!(restricted_symmetric(&spec, 2, 0).unwrap(), 1.0);
        assert_eq!(restricted_symmetric(&spec, 3, 2).unwrap(), 2.0);
        assert!(restricted_symmetric(&spec, 0, 1).is_err());
        assert!(restricted_symmetric(&spec, 4, 1).is_err());
        assert!(restricted_symmetric(&spec, 1, 3).is_err());
    }

    #[test]
    fn trace_identity_examples() {
        let t = SymOp::from_diagonal(&[1.0, 2.0, 3.0]);
        let p1 = newton_operator(&t, 1).unwrap();
        let tp = t.matrix() * p1.matrix();
        assert_eq!(tp, DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 8.0, 9.0])));
        assert_eq!(tp.trace(), 22.0);
        let ttp = t.matrix() * &tp;
        assert_eq!(ttp.trace(), 48.0);
        let r = trace_identities(&t, 1).unwrap();
        assert_eq!(r.r_c, 0.0);
        assert_eq!(r.r_d, 0.0);
        assert_eq!(r.r_b, 0.0);

        for j in 1..4 {
            let r = trace_identities(&SymOp::zeros(4), j).unwrap();
            assert_eq!(r.max(), 0.0);
        }
        assert!(trace_identities(&t, 0).is_err());
        assert!(trace_identities(&t, 3).is_err());
    }

    #[test]
    fn identity_operator_has_zero_residuals() {
        let t = SymOp::identity(4);
        for j in 1..4 {
            assert_eq!(trace_identities(&t, j).unwrap().max(), 0.0);
            assert_eq!(eigen_identity_residual(&t, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn semidefinite_examples() {
        let p = newton_operator(&SymOp::from_diagonal(&[1.0, -1.0]), 1).unwrap();
        assert_eq!(p, SymOp::from_diagonal(&[-1.0, 1.0]));
        assert_eq!(semidefinite_class(&p, 1e-9), Definiteness::Indefinite);

        let p = newton_operator(&SymOp::from_diagonal(&[1.0, 0.0]), 1).unwrap();
        assert_eq!(p, SymOp::from_diagonal(&[0.0, 1.0]));
        assert_eq!(semidefinite_class(&p, 1e-9), Definiteness::PositiveSemi);

        let t = SymOp::identity(4);
        for j in 0..=4 {
            let p = newton_operator(&t, j).unwrap();
            assert_eq!(semidefinite_class(&p, 1e-9), Definiteness::PositiveSemi);
        }
        assert_eq!(
            semidefinite_class(&SymOp::from_diagonal(&[-2.0, -1.0]), 0.0),
            Definiteness::NegativeSemi
        );
    }

    #[test]
    fn rank_witness_examples() {
        let t = SymOp::from_diagonal(&[1.0, 0.0, 0.0]);
        assert!(rank_bound_witness(&t, 2, 1e-8).unwrap());
        let t = SymOp::from_diagonal(&[2.5, 0.0, 0.0, 0.0]);
        let s = symmetric_polynomials(&t.eigenvalues());
        assert_eq!((s[2], s[3]), (0.0, 0.0));
        assert_eq!(numeric_rank(&t, 1e-8), 1);
        assert!(rank_bound_witness(&t, 3, 1e-8).unwrap());
        for j in 2..=4 {
            assert!(rank_bound_witness(&SymOp::zeros(4), j, 1e-8).unwrap());
        }
        assert!(rank_bound_witness(&t, 1, 1e-8).is_err());
        // A full-rank operator with S_1 = S_2 = 0 cannot exist; a forged
        // diagonal violating the bound is caught.
        assert_eq!(numeric_rank(&SymOp::identity(3), 1e-8), 3);
    }

    #[test]
    fn spectrum_is_sorted_and_orthonormal() {
        let t = SymOp::new(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 1.0, 0.0, 1.0, -1.0, 0.5, 0.0, 0.5, 3.0],
        ))
        .unwrap();
        let spec = t.spectrum();
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        let v = spec.eigenvectors();
        let orth = v.transpose() * v - DMatrix::identity(3, 3);
        assert!(orth.norm() < 1e-10);
        assert!((spec.reconstruct().matrix() - t.matrix()).norm() < 1e-10 * (1.0 + t.norm()));
    }

    #[test]
    fn construction_symmetrizes_exactly() {
        let t = SymOp::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 2.0])).unwrap();
        assert_eq!(t.get(0, 1), t.get(1, 0));
        assert_eq!(t.get(0, 1), 0.2);
        assert!(SymOp::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymOp::new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn constrained_spectrum_has_vanishing_polynomial() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for m in 2..=6 {
            for k in 1..=m {
                let values = sampling::constrained_eigenvalues(&mut rng, m, k);
                let s = symmetric_polynomials(&values);
                assert!(s[k].abs() < 1e-12, "m={m} k={k} S_k={}", s[k]);
            }
        }
    }
}
