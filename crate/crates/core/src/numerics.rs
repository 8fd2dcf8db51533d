//! Dense linear-algebra kernel shared by the estimators.
//!
//! Least squares goes through a Householder QR of the design matrix; the
//! generalized inverse of a symmetric matrix goes through its eigen
//! decomposition. Rank decisions use the eigenvalue cutoff
//! `k * max|lambda| * 1e-12`; designs whose column-equilibrated condition
//! number exceeds `1e12` are rejected as singular.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-major dense matrix of finite reals.
pub type DenseMatrix = DMatrix<f64>;

/// Condition number above which a design is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

const RANK_CUTOFF: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Output of [`solve_least_squares`].
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(X'X)^-1`, the unscaled covariance of `beta`.
    pub xtx_inverse: DenseMatrix,
}

impl LeastSquares {
    pub fn ssr(&self) -> f64 {
        self.residuals.norm_squared()
    }
}

/// Ordinary least squares via QR.
///
/// Fails with [`Error::SingularDesign`] when the column-equilibrated
/// condition number exceeds [`SINGULAR_CONDITION`]. The error names columns
/// `col0`, `col1`, ... that load on the near-null space; use
/// [`solve_least_squares_named`] to get real names.
pub fn solve_least_squares(x: &DenseMatrix, y: &DVector<f64>) -> Result<LeastSquares> {
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("col{j}")).collect();
    solve_least_squares_named(x, y, &names)
}

pub fn solve_least_squares_named(
    x: &DenseMatrix,
    y: &DVector<f64>,
    names: &[String],
) -> Result<LeastSquares> {
    let (n, k) = x.shape();
    if k == 0 {
        return Err(Error::Dimension("design matrix has no columns".into()));
    }
    if n != y.len() {
        return Err(Error::Dimension(format!(
            "design has {n} rows but response has {} entries",
            y.len()
        )));
    }
    if n < k {
        return Err(Error::Dimension(format!(
            "{n} observations for {k} parameters"
        )));
    }
    if names.len() != k {
        return Err(Error::Dimension(format!(
            "{} column names for {k} columns",
            names.len()
        )));
    }
    check_design(x, names)?;

    let qr = x.clone().qr();
    let r = qr.r();
    let q = qr.q();
    let qty = q.transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| singular(f64::INFINITY, names.to_vec()))?;
    let residuals = y - x * &beta;
    let r_inv = r
        .solve_upper_triangular(&DenseMatrix::identity(k, k))
        .ok_or_else(|| singular(f64::INFINITY, names.to_vec()))?;
    let xtx_inverse = symmetrize(&(&r_inv * r_inv.transpose()));
    Ok(LeastSquares {
        beta,
        residuals,
        xtx_inverse,
    })
}

fn singular(condition: f64, columns: Vec<String>) -> Error {
    Error::SingularDesign { condition, columns }
}

/// Rejects designs that are numerically rank deficient, naming the columns
/// that participate in the near-null direction(s).
fn check_design(x: &DenseMatrix, names: &[String]) -> Result<()> {
    let k = x.ncols();
    let mut scaled = x.clone();
    for j in 0..k {
        let norm = scaled.column(j).norm();
        if norm == 0.0 {
            return Err(singular(f64::INFINITY, vec![names[j].clone()]));
        }
        scaled.column_mut(j).scale_mut(1.0 / norm);
    }
    let svd = scaled.svd(false, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition <= SINGULAR_CONDITION {
        return Ok(());
    }
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut offending = vec![false; k];
    for (idx, s) in svd.singular_values.iter().enumerate() {
        if *s <= smax / SINGULAR_CONDITION {
            for j in 0..k {
                if v_t[(idx, j)].abs() > 1e-6 {
                    offending[j] = true;
                }
            }
        }
    }
    let columns = names
        .iter()
        .zip(offending)
        .filter_map(|(n, bad)| bad.then(|| n.clone()))
        .collect();
    Err(singular(condition, columns))
}

/// Eigenvalue-based generalized inverse together with its numerical rank.
#[derive(Debug, Clone)]
pub struct GeneralizedInverse {
    pub matrix: DenseMatrix,
    pub rank: usize,
    pub dim: usize,
}

impl GeneralizedInverse {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim
    }
}

/// Moore-Penrose inverse of a symmetric matrix.
pub fn generalized_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(generalized_inverse_with_rank(a)?.matrix)
}

pub fn generalized_inverse_with_rank(a: &DenseMatrix) -> Result<GeneralizedInverse> {
    pseudo_inverse_impl(a, false).map(|(g, _)| g)
}

/// Generalized inverse restricted to the positive part of the spectrum.
///
/// Eigenvalues at or below the rank cutoff (including negative ones) are
/// zeroed, so `v' A^+ v >= 0` for every `v`. The returned flag is true when
/// `A` itself is not positive definite.
pub fn positive_part_inverse(a: &DenseMatrix) -> Result<(GeneralizedInverse, bool)> {
    pseudo_inverse_impl(a, true)
}

fn pseudo_inverse_impl(a: &DenseMatrix, positive_only: bool) -> Result<(GeneralizedInverse, bool)> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::Dimension(format!("{n}x{m} matrix is not square")));
    }
    if n == 0 {
        return Ok((
            GeneralizedInverse {
                matrix: DenseMatrix::zeros(0, 0),
                rank: 0,
                dim: 0,
            },
            false,
        ));
    }
    let scale = a.amax().max(1.0);
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = symmetrize(a).symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    let tol = n as f64 * lmax * RANK_CUTOFF;
    let mut inv_vals = DVector::zeros(n);
    let mut rank = 0;
    let mut not_pd = false;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= tol {
            not_pd = true;
        }
        let keep = if positive_only { l > tol } else { l.abs() > tol };
        if keep && lmax > 0.0 {
            inv_vals[i] = 1.0 / l;
            rank += 1;
        }
    }
    let v = &eig.eigenvectors;
    let matrix = symmetrize(&(v * DMatrix::from_diagonal(&inv_vals) * v.transpose()));
    Ok((GeneralizedInverse { matrix, rank, dim: n }, not_pd))
}

/// `v' W v`.
pub fn quadratic_form(v: &DVector<f64>, w: &DenseMatrix) -> Result<f64> {
    let k = v.len();
    if w.shape() != (k, k) {
        return Err(Error::Dimension(format!(
            "vector of length {k} against {}x{} matrix",
            w.nrows(),
            w.ncols()
        )));
    }
    Ok(v.dot(&(w * v)))
}

/// Inverse of a symmetric positive definite matrix, falling back to the
/// generalized inverse when Cholesky fails. The flag reports the fallback.
pub fn spd_inverse(a: &DenseMatrix) -> Result<(DenseMatrix, bool)> {
    let sym = symmetrize(a);
    if let Some(chol) = sym.clone().cholesky() {
        return Ok((symmetrize(&chol.inverse()), false));
    }
    Ok((generalized_inverse(&sym)?, true))
}

pub fn max_asymmetry(a: &DenseMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    (a + a.transpose()) * 0.5
}
