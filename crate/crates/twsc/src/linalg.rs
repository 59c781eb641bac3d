//! Dense linear-algebra kernels for the patch-group solver: economy SVD with
//! singular-value flooring, the soft-thresholding proximal operator, and two
//! Sylvester-equation solvers for `A C + C B = E` with symmetric PSD `A` and
//! positive diagonal `B`.
//!
//! The slow solver assembles the Kronecker-lifted system and factors it
//! densely; it exists as the exactness reference and is size-guarded. The
//! fast solver eigendecomposes `A` once, after which the lifted system is
//! diagonal and the solve is elementwise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TwscError};

/// Relative floor applied to singular values so `diag(S)` stays invertible.
pub const SIGMA_FLOOR_REL: f64 = 1e-6;

/// Absolute fallback floor for an all-zero input, where the relative floor
/// would itself be zero.
pub const SIGMA_FLOOR_ABS: f64 = 1e-12;

/// Size guard for the dense Kronecker solver: it builds an (rM)x(rM) system.
pub const NAIVE_SIZE_GUARD: usize = 2000;

/// Economy SVD `Y = D diag(S) V^T` with `r = min(n, M)` retained factors.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Left singular vectors, n x r, orthonormal columns.
    pub d: DMatrix<f64>,
    /// Singular values, nonincreasing, floored strictly above zero.
    pub s: DVector<f64>,
    /// Right singular vectors, M x r, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// One Sylvester instance `A C + C B = E` with diagonal `B` stored as a vector.
#[derive(Debug, Clone)]
pub struct SylvesterProblem {
    pub a: DMatrix<f64>,
    /// Diagonal of B, all entries strictly positive.
    pub b_diag: DVector<f64>,
    pub e: DMatrix<f64>,
}

impl SylvesterProblem {
    /// Validates symmetry of `A`, positivity of `diag(B)`, and shape agreement.
    pub fn new(a: DMatrix<f64>, b_diag: DVector<f64>, e: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(TwscError::ShapeMismatch {
                context: "Sylvester A".into(),
                expected: "square".into(),
                actual: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        check_symmetric(&a)?;
        if b_diag.iter().any(|&b| b <= 0.0 || !b.is_finite()) {
            return Err(TwscError::InvalidParameter {
                name: "b_diag".into(),
                reason: "all diagonal entries of B must be strictly positive and finite".into(),
            });
        }
        if e.nrows() != a.nrows() || e.ncols() != b_diag.len() {
            return Err(TwscError::ShapeMismatch {
                context: "Sylvester E".into(),
                expected: format!("{}x{}", a.nrows(), b_diag.len()),
                actual: format!("{}x{}", e.nrows(), e.ncols()),
            });
        }
        Ok(Self { a, b_diag, e })
    }
}

/// Rejects matrices whose asymmetry exceeds 1e-10 relative to the largest entry.
fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let scale = a.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let tol = 1e-10 * scale;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > tol {
                return Err(TwscError::InvalidParameter {
                    name: "A".into(),
                    reason: format!(
                        "asymmetric beyond tolerance at ({i}, {j}): {} vs {}",
                        a[(i, j)],
                        a[(j, i)]
                    ),
                });
            }
        }
    }
    Ok(())
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(TwscError::NonFinite {
                    location: format!("{what}[{i}, {j}]"),
                    value: v,
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Economy SVD
// ---------------------------------------------------------------------------

/// Economy SVD of `y` with singular values sorted nonincreasing and floored at
/// `SIGMA_FLOOR_REL * max(S)` so that `diag(S)^-1` is always well defined.
///
/// Computed through the eigendecomposition of the smaller Gram matrix; with
/// all `r = min(n, M)` factors retained the reconstruction is a projection
/// onto the full smaller space and therefore exact up to roundoff. The
/// secondary factor is re-orthonormalized, and directions whose singular
/// value sits at the floor get orthonormal completion columns (their weight
/// in any downstream reconstruction is the floor itself).
pub fn economy_svd(y: &DMatrix<f64>) -> Result<SvdFactors> {
    if y.nrows() == 0 || y.ncols() == 0 {
        return Err(TwscError::InvalidParameter {
            name: "Y".into(),
            reason: "empty matrix".into(),
        });
    }
    check_finite(y, "Y")?;

    // The eigenbasis side is orthonormal already; only the rescaled side
    // needs re-orthonormalization and completion of floored directions.
    let n = y.nrows();
    let m = y.ncols();
    let (d, s, v) = if n <= m {
        let gram = y * y.transpose(); // n x n
        let (basis, mut sing) = sorted_gram_factors(gram);
        // V = Y^T D S^-1 column by column.
        let mut v = y.transpose() * &basis;
        rescale_and_floor(&mut sing, &mut v);
        orthonormalize_columns(&mut v);
        (basis, sing, v)
    } else {
        let gram = y.transpose() * y; // m x m
        let (basis, mut sing) = sorted_gram_factors(gram);
        let mut d = y * &basis;
        rescale_and_floor(&mut sing, &mut d);
        orthonormalize_columns(&mut d);
        (d, sing, basis)
    };

    Ok(SvdFactors { d, s, v })
}

/// Eigendecomposes a symmetric PSD Gram matrix and returns eigenvectors plus
/// singular values (square roots), sorted descending.
fn sorted_gram_factors(gram: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let r = gram.nrows();
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let mut basis = DMatrix::zeros(r, r);
    let mut sing = DVector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &eig.eigenvectors.column(src));
        sing[dst] = eig.eigenvalues[src].max(0.0).sqrt();
    }
    (basis, sing)
}

/// Divides each column of the secondary factor by its singular value, then
/// applies the floor. Columns whose singular value is at or below the floor
/// carry no reliable direction; they are zeroed here and rebuilt by the
/// orthonormal completion pass.
fn rescale_and_floor(sing: &mut DVector<f64>, secondary: &mut DMatrix<f64>) {
    let floor = (SIGMA_FLOOR_REL * sing[0]).max(SIGMA_FLOOR_ABS);
    for j in 0..sing.len() {
        if sing[j] > floor {
            let inv = 1.0 / sing[j];
            for i in 0..secondary.nrows() {
                secondary[(i, j)] *= inv;
            }
        } else {
            sing[j] = floor;
            for i in 0..secondary.nrows() {
                secondary[(i, j)] = 0.0;
            }
        }
    }
}

/// Modified Gram-Schmidt in column order, replacing any column that collapses
/// (floored directions, exact duplicates) with the next canonical basis
/// vector orthogonal to everything kept so far. Deterministic.
fn orthonormalize_columns(mat: &mut DMatrix<f64>) {
    let n = mat.nrows();
    let r = mat.ncols();
    let mut next_canonical = 0usize;
    for j in 0..r {
        // Two MGS passes for numerical safety.
        for _ in 0..2 {
            for k in 0..j {
                let dot = mat.column(k).dot(&mat.column(j));
                for i in 0..n {
                    let sub = dot * mat[(i, k)];
                    mat[(i, j)] -= sub;
                }
            }
        }
        let mut norm = mat.column(j).norm();
        if norm < 0.5 {
            // Rebuild from canonical vectors until one survives projection.
            while next_canonical < n {
                for i in 0..n {
                    mat[(i, j)] = if i == next_canonical { 1.0 } else { 0.0 };
                }
                next_canonical += 1;
                for _ in 0..2 {
                    for k in 0..j {
                        let dot = mat.column(k).dot(&mat.column(j));
                        for i in 0..n {
                            let sub = dot * mat[(i, k)];
                            mat[(i, j)] -= sub;
                        }
                    }
                }
                norm = mat.column(j).norm();
                if norm >= 0.5 {
                    break;
                }
            }
        }
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for i in 0..n {
                mat[(i, j)] *= inv;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Soft thresholding
// ---------------------------------------------------------------------------

/// Elementwise `sign(x) * max(|x| - lambda, 0)`, the proximal operator of the
/// L1 norm.
pub fn soft_threshold(x: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(TwscError::InvalidParameter {
            name: "lambda".into(),
            reason: format!("threshold must be finite and >= 0, got {lambda}"),
        });
    }
    Ok(x.map(|v| soft_threshold_scalar(v, lambda)))
}

#[inline]
pub fn soft_threshold_scalar(v: f64, lambda: f64) -> f64 {
    v.signum() * (v.abs() - lambda).max(0.0)
}

// ---------------------------------------------------------------------------
// Solvability predicate
// ---------------------------------------------------------------------------

/// True iff the spectra of `A` and `-B` are disjoint, decided for the
/// symmetric-PSD / positive-diagonal case as
/// `min eigenvalue of A + min diagonal of B > 0`.
pub fn check_unique_solution(a: &DMatrix<f64>, b_diag: &DVector<f64>) -> Result<bool> {
    check_symmetric(a)?;
    check_finite(a, "A")?;
    let min_eig = min_symmetric_eigenvalue(a);
    let min_b = b_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(min_eig + min_b > 0.0)
}

fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = symmetrize(a);
    let eig = nalgebra::SymmetricEigen::new(sym);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Naive Kronecker solver (exactness reference)
// ---------------------------------------------------------------------------

/// Solves the Sylvester instance by assembling the Kronecker-lifted system
/// `(I_M (x) A + B^T (x) I_r) vec(C) = vec(E)` and factoring it densely.
///
/// Guarded to `r*M <= NAIVE_SIZE_GUARD`; this path is the correctness oracle
/// for [`solve_sylvester_fast`], not a production solver.
pub fn solve_sylvester_naive(prob: &SylvesterProblem) -> Result<DMatrix<f64>> {
    let r = prob.a.nrows();
    let m = prob.b_diag.len();
    let size = r * m;
    if size > NAIVE_SIZE_GUARD {
        return Err(TwscError::SizeGuardExceeded {
            size,
            guard: NAIVE_SIZE_GUARD,
        });
    }
    if !check_unique_solution(&prob.a, &prob.b_diag)? {
        return Err(no_unique_solution_witness(&prob.a, &prob.b_diag));
    }

    // Column-stacked vec(): column k of C occupies rows k*r .. (k+1)*r.
    let mut lifted = DMatrix::zeros(size, size);
    for k in 0..m {
        for i in 0..r {
            for j in 0..r {
                lifted[(k * r + i, k * r + j)] = prob.a[(i, j)];
            }
            lifted[(k * r + i, k * r + i)] += prob.b_diag[k];
        }
    }
    let mut rhs = DVector::zeros(size);
    for k in 0..m {
        for i in 0..r {
            rhs[k * r + i] = prob.e[(i, k)];
        }
    }

    let solution = lifted
        .lu()
        .solve(&rhs)
        .ok_or_else(|| no_unique_solution_witness(&prob.a, &prob.b_diag))?;

    let mut c = DMatrix::zeros(r, m);
    for k in 0..m {
        for i in 0..r {
            c[(i, k)] = solution[k * r + i];
        }
    }
    Ok(c)
}

fn no_unique_solution_witness(a: &DMatrix<f64>, b_diag: &DVector<f64>) -> TwscError {
    let witness =
        min_symmetric_eigenvalue(a) + b_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    TwscError::NoUniqueSolution { witness }
}

// ---------------------------------------------------------------------------
// Fast exact solver
// ---------------------------------------------------------------------------

/// Cached eigendecomposition of a symmetric PSD `A`, reusable across solves
/// that share `A` but vary `B` and `E` (the ADMM inner loop does exactly this).
#[derive(Debug, Clone)]
pub struct SylvesterEigen {
    /// Orthonormal eigenvectors of A (columns).
    pub u: DMatrix<f64>,
    /// Eigenvalues of A, matching the columns of `u`.
    pub eigenvalues: DVector<f64>,
    /// Set when `u` is exactly the identity (diagonal `A`); solves then skip
    /// both rotations.
    diagonal: bool,
}

impl SylvesterEigen {
    /// Eigendecomposes `(A + A^T)/2`; rejects `A` asymmetric beyond tolerance.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(a)?;
        check_finite(a, "A")?;
        let eig = nalgebra::SymmetricEigen::new(symmetrize(a));
        Ok(Self {
            u: eig.eigenvectors,
            eigenvalues: eig.eigenvalues,
            diagonal: false,
        })
    }

    /// Builds the decomposition for a diagonal `A` without any factorization
    /// work.
    pub fn from_diagonal(diag: DVector<f64>) -> Self {
        Self {
            u: DMatrix::identity(diag.len(), diag.len()),
            eigenvalues: diag,
            diagonal: true,
        }
    }

    /// Solves `A C + C B = E` for positive diagonal `B`: rotate `E` into the
    /// eigenbasis, divide entry `(i, m)` by `lambda_i + b_m`, rotate back.
    pub fn solve(&self, b_diag: &DVector<f64>, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.solve_owned(b_diag, e.clone())
    }

    /// Like [`SylvesterEigen::solve`] but consumes `E`, avoiding a copy when
    /// the eigenbasis is the identity (the inner-loop case).
    pub fn solve_owned(&self, b_diag: &DVector<f64>, e: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut f = if self.diagonal {
            e
        } else {
            self.u.transpose() * e
        };
        for m in 0..b_diag.len() {
            let b = b_diag[m];
            for i in 0..self.eigenvalues.len() {
                let denom = self.eigenvalues[i] + b;
                if denom <= 0.0 {
                    return Err(TwscError::NoUniqueSolution { witness: denom });
                }
                f[(i, m)] /= denom;
            }
        }
        Ok(if self.diagonal { f } else { &self.u * f })
    }
}

/// Exact fast solve of `A C + C B = E`: one r x r eigendecomposition of `A`
/// followed by elementwise work on the diagonalized system.
pub fn solve_sylvester_fast(prob: &SylvesterProblem) -> Result<DMatrix<f64>> {
    let eig = SylvesterEigen::new(&prob.a)?;
    eig.solve(&prob.b_diag, &prob.e)
}

/// Relative Frobenius residual `||A C + C B - E||_F / max(1, ||E||_F)`.
pub fn sylvester_residual(prob: &SylvesterProblem, c: &DMatrix<f64>) -> f64 {
    let mut lhs = &prob.a * c;
    for m in 0..prob.b_diag.len() {
        let b = prob.b_diag[m];
        for i in 0..c.nrows() {
            lhs[(i, m)] += c[(i, m)] * b;
        }
    }
    let diff = lhs - &prob.e;
    diff.norm() / prob.e.norm().max(1.0)
}
