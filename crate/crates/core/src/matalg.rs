//! Dense symmetric matrix algebra: eigendecomposition with deterministic
//! ordering and sign conventions, rank-d symmetric inverse square roots, and
//! joint approximate diagonalization of a matrix family by Givens sweeps
//! (Cardoso & Souloumiac 1996, "Jacobi angles for simultaneous
//! diagonalization").
//!
//! Everything here is pure and deterministic: repeated calls on identical
//! inputs are bitwise identical, which the simulation harness relies on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default angle threshold (radians) under which a Givens sweep counts as
/// converged.
pub const DEFAULT_JD_TOL: f64 = 1e-8;
/// Default sweep budget for the joint diagonalizer.
pub const DEFAULT_JD_MAX_SWEEPS: usize = 100;

/// Relative asymmetry above which an input is rejected instead of silently
/// symmetrized.
const ASYMMETRY_GATE: f64 = 1e-8;
/// Relative gap under which two eigenvalues are treated as tied.
const EIGEN_TIE_TOL: f64 = 1e-10;

/// Full spectral decomposition of a symmetric matrix.
///
/// Eigenvalues are non-increasing; each eigenvector's largest-magnitude entry
/// is positive (ties broken by lowest index), so the decomposition is unique
/// up to exactly tied eigenvalues, which fall back to lexicographic
/// eigenvector order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    /// Eigenvalues, sorted non-increasing.
    pub values: DVector<f64>,
    /// Orthogonal matrix whose columns are the matching eigenvectors.
    pub vectors: DMatrix<f64>,
    /// Dimension of the decomposed matrix.
    pub source_dim: usize,
}

/// Outcome of joint approximate diagonalization.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDiagResult {
    /// Orthogonal matrix whose columns jointly diagonalize the family.
    /// Columns are ordered by decreasing contribution to the objective and
    /// signed so each column's largest-magnitude entry is positive.
    pub rotation: DMatrix<f64>,
    /// Sum over matrices and columns of the squared diagonal forms
    /// `(v_k' S_i v_k)^2`, evaluated on the (symmetrized) inputs at the
    /// returned rotation.
    pub objective: f64,
    /// Number of full sweeps executed.
    pub sweeps: usize,
    /// True when the last sweep kept every rotation angle below the
    /// tolerance. False means the sweep budget ran out first.
    pub converged: bool,
}

fn ensure_finite(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context });
    }
    Ok(())
}

/// Check the relative asymmetry gate and return the symmetrized matrix
/// `(S + S')/2`.
fn symmetrize_checked(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = s.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let limit = ASYMMETRY_GATE * scale;
    let mut asymmetry = 0.0_f64;
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            asymmetry = asymmetry.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if asymmetry > limit {
        return Err(Error::NotSymmetric { asymmetry, limit });
    }
    let mut sym = DMatrix::zeros(s.nrows(), s.ncols());
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            sym[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    Ok(sym)
}

/// Flip a column so its largest-magnitude entry is positive; ties broken by
/// the lowest index (strict `>` keeps the earliest maximum).
fn normalize_column_sign(m: &mut DMatrix<f64>, col: usize) {
    let mut best = 0;
    for i in 1..m.nrows() {
        if m[(i, col)].abs() > m[(best, col)].abs() {
            best = i;
        }
    }
    if m[(best, col)] < 0.0 {
        for i in 0..m.nrows() {
            m[(i, col)] = -m[(i, col)];
        }
    }
}

/// Compare two columns lexicographically (entry by entry, total order).
fn lex_cmp_columns(m: &DMatrix<f64>, a: usize, b: usize) -> std::cmp::Ordering {
    for i in 0..m.nrows() {
        let ord = m[(i, a)].total_cmp(&m[(i, b)]);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Spectral decomposition of a symmetric matrix with deterministic ordering.
///
/// The input must be square, finite, and symmetric up to a relative
/// `1e-8` gate; within the gate it is symmetrized as `(S + S')/2`.
/// Eigenvalues come back non-increasing. Exact ties (within `1e-10`
/// relative) are ordered by lexicographic comparison of the sign-normalized
/// eigenvectors and reported through a warning, since downstream FOBI needs
/// distinct eigenvalues.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigenDecomp> {
    if s.nrows() != s.ncols() || s.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            context: "sym_eig",
            expected: "a nonempty square matrix".to_string(),
            actual: format!("{}x{}", s.nrows(), s.ncols()),
        });
    }
    ensure_finite(s, "sym_eig input")?;
    let sym = symmetrize_checked(s)?;
    let m = sym.nrows();

    let eig = sym.symmetric_eigen();

    // Sort indices by eigenvalue, non-increasing.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = DVector::zeros(m);
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        normalize_column_sign(&mut vectors, dst);
    }

    // Resolve ties deterministically: within a run of eigenvalues equal up to
    // a relative tolerance, order columns lexicographically.
    let scale = values[0].abs().max(values[m - 1].abs());
    let tie_tol = EIGEN_TIE_TOL * scale;
    let mut tie_found = false;
    let mut start = 0;
    while start < m {
        let mut end = start;
        while end + 1 < m && (values[end] - values[end + 1]).abs() <= tie_tol {
            end += 1;
        }
        if end > start {
            tie_found = true;
            let mut idx: Vec<usize> = (start..=end).collect();
            idx.sort_by(|&a, &b| lex_cmp_columns(&vectors, a, b));
            let mut new_vals = Vec::with_capacity(end - start + 1);
            let mut new_cols = Vec::with_capacity(end - start + 1);
            for &i in &idx {
                new_vals.push(values[i]);
                new_cols.push(vectors.column(i).clone_owned());
            }
            for (offset, (val, col)) in new_vals.into_iter().zip(new_cols).enumerate() {
                values[start + offset] = val;
                vectors.set_column(start + offset, &col);
            }
        }
        start = end + 1;
    }
    if tie_found {
        log::warn!(
            "sym_eig: tied eigenvalues (relative tolerance {EIGEN_TIE_TOL:.0e}); \
             ordering fixed lexicographically, but estimators assuming distinct \
             eigenvalues may be unstable"
        );
    }

    Ok(EigenDecomp {
        values,
        vectors,
        source_dim: m,
    })
}

/// Rank-`d` symmetric inverse square root: `M = sum_{k<=d} l_k^{-1/2} v_k v_k'`.
///
/// Requires the `d`-th eigenvalue to exceed `eps`; then `M * S * M` equals the
/// orthogonal projector onto the leading `d`-dimensional eigenspace.
pub fn sym_inv_sqrt(s: &DMatrix<f64>, d: usize, eps: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eig(s)?;
    let m = eig.source_dim;
    if d == 0 || d > m {
        return Err(Error::DimensionMismatch {
            context: "sym_inv_sqrt",
            expected: format!("1 <= d <= {m}"),
            actual: format!("d = {d}"),
        });
    }
    let lambda_d = eig.values[d - 1];
    if !(lambda_d > eps) {
        return Err(Error::EffectiveRankBelowD { d, lambda_d, eps });
    }
    // V_d diag(l^{-1/2}) V_d', formed as (V_d diag(l^{-1/4})) times its own
    // transpose so the result is exactly symmetric in floating point.
    let mut scaled = eig.vectors.columns(0, d).clone_owned();
    for k in 0..d {
        let f = eig.values[k].sqrt().sqrt().recip();
        for i in 0..m {
            scaled[(i, k)] *= f;
        }
    }
    Ok(&scaled * scaled.transpose())
}

/// Sum over matrices and columns of squared diagonal quadratic forms:
/// `w(V) = sum_i sum_k (v_k' S_i v_k)^2`.
fn quadratic_objective(mats: &[DMatrix<f64>], v: &DMatrix<f64>) -> f64 {
    let mut w = 0.0;
    for m in mats {
        let conj = v.transpose() * m * v;
        for k in 0..v.ncols() {
            w += conj[(k, k)] * conj[(k, k)];
        }
    }
    w
}

/// Evaluate the joint-diagonalization objective `w(V)` for an orthogonal `V`.
pub fn offdiag_objective(mats: &[DMatrix<f64>], v: &DMatrix<f64>) -> Result<f64> {
    let d = v.nrows();
    if v.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "offdiag_objective rotation",
            expected: "square matrix".to_string(),
            actual: format!("{}x{}", v.nrows(), v.ncols()),
        });
    }
    for m in mats {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "offdiag_objective input",
                expected: format!("{d}x{d}"),
                actual: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
    }
    Ok(quadratic_objective(mats, v))
}

/// One pairwise Givens rotation applied in place: `M <- J' M J` on rows and
/// columns `p, q`.
fn apply_givens(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let d = m.nrows();
    for j in 0..d {
        let a = m[(p, j)];
        let b = m[(q, j)];
        m[(p, j)] = c * a + s * b;
        m[(q, j)] = -s * a + c * b;
    }
    for i in 0..d {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a + s * b;
        m[(i, q)] = -s * a + c * b;
    }
}

fn diag_square_sum(mats: &[DMatrix<f64>]) -> f64 {
    let mut w = 0.0;
    for m in mats {
        for k in 0..m.nrows() {
            w += m[(k, k)] * m[(k, k)];
        }
    }
    w
}

/// Run Givens sweeps in place; returns the accumulated rotation, sweep count,
/// convergence flag and the per-sweep objective history (first entry is the
/// value before any rotation).
fn jacobi_sweeps(
    work: &mut [DMatrix<f64>],
    tol: f64,
    max_sweeps: usize,
) -> (DMatrix<f64>, usize, bool, Vec<f64>) {
    let d = work[0].nrows();
    let mut v = DMatrix::identity(d, d);
    let mut history = vec![diag_square_sum(work)];
    let mut converged = false;
    let mut sweeps = 0;

    for _ in 0..max_sweeps {
        sweeps += 1;
        let mut max_angle = 0.0_f64;
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                // Accumulate the 2x2 quadratic form whose dominant
                // eigenvector gives the optimal rotation angle for this pair
                // (Cardoso & Souloumiac closed form).
                let (mut g11, mut g12, mut g22) = (0.0_f64, 0.0_f64, 0.0_f64);
                for m in work.iter() {
                    let u = m[(p, p)] - m[(q, q)];
                    let w2 = m[(p, q)] + m[(q, p)];
                    g11 += u * u;
                    g12 += u * w2;
                    g22 += w2 * w2;
                }
                let theta = 0.25 * (2.0 * g12).atan2(g11 - g22);
                max_angle = max_angle.max(theta.abs());
                if theta != 0.0 {
                    let (s, c) = theta.sin_cos();
                    for m in work.iter_mut() {
                        apply_givens(m, p, q, c, s);
                    }
                    // v <- v * J (columns p, q updated)
                    for i in 0..d {
                        let a = v[(i, p)];
                        let b = v[(i, q)];
                        v[(i, p)] = c * a + s * b;
                        v[(i, q)] = -s * a + c * b;
                    }
                }
            }
        }
        let obj = diag_square_sum(work);
        let prev = *history.last().unwrap();
        debug_assert!(
            obj >= prev - 1e-9 * prev.abs().max(1.0),
            "Jacobi objective decreased: {prev} -> {obj}"
        );
        history.push(obj);
        if max_angle < tol {
            converged = true;
            break;
        }
    }
    (v, sweeps, converged, history)
}

/// Jointly diagonalize a family of symmetric matrices by pairwise Givens
/// sweeps, maximizing `w(V) = sum_i sum_k (v_k' S_i v_k)^2`.
///
/// Convergence means a full sweep in which every rotation angle stayed below
/// `tol` (radians); running out of `max_sweeps` is reported, not an error.
/// Columns of the result are ordered by decreasing contribution to the
/// objective, each signed so its largest-magnitude entry is positive.
pub fn joint_diagonalize(
    mats: &[DMatrix<f64>],
    tol: f64,
    max_sweeps: usize,
) -> Result<JointDiagResult> {
    if mats.is_empty() {
        return Err(Error::BadDiagonalizationInput {
            requirement: "at least one matrix",
            actual: "an empty family".to_string(),
        });
    }
    let d = mats[0].nrows();
    if d < 2 {
        return Err(Error::BadDiagonalizationInput {
            requirement: "dimension >= 2",
            actual: format!("{d}x{}", mats[0].ncols()),
        });
    }
    let mut originals = Vec::with_capacity(mats.len());
    for m in mats {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "joint_diagonalize input",
                expected: format!("{d}x{d}"),
                actual: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        ensure_finite(m, "joint_diagonalize input")?;
        originals.push(symmetrize_checked(m)?);
    }

    let mut work = originals.clone();
    let (v, sweeps, converged, _history) = jacobi_sweeps(&mut work, tol, max_sweeps);

    // Order columns by decreasing contribution to the objective.
    let contributions: Vec<f64> = (0..d)
        .map(|k| {
            let col = v.column(k);
            originals
                .iter()
                .map(|m| {
                    let q = col.dot(&(m * col));
                    q * q
                })
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| contributions[b].total_cmp(&contributions[a]));

    let mut rotation = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        rotation.set_column(dst, &v.column(src));
        normalize_column_sign(&mut rotation, dst);
    }

    let objective = quadratic_objective(&originals, &rotation);
    Ok(JointDiagResult {
        rotation,
        objective,
        sweeps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
        let a = random_matrix(rng, m, m);
        &a * a.transpose() + DMatrix::identity(m, m) * 0.1
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
        random_matrix(rng, m, m).qr().q()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn sym_eig_sorts_diagonal() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = sym_eig(&s).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 2.0, 1.0]);
        // Eigenvectors are signed standard basis columns e1, e3, e2.
        let expected = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]);
        assert!(max_abs(&(&e.vectors - expected)) < 1e-12);
    }

    #[test]
    fn sym_eig_identity_has_unit_spectrum() {
        let e = sym_eig(&DMatrix::identity(4, 4)).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(e.values[k], 1.0, epsilon = 1e-12);
        }
        // Fully degenerate spectrum: ordering falls back to lexicographic
        // comparison but must still reconstruct and stay orthonormal.
        let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!(max_abs(&(recon - DMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn sym_eig_reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_spd(&mut rng, 6);
        let e = sym_eig(&s).unwrap();
        let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!(max_abs(&(recon - &s)) < 1e-8 * max_abs(&s));
        let gram = e.vectors.transpose() * &e.vectors;
        assert!(max_abs(&(gram - DMatrix::identity(6, 6))) < 1e-10);
        // Non-increasing values.
        for k in 1..6 {
            assert!(e.values[k] <= e.values[k - 1]);
        }
    }

    #[test]
    fn sym_eig_sign_convention_flips_dominant_entry() {
        // Rank-1 matrix with eigenvector (-0.8, 0.6): dominant entry must be
        // made positive, giving (0.8, -0.6).
        let v = DVector::from_vec(vec![-0.8, 0.6]);
        let s = &v * v.transpose();
        let e = sym_eig(&s).unwrap();
        assert_abs_diff_eq!(e.vectors[(0, 0)], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(1, 0)], -0.6, epsilon = 1e-12);
    }

    #[test]
    fn sym_eig_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_spd(&mut rng, 8);
        let a = sym_eig(&s).unwrap();
        let b = sym_eig(&s).unwrap();
        assert_eq!(a.values.as_slice(), b.values.as_slice());
        assert_eq!(a.vectors.as_slice(), b.vectors.as_slice());
    }

    #[test]
    fn sym_eig_rejects_asymmetric_and_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&m), Err(Error::NotSymmetric { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(sym_eig(&m), Err(Error::NonFinite { .. })));
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(sym_eig(&m), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn inv_sqrt_identity_and_diagonal() {
        let m = sym_inv_sqrt(&DMatrix::identity(3, 3), 3, 1e-12).unwrap();
        assert!(max_abs(&(m - DMatrix::identity(3, 3))) < 1e-12);

        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let m = sym_inv_sqrt(&s, 2, 1e-12).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0]));
        assert!(max_abs(&(m - expected)) < 1e-12);
    }

    #[test]
    fn inv_sqrt_projects_onto_top_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_spd(&mut rng, 5);
        let d = 3;
        let m = sym_inv_sqrt(&s, d, 1e-12).unwrap();
        let e = sym_eig(&s).unwrap();
        let vd = e.vectors.columns(0, d).clone_owned();
        let projector = &vd * vd.transpose();
        assert!(max_abs(&(&m * &s * &m - projector)) < 1e-8);
    }

    #[test]
    fn inv_sqrt_reports_rank_failure() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12]));
        match sym_inv_sqrt(&s, 2, 1e-8) {
            Err(Error::EffectiveRankBelowD { d, lambda_d, eps }) => {
                assert_eq!(d, 2);
                assert_abs_diff_eq!(lambda_d, 1e-12, epsilon = 1e-20);
                assert_abs_diff_eq!(eps, 1e-8, epsilon = 1e-20);
            }
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn offdiag_objective_matches_hand_values() {
        // Single matrix diag(2,3) at V = I: 2^2 + 3^2 = 13.
        let mats = vec![DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))];
        let w = offdiag_objective(&mats, &DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(w, 13.0, epsilon = 1e-12);

        // diag(1,-1) seen through a 45-degree rotation: both quadratic forms
        // vanish, so w = 0.
        let mats = vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v45 = DMatrix::from_row_slice(2, 2, &[r, -r, r, r]);
        let w = offdiag_objective(&mats, &v45).unwrap();
        assert_abs_diff_eq!(w, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn offdiag_objective_invariant_under_signed_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mats: Vec<_> = (0..3)
            .map(|_| {
                let a = random_matrix(&mut rng, 4, 4);
                (&a + a.transpose()) * 0.5
            })
            .collect();
        let v = random_orthogonal(&mut rng, 4);
        let w0 = offdiag_objective(&mats, &v).unwrap();
        // Permute columns and flip signs.
        let mut vp = DMatrix::zeros(4, 4);
        let perm = [2usize, 0, 3, 1];
        let signs = [-1.0, 1.0, -1.0, 1.0];
        for (dst, (&src, &sg)) in perm.iter().zip(signs.iter()).enumerate() {
            vp.set_column(dst, &(v.column(src) * sg));
        }
        let w1 = offdiag_objective(&mats, &vp).unwrap();
        assert_abs_diff_eq!(w0, w1, epsilon = 1e-9 * w0.abs().max(1.0));
    }

    #[test]
    fn offdiag_objective_rejects_dimension_mismatch() {
        let mats = vec![DMatrix::identity(3, 3)];
        let v = DMatrix::identity(2, 2);
        assert!(matches!(
            offdiag_objective(&mats, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn joint_diag_single_diagonal_matrix() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let r = joint_diagonalize(&[s], DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.objective, 14.0, epsilon = 1e-9);
        // Contribution order 9, 4, 1 places columns e1, e3, e2.
        let expected = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]);
        assert!(max_abs(&(&r.rotation - expected)) < 1e-9);
    }

    #[test]
    fn joint_diag_recovers_common_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = 6;
        let q = random_orthogonal(&mut rng, d);
        let mats: Vec<_> = (0..5)
            .map(|_| {
                let diag =
                    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0);
                &q * DMatrix::from_diagonal(&diag) * q.transpose()
            })
            .collect();
        let r = joint_diagonalize(&mats, DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS).unwrap();
        assert!(r.converged);
        assert!(max_abs(&(r.rotation.transpose() * &r.rotation - DMatrix::identity(d, d))) < 1e-10);

        // |V'Q| should be a permutation matrix: exactly one entry near 1 per
        // row and column.
        let m = (r.rotation.transpose() * &q).abs();
        for i in 0..d {
            let row_big = (0..d).filter(|&j| m[(i, j)] > 1.0 - 1e-6).count();
            let col_big = (0..d).filter(|&j| m[(j, i)] > 1.0 - 1e-6).count();
            assert_eq!(row_big, 1, "row {i} of |V'Q| is not a permutation row");
            assert_eq!(col_big, 1, "col {i} of |V'Q| is not a permutation col");
        }

        // Lemma-style equality: jointly diagonalizable family attains the
        // Hilbert-Schmidt bound.
        let hs: f64 = mats.iter().map(|s| s.iter().map(|x| x * x).sum::<f64>()).sum();
        assert_abs_diff_eq!(r.objective, hs, epsilon = 1e-8 * hs.max(1.0));
    }

    #[test]
    fn joint_diag_objective_bounded_by_hs_norm() {
        // Non-commuting family: the bound must hold strictly.
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let mats: Vec<_> = (0..3)
                .map(|_| {
                    let a = random_matrix(&mut rng, 5, 5);
                    (&a + a.transpose()) * 0.5
                })
                .collect();
            let r = joint_diagonalize(&mats, DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS).unwrap();
            let hs: f64 = mats.iter().map(|s| s.iter().map(|x| x * x).sum::<f64>()).sum();
            assert!(r.objective <= hs + 1e-9 * hs.max(1.0));
        }
    }

    #[test]
    fn joint_diag_objective_constant_for_balanced_pair() {
        // diag(1,-1) and its 45-degree rotation: w = 2 for every angle while
        // the HS bound is 4 (strict inequality for a non-commuting family).
        let s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let s2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = joint_diagonalize(&[s1, s2], DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS).unwrap();
        assert_abs_diff_eq!(r.objective, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn joint_diag_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mats: Vec<_> = (0..4)
            .map(|_| {
                let a = random_matrix(&mut rng, 4, 4);
                (&a + a.transpose()) * 0.5
            })
            .collect();
        let tight = joint_diagonalize(&mats, 1e-15, 1).unwrap();
        assert!(!tight.converged);
        assert_eq!(tight.sweeps, 1);
        let relaxed = joint_diagonalize(&mats, DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS).unwrap();
        assert!(relaxed.converged);
    }

    #[test]
    fn joint_diag_objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mats: Vec<_> = (0..6)
            .map(|_| {
                let a = random_matrix(&mut rng, 7, 7);
                (&a + a.transpose()) * 0.5
            })
            .collect();
        let mut work = mats.clone();
        let (_, _, _, history) = jacobi_sweeps(&mut work, DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS);
        for pair in history.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0),
                "objective decreased across a sweep: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn joint_diag_rejects_bad_input() {
        assert!(matches!(
            joint_diagonalize(&[], DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS),
            Err(Error::BadDiagonalizationInput { .. })
        ));
        let one = DMatrix::from_row_slice(1, 1, &[2.0]);
        assert!(matches!(
            joint_diagonalize(&[one], DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS),
            Err(Error::BadDiagonalizationInput { .. })
        ));
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::identity(4, 4);
        assert!(matches!(
            joint_diagonalize(&[a, b], DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS),
            Err(Error::DimensionMismatch { .. })
        ));
        let skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(
            joint_diagonalize(&[skew], DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS),
            Err(Error::NotSymmetric { .. })
        ));
    }
}
