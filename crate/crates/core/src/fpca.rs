//! Functional principal component analysis in coefficient coordinates.
//!
//! With curves expanded in a basis with Gram matrix `G`, the function-space
//! covariance eigenproblem becomes a matrix eigenproblem for the metric form
//! `S = (I_p (x) G^{1/2}) (1/n) C'C (I_p (x) G^{1/2})`. Eigenvectors of `S`
//! map back to eigenfunction coordinates through `I_p (x) G^{-1/2}`, and the
//! leading `d` eigenpairs define both the reduced subspace and the whitening
//! transform used by the unmixing estimators.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{fourier_basis, BasisKind, BasisSpec, CoefMatrix};
use crate::error::{Error, Result};
use crate::matalg::sym_eig;

/// Default relative factor for the rank gate: eigenvalues must exceed
/// `1e-10 * lambda_1` to count toward the effective dimension.
pub const DEFAULT_RANK_EPS_FACTOR: f64 = 1e-10;

/// The reduction warns when the retained/discarded eigengap falls below
/// `1e-6 * lambda_1`: the subspace is then numerically unidentified.
pub const EIGEN_GAP_FACTOR: f64 = 1e-6;

/// Fitted functional PCA: the leading eigenfunctions in basis coordinates,
/// their variances, and everything needed to map new curves into the reduced
/// whitened space.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel {
    /// pK x d eigenfunction coordinates; `phi' (I_p (x) G) phi = I_d`.
    pub phi: DMatrix<f64>,
    /// Length-d positive eigenvalues, non-increasing.
    pub lambda: DVector<f64>,
    /// K x K basis Gram matrix used for the fit.
    pub gram: DMatrix<f64>,
    /// Number of curve components.
    pub p: usize,
    /// Basis size.
    pub k: usize,
    /// Retained dimension.
    pub d: usize,
    /// True when `lambda_d - lambda_{d+1}` was below the gap threshold at fit
    /// time, so the retained subspace is unstable.
    pub eigen_gap_warning: bool,
    /// Column means of the training coefficients (length pK), used to center
    /// new data consistently.
    pub train_means: DVector<f64>,
}

impl FpcaModel {
    /// A trivial model treating `d` already-whitened coordinates as the
    /// reduced scores: `p = d`, `K = 1`, identity eigenvectors, unit
    /// variances. Useful for driving the unmixing estimators directly.
    pub fn identity(d: usize) -> Self {
        FpcaModel {
            phi: DMatrix::identity(d, d),
            lambda: DVector::from_element(d, 1.0),
            gram: DMatrix::identity(1, 1),
            p: d,
            k: 1,
            d,
            eigen_gap_warning: false,
            train_means: DVector::zeros(d),
        }
    }
}

/// Whitened reduced scores together with the model that produced them.
#[derive(Debug, Clone)]
pub struct WhitenedScores {
    /// n x d matrix; on the fitting data its sample covariance is exactly
    /// the identity.
    pub data: DMatrix<f64>,
    pub model: FpcaModel,
}

pub(crate) fn is_identity(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols()
        && (0..m.nrows())
            .all(|i| (0..m.ncols()).all(|j| m[(i, j)] == if i == j { 1.0 } else { 0.0 }))
}

/// `(I_p (x) B) * M` for M with p*K rows.
pub(crate) fn block_left(b: &DMatrix<f64>, m: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let k = b.nrows();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..p {
        let prod = b * m.rows(j * k, k);
        out.rows_mut(j * k, k).copy_from(&prod);
    }
    out
}

/// `M * (I_p (x) B)` for M with p*K columns.
pub(crate) fn block_right(m: &DMatrix<f64>, b: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let k = b.nrows();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..p {
        let prod = m.columns(j * k, k) * b;
        out.columns_mut(j * k, k).copy_from(&prod);
    }
    out
}

/// `G^{1/2}` and `G^{-1/2}` of a positive-definite Gram matrix, or `None`
/// when it is exactly the identity and the conjugation can be skipped.
fn gram_roots(
    gram: &DMatrix<f64>,
    context: &'static str,
) -> Result<Option<(DMatrix<f64>, DMatrix<f64>)>> {
    if is_identity(gram) {
        return Ok(None);
    }
    let eig = sym_eig(gram)?;
    let k = eig.source_dim;
    if !(eig.values[k - 1] > 0.0) {
        return Err(Error::InvalidArgument {
            context,
            message: format!(
                "gram matrix must be positive definite; smallest eigenvalue {}",
                eig.values[k - 1]
            ),
        });
    }
    // Quarter-power column scalings keep both roots exactly symmetric.
    let mut half = eig.vectors.clone();
    let mut inv_half = eig.vectors.clone();
    for c in 0..k {
        let q = eig.values[c].sqrt().sqrt();
        for r in 0..k {
            half[(r, c)] *= q;
            inv_half[(r, c)] /= q;
        }
    }
    Ok(Some((&half * half.transpose(), &inv_half * inv_half.transpose())))
}

fn check_gram_dims(c: &CoefMatrix, gram: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if gram.nrows() != c.k || gram.ncols() != c.k {
        return Err(Error::DimensionMismatch {
            context,
            expected: format!("{k} x {k} gram matrix", k = c.k),
            actual: format!("{} x {}", gram.nrows(), gram.ncols()),
        });
    }
    Ok(())
}

/// Sample covariance of centered coefficients in the Gram metric:
/// `S = (I_p (x) G^{1/2}) (1/n) C'C (I_p (x) G^{1/2})`; exactly `(1/n) C'C`
/// when `G = I`. The result is symmetrized.
pub fn coefficient_covariance(c: &CoefMatrix, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !c.centered {
        return Err(Error::Uncentered);
    }
    check_gram_dims(c, gram, "coefficient_covariance")?;
    let n = c.n();
    if n < 2 {
        return Err(Error::TooFewObservations { n });
    }
    let m = (c.data.transpose() * &c.data) / n as f64;
    let m = (&m + &m.transpose()) * 0.5;
    match gram_roots(gram, "coefficient_covariance")? {
        None => Ok(m),
        Some((half, _)) => {
            let s = block_left(&half, &block_right(&m, &half, c.p), c.p);
            Ok((&s + &s.transpose()) * 0.5)
        }
    }
}

/// Reduce centered coefficients to the top `d` eigenfunctions of the
/// covariance in the `G` metric. `eps` gates the effective dimension
/// (`None` uses `1e-10 * lambda_1`); `lambda_d` must exceed it.
pub fn fpca_reduce(
    c: &CoefMatrix,
    gram: &DMatrix<f64>,
    d: usize,
    eps: Option<f64>,
) -> Result<FpcaModel> {
    let pk = c.p * c.k;
    if d == 0 || d > pk {
        return Err(Error::DimensionMismatch {
            context: "fpca_reduce",
            expected: format!("1 <= d <= pK = {pk}"),
            actual: format!("d = {d}"),
        });
    }
    let s = coefficient_covariance(c, gram)?;
    let eig = sym_eig(&s)?;
    let eps_val = eps.unwrap_or(DEFAULT_RANK_EPS_FACTOR * eig.values[0].max(0.0));
    if !(eig.values[d - 1] > eps_val) {
        return Err(Error::EffectiveDimensionBelowD {
            d,
            eps: eps_val,
            spectrum: eig.values.iter().copied().collect(),
        });
    }

    let lambda = DVector::from_iterator(d, eig.values.iter().take(d).copied());
    let v_d = eig.vectors.columns(0, d).clone_owned();
    let phi = match gram_roots(gram, "fpca_reduce")? {
        None => v_d,
        Some((_, inv_half)) => block_left(&inv_half, &v_d, c.p),
    };

    let eigen_gap_warning = if d < pk {
        let gap = eig.values[d - 1] - eig.values[d];
        let near = gap < EIGEN_GAP_FACTOR * eig.values[0];
        if near {
            log::warn!(
                "fpca_reduce: eigengap lambda_{d} - lambda_{} = {gap:.3e} is below \
                 {EIGEN_GAP_FACTOR:.0e} * lambda_1; the retained subspace is unstable",
                d + 1
            );
        }
        near
    } else {
        false
    };

    Ok(FpcaModel {
        phi,
        lambda,
        gram: gram.clone(),
        p: c.p,
        k: c.k,
        d,
        eigen_gap_warning,
        train_means: c.column_means.clone(),
    })
}

/// Map centered coefficients to whitened reduced scores: row `i` of the
/// output is `Lambda^{-1/2} phi' (I_p (x) G) x_i`. On the fitting data the
/// sample covariance of the result is the identity.
pub fn whiten(c: &CoefMatrix, m: &FpcaModel) -> Result<WhitenedScores> {
    if !c.centered {
        return Err(Error::Uncentered);
    }
    if c.p != m.p || c.k != m.k {
        return Err(Error::DimensionMismatch {
            context: "whiten",
            expected: format!("coefficients with p = {}, K = {}", m.p, m.k),
            actual: format!("p = {}, K = {}", c.p, c.k),
        });
    }
    let map = whitening_map(&m.phi, &m.lambda, &m.gram, m.p);
    Ok(WhitenedScores {
        data: &c.data * map,
        model: m.clone(),
    })
}

/// The pK x d matrix `(I_p (x) G) phi Lambda^{-1/2}`; applied from the right
/// it maps centered coefficient rows to whitened scores. Shared between
/// whitening and unmixing-loading construction so both produce bitwise-equal
/// transforms.
pub(crate) fn whitening_map(
    phi: &DMatrix<f64>,
    lambda: &DVector<f64>,
    gram: &DMatrix<f64>,
    p: usize,
) -> DMatrix<f64> {
    let mut gphi = if is_identity(gram) {
        phi.clone()
    } else {
        block_left(gram, phi, p)
    };
    for col in 0..gphi.ncols() {
        let f = lambda[col].sqrt().recip();
        for row in 0..gphi.nrows() {
            gphi[(row, col)] *= f;
        }
    }
    gphi
}

// ---------------------------------------------------------------------------
// JSON document
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub(crate) struct BasisDoc {
    kind: String,
    #[serde(rename = "K")]
    k: usize,
    interval: (f64, f64),
}

#[derive(Serialize, Deserialize)]
pub(crate) struct FpcaModelDoc {
    p: usize,
    #[serde(rename = "K")]
    k: usize,
    d: usize,
    lambda: Vec<f64>,
    /// Row-major pK x d eigenfunction coordinates.
    phi: Vec<Vec<f64>>,
    basis: BasisDoc,
    #[serde(default)]
    column_means: Vec<f64>,
    #[serde(default)]
    eigen_gap_warning: bool,
}

pub(crate) fn json_err(path: &str, e: &serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_string(),
        line: e.line(),
        message: e.to_string(),
    }
}

pub(crate) fn doc_err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line: 0,
        message: message.into(),
    }
}

pub(crate) fn fpca_to_doc(model: &FpcaModel, basis: &BasisSpec) -> Result<FpcaModelDoc> {
    if basis.k != model.k || basis.gram != model.gram {
        return Err(Error::DimensionMismatch {
            context: "write_fpca_json",
            expected: format!("basis with K = {} and the model's gram matrix", model.k),
            actual: format!("K = {}", basis.k),
        });
    }
    Ok(FpcaModelDoc {
        p: model.p,
        k: model.k,
        d: model.d,
        lambda: model.lambda.iter().copied().collect(),
        phi: (0..model.phi.nrows())
            .map(|i| model.phi.row(i).iter().copied().collect())
            .collect(),
        basis: BasisDoc {
            kind: basis.kind.name().to_string(),
            k: basis.k,
            interval: basis.interval,
        },
        column_means: model.train_means.iter().copied().collect(),
        eigen_gap_warning: model.eigen_gap_warning,
    })
}

/// Serialize a fitted model (and the basis it lives on) as a JSON document.
pub fn write_fpca_json<W: Write>(w: W, model: &FpcaModel, basis: &BasisSpec) -> Result<()> {
    let doc = fpca_to_doc(model, basis)?;
    serde_json::to_writer_pretty(w, &doc).map_err(|e| json_err("<fpca model>", &e))
}

/// Read a model document written by [`write_fpca_json`]; reconstructs the
/// basis and validates dimensions and the eigenvalue ordering.
pub fn read_fpca_json<R: Read>(r: R, path: &str) -> Result<(FpcaModel, BasisSpec)> {
    let doc: FpcaModelDoc = serde_json::from_reader(r).map_err(|e| json_err(path, &e))?;
    fpca_from_doc(doc, path)
}

/// Serialize a basis description alone (`kind`, `K`, `interval`) — the same
/// document embedded in model files.
pub fn write_basis_json<W: Write>(w: W, basis: &BasisSpec) -> Result<()> {
    let doc = BasisDoc {
        kind: basis.kind.name().to_string(),
        k: basis.k,
        interval: basis.interval,
    };
    serde_json::to_writer_pretty(w, &doc).map_err(|e| json_err("<basis>", &e))
}

/// Read a basis document written by [`write_basis_json`]; rebuilds the basis
/// (validating the kind, size, and interval along the way).
pub fn read_basis_json<R: Read>(r: R, path: &str) -> Result<BasisSpec> {
    let doc: BasisDoc = serde_json::from_reader(r).map_err(|e| json_err(path, &e))?;
    if doc.kind != BasisKind::Fourier.name() {
        return Err(doc_err(path, format!("unsupported basis kind '{}'", doc.kind)));
    }
    fourier_basis(doc.k, doc.interval)
}

pub(crate) fn fpca_from_doc(doc: FpcaModelDoc, path: &str) -> Result<(FpcaModel, BasisSpec)> {
    if doc.basis.kind != BasisKind::Fourier.name() {
        return Err(doc_err(path, format!("unsupported basis kind '{}'", doc.basis.kind)));
    }
    if doc.basis.k != doc.k {
        return Err(doc_err(path, "basis K does not match model K"));
    }
    let basis = fourier_basis(doc.basis.k, doc.basis.interval)?;
    let pk = doc.p * doc.k;
    if doc.d == 0 || doc.d > pk {
        return Err(doc_err(path, format!("d = {} outside 1..=pK = {pk}", doc.d)));
    }
    if doc.lambda.len() != doc.d {
        return Err(doc_err(path, "lambda length does not match d"));
    }
    for w in doc.lambda.windows(2) {
        if !(w[1] <= w[0]) {
            return Err(doc_err(path, "lambda must be non-increasing"));
        }
    }
    if doc.lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(doc_err(path, "lambda must be positive and finite"));
    }
    if doc.phi.len() != pk || doc.phi.iter().any(|row| row.len() != doc.d) {
        return Err(doc_err(path, format!("phi must be {pk} rows of length {}", doc.d)));
    }
    let phi = DMatrix::from_fn(pk, doc.d, |i, j| doc.phi[i][j]);
    let train_means = if doc.column_means.is_empty() {
        DVector::zeros(pk)
    } else if doc.column_means.len() == pk {
        DVector::from_vec(doc.column_means)
    } else {
        return Err(doc_err(path, "column_means length does not match pK"));
    };
    if phi.iter().any(|x| !x.is_finite()) || train_means.iter().any(|x| !x.is_finite()) {
        return Err(doc_err(path, "model entries must be finite"));
    }
    Ok((
        FpcaModel {
            phi,
            lambda: DVector::from_vec(doc.lambda),
            gram: basis.gram.clone(),
            p: doc.p,
            k: doc.k,
            d: doc.d,
            eigen_gap_warning: doc.eigen_gap_warning,
            train_means,
        },
        basis,
    ))
}
