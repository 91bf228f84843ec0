//! Fourth-moment unmixing estimators on whitened scores.
//!
//! After whitening, independent components are identified by an orthogonal
//! rotation. Two classical estimators are implemented in the reduced
//! coordinate space:
//!
//! * a kurtosis-matrix method: eigenvectors of the scatter matrix
//!   `(1/n) sum ||x||^2 x x' - (d+2) I`, whose eigenvalues are the excess
//!   kurtoses of the components (Cardoso 1989);
//! * joint diagonalization of the full set of fourth-cumulant matrices
//!   (Cardoso & Souloumiac 1993).
//!
//! The fitted rotation combines with the whitening map into a single
//! `d x pK` loading matrix applicable to centered basis coefficients, so new
//! curves can be scored without refitting.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, CoefMatrix};
use crate::error::{Error, Result};
use crate::fpca::{self, FpcaModel, WhitenedScores};
use crate::matalg::{
    joint_diagonalize, sym_eig, DEFAULT_JD_MAX_SWEEPS, DEFAULT_JD_TOL,
};

/// The kurtosis-spectrum fit warns when consecutive eigenvalues of the
/// fourth-moment scatter matrix are closer than `1e-4 * max(1, max |value|)`:
/// the rotation is then not identifiable from this matrix alone.
pub const FOBI_GAP_FACTOR: f64 = 1e-4;

/// Rotation estimator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IcaMethod {
    /// No rotation: whitened principal component scores.
    Pca,
    /// Eigenvectors of the fourth-moment scatter matrix.
    Fobi,
    /// Joint diagonalization of all fourth-cumulant matrices.
    Jade,
}

impl IcaMethod {
    pub fn name(&self) -> &'static str {
        match self {
            IcaMethod::Pca => "pca",
            IcaMethod::Fobi => "fobi",
            IcaMethod::Jade => "jade",
        }
    }

    pub fn parse(s: &str) -> Option<IcaMethod> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Some(IcaMethod::Pca),
            "fobi" => Some(IcaMethod::Fobi),
            "jade" => Some(IcaMethod::Jade),
            _ => None,
        }
    }
}

/// One fourth-cumulant matrix `C^{kl}` of whitened scores (1-based `k`, `l`).
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantMatrix {
    pub k: usize,
    pub l: usize,
    /// d x d symmetric matrix.
    pub data: DMatrix<f64>,
}

/// Convergence report of the joint-diagonalization fit, kept on the model so
/// near-degenerate spectra (which make the rotation ill-determined) are
/// visible to callers.
#[derive(Debug, Clone, PartialEq)]
pub struct JadeDiagnostics {
    /// Final value of the diagonality objective.
    pub objective: f64,
    /// Contribution of each (reordered) rotation column to the objective.
    pub per_column: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// A fitted unmixing: the orthogonal rotation, the combined `d x pK` loading
/// matrix, and the reduction model it extends.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixingModel {
    /// d x d orthogonal rotation of the whitened scores.
    pub psi: DMatrix<f64>,
    /// d x pK matrix applying whitening and rotation to centered
    /// coefficients in one step.
    pub loadings: DMatrix<f64>,
    pub method: IcaMethod,
    /// Eigenvalues of the fourth-moment scatter matrix (excess kurtoses of
    /// the estimated components); present for the kurtosis-matrix method.
    pub fobi_eigenvalues: Option<DVector<f64>>,
    /// `component_order[m]` is the raw estimator column now at position `m`.
    pub component_order: Vec<usize>,
    /// The reduction/whitening model the rotation was fitted on.
    pub fpca: FpcaModel,
    /// True when the kurtosis spectrum had a near-tie at fit time.
    pub fobi_gap_warning: bool,
    /// Joint-diagonalization report (joint-diagonalization fits only).
    pub jade: Option<JadeDiagnostics>,
}

/// Independent component scores together with the model that produced them.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    /// n x d score matrix.
    pub data: DMatrix<f64>,
    pub method: IcaMethod,
    pub model: UnmixingModel,
}

fn score_dims(w: &WhitenedScores) -> (usize, usize) {
    (w.data.nrows(), w.data.ncols())
}

/// Fourth-moment scatter matrix of whitened scores:
/// `(1/n) sum_i ||x_i||^2 x_i x_i' - (d+2) I_d`, symmetrized. For
/// independent whitened sources its eigenvalues are the source excess
/// kurtoses.
pub fn fobi_matrix(w: &WhitenedScores) -> Result<DMatrix<f64>> {
    let (n, d) = score_dims(w);
    if n == 0 {
        return Err(Error::TooFewObservations { n });
    }
    let mut acc = DMatrix::zeros(d, d);
    let mut x = vec![0.0; d];
    for i in 0..n {
        for (c, xc) in x.iter_mut().enumerate() {
            *xc = w.data[(i, c)];
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        for a in 0..d {
            let fa = norm2 * x[a];
            for b in 0..d {
                acc[(a, b)] += fa * x[b];
            }
        }
    }
    let shift = (d + 2) as f64;
    let mut m = acc / n as f64;
    for c in 0..d {
        m[(c, c)] -= shift;
    }
    Ok((&m + &m.transpose()) * 0.5)
}

/// Shared accumulation for one cumulant matrix with 0-based indices. The
/// upper triangle is accumulated once and mirrored, so the result is exactly
/// symmetric and exactly invariant to swapping `k0` and `l0`.
fn jade_cumulant_inner(data: &DMatrix<f64>, k0: usize, l0: usize) -> DMatrix<f64> {
    let (n, d) = (data.nrows(), data.ncols());
    let mut acc: DMatrix<f64> = DMatrix::zeros(d, d);
    let mut x = vec![0.0; d];
    for i in 0..n {
        for (c, xc) in x.iter_mut().enumerate() {
            *xc = data[(i, c)];
        }
        let coef = x[k0] * x[l0];
        for a in 0..d {
            for b in a..d {
                acc[(a, b)] += coef * (x[a] * x[b]);
            }
        }
    }
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = acc[(a, b)] / n as f64;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    if k0 == l0 {
        for c in 0..d {
            m[(c, c)] -= 1.0;
        }
    }
    m[(k0, l0)] -= 1.0;
    m[(l0, k0)] -= 1.0;
    m
}

/// Fourth-cumulant matrix of whitened scores for 1-based indices `k`, `l`:
/// `(1/n) sum_i x_ik x_il x_i x_i' - delta_kl I - e_k e_l' - e_l e_k'`.
/// Vanishes for independent Gaussian scores; exactly symmetric in `(k, l)`.
pub fn jade_cumulant(w: &WhitenedScores, k: usize, l: usize) -> Result<CumulantMatrix> {
    let (n, d) = score_dims(w);
    if n == 0 {
        return Err(Error::TooFewObservations { n });
    }
    for idx in [k, l] {
        if idx == 0 || idx > d {
            return Err(Error::IndexOutOfRange { index: idx, d });
        }
    }
    Ok(CumulantMatrix {
        k,
        l,
        data: jade_cumulant_inner(&w.data, k - 1, l - 1),
    })
}

/// The upper-triangular (`k <= l`) cumulant matrices with off-diagonal
/// members scaled by sqrt(2). Squared quantities — the diagonality objective
/// and the Jacobi rotation statistics — are quadratic in each matrix, so the
/// scaled half-set reproduces the full double-sum over all d^2 pairs exactly
/// while halving the work.
fn weighted_cumulant_set(data: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let d = data.ncols();
    let mut mats = Vec::with_capacity(d * (d + 1) / 2);
    let root2 = 2.0_f64.sqrt();
    for k in 0..d {
        for l in k..d {
            let mut m = jade_cumulant_inner(data, k, l);
            if k != l {
                m *= root2;
            }
            mats.push(m);
        }
    }
    mats
}

/// Combined unmixing matrix `W = psi' Lambda^{-1/2} phi' (I_p (x) G)`:
/// applied to a centered coefficient row it whitens and rotates in one step.
pub fn unmixing_loadings(
    m: &FpcaModel,
    psi: &DMatrix<f64>,
    gram: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if psi.nrows() != m.d || psi.ncols() != m.d {
        return Err(Error::DimensionMismatch {
            context: "unmixing_loadings",
            expected: format!("{d} x {d} rotation", d = m.d),
            actual: format!("{} x {}", psi.nrows(), psi.ncols()),
        });
    }
    if gram.nrows() != m.k || gram.ncols() != m.k {
        return Err(Error::DimensionMismatch {
            context: "unmixing_loadings",
            expected: format!("{k} x {k} gram matrix", k = m.k),
            actual: format!("{} x {}", gram.nrows(), gram.ncols()),
        });
    }
    let map = fpca::whitening_map(&m.phi, &m.lambda, gram, m.p);
    Ok((map * psi).transpose())
}

/// Build the final model from a raw rotation: reorder columns, fix signs so
/// each loading row's largest-magnitude entry is positive (skipped for the
/// plain PCA baseline, which keeps psi = I exactly), and assemble loadings.
fn finalize_model(
    w: &WhitenedScores,
    psi_raw: &DMatrix<f64>,
    order: Vec<usize>,
    method: IcaMethod,
    fobi_eigenvalues: Option<DVector<f64>>,
    fobi_gap_warning: bool,
    jade: Option<JadeDiagnostics>,
) -> Result<UnmixingModel> {
    let d = w.model.d;
    let mut psi = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        psi.set_column(dst, &psi_raw.column(src));
    }
    let mut loadings = unmixing_loadings(&w.model, &psi, &w.model.gram)?;
    if method != IcaMethod::Pca {
        for row in 0..d {
            let mut best = 0;
            let mut best_abs = loadings[(row, 0)].abs();
            for col in 1..loadings.ncols() {
                let a = loadings[(row, col)].abs();
                if a > best_abs {
                    best_abs = a;
                    best = col;
                }
            }
            if loadings[(row, best)] < 0.0 {
                for col in 0..loadings.ncols() {
                    loadings[(row, col)] = -loadings[(row, col)];
                }
                for r in 0..d {
                    psi[(r, row)] = -psi[(r, row)];
                }
            }
        }
    }
    Ok(UnmixingModel {
        psi,
        loadings,
        method,
        fobi_eigenvalues,
        component_order: order,
        fpca: w.model.clone(),
        fobi_gap_warning,
        jade,
    })
}

fn require_more_rows_than_d(w: &WhitenedScores) -> Result<()> {
    let (n, d) = score_dims(w);
    if n <= d {
        return Err(Error::TooFewObservations { n });
    }
    Ok(())
}

/// Fit the kurtosis-matrix rotation: psi holds the eigenvectors of
/// [`fobi_matrix`], components ordered by its eigenvalues (descending), which
/// are recorded on the model as the component excess kurtoses.
pub fn fit_fobi(w: &WhitenedScores) -> Result<UnmixingModel> {
    require_more_rows_than_d(w)?;
    let c = fobi_matrix(w)?;
    let eig = sym_eig(&c)?;
    let d = eig.source_dim;

    let scale = eig.values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let gap_limit = FOBI_GAP_FACTOR * scale;
    let mut gap_warning = false;
    for i in 0..d.saturating_sub(1) {
        if (eig.values[i] - eig.values[i + 1]).abs() < gap_limit {
            gap_warning = true;
        }
    }
    if gap_warning {
        log::warn!(
            "fit_fobi: near-tied kurtosis eigenvalues (gap below {FOBI_GAP_FACTOR:.0e} \
             relative); the rotation is not identifiable from the fourth-moment \
             scatter matrix alone"
        );
    }

    finalize_model(
        w,
        &eig.vectors,
        (0..d).collect(),
        IcaMethod::Fobi,
        Some(eig.values),
        gap_warning,
        None,
    )
}

/// Fit the joint-diagonalization rotation over all fourth-cumulant matrices;
/// components are ordered by descending magnitude of excess kurtosis of the
/// rotated scores. Non-convergence is reported on the model, not an error.
pub fn fit_jade(w: &WhitenedScores) -> Result<UnmixingModel> {
    require_more_rows_than_d(w)?;
    let (n, d) = score_dims(w);

    if d == 1 {
        // A single component needs no rotation; the objective is the squared
        // lone cumulant entry.
        let c11 = jade_cumulant_inner(&w.data, 0, 0)[(0, 0)];
        let diag = JadeDiagnostics {
            objective: c11 * c11,
            per_column: vec![c11 * c11],
            sweeps: 0,
            converged: true,
        };
        return finalize_model(
            w,
            &DMatrix::identity(1, 1),
            vec![0],
            IcaMethod::Jade,
            None,
            false,
            Some(diag),
        );
    }

    let mats = weighted_cumulant_set(&w.data);
    let result = joint_diagonalize(&mats, DEFAULT_JD_TOL, DEFAULT_JD_MAX_SWEEPS)?;
    if !result.converged {
        log::warn!(
            "fit_jade: joint diagonalization did not converge in {} sweeps",
            result.sweeps
        );
    }

    // Order components by |excess kurtosis| of the rotated scores, ties by
    // raw column index.
    let scores = &w.data * &result.rotation;
    let mut kurt = vec![0.0; d];
    for (c, k) in kurt.iter_mut().enumerate() {
        let mut fourth = 0.0;
        for i in 0..n {
            let z = scores[(i, c)];
            fourth += z * z * z * z;
        }
        *k = fourth / n as f64 - 3.0;
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| kurt[b].abs().total_cmp(&kurt[a].abs()).then(a.cmp(&b)));

    // Per-column objective contributions in the final order.
    let per_column: Vec<f64> = order
        .iter()
        .map(|&src| {
            let col = result.rotation.column(src);
            mats.iter()
                .map(|m| {
                    let q = (col.transpose() * m * col)[(0, 0)];
                    q * q
                })
                .sum()
        })
        .collect();

    let diag = JadeDiagnostics {
        objective: result.objective,
        per_column,
        sweeps: result.sweeps,
        converged: result.converged,
    };
    finalize_model(
        w,
        &result.rotation,
        order,
        IcaMethod::Jade,
        None,
        false,
        Some(diag),
    )
}

/// The no-rotation baseline: psi = I exactly, so scores are the whitened
/// principal component scores.
pub fn fit_pca(w: &WhitenedScores) -> Result<UnmixingModel> {
    let (n, _) = score_dims(w);
    if n == 0 {
        return Err(Error::TooFewObservations { n });
    }
    let d = w.model.d;
    finalize_model(
        w,
        &DMatrix::identity(d, d),
        (0..d).collect(),
        IcaMethod::Pca,
        None,
        false,
        None,
    )
}

/// Score curves against a fitted model: `Z = X_centered * W'`.
///
/// Uncentered coefficients are centered with the training means stored on
/// the model — never their own means, which would shift new data relative to
/// the fit. Already-centered input must carry the same means it was centered
/// with; a mismatch is rejected.
pub fn component_scores(c: &CoefMatrix, model: &UnmixingModel) -> Result<ScoreMatrix> {
    let m = &model.fpca;
    if c.p != m.p || c.k != m.k {
        return Err(Error::DimensionMismatch {
            context: "component_scores",
            expected: format!("coefficients with p = {}, K = {}", m.p, m.k),
            actual: format!("p = {}, K = {}", c.p, c.k),
        });
    }
    let pk = m.p * m.k;
    let centered = if c.centered {
        let scale = m
            .train_means
            .iter()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let deviation = (0..pk)
            .map(|j| (c.column_means[j] - m.train_means[j]).abs())
            .fold(0.0_f64, f64::max);
        if deviation > 1e-10 * scale {
            return Err(Error::CenteringMismatch { deviation });
        }
        c.data.clone()
    } else {
        let mut data = c.data.clone();
        for j in 0..pk {
            let mean = m.train_means[j];
            for i in 0..data.nrows() {
                data[(i, j)] -= mean;
            }
        }
        data
    };
    Ok(ScoreMatrix {
        data: centered * model.loadings.transpose(),
        method: model.method,
        model: model.clone(),
    })
}

// ---------------------------------------------------------------------------
// JSON / CSV interfaces
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JadeDoc {
    objective: f64,
    per_column: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
struct UnmixingDoc {
    method: String,
    d: usize,
    /// Row-major d x d rotation.
    psi: Vec<Vec<f64>>,
    /// Row-major d x pK combined loadings.
    loadings: Vec<Vec<f64>>,
    component_order: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    fobi_eigenvalues: Option<Vec<f64>>,
    fpca: fpca::FpcaModelDoc,
    #[serde(default)]
    fobi_gap_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    jade: Option<JadeDoc>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Serialize a fitted unmixing model (with its embedded reduction model and
/// basis) as a JSON document.
pub fn write_unmixing_json<W: Write>(
    w: W,
    model: &UnmixingModel,
    basis: &BasisSpec,
) -> Result<()> {
    let doc = UnmixingDoc {
        method: model.method.name().to_string(),
        d: model.psi.nrows(),
        psi: rows_of(&model.psi),
        loadings: rows_of(&model.loadings),
        component_order: model.component_order.clone(),
        fobi_eigenvalues: model
            .fobi_eigenvalues
            .as_ref()
            .map(|v| v.iter().copied().collect()),
        fpca: fpca::fpca_to_doc(&model.fpca, basis)?,
        fobi_gap_warning: model.fobi_gap_warning,
        jade: model.jade.as_ref().map(|j| JadeDoc {
            objective: j.objective,
            per_column: j.per_column.clone(),
            sweeps: j.sweeps,
            converged: j.converged,
        }),
    };
    serde_json::to_writer_pretty(w, &doc).map_err(|e| fpca::json_err("<unmixing model>", &e))
}

/// Read an unmixing model document written by [`write_unmixing_json`].
pub fn read_unmixing_json<R: Read>(r: R, path: &str) -> Result<(UnmixingModel, BasisSpec)> {
    let doc: UnmixingDoc = serde_json::from_reader(r).map_err(|e| fpca::json_err(path, &e))?;
    let method = IcaMethod::parse(&doc.method)
        .ok_or_else(|| fpca::doc_err(path, format!("unknown method '{}'", doc.method)))?;
    let (fpca_model, basis) = fpca::fpca_from_doc(doc.fpca, path)?;
    let d = fpca_model.d;
    if doc.d != d {
        return Err(fpca::doc_err(path, "d does not match the embedded reduction model"));
    }
    if doc.psi.len() != d || doc.psi.iter().any(|row| row.len() != d) {
        return Err(fpca::doc_err(path, format!("psi must be {d} rows of length {d}")));
    }
    let pk = fpca_model.p * fpca_model.k;
    if doc.loadings.len() != d || doc.loadings.iter().any(|row| row.len() != pk) {
        return Err(fpca::doc_err(path, format!("loadings must be {d} rows of length {pk}")));
    }
    let mut seen = vec![false; d];
    if doc.component_order.len() != d {
        return Err(fpca::doc_err(path, "component_order must have length d"));
    }
    for &idx in &doc.component_order {
        if idx >= d || seen[idx] {
            return Err(fpca::doc_err(path, "component_order must be a permutation of 0..d"));
        }
        seen[idx] = true;
    }
    let fobi_eigenvalues = match doc.fobi_eigenvalues {
        Some(v) if v.len() == d => Some(DVector::from_vec(v)),
        Some(_) => {
            return Err(fpca::doc_err(path, "fobi_eigenvalues must have length d"));
        }
        None => None,
    };
    let psi = DMatrix::from_fn(d, d, |i, j| doc.psi[i][j]);
    let loadings = DMatrix::from_fn(d, pk, |i, j| doc.loadings[i][j]);
    if psi.iter().chain(loadings.iter()).any(|x| !x.is_finite()) {
        return Err(fpca::doc_err(path, "model entries must be finite"));
    }
    Ok((
        UnmixingModel {
            psi,
            loadings,
            method,
            fobi_eigenvalues,
            component_order: doc.component_order,
            fpca: fpca_model,
            fobi_gap_warning: doc.fobi_gap_warning,
            jade: doc.jade.map(|j| JadeDiagnostics {
                objective: j.objective,
                per_column: j.per_column,
                sweeps: j.sweeps,
                converged: j.converged,
            }),
        },
        basis,
    ))
}

/// Write component scores as CSV with header `obs_id,score_1..score_d`.
pub fn write_scores_csv<W: Write>(
    mut w: W,
    scores: &ScoreMatrix,
    obs_ids: &[String],
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: "<scores>".to_string(),
        source: e,
    };
    if obs_ids.len() != scores.data.nrows() {
        return Err(Error::DimensionMismatch {
            context: "write_scores_csv",
            expected: format!("{} obs ids", scores.data.nrows()),
            actual: format!("{}", obs_ids.len()),
        });
    }
    let d = scores.data.ncols();
    let mut header = String::from("obs_id");
    for c in 1..=d {
        header.push_str(&format!(",score_{c}"));
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for i in 0..scores.data.nrows() {
        let mut line = obs_ids[i].clone();
        for c in 0..d {
            line.push(',');
            line.push_str(&format!("{}", scores.data[(i, c)]));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}
