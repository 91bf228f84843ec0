//! Separation-performance metrics.
//!
//! After an unmixing estimate `W` has been fitted to data generated with a
//! known mixing map, the product `gain = W * Omega` tells the whole story:
//! separation succeeded exactly when the gain is a signed, scaled
//! permutation.  This module provides
//!
//! * [`block_collapse`] — reduce a gain matrix acting on stacked
//!   per-component coefficient blocks to one nonnegative energy per
//!   (estimated score, original component) pair,
//! * [`minimum_distance_index`] — the scale- and permutation-invariant
//!   distance of a square gain matrix from perfect separation, normalized
//!   to `[0, 1]` (Ilmonen, Nordhausen, Oja & Ollila, 2010),
//! * [`fourth_moment_rank`] — order estimated scores by the fourth moment
//!   of their standardized values, lightest tails first,
//! * [`gain_summary`] — the collapse-then-index composition.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ica::ScoreMatrix;

/// Largest matrix dimension accepted by [`minimum_distance_index`].
///
/// The index is computed exactly by enumerating all `p!` row-to-coordinate
/// assignments; `8! = 40320` cases is the largest enumeration we are willing
/// to do silently.
pub const MDI_MAX_DIM: usize = 8;

/// A gain matrix together with its collapsed form and distance index.
#[derive(Debug, Clone)]
pub struct GainSummary {
    /// d x pK product of the estimated unmixing map and the true mixing map.
    pub gain: DMatrix<f64>,
    /// d x p block energies; entry (m, j) is the squared mass row m puts on
    /// original component j.  Every entry is nonnegative.
    pub collapsed: DMatrix<f64>,
    /// Minimum distance index of `collapsed`, in `[0, 1]`.
    pub mdi: f64,
}

/// Collapses a gain matrix over per-component coefficient blocks.
///
/// Column block `j` (of width `k`) of `gain` holds the loadings on the `j`-th
/// original component's coefficients; the collapsed matrix sums their squares:
/// `R[m, j] = sum_{t} gain[m, j*k + t]^2`.
///
/// # Errors
///
/// [`Error::InvalidArgument`] when `p` or `k` is zero, and
/// [`Error::DimensionMismatch`] when `gain` does not have exactly `p * k`
/// columns.
pub fn block_collapse(gain: &DMatrix<f64>, p: usize, k: usize) -> Result<DMatrix<f64>> {
    if p == 0 || k == 0 {
        return Err(Error::InvalidArgument {
            context: "block_collapse",
            message: format!("block layout must be nonempty, got p = {p}, k = {k}"),
        });
    }
    if gain.ncols() != p * k {
        return Err(Error::DimensionMismatch {
            context: "block_collapse: gain columns must equal p * k",
            expected: (p * k).to_string(),
            actual: gain.ncols().to_string(),
        });
    }
    let d = gain.nrows();
    let mut collapsed = DMatrix::zeros(d, p);
    for m in 0..d {
        for j in 0..p {
            let mut energy = 0.0;
            for t in 0..k {
                let g = gain[(m, j * k + t)];
                energy += g * g;
            }
            collapsed[(m, j)] = energy;
        }
    }
    Ok(collapsed)
}

/// Minimum distance index of a square gain matrix.
///
/// For a `p x p` matrix `R`, the index is
///
/// ```text
/// D(R) = (p - 1)^{-1/2} * inf_C || C * R - I ||_F
/// ```
///
/// where `C` ranges over all matrices with exactly one nonzero entry in every
/// row and every column.  `D(R)` lies in `[0, 1]` and vanishes exactly when
/// `R` is itself such a signed, scaled permutation — i.e. when each estimated
/// score captures exactly one original component.
///
/// The infimum is computed exactly: for a fixed assignment of rows to
/// coordinates the optimal per-row scale is a one-dimensional least-squares
/// solution in closed form, and the assignment itself is enumerated over all
/// `p!` permutations (hence the `p <= 8` limit).  A `1 x 1` matrix with a
/// nonzero entry always scales to the identity, so `D = 0` there.
///
/// # Errors
///
/// [`Error::DimensionMismatch`] for non-square input,
/// [`Error::DimensionTooLarge`] for `p > 8`, [`Error::ZeroRow`] when a row is
/// identically zero (that score carries no signal, so the index is
/// undefined), and [`Error::NonFinite`] for NaN/infinite entries.
pub fn minimum_distance_index(r: &DMatrix<f64>) -> Result<f64> {
    let p = r.nrows();
    if r.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "minimum_distance_index: matrix must be square",
            expected: p.to_string(),
            actual: r.ncols().to_string(),
        });
    }
    if p == 0 {
        return Err(Error::InvalidArgument {
            context: "minimum_distance_index",
            message: "matrix must be nonempty".to_string(),
        });
    }
    if p > MDI_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            p,
            limit: MDI_MAX_DIM,
        });
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "minimum distance index input",
        });
    }

    // Squared norm of each row; a zero row makes the index undefined.
    let mut row_norm2 = vec![0.0; p];
    for m in 0..p {
        row_norm2[m] = (0..p).map(|j| r[(m, j)] * r[(m, j)]).sum();
        if row_norm2[m] == 0.0 {
            return Err(Error::ZeroRow { row: m + 1 });
        }
    }
    if p == 1 {
        return Ok(0.0);
    }

    // For the assignment sending row `rows[m]` to coordinate `m`, the optimal
    // scale c minimizing ||c * R[row, .] - e_m||^2 is R[row, m] / ||R[row, .]||^2,
    // leaving a per-row residual of 1 - R[row, m]^2 / ||R[row, .]||^2.  The
    // total squared residual is therefore p minus the assignment's summed
    // "alignment" q[row, m] = R[row, m]^2 / ||R[row, .]||^2, so the infimum
    // maximizes that sum over permutations.
    let mut alignment = DMatrix::zeros(p, p);
    for m in 0..p {
        for j in 0..p {
            alignment[(m, j)] = (r[(m, j)] * r[(m, j)]) / row_norm2[m];
        }
    }
    let mut best = f64::NEG_INFINITY;
    for rows in (0..p).permutations(p) {
        let total: f64 = rows
            .iter()
            .enumerate()
            .map(|(m, &row)| alignment[(row, m)])
            .sum();
        if total > best {
            best = total;
        }
    }
    let residual = (p as f64 - best).max(0.0);
    Ok((residual / (p as f64 - 1.0)).sqrt())
}

/// Ranks score columns by the fourth moment of their standardized values.
///
/// Each column is standardized with its own sample mean and population
/// variance, and the columns are then sorted by ascending `(1/n) * sum z^4`
/// (ties broken by column index).  The returned vector contains 1-based
/// column numbers, matching the `score_1..score_d` CSV naming, so the first
/// entry names the lightest-tailed — most multimodal-looking — score.
///
/// # Errors
///
/// [`Error::TooFewObservations`] for fewer than 4 rows,
/// [`Error::NonFinite`] for NaN/infinite scores, and
/// [`Error::InvalidArgument`] when a column is constant (its standardized
/// moment is undefined).
pub fn fourth_moment_rank(scores: &ScoreMatrix) -> Result<Vec<usize>> {
    let data = &scores.data;
    let n = data.nrows();
    let d = data.ncols();
    if n < 4 {
        return Err(Error::TooFewObservations { n });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "fourth moment rank input",
        });
    }
    let mut moments = Vec::with_capacity(d);
    for j in 0..d {
        let mean = data.column(j).sum() / n as f64;
        let var = data.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            return Err(Error::InvalidArgument {
                context: "fourth_moment_rank",
                message: format!("score column {} is constant; fourth moment undefined", j + 1),
            });
        }
        let sd = var.sqrt();
        let m4 = data
            .column(j)
            .iter()
            .map(|v| {
                let z = (v - mean) / sd;
                z * z * z * z
            })
            .sum::<f64>()
            / n as f64;
        moments.push((m4, j + 1));
    }
    moments.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(moments.into_iter().map(|(_, j)| j).collect())
}

/// Collapses a gain matrix and computes its minimum distance index.
///
/// # Errors
///
/// Any error of [`block_collapse`] or [`minimum_distance_index`].
pub fn gain_summary(gain: &DMatrix<f64>, p: usize, k: usize) -> Result<GainSummary> {
    let collapsed = block_collapse(gain, p, k)?;
    let mdi = minimum_distance_index(&collapsed)?;
    Ok(GainSummary {
        gain: gain.clone(),
        collapsed,
        mdi,
    })
}
