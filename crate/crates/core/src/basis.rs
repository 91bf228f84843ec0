//! Function bases and curve fitting.
//!
//! Observed curves are discrete samples `(t, X_ij(t))` per observation `i`
//! and component `j`; fitting projects each cell onto a K-element basis by
//! least squares, giving the n x pK coefficient matrix everything downstream
//! operates on. The default basis is the orthonormal Fourier system, whose
//! Gram matrix is exactly the identity; a general Gram matrix is carried
//! through all downstream formulas regardless.

use std::collections::HashMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Supported basis families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Constant plus sine/cosine pairs, orthonormal on the interval.
    Fourier,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            BasisKind::Fourier => "fourier",
        }
    }
}

/// A K-element function basis on an interval, together with its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    /// Number of basis functions.
    pub k: usize,
    /// Domain `[a, b]` of the functions.
    pub interval: (f64, f64),
    /// K x K Gram matrix of pairwise inner products; identity for the
    /// orthonormal Fourier basis.
    pub gram: DMatrix<f64>,
}

/// Samples of one curve cell: paired time points and values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveCell {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Discretely observed multivariate functional data: `n` observations of `p`
/// component curves, each cell sampled at its own time points.
#[derive(Debug, Clone)]
pub struct SampledCurveSet {
    pub n: usize,
    pub p: usize,
    /// Row-major cells: entry `i * p + j` holds observation `i`, component `j`.
    cells: Vec<CurveCell>,
}

impl SampledCurveSet {
    /// Build a curve set from dense cells (length `n * p`, each nonempty with
    /// matching, finite times and values).
    pub fn new(n: usize, p: usize, cells: Vec<CurveCell>) -> Result<Self> {
        if n == 0 || p == 0 || cells.len() != n * p {
            return Err(Error::InvalidArgument {
                context: "SampledCurveSet",
                message: format!(
                    "need n >= 1, p >= 1 and exactly n*p cells; got n = {n}, p = {p}, {} cells",
                    cells.len()
                ),
            });
        }
        for (idx, cell) in cells.iter().enumerate() {
            let (i, j) = (idx / p, idx % p);
            if cell.times.is_empty() || cell.times.len() != cell.values.len() {
                return Err(Error::InvalidArgument {
                    context: "SampledCurveSet",
                    message: format!(
                        "observation {}, component {}: {} time(s) vs {} value(s)",
                        i + 1,
                        j + 1,
                        cell.times.len(),
                        cell.values.len()
                    ),
                });
            }
            if cell.times.iter().chain(cell.values.iter()).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: "curve samples",
                });
            }
        }
        Ok(SampledCurveSet { n, p, cells })
    }

    /// The samples of observation `i`, component `j` (0-based).
    pub fn cell(&self, i: usize, j: usize) -> &CurveCell {
        &self.cells[i * self.p + j]
    }
}

/// The n x pK coefficient matrix of fitted curves, laid out component-major:
/// columns `j*K .. (j+1)*K` hold component `j`'s coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefMatrix {
    /// n x (p*K) coefficients, one observation per row.
    pub data: DMatrix<f64>,
    /// Number of component functions per observation.
    pub p: usize,
    /// Basis size.
    pub k: usize,
    /// Whether column means have been removed.
    pub centered: bool,
    /// Column means accumulated by centering (zero until centered).
    pub column_means: DVector<f64>,
}

impl CoefMatrix {
    /// Wrap a raw coefficient matrix; marks it uncentered.
    pub fn new(data: DMatrix<f64>, p: usize, k: usize) -> Result<Self> {
        if p == 0 || k == 0 || data.ncols() != p * k {
            return Err(Error::DimensionMismatch {
                context: "CoefMatrix",
                expected: format!("{p} * {k} = {} columns", p * k),
                actual: format!("{} columns", data.ncols()),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "coefficient matrix",
            });
        }
        let cols = data.ncols();
        Ok(CoefMatrix {
            data,
            p,
            k,
            centered: false,
            column_means: DVector::zeros(cols),
        })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }
}

/// Construct the orthonormal Fourier basis on `[a, b]`:
/// `1/sqrt(b-a)`, then `sqrt(2/(b-a)) * sin/cos(2 pi k (t-a)/(b-a))` for
/// `k = 1 .. (K-1)/2`, ordered constant, sin_1, cos_1, sin_2, cos_2, ...
///
/// `K` must be odd so frequencies come in complete sine/cosine pairs; the
/// Gram matrix is exactly the identity.
pub fn fourier_basis(k: usize, interval: (f64, f64)) -> Result<BasisSpec> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::EvenBasisSize { k });
    }
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::BadInterval { a, b });
    }
    Ok(BasisSpec {
        kind: BasisKind::Fourier,
        k,
        interval,
        gram: DMatrix::identity(k, k),
    })
}

/// Evaluate all basis functions at `t`, which must lie in the interval.
pub fn eval_basis(basis: &BasisSpec, t: f64) -> Result<DVector<f64>> {
    if !t.is_finite() {
        return Err(Error::NonFinite {
            context: "evaluation point",
        });
    }
    let (a, b) = basis.interval;
    if t < a || t > b {
        return Err(Error::PointOutsideInterval { t, a, b });
    }
    let len = b - a;
    let mut out = DVector::zeros(basis.k);
    out[0] = len.sqrt().recip();
    let scale = (2.0 / len).sqrt();
    let x = 2.0 * std::f64::consts::PI * (t - a) / len;
    for m in 1..=(basis.k - 1) / 2 {
        let arg = m as f64 * x;
        out[2 * m - 1] = scale * arg.sin();
        out[2 * m] = scale * arg.cos();
    }
    Ok(out)
}

/// Gram matrix of the basis. For the Fourier kind the analytic identity is
/// returned; `quad_points` only gates the precondition shared with quadrature
/// implementations (at least `2K` points).
pub fn gram_matrix(basis: &BasisSpec, quad_points: usize) -> Result<DMatrix<f64>> {
    if quad_points < 2 * basis.k {
        return Err(Error::InvalidArgument {
            context: "gram_matrix",
            message: format!(
                "quadrature needs at least 2K = {} points, got {quad_points}",
                2 * basis.k
            ),
        });
    }
    match basis.kind {
        BasisKind::Fourier => Ok(basis.gram.clone()),
    }
}

/// Least-squares fit of every curve cell onto the basis. Each cell needs at
/// least `K` sample points and a full-rank design matrix; the result is not
/// yet centered.
pub fn fit_coefficients(curves: &SampledCurveSet, basis: &BasisSpec) -> Result<CoefMatrix> {
    fit_coefficients_ridge(curves, basis, 0.0)
}

/// Like [`fit_coefficients`], with an optional ridge penalty `ridge >= 0`
/// added to the normal equations for users who opt into regularization of
/// near-collinear designs. `ridge = 0` is the plain least-squares path.
pub fn fit_coefficients_ridge(
    curves: &SampledCurveSet,
    basis: &BasisSpec,
    ridge: f64,
) -> Result<CoefMatrix> {
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument {
            context: "fit_coefficients",
            message: format!("ridge must be finite and >= 0, got {ridge}"),
        });
    }
    let k = basis.k;
    let (n, p) = (curves.n, curves.p);

    // Cells are independent least-squares problems; solve them in parallel
    // and assemble in index order so the result is identical at any degree.
    let fits: Vec<Result<DVector<f64>>> = (0..n * p)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / p, idx % p);
            fit_cell(curves.cell(i, j), basis, ridge).map_err(|e| locate_cell_error(e, i, j))
        })
        .collect();

    let mut data = DMatrix::zeros(n, p * k);
    for (idx, fit) in fits.into_iter().enumerate() {
        let (i, j) = (idx / p, idx % p);
        let coef = fit?;
        for c in 0..k {
            data[(i, j * k + c)] = coef[c];
        }
    }
    CoefMatrix::new(data, p, k)
}

/// Attach the owning cell to errors raised while fitting it.
fn locate_cell_error(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::UnderdeterminedCell { points, k, .. } => Error::UnderdeterminedCell {
            obs: i + 1,
            component: j + 1,
            points,
            k,
        },
        Error::RankDeficientCell { rank, k, .. } => Error::RankDeficientCell {
            obs: i + 1,
            component: j + 1,
            rank,
            k,
        },
        other => other,
    }
}

/// Tolerance factor for the rank decision in the cell least squares.
const RANK_TOL_FACTOR: f64 = 1e-10;

fn fit_cell(cell: &CurveCell, basis: &BasisSpec, ridge: f64) -> Result<DVector<f64>> {
    let k = basis.k;
    let m = cell.times.len();
    if m < k {
        return Err(Error::UnderdeterminedCell {
            obs: 0,
            component: 0,
            points: m,
            k,
        });
    }
    let mut design = DMatrix::zeros(m, k);
    for (row, &t) in cell.times.iter().enumerate() {
        let g = eval_basis(basis, t)?;
        design.set_row(row, &g.transpose());
    }
    let y = DVector::from_column_slice(&cell.values);

    if ridge > 0.0 {
        let normal = design.transpose() * &design + DMatrix::identity(k, k) * ridge;
        let rhs = design.transpose() * y;
        return match normal.cholesky() {
            Some(chol) => Ok(chol.solve(&rhs)),
            None => Err(Error::RankDeficientCell {
                obs: 0,
                component: 0,
                rank: 0,
                k,
            }),
        };
    }

    // Rank-revealing orthogonal factorization; tolerance scales with the
    // largest design column norm.
    let max_col_norm = design
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let tol = RANK_TOL_FACTOR * max_col_norm;
    let svd = design.clone().svd(true, true);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < k {
        return Err(Error::RankDeficientCell {
            obs: 0,
            component: 0,
            rank,
            k,
        });
    }
    svd.solve(&y, tol)
        .map(|c| DVector::from_column_slice(c.as_slice()))
        .map_err(|_| Error::RankDeficientCell {
            obs: 0,
            component: 0,
            rank,
            k,
        })
}

/// Remove column means (requires at least two observations). Means accumulate
/// into `column_means` so the original location is recoverable; re-centering
/// an already centered matrix changes it only by rounding noise.
pub fn center_coefficients(c: CoefMatrix) -> Result<CoefMatrix> {
    let n = c.n();
    if n < 2 {
        return Err(Error::TooFewObservations { n });
    }
    let mut data = c.data;
    let mut means = c.column_means;
    for j in 0..data.ncols() {
        let mean = data.column(j).sum() / n as f64;
        for i in 0..n {
            data[(i, j)] -= mean;
        }
        means[j] += mean;
    }
    Ok(CoefMatrix {
        data,
        p: c.p,
        k: c.k,
        centered: true,
        column_means: means,
    })
}

// ---------------------------------------------------------------------------
// CSV interfaces
// ---------------------------------------------------------------------------

const CURVE_HEADER: [&str; 4] = ["obs_id", "component", "t", "value"];

fn csv_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Read the long-format curve CSV `obs_id,component,t,value`. Rows may appear
/// in any order; observations keep their order of first appearance. Returns
/// the curve set together with the observation ids.
pub fn read_curves_csv<R: Read>(reader: R, path: &str) -> Result<(SampledCurveSet, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != CURVE_HEADER {
        return Err(parse_err(
            path,
            1,
            format!("expected header obs_id,component,t,value; got {}", got.join(",")),
        ));
    }

    let mut obs_index: HashMap<String, usize> = HashMap::new();
    let mut obs_ids: Vec<String> = Vec::new();
    let mut cells: HashMap<(usize, usize), CurveCell> = HashMap::new();
    let mut p = 0usize;

    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e
                .position()
                .map(|pos| pos.line() as usize)
                .unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = csv_line(&rec);
        if rec.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, got {}", rec.len())));
        }
        let id = rec[0].to_string();
        let component: usize = rec[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("component '{}' is not a positive integer", &rec[1])))?;
        if component == 0 {
            return Err(parse_err(path, line, "component indices are 1-based"));
        }
        let t: f64 = rec[2]
            .parse()
            .map_err(|_| parse_err(path, line, format!("t '{}' is not a number", &rec[2])))?;
        let value: f64 = rec[3]
            .parse()
            .map_err(|_| parse_err(path, line, format!("value '{}' is not a number", &rec[3])))?;
        if !t.is_finite() || !value.is_finite() {
            return Err(parse_err(path, line, "t and value must be finite"));
        }

        let next = obs_index.len();
        let i = *obs_index.entry(id.clone()).or_insert_with(|| {
            obs_ids.push(id);
            next
        });
        let j = component - 1;
        p = p.max(component);
        let cell = cells.entry((i, j)).or_default();
        cell.times.push(t);
        cell.values.push(value);
    }

    let n = obs_ids.len();
    if n == 0 {
        return Err(parse_err(path, 0, "no data rows"));
    }
    let mut dense = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            match cells.remove(&(i, j)) {
                Some(cell) => dense.push(cell),
                None => {
                    return Err(parse_err(
                        path,
                        0,
                        format!("observation '{}' has no rows for component {}", obs_ids[i], j + 1),
                    ))
                }
            }
        }
    }
    Ok((SampledCurveSet::new(n, p, dense)?, obs_ids))
}

/// Write a coefficient matrix as CSV with header `obs_id,c_1_1..c_p_K`
/// (component-major, matching the column layout).
pub fn write_coefficients_csv<W: Write>(
    mut w: W,
    coef: &CoefMatrix,
    obs_ids: &[String],
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: "<coefficients>".to_string(),
        source: e,
    };
    if obs_ids.len() != coef.n() {
        return Err(Error::DimensionMismatch {
            context: "write_coefficients_csv",
            expected: format!("{} obs ids", coef.n()),
            actual: format!("{}", obs_ids.len()),
        });
    }
    let mut header = String::from("obs_id");
    for j in 1..=coef.p {
        for c in 1..=coef.k {
            header.push_str(&format!(",c_{j}_{c}"));
        }
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for i in 0..coef.n() {
        let mut line = obs_ids[i].clone();
        for col in 0..coef.p * coef.k {
            line.push(',');
            line.push_str(&format!("{}", coef.data[(i, col)]));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Read a coefficient CSV written by [`write_coefficients_csv`]; infers `p`
/// and `K` from the header. Returns the (uncentered) matrix and the ids.
pub fn read_coefficients_csv<R: Read>(reader: R, path: &str) -> Result<(CoefMatrix, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if headers.len() < 2 || headers[0].to_ascii_lowercase() != "obs_id" {
        return Err(parse_err(path, 1, "expected header obs_id,c_1_1.."));
    }
    // Columns must follow c_{j}_{k} in component-major order.
    let mut p = 0usize;
    let mut k = 0usize;
    for (pos, h) in headers.iter().skip(1).enumerate() {
        let parts: Vec<&str> = h.split('_').collect();
        let bad = || parse_err(path, 1, format!("unexpected coefficient column '{h}'"));
        if parts.len() != 3 || parts[0] != "c" {
            return Err(bad());
        }
        let j: usize = parts[1].parse().map_err(|_| bad())?;
        let c: usize = parts[2].parse().map_err(|_| bad())?;
        if j == 0 || c == 0 {
            return Err(bad());
        }
        if j == 1 {
            k = k.max(c);
        }
        p = p.max(j);
        let expect_j = pos / k.max(1) + 1;
        let expect_c = pos % k.max(1) + 1;
        if j != expect_j || c != expect_c {
            return Err(parse_err(
                path,
                1,
                format!("coefficient columns out of order at '{h}' (expected c_{expect_j}_{expect_c})"),
            ));
        }
    }
    if p == 0 || k == 0 || headers.len() != 1 + p * k {
        return Err(parse_err(path, 1, "coefficient header does not cover p*K columns"));
    }

    let mut ids = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|pos| pos.line() as usize).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = csv_line(&rec);
        if rec.len() != 1 + p * k {
            return Err(parse_err(path, line, format!("expected {} fields, got {}", 1 + p * k, rec.len())));
        }
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            let x: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("'{field}' is not a number")))?;
            if !x.is_finite() {
                return Err(parse_err(path, line, "coefficients must be finite"));
            }
            rows.push(x);
        }
    }
    if ids.is_empty() {
        return Err(parse_err(path, 0, "no data rows"));
    }
    let data = DMatrix::from_row_slice(ids.len(), p * k, &rows);
    Ok((CoefMatrix::new(data, p, k)?, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Independent quadrature oracle: composite trapezoid integration of the
    /// pairwise products of basis evaluations.
    fn trapezoid_gram(basis: &BasisSpec, points: usize) -> DMatrix<f64> {
        let (a, b) = basis.interval;
        let h = (b - a) / (points - 1) as f64;
        let mut g = DMatrix::zeros(basis.k, basis.k);
        for step in 0..points {
            let t = a + h * step as f64;
            let weight = if step == 0 || step == points - 1 { 0.5 } else { 1.0 };
            let row = eval_basis(basis, t.min(b)).unwrap();
            for x in 0..basis.k {
                for y in 0..basis.k {
                    g[(x, y)] += weight * h * row[x] * row[y];
                }
            }
        }
        g
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn fourier_closed_form_values() {
        let b = fourier_basis(3, (0.0, 1.0)).unwrap();
        let at0 = eval_basis(&b, 0.0).unwrap();
        assert_abs_diff_eq!(at0[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at0[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at0[2], 2.0_f64.sqrt(), epsilon = 1e-15);

        let at_quarter = eval_basis(&b, 0.25).unwrap();
        assert_abs_diff_eq!(at_quarter[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at_quarter[1], 2.0_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(at_quarter[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_basis() {
        let b = fourier_basis(1, (0.0, 1.0)).unwrap();
        let v = eval_basis(&b, 0.3).unwrap();
        assert_eq!(v.len(), 1);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_eq!(gram_matrix(&b, 2).unwrap(), DMatrix::identity(1, 1));
    }

    #[test]
    fn unit_interval_size_11_basis_has_identity_gram() {
        let b = fourier_basis(11, (0.0, 1.0)).unwrap();
        assert_eq!(b.k, 11);
        assert_eq!(gram_matrix(&b, 50).unwrap(), DMatrix::identity(11, 11));
        assert_eq!(eval_basis(&b, 0.5).unwrap().len(), 11);
    }

    #[test]
    fn rejects_even_or_zero_k_and_bad_interval() {
        assert!(matches!(fourier_basis(4, (0.0, 1.0)), Err(Error::EvenBasisSize { k: 4 })));
        assert!(matches!(fourier_basis(0, (0.0, 1.0)), Err(Error::EvenBasisSize { .. })));
        assert!(matches!(fourier_basis(3, (1.0, 1.0)), Err(Error::BadInterval { .. })));
        assert!(matches!(fourier_basis(3, (2.0, 1.0)), Err(Error::BadInterval { .. })));
    }

    #[test]
    fn rejects_point_outside_interval() {
        let b = fourier_basis(3, (0.0, 1.0)).unwrap();
        assert!(matches!(eval_basis(&b, -0.1), Err(Error::PointOutsideInterval { .. })));
        assert!(matches!(eval_basis(&b, 1.1), Err(Error::PointOutsideInterval { .. })));
        // Endpoints are valid.
        assert!(eval_basis(&b, 0.0).is_ok());
        assert!(eval_basis(&b, 1.0).is_ok());
    }

    #[test]
    fn gram_matrix_needs_enough_quad_points() {
        let b = fourier_basis(5, (0.0, 1.0)).unwrap();
        assert!(matches!(gram_matrix(&b, 9), Err(Error::InvalidArgument { .. })));
        assert!(gram_matrix(&b, 10).is_ok());
    }

    #[test]
    fn quadrature_oracle_confirms_orthonormality() {
        // Non-unit interval at 10k points.
        let b = fourier_basis(3, (0.0, 2.0)).unwrap();
        let g = trapezoid_gram(&b, 10_000);
        assert!(max_abs(&(g - DMatrix::identity(3, 3))) < 1e-10);

        // 5000-point oracle across sizes up to 15.
        for k in [5usize, 11, 15] {
            let b = fourier_basis(k, (0.0, 1.0)).unwrap();
            let g = trapezoid_gram(&b, 5000);
            assert!(
                max_abs(&(g - DMatrix::identity(k, k))) < 1e-9,
                "quadrature gram deviates for K = {k}"
            );
        }
    }

    fn synth_curves(
        coef: &DMatrix<f64>,
        p: usize,
        basis: &BasisSpec,
        times: &[f64],
    ) -> SampledCurveSet {
        let n = coef.nrows();
        let k = basis.k;
        let mut cells = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                let values: Vec<f64> = times
                    .iter()
                    .map(|&t| {
                        let g = eval_basis(basis, t).unwrap();
                        (0..k).map(|c| coef[(i, j * k + c)] * g[c]).sum()
                    })
                    .collect();
                cells.push(CurveCell {
                    times: times.to_vec(),
                    values,
                });
            }
        }
        SampledCurveSet::new(n, p, cells).unwrap()
    }

    #[test]
    fn fit_recovers_exact_basis_combinations() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let basis = fourier_basis(11, (0.0, 1.0)).unwrap();
        let (n, p) = (3usize, 2usize);
        let coef = DMatrix::from_fn(n, p * 11, |_, _| rng.sample::<f64, _>(StandardNormal));
        let times: Vec<f64> = (0..50).map(|m| m as f64 / 49.0).collect();
        let curves = synth_curves(&coef, p, &basis, &times);
        let fitted = fit_coefficients(&curves, &basis).unwrap();
        assert!(!fitted.centered);
        assert!(max_abs(&(&fitted.data - &coef)) < 1e-8);
    }

    #[test]
    fn fit_zero_curves_gives_zero_coefficients() {
        let basis = fourier_basis(5, (0.0, 1.0)).unwrap();
        let times: Vec<f64> = (0..20).map(|m| m as f64 / 19.0).collect();
        let cells = vec![
            CurveCell {
                times: times.clone(),
                values: vec![0.0; 20],
            };
            2
        ];
        let curves = SampledCurveSet::new(2, 1, cells).unwrap();
        let fitted = fit_coefficients(&curves, &basis).unwrap();
        assert!(max_abs(&fitted.data) < 1e-14);
    }

    #[test]
    fn fit_residual_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let basis = fourier_basis(7, (0.0, 1.0)).unwrap();
        let times: Vec<f64> = (0..40).map(|m| m as f64 / 39.0).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| (3.0 * t).sin() + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let curves = SampledCurveSet::new(
            1,
            1,
            vec![CurveCell {
                times: times.clone(),
                values: values.clone(),
            }],
        )
        .unwrap();
        let fitted = fit_coefficients(&curves, &basis).unwrap();
        // Normal equations: design' * residual = 0.
        let mut design = DMatrix::zeros(times.len(), 7);
        for (row, &t) in times.iter().enumerate() {
            design.set_row(row, &eval_basis(&basis, t).unwrap().transpose());
        }
        let y = DVector::from_column_slice(&values);
        let coef = fitted.data.row(0).transpose();
        let residual = y - &design * coef;
        let check = design.transpose() * residual;
        assert!(check.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn fit_identifies_underdetermined_cell() {
        let basis = fourier_basis(5, (0.0, 1.0)).unwrap();
        let good_times: Vec<f64> = (0..10).map(|m| m as f64 / 9.0).collect();
        let good = CurveCell {
            times: good_times.clone(),
            values: vec![1.0; 10],
        };
        let bad = CurveCell {
            times: vec![0.1, 0.5, 0.9],
            values: vec![1.0, 2.0, 3.0],
        };
        let curves = SampledCurveSet::new(2, 2, vec![good.clone(), good.clone(), good.clone(), bad]).unwrap();
        match fit_coefficients(&curves, &basis) {
            Err(Error::UnderdeterminedCell {
                obs,
                component,
                points,
                k,
            }) => {
                assert_eq!((obs, component, points, k), (2, 2, 3, 5));
            }
            other => panic!("expected underdetermined cell, got {other:?}"),
        }
    }

    #[test]
    fn fit_identifies_rank_deficient_cell() {
        let basis = fourier_basis(5, (0.0, 1.0)).unwrap();
        // All samples at one time point: the design has rank 1.
        let degenerate = CurveCell {
            times: vec![0.5; 8],
            values: vec![1.0; 8],
        };
        let curves = SampledCurveSet::new(1, 1, vec![degenerate]).unwrap();
        match fit_coefficients(&curves, &basis) {
            Err(Error::RankDeficientCell { obs, component, rank, k }) => {
                assert_eq!((obs, component, k), (1, 1, 5));
                assert!(rank < 5);
            }
            other => panic!("expected rank-deficient cell, got {other:?}"),
        }
    }

    #[test]
    fn ridge_fit_handles_clustered_times() {
        let basis = fourier_basis(5, (0.0, 1.0)).unwrap();
        let degenerate = CurveCell {
            times: vec![0.5; 8],
            values: vec![1.0; 8],
        };
        let curves = SampledCurveSet::new(1, 1, vec![degenerate]).unwrap();
        let fitted = fit_coefficients_ridge(&curves, &basis, 1e-6).unwrap();
        assert!(fitted.data.iter().all(|x| x.is_finite()));
        // And on a well-posed problem ridge -> 0 matches the plain fit.
        let times: Vec<f64> = (0..30).map(|m| m as f64 / 29.0).collect();
        let cell = CurveCell {
            times: times.clone(),
            values: times.iter().map(|t| t.cos()).collect(),
        };
        let curves = SampledCurveSet::new(1, 1, vec![cell]).unwrap();
        let plain = fit_coefficients(&curves, &basis).unwrap();
        let ridged = fit_coefficients_ridge(&curves, &basis, 1e-13).unwrap();
        assert!(max_abs(&(&plain.data - &ridged.data)) < 1e-6);
    }

    #[test]
    fn fit_is_deterministic_across_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let basis = fourier_basis(7, (0.0, 1.0)).unwrap();
        let coef = DMatrix::from_fn(4, 2 * 7, |_, _| rng.sample::<f64, _>(StandardNormal));
        let times: Vec<f64> = (0..25).map(|m| m as f64 / 24.0).collect();
        let curves = synth_curves(&coef, 2, &basis, &times);
        let a = fit_coefficients(&curves, &basis).unwrap();
        let b = fit_coefficients(&curves, &basis).unwrap();
        assert_eq!(a.data.as_slice(), b.data.as_slice());
    }

    #[test]
    fn centering_identical_rows_zeroes_data() {
        let row = [1.0, -2.0, 3.0];
        let data = DMatrix::from_fn(4, 3, |_, j| row[j]);
        let c = CoefMatrix::new(data, 1, 3).unwrap();
        let centered = center_coefficients(c).unwrap();
        assert!(centered.centered);
        assert!(max_abs(&centered.data) < 1e-14);
        for j in 0..3 {
            assert_abs_diff_eq!(centered.column_means[j], row[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn centering_is_idempotent_and_sums_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let data = DMatrix::from_fn(10, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let once = center_coefficients(CoefMatrix::new(data, 2, 3).unwrap()).unwrap();
        for j in 0..6 {
            assert!(once.data.column(j).sum().abs() < 1e-10);
        }
        let twice = center_coefficients(once.clone()).unwrap();
        assert!(max_abs(&(&twice.data - &once.data)) < 1e-12);
        assert!((&twice.column_means - &once.column_means).amax() < 1e-12);
    }

    #[test]
    fn centering_needs_two_observations() {
        let c = CoefMatrix::new(DMatrix::zeros(1, 3), 1, 3).unwrap();
        assert!(matches!(
            center_coefficients(c),
            Err(Error::TooFewObservations { n: 1 })
        ));
    }

    #[test]
    fn curve_csv_round_trip_and_errors() {
        let csv_text = "obs_id,component,t,value\n\
                        a,1,0.0,1.5\n\
                        a,1,0.5,2.0\n\
                        a,2,0.25,-1.0\n\
                        b,2,0.75,0.5\n\
                        b,1,1.0,0.0\n";
        let (curves, ids) = read_curves_csv(csv_text.as_bytes(), "test.csv").unwrap();
        assert_eq!((curves.n, curves.p), (2, 2));
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(curves.cell(0, 0).times, vec![0.0, 0.5]);
        assert_eq!(curves.cell(1, 1).values, vec![0.5]);

        // Bad numeric field reports its line.
        let bad = "obs_id,component,t,value\na,1,0.0,1.5\na,1,oops,2.0\n";
        match read_curves_csv(bad.as_bytes(), "test.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        // Missing cell is rejected.
        let missing = "obs_id,component,t,value\na,1,0.0,1.5\nb,2,0.5,1.0\n";
        assert!(matches!(
            read_curves_csv(missing.as_bytes(), "t"),
            Err(Error::Parse { .. })
        ));

        // Wrong header is rejected.
        let wrong = "id,component,t,value\na,1,0.0,1.5\n";
        assert!(matches!(
            read_curves_csv(wrong.as_bytes(), "t"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn coefficients_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let data = DMatrix::from_fn(3, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let coef = CoefMatrix::new(data, 2, 3).unwrap();
        let ids = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        let mut buf = Vec::new();
        write_coefficients_csv(&mut buf, &coef, &ids).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("obs_id,c_1_1,c_1_2,c_1_3,c_2_1,c_2_2,c_2_3\n"));

        let (back, back_ids) = read_coefficients_csv(buf.as_slice(), "coef.csv").unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!((back.p, back.k), (2, 3));
        // Shortest round-trip float formatting reproduces the values exactly.
        assert_eq!(back.data.as_slice(), coef.data.as_slice());
    }
}
