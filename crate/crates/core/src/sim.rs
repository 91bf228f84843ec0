//! Seeded Monte-Carlo study of separation performance.
//!
//! The study design: each observation is a vector of `p = 4` component
//! functions expanded in `K = 11` basis coefficients.  Latent coefficients
//! are drawn independently — the *leading* coefficient of each component
//! from a named non-Gaussian distribution (two settings below), the
//! remaining 40 coefficients i.i.d. standard normal — and then mixed by a
//! 44 x 44 map `Omega` that acts as `B4^{1/2}` on the four leading
//! coefficients and as the identity elsewhere, where `B4 = A A' + lambda I`
//! for a random square `A`.  Larger `lambda` pushes the four mixed
//! directions further above the noise floor, making the separation problem
//! easier; the four population eigenvalues of the mixed block are
//! `a_j^2 + lambda` against 1 for every unmixed direction.
//!
//! * Setting 1: leading coefficients Uniform, Gamma(3, rate sqrt(3)),
//!   chi-squared(3), Exponential(1) — all standardized; four distinct
//!   kurtoses.
//! * Setting 2: four standardized Uniforms — identical kurtoses, which
//!   defeats any method that separates via kurtosis gaps alone.
//!
//! Each replication runs the full pipeline (center, reduce to `d`
//! dimensions, whiten, fit each requested method), multiplies the resulting
//! unmixing rows against the true `Omega`, collapses coefficient blocks, and
//! reports the minimum distance index.
//!
//! Every random draw is produced by [`SplitMix64`], a counter-based
//! generator with pinned sampling algorithms, so a `(master seed,
//! replication index)` pair reproduces its record bit for bit on any
//! machine, at any parallelism.

use std::collections::HashSet;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Deserialize;

use crate::basis::{center_coefficients, CoefMatrix};
use crate::error::{Error, Result};
use crate::eval::{block_collapse, minimum_distance_index};
use crate::fpca::{doc_err, fpca_reduce, json_err, whiten};
use crate::ica::{fit_fobi, fit_jade, fit_pca, IcaMethod, UnmixingModel};
use crate::matalg::sym_eig;

/// Number of component functions in the study design.
pub const SIM_P: usize = 4;
/// Basis size per component in the study design.
pub const SIM_K: usize = 11;
/// Total coefficient dimension (`SIM_P * SIM_K`).
pub const SIM_PK: usize = SIM_P * SIM_K;
/// 0-based positions of the leading coefficient of each component in the
/// component-major layout (coefficient 1 of components 1..4).
pub const LEADING_INDICES: [usize; 4] = [0, SIM_K, 2 * SIM_K, 3 * SIM_K];

const GOLDEN_RATIO: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizing mixer of the SplitMix64 generator (Steele, Lea & Flood, 2014;
/// constants due to Stafford's Mix13).  Also used to hash replication
/// indices into per-replication seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64: a 64-bit counter stepped by the golden-ratio increment and
/// passed through [`mix64`].
///
/// Sampling algorithms are pinned so that streams never drift across
/// versions or platforms:
///
/// * `uniform01`: top 53 bits of `next_u64`, scaled by 2^-53 — in `[0, 1)`.
/// * `exp1`: inverse CDF, `-ln(1 - u)`.
/// * `normal`: Box-Muller, cosine branch only (two uniforms per draw,
///   nothing cached).
/// * Gamma(3, rate sqrt(3)): sum of three `exp1` draws divided by sqrt(3).
/// * chi-squared(3): sum of three squared `normal` draws.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_RATIO);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53-bit resolution.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard exponential via the inverse CDF.
    pub fn exp1(&mut self) -> f64 {
        -(1.0 - self.uniform01()).ln()
    }

    /// Standard normal via Box-Muller (cosine branch).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform01();
        let u2 = self.uniform01();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform(0,1) standardized to zero mean, unit variance:
    /// `(U - 1/2) * sqrt(12)`.  Excess kurtosis -1.2.
    pub fn standardized_uniform(&mut self) -> f64 {
        (self.uniform01() - 0.5) * 12f64.sqrt()
    }

    /// Gamma(shape 3, rate sqrt(3)) standardized: mean sqrt(3) subtracted,
    /// variance already 1.  Excess kurtosis 2.
    pub fn standardized_gamma3(&mut self) -> f64 {
        (self.exp1() + self.exp1() + self.exp1() - 3.0) / 3f64.sqrt()
    }

    /// chi-squared(3) standardized: `(X - 3) / sqrt(6)`.  Excess kurtosis 4.
    pub fn standardized_chi_squared3(&mut self) -> f64 {
        let (a, b, c) = (self.normal(), self.normal(), self.normal());
        (a * a + b * b + c * c - 3.0) / 6f64.sqrt()
    }

    /// Exponential(1) standardized: `X - 1`.  Excess kurtosis 6.
    pub fn standardized_exp(&mut self) -> f64 {
        self.exp1() - 1.0
    }
}

/// The seed driving one replication: the master seed XOR a golden-ratio
/// hash of the replication index.  The `+ 1` keeps index 0 from hashing to
/// zero (which would alias the master seed itself).
pub fn replication_seed(master_seed: u64, rep_index: usize) -> u64 {
    master_seed ^ mix64((rep_index as u64).wrapping_add(1).wrapping_mul(GOLDEN_RATIO))
}

/// Which family of leading-coefficient distributions to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    /// Distinct kurtoses: Uniform, Gamma(3), chi-squared(3), Exponential(1).
    S1,
    /// Matching kurtoses: four standardized Uniforms.
    S2,
}

impl Setting {
    pub fn name(&self) -> &'static str {
        match self {
            Setting::S1 => "S1",
            Setting::S2 => "S2",
        }
    }

    pub fn parse(s: &str) -> Option<Setting> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Some(Setting::S1),
            "S2" => Some(Setting::S2),
            _ => None,
        }
    }
}

/// One cell of the study grid.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub setting: Setting,
    /// Observations per replication.
    pub n: usize,
    /// Separation strength `lambda` in `B4 = A A' + lambda I` (> 0).
    pub lambda_mix: f64,
    /// Analysis dimension passed to the reduction step.
    pub d: usize,
    /// Estimators to fit on each replication.
    pub methods: Vec<IcaMethod>,
    /// Master seed; replication seeds are derived by [`replication_seed`].
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    /// Checks the grid-cell parameters without running anything.
    ///
    /// # Errors
    ///
    /// [`Error::BadSimConfig`] describing the first violated requirement.
    pub fn validate(&self) -> Result<()> {
        if !self.lambda_mix.is_finite() || self.lambda_mix <= 0.0 {
            return Err(Error::BadSimConfig {
                message: format!("lambda must be a positive real, got {}", self.lambda_mix),
            });
        }
        if self.d == 0 || self.d > SIM_PK {
            return Err(Error::BadSimConfig {
                message: format!("analysis dimension must be in 1..={SIM_PK}, got {}", self.d),
            });
        }
        if self.n < self.d + 1 {
            return Err(Error::BadSimConfig {
                message: format!(
                    "need at least d + 1 = {} observations, got {}",
                    self.d + 1,
                    self.n
                ),
            });
        }
        if self.methods.is_empty() {
            return Err(Error::BadSimConfig {
                message: "at least one method must be requested".to_string(),
            });
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert(*m) {
                return Err(Error::BadSimConfig {
                    message: format!("method {} requested twice", m.name()),
                });
            }
        }
        if self.replications == 0 {
            return Err(Error::BadSimConfig {
                message: "replications must be positive".to_string(),
            });
        }
        Ok(())
    }
}

/// The mixing map of one replication.
#[derive(Debug, Clone)]
pub struct MixingSpec {
    /// 44 x 44 invertible map: `b_sqrt` on the leading coordinates,
    /// identity elsewhere.
    pub omega: DMatrix<f64>,
    /// Symmetric positive-definite square root of `B4 = A A' + lambda I`.
    pub b_sqrt: DMatrix<f64>,
    /// 0-based coefficient positions carrying the mixed block.
    pub leading_indices: [usize; 4],
    pub lambda_mix: f64,
}

/// Outcome of one (replication, method) pair.
#[derive(Debug, Clone)]
pub struct ReplicationRecord {
    pub setting: Setting,
    pub lambda_mix: f64,
    pub n: usize,
    pub method: IcaMethod,
    /// 0-based replication index within the grid cell.
    pub replication: usize,
    /// Minimum distance index of the collapsed gain matrix.
    pub mdi: f64,
    /// The derived seed that drove this replication's draws.
    pub seed: u64,
}

/// A replication whose pipeline failed; the study records it instead of
/// crashing.
#[derive(Debug, Clone)]
pub struct StudyFailure {
    pub setting: Setting,
    pub lambda_mix: f64,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub reason: String,
}

/// All records and failures of a study run, sorted by
/// (setting, lambda, n, method name, replication).
#[derive(Debug, Clone, Default)]
pub struct StudyResult {
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<StudyFailure>,
}

/// Draws the latent coefficient matrix for one replication.
///
/// Row `i` is observation `i`; columns are component-major (component `j`
/// occupies columns `j*K ..= j*K + K - 1`).  Per observation the columns are
/// drawn in ascending order: each leading column from the setting's
/// standardized distribution, every other column standard normal.  All
/// columns have zero population mean and unit population variance.
pub fn gen_sources(setting: Setting, n: usize, rng: &mut SplitMix64) -> Result<CoefMatrix> {
    let mut data = DMatrix::zeros(n, SIM_PK);
    for i in 0..n {
        for j in 0..SIM_PK {
            let component = match LEADING_INDICES.iter().position(|&lead| lead == j) {
                None => rng.normal(),
                Some(which) => match setting {
                    Setting::S2 => rng.standardized_uniform(),
                    Setting::S1 => match which {
                        0 => rng.standardized_uniform(),
                        1 => rng.standardized_gamma3(),
                        2 => rng.standardized_chi_squared3(),
                        _ => rng.standardized_exp(),
                    },
                },
            };
            data[(i, j)] = component;
        }
    }
    CoefMatrix::new(data, SIM_P, SIM_K)
}

/// Draws the mixing map for one replication.
///
/// `A` is 4 x 4 with i.i.d. standard normal entries (drawn row-major),
/// `B4 = A A' + lambda I`, and `b_sqrt` is the symmetric positive-definite
/// square root of `B4`.  `Omega` routes `b_sqrt` to the four leading
/// coefficient positions and leaves every other coordinate untouched.
///
/// # Errors
///
/// [`Error::BadSimConfig`] for a non-positive `lambda_mix`; numerical errors
/// from the eigendecomposition of `B4`.
pub fn gen_mixing(lambda_mix: f64, rng: &mut SplitMix64) -> Result<MixingSpec> {
    if !lambda_mix.is_finite() || lambda_mix <= 0.0 {
        return Err(Error::BadSimConfig {
            message: format!("lambda must be a positive real, got {lambda_mix}"),
        });
    }
    let a = DMatrix::from_fn(SIM_P, SIM_P, |_, _| rng.normal());
    let b4 = &a * a.transpose() + lambda_mix * DMatrix::identity(SIM_P, SIM_P);

    // Symmetric PSD root: scale eigenvectors by lambda^{1/4} and square the
    // factor, which keeps the root exactly symmetric in floating point.
    let eig = sym_eig(&b4)?;
    let mut scaled = eig.vectors.clone();
    for k in 0..SIM_P {
        let root = eig.values[k].max(0.0).sqrt().sqrt();
        scaled.column_mut(k).scale_mut(root);
    }
    let b_sqrt = &scaled * scaled.transpose();

    let mut omega = DMatrix::identity(SIM_PK, SIM_PK);
    for (row, &lead_row) in LEADING_INDICES.iter().enumerate() {
        for (col, &lead_col) in LEADING_INDICES.iter().enumerate() {
            omega[(lead_row, lead_col)] = b_sqrt[(row, col)];
        }
    }
    Ok(MixingSpec {
        omega,
        b_sqrt,
        leading_indices: LEADING_INDICES,
        lambda_mix,
    })
}

/// Runs the full pipeline once and scores every requested method.
///
/// Seeds a fresh generator with `replication_seed(cfg.seed, rep_index)`,
/// draws sources and mixing, forms the observed coefficients `X = Z *
/// Omega'`, centers, reduces to `cfg.d` dimensions under the identity Gram
/// matrix (the design's basis is orthonormal), whitens, fits each method,
/// and evaluates the collapsed gain `W * Omega` with the minimum distance
/// index.  Records appear in `cfg.methods` order.
///
/// # Errors
///
/// Any pipeline error; the study runner converts these into
/// [`StudyFailure`] entries rather than crashing.
pub fn run_replication(cfg: &SimConfig, rep_index: usize) -> Result<Vec<ReplicationRecord>> {
    cfg.validate()?;
    let seed = replication_seed(cfg.seed, rep_index);
    let mut rng = SplitMix64::new(seed);

    let sources = gen_sources(cfg.setting, cfg.n, &mut rng)?;
    let mixing = gen_mixing(cfg.lambda_mix, &mut rng)?;

    let mixed = CoefMatrix::new(sources.data * mixing.omega.transpose(), SIM_P, SIM_K)?;
    let centered = center_coefficients(mixed)?;
    let gram = DMatrix::identity(SIM_K, SIM_K);
    let model = fpca_reduce(&centered, &gram, cfg.d, None)?;
    let whitened = whiten(&centered, &model)?;

    let mut records = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let fitted: UnmixingModel = match method {
            IcaMethod::Pca => fit_pca(&whitened)?,
            IcaMethod::Fobi => fit_fobi(&whitened)?,
            IcaMethod::Jade => fit_jade(&whitened)?,
        };
        let gain = &fitted.loadings * &mixing.omega;
        let collapsed = block_collapse(&gain, SIM_P, SIM_K)?;
        let mdi = minimum_distance_index(&collapsed)?;
        records.push(ReplicationRecord {
            setting: cfg.setting,
            lambda_mix: cfg.lambda_mix,
            n: cfg.n,
            method,
            replication: rep_index,
            mdi,
            seed,
        });
    }
    Ok(records)
}

fn record_sort_key(r: &ReplicationRecord) -> (&'static str, u64, usize, &'static str, usize) {
    (
        r.setting.name(),
        r.lambda_mix.to_bits(),
        r.n,
        r.method.name(),
        r.replication,
    )
}

/// Runs every replication of every grid cell on a private thread pool.
///
/// The output is sorted by (setting, lambda, n, method name, replication),
/// so the result — and any CSV written from it — is byte-identical for a
/// given grid and master seed regardless of `parallelism`.  Failed
/// replications are collected into [`StudyResult::failures`] instead of
/// aborting the study.
///
/// # Errors
///
/// [`Error::BadSimConfig`] if any grid cell is invalid (checked before any
/// work starts); [`Error::InvalidArgument`] if the thread pool cannot be
/// built.
pub fn run_study(grid: &[SimConfig], parallelism: usize) -> Result<StudyResult> {
    for cfg in grid {
        cfg.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument {
            context: "run_study",
            message: format!("could not build thread pool: {e}"),
        })?;

    let tasks: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.replications).map(move |r| (c, r)))
        .collect();

    let outcomes: Vec<(usize, usize, Result<Vec<ReplicationRecord>>)> = pool.install(|| {
        tasks
            .into_par_iter()
            .map(|(c, r)| (c, r, run_replication(&grid[c], r)))
            .collect()
    });

    let mut result = StudyResult::default();
    for (c, r, outcome) in outcomes {
        match outcome {
            Ok(mut records) => result.records.append(&mut records),
            Err(e) => {
                let cfg = &grid[c];
                result.failures.push(StudyFailure {
                    setting: cfg.setting,
                    lambda_mix: cfg.lambda_mix,
                    n: cfg.n,
                    replication: r,
                    seed: replication_seed(cfg.seed, r),
                    reason: e.to_string(),
                });
            }
        }
    }
    result.records.sort_by(|a, b| record_sort_key(a).cmp(&record_sort_key(b)));
    result.failures.sort_by(|a, b| {
        (a.setting.name(), a.lambda_mix.to_bits(), a.n, a.replication)
            .cmp(&(b.setting.name(), b.lambda_mix.to_bits(), b.n, b.replication))
    });
    Ok(result)
}

/// Writes per-replication records as CSV with header
/// `setting,lambda,n,method,replication,mdi,seed`.
///
/// # Errors
///
/// [`Error::Io`] on write failure.
pub fn write_results_csv<W: Write>(w: W, records: &[ReplicationRecord]) -> Result<()> {
    let io_err = |e: csv::Error| Error::Io {
        path: "<results csv>".to_string(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
    };
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record(["setting", "lambda", "n", "method", "replication", "mdi", "seed"])
        .map_err(io_err)?;
    for r in records {
        writer
            .write_record([
                r.setting.name().to_string(),
                r.lambda_mix.to_string(),
                r.n.to_string(),
                r.method.name().to_string(),
                r.replication.to_string(),
                r.mdi.to_string(),
                r.seed.to_string(),
            ])
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: "<results csv>".to_string(),
        source: e,
    })?;
    Ok(())
}

/// One row of the aggregated study summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub setting: Setting,
    pub lambda_mix: f64,
    pub n: usize,
    pub method: IcaMethod,
    pub replications: usize,
    pub mean_mdi: f64,
}

/// Aggregates sorted records into per-cell means, in the records' order.
pub fn summarize(records: &[ReplicationRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in records {
        let same_cell = rows.last().is_some_and(|row| {
            row.setting == r.setting
                && row.lambda_mix.to_bits() == r.lambda_mix.to_bits()
                && row.n == r.n
                && row.method == r.method
        });
        if same_cell {
            let row = rows.last_mut().expect("nonempty after is_some_and");
            row.replications += 1;
            row.mean_mdi += r.mdi;
        } else {
            rows.push(SummaryRow {
                setting: r.setting,
                lambda_mix: r.lambda_mix,
                n: r.n,
                method: r.method,
                replications: 1,
                mean_mdi: r.mdi,
            });
        }
    }
    for row in &mut rows {
        row.mean_mdi /= row.replications as f64;
    }
    rows
}

/// Writes the aggregated summary as CSV with header
/// `setting,lambda,n,method,replications,mean_mdi`.
///
/// # Errors
///
/// [`Error::Io`] on write failure.
pub fn write_summary_csv<W: Write>(w: W, records: &[ReplicationRecord]) -> Result<()> {
    let io_err = |e: csv::Error| Error::Io {
        path: "<summary csv>".to_string(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
    };
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record(["setting", "lambda", "n", "method", "replications", "mean_mdi"])
        .map_err(io_err)?;
    for row in summarize(records) {
        writer
            .write_record([
                row.setting.name().to_string(),
                row.lambda_mix.to_string(),
                row.n.to_string(),
                row.method.name().to_string(),
                row.replications.to_string(),
                row.mean_mdi.to_string(),
            ])
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: "<summary csv>".to_string(),
        source: e,
    })?;
    Ok(())
}

/// Scalar-or-array JSON field.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(vs) => vs,
        }
    }
}

fn default_d() -> usize {
    SIM_P
}

fn default_replications() -> usize {
    100
}

/// JSON study description: every grid axis may be a scalar or an array.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyConfigDoc {
    setting: OneOrMany<String>,
    n: OneOrMany<usize>,
    #[serde(alias = "lambda_mix")]
    lambda: OneOrMany<f64>,
    #[serde(default = "default_d")]
    d: usize,
    #[serde(default)]
    methods: Option<Vec<String>>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_replications")]
    replications: usize,
}

/// Reads a JSON study description and expands it into one [`SimConfig`] per
/// (setting, lambda, n) combination, in setting-major order.
///
/// Recognized keys: `setting` ("S1"/"S2"), `lambda` (alias `lambda_mix`),
/// `n` — each a scalar or an array — plus scalar `d` (default 4), `methods`
/// (default all of pca/fobi/jade), `seed` (default 0), `replications`
/// (default 100).
///
/// # Errors
///
/// [`Error::Parse`] for malformed JSON or unknown fields/values;
/// [`Error::BadSimConfig`] if an expanded cell fails validation.
pub fn expand_study_config<R: Read>(reader: R, path: &str) -> Result<Vec<SimConfig>> {
    let doc: StudyConfigDoc = serde_json::from_reader(reader).map_err(|e| json_err(path, &e))?;

    let mut settings = Vec::new();
    for s in doc.setting.into_vec() {
        let parsed = Setting::parse(&s)
            .ok_or_else(|| doc_err(path, format!("unknown setting {s:?} (expected S1 or S2)")))?;
        settings.push(parsed);
    }
    let methods = match doc.methods {
        None => vec![IcaMethod::Pca, IcaMethod::Fobi, IcaMethod::Jade],
        Some(names) => {
            let mut parsed = Vec::new();
            for name in &names {
                let method = IcaMethod::parse(name).ok_or_else(|| {
                    doc_err(path, format!("unknown method {name:?} (expected pca, fobi, or jade)"))
                })?;
                parsed.push(method);
            }
            parsed
        }
    };
    let lambdas = doc.lambda.into_vec();
    let ns = doc.n.into_vec();
    if settings.is_empty() || lambdas.is_empty() || ns.is_empty() {
        return Err(doc_err(path, "setting, lambda, and n must each be nonempty"));
    }

    let mut grid = Vec::with_capacity(settings.len() * lambdas.len() * ns.len());
    for &setting in &settings {
        for &lambda_mix in &lambdas {
            for &n in &ns {
                let cfg = SimConfig {
                    setting,
                    n,
                    lambda_mix,
                    d: doc.d,
                    methods: methods.clone(),
                    seed: doc.seed,
                    replications: doc.replications,
                };
                cfg.validate()?;
                grid.push(cfg);
            }
        }
    }
    Ok(grid)
}
