//! Command-line front end for the functional independent component
//! analysis pipeline: curve fitting, model estimation, scoring, the
//! minimum distance index, and the seeded simulation study.
//!
//! Exit codes: 0 on success, 1 for input problems (bad flags, unreadable or
//! malformed files, invalid configurations), 2 for numerical failures
//! (rank deficiencies, degenerate spectra, undefined indices).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use mfica::{
    block_collapse, center_coefficients, component_scores, expand_study_config, fit_coefficients,
    fit_fobi, fit_jade, fit_pca, fourier_basis, fpca_reduce, minimum_distance_index,
    read_basis_json, read_coefficients_csv, read_curves_csv, read_unmixing_json, run_study,
    whiten, write_basis_json, write_coefficients_csv, write_results_csv, write_scores_csv,
    write_summary_csv, write_unmixing_json, Error, ErrorKind, IcaMethod, UnmixingModel,
};

#[derive(Parser)]
#[command(
    name = "mfica",
    version,
    about = "Independent component analysis for multivariate functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit basis coefficients to sampled curves (curves.csv -> coefficients.csv + basis.json).
    Fit(FitArgs),
    /// Fit the reduction/whitening/rotation model (coefficients.csv + basis.json -> model.json + loadings.csv).
    Ica(IcaArgs),
    /// Score coefficients with a fitted model (coefficients.csv + model.json -> scores.csv).
    Scores(ScoresArgs),
    /// Run the seeded simulation study (study.json -> results.csv + summary.csv).
    Simulate(SimulateArgs),
    /// Compute the minimum distance index of a gain matrix CSV.
    Mdi(MdiArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Curves CSV with header obs_id,component,t,value.
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving coefficients.csv and basis.json.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Basis size per component (odd: constant plus sine/cosine pairs).
    #[arg(long, default_value_t = 11)]
    basis_k: usize,
    /// Basis interval as "start,end".
    #[arg(long, value_parser = parse_interval, default_value = "0,1")]
    interval: (f64, f64),
}

#[derive(Args)]
struct IcaArgs {
    /// Coefficients CSV written by `fit`.
    #[arg(long)]
    input: PathBuf,
    /// Basis JSON written by `fit`.
    #[arg(long)]
    basis: PathBuf,
    /// Directory receiving model.json and loadings.csv.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Number of components to estimate (default: one per curve component).
    #[arg(long)]
    d: Option<usize>,
    /// Rotation estimator.
    #[arg(long, value_enum, default_value_t = MethodArg::Jade)]
    method: MethodArg,
}

#[derive(Args)]
struct ScoresArgs {
    /// Coefficients CSV for the observations to score.
    #[arg(long)]
    input: PathBuf,
    /// Model JSON written by `ica`.
    #[arg(long)]
    model: PathBuf,
    /// Directory receiving scores.csv.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study configuration JSON (axes setting/lambda/n, plus d, methods,
    /// seed, replications).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving results.csv and summary.csv.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Override the configuration's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configuration's replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Worker threads; results are byte-identical at any setting.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
}

#[derive(Args)]
struct MdiArgs {
    /// Headerless CSV holding the gain matrix, one row per line.
    #[arg(long)]
    input: PathBuf,
    /// Number of original components, when the matrix still has one column
    /// per coefficient and must be collapsed blockwise first.
    #[arg(long)]
    p: Option<usize>,
    /// Basis size per component for the blockwise collapse.
    #[arg(long)]
    basis_k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pca,
    Fobi,
    Jade,
}

impl From<MethodArg> for IcaMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pca => IcaMethod::Pca,
            MethodArg::Fobi => IcaMethod::Fobi,
            MethodArg::Jade => IcaMethod::Jade,
        }
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"start,end\", got {s:?}"));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad interval start {:?}: {e}", parts[0]))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad interval end {:?}: {e}", parts[1]))?;
    Ok((a, b))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default())
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes, not usage errors.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Ica(args) => cmd_ica(args),
        Command::Scores(args) => cmd_scores(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Mdi(args) => cmd_mdi(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        let code = match e.kind() {
            ErrorKind::Input => 1,
            ErrorKind::Numerical => 2,
        };
        std::process::exit(code);
    }
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let input_name = args.input.display().to_string();
    let (curves, obs_ids) = read_curves_csv(open(&args.input)?, &input_name)?;
    let basis = fourier_basis(args.basis_k, args.interval)?;
    let coefs = fit_coefficients(&curves, &basis)?;

    ensure_dir(&args.output_dir)?;
    let coef_path = args.output_dir.join("coefficients.csv");
    write_coefficients_csv(create(&coef_path)?, &coefs, &obs_ids)?;
    let basis_path = args.output_dir.join("basis.json");
    write_basis_json(create(&basis_path)?, &basis)?;

    println!("wrote {}", coef_path.display());
    println!("wrote {}", basis_path.display());
    Ok(())
}

fn fit_model(method: IcaMethod, scores: &mfica::WhitenedScores) -> Result<UnmixingModel, Error> {
    match method {
        IcaMethod::Pca => fit_pca(scores),
        IcaMethod::Fobi => fit_fobi(scores),
        IcaMethod::Jade => fit_jade(scores),
    }
}

fn cmd_ica(args: IcaArgs) -> Result<(), Error> {
    let input_name = args.input.display().to_string();
    let (coefs, _obs_ids) = read_coefficients_csv(open(&args.input)?, &input_name)?;
    let basis_name = args.basis.display().to_string();
    let basis = read_basis_json(open(&args.basis)?, &basis_name)?;
    if basis.k != coefs.k {
        return Err(Error::DimensionMismatch {
            context: "ica: coefficient file and basis disagree on K",
            expected: basis.k.to_string(),
            actual: coefs.k.to_string(),
        });
    }

    let (p, k) = (coefs.p, coefs.k);
    let d = args.d.unwrap_or(p);
    let centered = center_coefficients(coefs)?;
    let model = fpca_reduce(&centered, &basis.gram, d, None)?;
    let scores = whiten(&centered, &model)?;
    let fitted = fit_model(args.method.into(), &scores)?;

    ensure_dir(&args.output_dir)?;
    let model_path = args.output_dir.join("model.json");
    write_unmixing_json(create(&model_path)?, &fitted, &basis)?;

    let loadings_path = args.output_dir.join("loadings.csv");
    let mut writer = csv::Writer::from_writer(create(&loadings_path)?);
    let csv_err = |e: csv::Error| Error::Io {
        path: loadings_path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
    };
    writer
        .write_record(["score", "component", "basis_index", "loading"])
        .map_err(csv_err)?;
    for m in 0..d {
        for j in 0..p {
            for b in 0..k {
                writer
                    .write_record([
                        (m + 1).to_string(),
                        (j + 1).to_string(),
                        (b + 1).to_string(),
                        fitted.loadings[(m, j * k + b)].to_string(),
                    ])
                    .map_err(csv_err)?;
            }
        }
    }
    writer.flush().map_err(|e| io_err(&loadings_path, e))?;

    println!("wrote {}", model_path.display());
    println!("wrote {}", loadings_path.display());
    Ok(())
}

fn cmd_scores(args: ScoresArgs) -> Result<(), Error> {
    let input_name = args.input.display().to_string();
    let (coefs, obs_ids) = read_coefficients_csv(open(&args.input)?, &input_name)?;
    let model_name = args.model.display().to_string();
    let (model, _basis) = read_unmixing_json(open(&args.model)?, &model_name)?;
    let scores = component_scores(&coefs, &model)?;

    ensure_dir(&args.output_dir)?;
    let scores_path = args.output_dir.join("scores.csv");
    write_scores_csv(create(&scores_path)?, &scores, &obs_ids)?;

    println!("wrote {}", scores_path.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let config_name = args.config.display().to_string();
    let mut grid = expand_study_config(open(&args.config)?, &config_name)?;
    for cfg in &mut grid {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(replications) = args.replications {
            cfg.replications = replications;
        }
        cfg.validate()?;
    }

    let result = run_study(&grid, args.parallelism)?;

    ensure_dir(&args.output_dir)?;
    let results_path = args.output_dir.join("results.csv");
    write_results_csv(create(&results_path)?, &result.records)?;
    let summary_path = args.output_dir.join("summary.csv");
    write_summary_csv(create(&summary_path)?, &result.records)?;

    println!("wrote {}", results_path.display());
    println!("wrote {}", summary_path.display());
    println!(
        "{} records across {} grid cells",
        result.records.len(),
        grid.len()
    );

    if !result.failures.is_empty() {
        for f in &result.failures {
            eprintln!(
                "failed replication: setting={} lambda={} n={} replication={} seed={}: {}",
                f.setting.name(),
                f.lambda_mix,
                f.n,
                f.replication,
                f.seed,
                f.reason
            );
        }
        eprintln!("error: {} replications failed", result.failures.len());
        std::process::exit(2);
    }
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, Error> {
    let name = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let mut row = Vec::with_capacity(record.len());
        for field in record.iter() {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|e| parse_err(line, format!("bad number {field:?}: {e}")))?;
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    line,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "matrix file is empty".to_string()));
    }
    let (nrows, ncols) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn cmd_mdi(args: MdiArgs) -> Result<(), Error> {
    let matrix = read_matrix_csv(&args.input)?;
    let (nrows, ncols) = (matrix.nrows(), matrix.ncols());

    let collapsed = match (args.p, args.basis_k) {
        (None, None) => {
            if nrows != ncols {
                return Err(Error::InvalidArgument {
                    context: "mdi",
                    message: format!(
                        "matrix is {nrows}x{ncols}; pass --p and/or --basis-k to collapse \
                         coefficient blocks first"
                    ),
                });
            }
            matrix
        }
        (p, k) => {
            let (p, k) = match (p, k) {
                (Some(p), Some(k)) => (p, k),
                (Some(p), None) if p > 0 && ncols % p == 0 => (p, ncols / p),
                (None, Some(k)) if k > 0 && ncols % k == 0 => (ncols / k, k),
                _ => {
                    return Err(Error::InvalidArgument {
                        context: "mdi",
                        message: format!(
                            "cannot split {ncols} columns into equal blocks with the given flags"
                        ),
                    })
                }
            };
            block_collapse(&matrix, p, k)?
        }
    };

    let mdi = minimum_distance_index(&collapsed)?;
    println!("{mdi}");
    Ok(())
}
