//! Command-line frontend: loads algebra documents, runs the geometry
//! pipeline, and emits JSON documents.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 bad input,
//! 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use liecurv::curvature::{
    connection_koszul, max_relative_deviation, ricci_closed_form, ricci_oracle, ricci_trace,
    scalar_curvature,
};
use liecurv::gn_family::{
    family_equation_defect, gn_frame, gn_scalar_curvature_closed, qe_family_point, GnSpec,
};
use liecurv::io::{
    load_algebra, load_document, matrix_rows, FrameSection, Provenance, ReportDocument,
    RicciSection, Tolerances, ValidationSection, WitnessSection,
};
use liecurv::quad_form::{adapted_frame, check_ad_invariance, AdaptedFrame};
use liecurv::quasi_einstein::{qe_residual, verify_killing_theorem, QEWitness};
use liecurv::solver::{solve_qe, DiagonalMetricTemplate, SolveOptions, SolvedPoint};
use liecurv::{Error, InvariantForm, LieAlgebra, Metric};

const KILLING_TOL: f64 = 1e-8;
const RICCI_AGREEMENT_TOL: f64 = 1e-9;
const AXIOM_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "liecurv",
    version,
    about = "Left-invariant curvature and quasi-Einstein search on quadratic Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Indent emitted documents for reading.
    #[arg(long, global = true)]
    pretty: bool,
    /// Write the emitted document to this file instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the algebra axioms (and form invariance when present); exit 1 on failure
    Validate { file: PathBuf },
    /// Compute the adapted orthonormal frame (requires a form)
    Frame { file: PathBuf },
    /// Compute the Ricci tensor in the adapted frame
    Ricci {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
    },
    /// Verify a quasi-Einstein witness; exit 1 when it misses the tolerance
    QeCheck {
        file: PathBuf,
        /// Drift coefficients in document coordinates, comma-separated
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Constant of the equation
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Effective dimension: a positive number or "inf"
        #[arg(long)]
        m: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Search for quasi-Einstein metrics over the diagonal metric family
    QeSolve {
        file: PathBuf,
        #[arg(long, default_value_t = 16)]
        seeds: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Rescale each solution to a determinant-one metric
        #[arg(long)]
        normalize: bool,
    },
    /// Construct and verify a closed-form solution on G(n)
    GnDemo {
        #[arg(long)]
        n: usize,
        /// Weights a_1..a_n, comma-separated
        #[arg(long)]
        a: String,
        #[arg(long, allow_negative_numbers = true)]
        lambda1: f64,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
    },
    /// Emit the full report document
    Report { file: PathBuf },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Trace,
    Closed,
    Oracle,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Validate { file } => cmd_validate(cli, file),
        Command::Frame { file } => cmd_frame(cli, file),
        Command::Ricci { file, method } => cmd_ricci(cli, file, *method),
        Command::QeCheck {
            file,
            x,
            lambda,
            m,
            tol,
        } => cmd_qe_check(cli, file, x, *lambda, m, *tol),
        Command::QeSolve {
            file,
            seeds,
            tol,
            normalize,
        } => cmd_qe_solve(cli, file, *seeds, *tol, *normalize),
        Command::GnDemo { n, a, lambda1, c } => cmd_gn_demo(cli, *n, a, *lambda1, *c),
        Command::Report { file } => cmd_report(cli, file),
    }
}

fn emit<T: Serialize>(cli: &Cli, doc: &T) -> Result<(), Error> {
    let mut text = if cli.pretty {
        serde_json::to_string_pretty(doc)
    } else {
        serde_json::to_string(doc)
    }
    .map_err(|e| Error::Numerical(format!("serializing output: {e}")))?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::document("E_IO", format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("not a number: {t:?}")))
        })
        .collect()
}

fn parse_m(text: &str) -> Result<f64, Error> {
    let m: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("m must be a number or \"inf\", got {text:?}")))?;
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidInput(format!("m must be positive, got {m}")));
    }
    Ok(m)
}

fn env_seed() -> Result<u64, Error> {
    match std::env::var("LIECURV_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("LIECURV_SEED must be an integer, got {text:?}"))
        }),
        Err(_) => Ok(SolveOptions::default().rng_seed),
    }
}

fn validation_section(
    alg: &LieAlgebra,
    form: Option<&InvariantForm>,
) -> Result<ValidationSection, Error> {
    let jacobi = alg.validate_jacobi(AXIOM_TOL)?;
    let (unimodular, max_ad_trace) = alg.is_unimodular(AXIOM_TOL)?;
    let mut section = ValidationSection {
        jacobi_max_violation: jacobi.max_violation,
        jacobi_pass: jacobi.pass,
        max_ad_trace,
        unimodular,
        form_ad_violation: None,
        form_ad_invariant: None,
        form_nondegenerate: None,
        pass: jacobi.pass && unimodular,
    };
    if let Some(form) = form {
        let inv = check_ad_invariance(alg, form, AXIOM_TOL)?;
        let nondeg = form.check_nondegenerate(1e-12).is_ok();
        section.form_ad_violation = Some(inv.max_violation);
        section.form_ad_invariant = Some(inv.pass);
        section.form_nondegenerate = Some(nondeg);
        section.pass = section.pass && inv.pass && nondeg;
    }
    Ok(section)
}

/// Frame construction shared by the geometry commands: form required,
/// metric defaulting to the identity.
fn frame_from_parts(
    alg: &LieAlgebra,
    form: Option<InvariantForm>,
    metric: Option<Metric>,
) -> Result<(AdaptedFrame, Metric, InvariantForm), Error> {
    let form = form.ok_or_else(|| {
        Error::InvalidInput("this command needs a \"form\" in the document".into())
    })?;
    let metric = metric.unwrap_or_else(|| Metric::identity(alg.dim()));
    let frame = adapted_frame(alg, &metric, &form)?;
    Ok((frame, metric, form))
}

fn cmd_validate(cli: &Cli, file: &Path) -> Result<ExitCode, Error> {
    let doc = load_document(file)?;
    let (alg, form, _) = load_algebra(&doc)?;
    let section = validation_section(&alg, form.as_ref())?;
    let pass = section.pass;
    emit(cli, &section)?;
    Ok(exit_check(pass))
}

fn cmd_frame(cli: &Cli, file: &Path) -> Result<ExitCode, Error> {
    let doc = load_document(file)?;
    let (alg, form, metric) = load_algebra(&doc)?;
    let (frame, metric, form) = frame_from_parts(&alg, form, metric)?;
    let section = FrameSection {
        lambda: frame.lambda.clone(),
        basis: matrix_rows(&frame.basis),
        max_defect: frame.max_defect(&metric, &form),
    };
    emit(cli, &section)?;
    Ok(ExitCode::SUCCESS)
}

fn ricci_section(frame: &AdaptedFrame, method: Method) -> Result<RicciSection, Error> {
    let conn = connection_koszul(frame);
    let mut section = RicciSection {
        trace: None,
        closed_form: None,
        oracle: None,
        max_pairwise_deviation: None,
        agreement_pass: None,
        scalar_curvature: 0.0,
    };
    match method {
        Method::Trace => {
            let r = ricci_trace(frame, &conn)?;
            section.scalar_curvature = scalar_curvature(&r);
            section.trace = Some(matrix_rows(&r.matrix));
        }
        Method::Closed => {
            let r = ricci_closed_form(frame)?;
            section.scalar_curvature = scalar_curvature(&r);
            section.closed_form = Some(matrix_rows(&r.matrix));
        }
        Method::Oracle => {
            let r = ricci_oracle(frame, &conn);
            section.scalar_curvature = scalar_curvature(&r);
            section.oracle = Some(matrix_rows(&r.matrix));
        }
        Method::All => {
            let rt = ricci_trace(frame, &conn)?;
            let rc = ricci_closed_form(frame)?;
            let ro = ricci_oracle(frame, &conn);
            let dev = max_relative_deviation(&rt.matrix, &rc.matrix)
                .max(max_relative_deviation(&rt.matrix, &ro.matrix))
                .max(max_relative_deviation(&rc.matrix, &ro.matrix));
            section.scalar_curvature = scalar_curvature(&rt);
            section.trace = Some(matrix_rows(&rt.matrix));
            section.closed_form = Some(matrix_rows(&rc.matrix));
            section.oracle = Some(matrix_rows(&ro.matrix));
            section.max_pairwise_deviation = Some(dev);
            section.agreement_pass = Some(dev <= RICCI_AGREEMENT_TOL);
        }
    }
    Ok(section)
}

fn cmd_ricci(cli: &Cli, file: &Path, method: Method) -> Result<ExitCode, Error> {
    let doc = load_document(file)?;
    let (alg, form, metric) = load_algebra(&doc)?;
    let (frame, _, _) = frame_from_parts(&alg, form, metric)?;
    let section = ricci_section(&frame, method)?;
    emit(cli, &section)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct QeCheckDocument {
    tol: f64,
    pass: bool,
    #[serde(flatten)]
    witness: WitnessSection,
}

fn witness_section(
    frame: &AdaptedFrame,
    witness: &QEWitness,
    metric_diag: Option<Vec<f64>>,
) -> Result<WitnessSection, Error> {
    let killing = verify_killing_theorem(frame, witness, KILLING_TOL);
    Ok(WitnessSection {
        x_frame: witness.x.iter().copied().collect(),
        x_original: frame.from_frame(&witness.x)?.iter().copied().collect(),
        lambda_const: witness.lambda_const,
        m: witness.m,
        residual: witness.residual,
        killing_defect: killing.defect,
        killing_pass: killing.pass,
        metric_diag,
    })
}

fn cmd_qe_check(
    cli: &Cli,
    file: &Path,
    x: &str,
    lambda: f64,
    m: &str,
    tol: f64,
) -> Result<ExitCode, Error> {
    let doc = load_document(file)?;
    let (alg, form, metric) = load_algebra(&doc)?;
    let (frame, metric, _) = frame_from_parts(&alg, form, metric)?;
    let coords = parse_vector(x)?;
    if coords.len() != alg.dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.dim(),
            got: coords.len(),
        });
    }
    let m = parse_m(m)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let x_frame = frame.to_frame(&metric, &DVector::from_vec(coords))?;
    // The curvature-tensor route has no unimodularity precondition, so the
    // check works on any loadable document.
    let ric = ricci_oracle(&frame, &connection_koszul(&frame));
    let residual = qe_residual(&frame, &ric, &x_frame, lambda, m)?;
    let witness = QEWitness {
        x: x_frame,
        lambda_const: lambda,
        m,
        residual,
    };
    let doc = QeCheckDocument {
        tol,
        pass: residual <= tol,
        witness: witness_section(&frame, &witness, None)?,
    };
    let pass = doc.pass;
    emit(cli, &doc)?;
    Ok(exit_check(pass))
}

#[derive(Serialize)]
struct SolutionRow {
    #[serde(flatten)]
    witness: WitnessSection,
    iterations: usize,
}

#[derive(Serialize)]
struct QeSolveDocument {
    seeds: usize,
    seed: u64,
    tol: f64,
    normalize: bool,
    count: usize,
    solutions: Vec<SolutionRow>,
}

fn solution_rows(
    template: &DiagonalMetricTemplate,
    points: &[SolvedPoint],
) -> Result<Vec<SolutionRow>, Error> {
    points
        .iter()
        .map(|point| {
            let u: Vec<f64> = point.metric_diag.iter().map(|d| d.ln()).collect();
            let frame = template.frame_at(&u)?;
            Ok(SolutionRow {
                witness: witness_section(&frame, &point.witness, Some(point.metric_diag.clone()))?,
                iterations: point.iterations,
            })
        })
        .collect()
}

fn cmd_qe_solve(
    cli: &Cli,
    file: &Path,
    seeds: usize,
    tol: f64,
    normalize: bool,
) -> Result<ExitCode, Error> {
    let doc = load_document(file)?;
    let (alg, form, _) = load_algebra(&doc)?;
    let form = form.ok_or_else(|| {
        Error::InvalidInput("this command needs a \"form\" in the document".into())
    })?;
    let template = DiagonalMetricTemplate::standard(&alg, &form)?;
    let opts = SolveOptions {
        seeds,
        tol,
        normalize,
        rng_seed: env_seed()?,
        ..SolveOptions::default()
    };
    let points = solve_qe(&template, &opts)?;
    let doc = QeSolveDocument {
        seeds,
        seed: opts.rng_seed,
        tol,
        normalize,
        count: points.len(),
        solutions: solution_rows(&template, &points)?,
    };
    emit(cli, &doc)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct GnDemoDocument {
    n: usize,
    a: Vec<f64>,
    lambda1: f64,
    c: f64,
    /// Metric scales in the diagonalizing basis.
    params: Vec<f64>,
    #[serde(flatten)]
    witness: WitnessSection,
    scalar_curvature_closed: f64,
    scalar_curvature_trace: f64,
    family_equation_defect: f64,
    pass: bool,
}

fn cmd_gn_demo(cli: &Cli, n: usize, a: &str, lambda1: f64, c: f64) -> Result<ExitCode, Error> {
    let spec = GnSpec::new(n, parse_vector(a)?)?;
    let (params, witness) = qe_family_point(&spec, lambda1, c)?;
    let frame = gn_frame(&spec, &params)?;
    let s_closed = gn_scalar_curvature_closed(&spec, &params)?;
    let s_trace = scalar_curvature(&ricci_trace(&frame, &connection_koszul(&frame))?);
    let defect = family_equation_defect(&spec, &params)?;
    let section = witness_section(
        &frame,
        &witness,
        Some(params.lam().iter().map(|l| l * l).collect()),
    )?;
    let pass = witness.residual < 1e-10
        && section.killing_pass
        && defect < 1e-8
        && (s_closed - s_trace).abs() <= RICCI_AGREEMENT_TOL * (1.0 + s_trace.abs());
    let doc = GnDemoDocument {
        n,
        a: spec.a().to_vec(),
        lambda1,
        c,
        params: params.lam().to_vec(),
        witness: section,
        scalar_curvature_closed: s_closed,
        scalar_curvature_trace: s_trace,
        family_equation_defect: defect,
        pass,
    };
    emit(cli, &doc)?;
    Ok(exit_check(pass))
}

fn cmd_report(cli: &Cli, file: &Path) -> Result<ExitCode, Error> {
    let doc = load_document(file)?;
    let (alg, form, metric) = load_algebra(&doc)?;
    let validation = validation_section(&alg, form.as_ref())?;

    let mut frame_section = None;
    let mut ricci = None;
    let mut witnesses = Vec::new();
    let seed = env_seed()?;

    if let Some(form) = &form {
        let metric_v = metric
            .clone()
            .unwrap_or_else(|| Metric::identity(alg.dim()));
        match adapted_frame(&alg, &metric_v, form) {
            Ok(frame) => {
                frame_section = Some(FrameSection {
                    lambda: frame.lambda.clone(),
                    basis: matrix_rows(&frame.basis),
                    max_defect: frame.max_defect(&metric_v, form),
                });
                ricci = Some(report_ricci(&frame)?);
            }
            Err(e) => eprintln!("note: frame construction skipped: {e}"),
        }
        // Witness search runs over diagonal metrics, which needs the form
        // diagonal in document coordinates.
        if let Ok(template) = DiagonalMetricTemplate::standard(&alg, form) {
            let opts = SolveOptions {
                normalize: true,
                rng_seed: seed,
                ..SolveOptions::default()
            };
            let points = solve_qe(&template, &opts)?;
            witnesses = solution_rows(&template, &points)?
                .into_iter()
                .map(|row| row.witness)
                .collect();
        }
    }

    let report = ReportDocument {
        input: doc,
        validation,
        frame: frame_section,
        ricci,
        witnesses,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tolerances: Tolerances {
                solve_tol: SolveOptions::default().tol,
                dedup_tol: SolveOptions::default().dedup_tol,
                killing_tol: KILLING_TOL,
                ricci_agreement_tol: RICCI_AGREEMENT_TOL,
            },
        },
    };
    emit(cli, &report)?;
    Ok(ExitCode::SUCCESS)
}

/// Ricci section for the report: the curvature-tensor route always runs;
/// the trace and closed-form routes are skipped on non-unimodular frames.
fn report_ricci(frame: &AdaptedFrame) -> Result<RicciSection, Error> {
    let conn = connection_koszul(frame);
    let oracle = ricci_oracle(frame, &conn);
    let mut section = RicciSection {
        trace: None,
        closed_form: None,
        oracle: Some(matrix_rows(&oracle.matrix)),
        max_pairwise_deviation: None,
        agreement_pass: None,
        scalar_curvature: scalar_curvature(&oracle),
    };
    if let Ok(rt) = ricci_trace(frame, &conn) {
        let rc = ricci_closed_form(frame)?;
        let dev = max_relative_deviation(&rt.matrix, &rc.matrix)
            .max(max_relative_deviation(&rt.matrix, &oracle.matrix))
            .max(max_relative_deviation(&rc.matrix, &oracle.matrix));
        section.trace = Some(matrix_rows(&rt.matrix));
        section.closed_form = Some(matrix_rows(&rc.matrix));
        section.max_pairwise_deviation = Some(dev);
        section.agreement_pass = Some(dev <= RICCI_AGREEMENT_TOL);
    }
    Ok(section)
}

fn exit_check(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
