//! Command-line front end.
//!
//! Every subcommand writes its report to stdout as CSV or JSON and the
//! effective seed of randomized commands to stderr. Errors map to exit codes
//! through [`Error::exit_code`]; usage errors exit with 2.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::changepoint::{
    binary_segmentation, corollary_tests, cusum_matrix, cvm2d_test, estimate_changepoint,
    CorollaryVariant, TestOutcome, DEFAULT_MIN_SEGMENT,
};
use crate::fpca::{cumulative_variance, eigendecompose_sample, project};
use crate::ingest::{ingest, IngestionConfig, Ingested, Layout, MissingPolicy, Smoothing, DEFAULT_BASIS_SIZE};
use crate::limitdist::{simulate_tld, BridgeSupMoments, LimitLaw, DEFAULT_TRUNCATION, STANDARD_ALPHAS};
use crate::report::{fmt_float, Provenance};
use crate::simharness::{run_size_power, Calibration, SimScenario, TestSelector};
use crate::twosample::two_sample_test;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fdproj", version, about = "Change-point and two-sample tests for functional data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream; drawn from the clock when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of principal components.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Comma-separated list of component counts.
    #[arg(long, global = true, value_delimiter = ',')]
    pub d_list: Option<Vec<usize>>,
    /// Significance level(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Monte Carlo repetitions (limit-law draws, or replicates for `simulate`).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Evaluation grid size (smoothed input) or random-walk steps (`simulate`).
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    /// Number of Fourier basis functions used to smooth input curves.
    #[arg(long, global = true)]
    pub basis_size: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub output: OutputFormat,
    #[arg(long, global = true, value_enum, default_value_t = Quadrature::Trapezoid)]
    pub quadrature: Quadrature,
    /// Truncation level of the limit-law series.
    #[arg(long = "K", global = true)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quadrature {
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Rows,
    Long,
    Daily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cvm2d,
    SupBridge,
    CvmSum,
    SupSum,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimTest {
    Cvm2d,
    SupBridge,
    CvmSum,
    SupSum,
    TwoSample,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV file.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = LayoutArg::Rows)]
    pub layout: LayoutArg,
    /// Use the raw values instead of a Fourier fit.
    #[arg(long)]
    pub no_smooth: bool,
    /// Fail on missing values instead of fitting around them.
    #[arg(long)]
    pub reject_missing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulated critical values of the limit law.
    CriticalValues,
    /// Test a sample for a change in the mean function.
    CptTest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Cvm2d)]
        method: MethodArg,
    },
    /// Estimate the location of a single change.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Binary segmentation for multiple changes.
    Segment {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_MIN_SEGMENT)]
        min_segment: usize,
    },
    /// Test two samples for equal mean functions.
    TwoSample {
        #[command(flatten)]
        input: InputArgs,
        /// Second sample, in the same layout.
        second: PathBuf,
    },
    /// Size and power by simulation with Brownian-motion curves.
    Simulate {
        #[arg(long, value_enum, default_value_t = SimTest::Cvm2d)]
        test: SimTest,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Second sample size for `--test two-sample`.
        #[arg(long)]
        m: Option<usize>,
        /// Shift amplitude.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Curves after this index are shifted; defaults to N/2 when `a` is nonzero.
        #[arg(long)]
        k_star: Option<usize>,
        /// Limit-law draws used for calibration.
        #[arg(long, default_value_t = 100_000)]
        law_reps: usize,
    },
    /// Eigenvalues and explained variance, or eigenfunctions.
    FpcaSummary {
        #[command(flatten)]
        input: InputArgs,
        /// Emit eigenfunctions on the grid instead of the eigenvalue table.
        #[arg(long)]
        functions: bool,
    },
}

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn effective_seed(global: &GlobalArgs, err: &mut dyn Write) -> Result<u64> {
    let seed = global.seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    writeln!(err, "seed: {seed}")?;
    Ok(seed)
}

fn load(input: &InputArgs, global: &GlobalArgs) -> Result<Ingested> {
    let layout = match input.layout {
        LayoutArg::Rows => Layout::CurvesAsRows,
        LayoutArg::Long => Layout::Long,
        LayoutArg::Daily => Layout::Daily,
    };
    let smoothing = if input.no_smooth {
        Smoothing::None
    } else {
        let default = Smoothing::default();
        let Smoothing::Fourier { grid_size, .. } = default else { unreachable!() };
        Smoothing::Fourier {
            basis_size: global.basis_size.unwrap_or(DEFAULT_BASIS_SIZE),
            grid_size: global.grid_size.unwrap_or(grid_size),
        }
    };
    let mut config = IngestionConfig::new(&input.input, layout);
    config.smoothing = smoothing;
    config.missing = if input.reject_missing {
        MissingPolicy::Reject
    } else {
        MissingPolicy::Drop
    };
    ingest(&config)
}

fn simulate_law(global: &GlobalArgs, reps: usize, err: &mut dyn Write) -> Result<LimitLaw> {
    let seed = effective_seed(global, err)?;
    simulate_tld(global.truncation.unwrap_or(DEFAULT_TRUNCATION), reps, seed)
}

fn law_reps(global: &GlobalArgs) -> usize {
    global.reps.unwrap_or(100_000)
}

fn alpha(global: &GlobalArgs) -> Result<f64> {
    match global.alpha.as_deref() {
        None => Ok(0.05),
        Some([a]) => Ok(*a),
        Some(_) => Err(Error::Configuration("this command takes a single --alpha".into())),
    }
}

fn provenance(law: Option<&LimitLaw>) -> Provenance {
    let p = Provenance::new();
    match law {
        Some(l) => p.with_seed(l.seed()).with_reps(l.reps()).with_truncation(l.truncation()),
        None => p,
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::CriticalValues => critical_values(g, out, err),
        Command::CptTest { input, method } => cpt_test(g, input, *method, out, err),
        Command::Estimate { input } => estimate(g, input, out),
        Command::Segment { input, min_segment } => segment(g, input, *min_segment, out, err),
        Command::TwoSample { input, second } => two_sample(g, input, second, out),
        Command::Simulate {
            test,
            n,
            m,
            a,
            k_star,
            law_reps,
        } => simulate(g, *test, *n, *m, *a, *k_star, *law_reps, out, err),
        Command::FpcaSummary { input, functions } => fpca_summary(g, input, *functions, out),
    }
}

fn critical_values(g: &GlobalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let law = simulate_law(g, law_reps(g), err)?;
    let alphas = g.alpha.clone().unwrap_or_else(|| STANDARD_ALPHAS.to_vec());
    if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::Configuration("alpha must lie in (0, 1)".into()));
    }
    match g.output {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["alpha", "critical_value", "reps", "K", "seed"])?;
            for a in alphas {
                w.write_record([
                    fmt_float(a),
                    fmt_float(law.critical_value(a)),
                    law.reps().to_string(),
                    law.truncation().to_string(),
                    law.seed().to_string(),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                alpha: f64,
                critical_value: f64,
            }
            #[derive(Serialize)]
            struct Report {
                provenance: Provenance,
                mean: f64,
                standard_error: f64,
                critical_values: Vec<Row>,
            }
            let rows = alphas
                .into_iter()
                .map(|alpha| Row {
                    alpha,
                    critical_value: law.critical_value(alpha),
                })
                .collect();
            write_json(
                out,
                &Report {
                    provenance: provenance(Some(&law)),
                    mean: law.mean(),
                    standard_error: law.standard_error(),
                    critical_values: rows,
                },
            )?;
        }
    }
    Ok(())
}

fn write_outcomes(
    g: &GlobalArgs,
    outcomes: &[TestOutcome],
    prov: Provenance,
    max_over_d: Option<f64>,
    out: &mut dyn Write,
) -> Result<()> {
    match g.output {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["method", "d", "statistic", "p_value"])?;
            for o in outcomes {
                w.write_record([
                    o.method.as_str().to_string(),
                    o.d.to_string(),
                    fmt_float(o.statistic),
                    fmt_float(o.p_value),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                provenance: Provenance,
                outcomes: &'a [TestOutcome],
                #[serde(skip_serializing_if = "Option::is_none")]
                max_statistic_over_d: Option<f64>,
            }
            write_json(
                out,
                &Report {
                    provenance: prov,
                    outcomes,
                    max_statistic_over_d: max_over_d,
                },
            )?;
        }
    }
    Ok(())
}

fn cpt_test(
    g: &GlobalArgs,
    input: &InputArgs,
    method: MethodArg,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let data = load(input, g)?;
    let d_list = match (&g.d_list, g.d) {
        (Some(list), _) => list.clone(),
        (None, d) => vec![d.unwrap_or(5)],
    };
    let d_max = *d_list.iter().max().ok_or_else(|| Error::Configuration("empty --d-list".into()))?;
    // Fail on degenerate data before spending time on the limit law.
    let (eig, scores) = project(&data.sample, d_max)?;
    let full = cusum_matrix(&scores)?;

    let needs_law = matches!(method, MethodArg::Cvm2d | MethodArg::All);
    let law = if needs_law {
        Some(simulate_law(g, law_reps(g), err)?)
    } else {
        None
    };
    let moments = BridgeSupMoments::analytic();
    let mut outcomes = Vec::new();
    for &d in &d_list {
        if needs_law {
            let law = law.as_ref().expect("simulated above");
            let mut o = cvm2d_test(&data.sample, d, Some(law))?;
            o.diagnostics.warnings.extend(eig.warning());
            outcomes.push(o);
        }
        let cusum = full.leading(d)?;
        let variants: &[CorollaryVariant] = match method {
            MethodArg::Cvm2d => &[],
            MethodArg::SupBridge => &[CorollaryVariant::SupBridge],
            MethodArg::CvmSum => &[CorollaryVariant::CvmSum],
            MethodArg::SupSum => &[CorollaryVariant::SupSum],
            MethodArg::All => &[CorollaryVariant::SupBridge, CorollaryVariant::CvmSum, CorollaryVariant::SupSum],
        };
        for &v in variants {
            let mut o = corollary_tests(&cusum, v, Some(&moments))?;
            o.diagnostics.spacings = eig.spacings()[..d].to_vec();
            outcomes.push(o);
        }
    }
    let max_over_d = (d_list.len() > 1 && needs_law).then(|| {
        outcomes
            .iter()
            .filter(|o| o.method == crate::changepoint::Method::Cvm2d)
            .map(|o| o.statistic)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    write_outcomes(g, &outcomes, provenance(law.as_ref()), max_over_d, out)
}

fn estimate(g: &GlobalArgs, input: &InputArgs, out: &mut dyn Write) -> Result<()> {
    let data = load(input, g)?;
    let d = g.d.unwrap_or(5);
    let (_, scores) = project(&data.sample, d)?;
    let theta = estimate_changepoint(&cusum_matrix(&scores)?)?;
    let first_after = data.labels.get(theta).cloned().unwrap_or_default();
    match g.output {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["d", "theta_hat", "first_after_change"])?;
            w.write_record([d.to_string(), theta.to_string(), first_after])?;
            w.flush()?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report {
                provenance: Provenance,
                d: usize,
                theta_hat: usize,
                first_after_change: String,
            }
            write_json(
                out,
                &Report {
                    provenance: Provenance::new(),
                    d,
                    theta_hat: theta,
                    first_after_change: first_after,
                },
            )?;
        }
    }
    Ok(())
}

fn segment(
    g: &GlobalArgs,
    input: &InputArgs,
    min_segment: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let data = load(input, g)?;
    let d_list = g.d_list.clone().unwrap_or_else(|| (3..=10).collect());
    let alpha = alpha(g)?;
    let law = simulate_law(g, law_reps(g), err)?;
    let tree = binary_segmentation(&data.sample, &d_list, alpha, &law, min_segment)?;
    match g.output {
        OutputFormat::Csv => tree.write_csv(&mut *out, Some(&data.labels)),
        OutputFormat::Json => {
            tree.write_json(&mut *out, &provenance(Some(&law)), Some(&data.labels))?;
            writeln!(out)?;
            Ok(())
        }
    }
}

fn two_sample(g: &GlobalArgs, input: &InputArgs, second: &PathBuf, out: &mut dyn Write) -> Result<()> {
    let x = load(input, g)?;
    let other = InputArgs {
        input: second.clone(),
        layout: input.layout,
        no_smooth: input.no_smooth,
        reject_missing: input.reject_missing,
    };
    let y = load(&other, g)?;
    let d_list = match (&g.d_list, g.d) {
        (Some(list), _) => list.clone(),
        (None, d) => vec![d.unwrap_or(3)],
    };
    let outcomes = d_list
        .iter()
        .map(|&d| two_sample_test(&x.sample, &y.sample, d))
        .collect::<Result<Vec<_>>>()?;
    match g.output {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["d", "D_hat", "z", "p_value"])?;
            for o in &outcomes {
                w.write_record([o.d.to_string(), fmt_float(o.d_hat), fmt_float(o.z), fmt_float(o.p_value)])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                provenance: Provenance,
                outcomes: &'a [crate::twosample::TwoSampleOutcome],
            }
            write_json(
                out,
                &Report {
                    provenance: Provenance::new(),
                    outcomes: &outcomes,
                },
            )?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    g: &GlobalArgs,
    test: SimTest,
    n: usize,
    m: Option<usize>,
    a: f64,
    k_star: Option<usize>,
    law_reps: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let seed = effective_seed(g, err)?;
    let selector = match test {
        SimTest::Cvm2d => TestSelector::Cvm2d,
        SimTest::SupBridge => TestSelector::Corollary(CorollaryVariant::SupBridge),
        SimTest::CvmSum => TestSelector::Corollary(CorollaryVariant::CvmSum),
        SimTest::SupSum => TestSelector::Corollary(CorollaryVariant::SupSum),
        SimTest::TwoSample => TestSelector::TwoSample,
    };
    let mut scenario = SimScenario::new(n)
        .with_seed(seed)
        .with_reps(g.reps.unwrap_or(1000))
        .with_grid_size(g.grid_size.unwrap_or(1000))
        .with_d_list(g.d_list.clone().unwrap_or_else(|| vec![g.d.unwrap_or(5)]))
        .with_alpha_list(g.alpha.clone().unwrap_or_else(|| vec![0.05]));
    if selector == TestSelector::TwoSample {
        scenario = scenario.with_second_sample(m.unwrap_or(n)).with_shift(a, None);
    } else if a != 0.0 {
        scenario = scenario.with_shift(a, Some(k_star.unwrap_or(n / 2)));
    } else {
        scenario = scenario.with_shift(0.0, k_star);
    }
    let law = if selector == TestSelector::Cvm2d {
        Some(simulate_tld(g.truncation.unwrap_or(DEFAULT_TRUNCATION), law_reps, seed)?)
    } else {
        None
    };
    let moments = BridgeSupMoments::analytic();
    let calib = Calibration {
        law: law.as_ref(),
        moments: Some(&moments),
    };
    let report = run_size_power(&scenario, selector, calib)?;
    match g.output {
        OutputFormat::Csv => report.write_csv(&mut *out),
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                provenance: Provenance,
                scenario: &'a SimScenario,
                report: &'a crate::simharness::SimReport,
            }
            write_json(
                out,
                &Report {
                    provenance: Provenance::new().with_seed(seed).with_reps(scenario.reps),
                    scenario: &scenario,
                    report: &report,
                },
            )
        }
    }
}

fn fpca_summary(g: &GlobalArgs, input: &InputArgs, functions: bool, out: &mut dyn Write) -> Result<()> {
    let data = load(input, g)?;
    let d = g.d.unwrap_or(10).min(data.sample.grid_len());
    // The full retained spectrum gives the denominator of f_k.
    let full = eigendecompose_sample(&data.sample, data.sample.grid_len().min(data.sample.n_curves()))?;
    let shown = d.min(full.retained());
    let f = cumulative_variance(full.eigenvalues())?;
    if functions {
        let mut w = csv::Writer::from_writer(&mut *out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=shown).map(|k| format!("v{k}")));
        w.write_record(&header)?;
        for (i, t) in full.grid().points().iter().enumerate() {
            let mut rec = vec![fmt_float(*t)];
            rec.extend((0..shown).map(|j| fmt_float(full.eigenfunction(j)[i])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        return Ok(());
    }
    match g.output {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["k", "eigenvalue", "f_k", "spacing"])?;
            for k in 0..shown {
                w.write_record([
                    (k + 1).to_string(),
                    fmt_float(full.eigenvalues()[k]),
                    fmt_float(f[k]),
                    fmt_float(full.spacings()[k]),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                provenance: Provenance,
                eigenvalues: &'a [f64],
                f_k: &'a [f64],
                spacings: &'a [f64],
            }
            write_json(
                out,
                &Report {
                    provenance: Provenance::new(),
                    eigenvalues: &full.eigenvalues()[..shown],
                    f_k: &f[..shown],
                    spacings: &full.spacings()[..shown],
                },
            )?;
        }
    }
    Ok(())
}
