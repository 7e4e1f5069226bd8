//! `maxprod` command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use maxprod_core::analysis::{Reconstruction, DEFAULT_GRID_POINTS};
use maxprod_core::kernels::check_assumptions;
use maxprod_core::signals::from_csv;
use maxprod_core::{
    run_campaign, run_convergence, CampaignConfig, ConvergenceSetup, Domain, DomainKind, Error,
    Kernel, OperatorConfig, PhiFunction, Signal,
};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_UNKNOWN_NAME: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_EMPTY_INDEX_SET: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "maxprod",
    version,
    about = "Max-product Kantorovich sampling operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments, lower-bound constants, norms and the admissibility verdict of a kernel.
    KernelInfo(KernelInfoArgs),
    /// Evaluates K_n f on a grid and writes `x,f,K_n_f` as CSV.
    Reconstruct(ReconstructArgs),
    /// Convergence study over several scales; writes convergence.json and convergence.csv.
    Converge(ConvergeArgs),
    /// Seeded randomized inequality campaign.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct KernelInfoArgs {
    #[arg(long)]
    pub kernel: String,
    /// `bounded`, `line` or `interval:a,b`.
    #[arg(long, default_value = "bounded")]
    pub domain: String,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// Catalog signal name.
    #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
    pub signal: Option<String>,
    /// CSV file of `t,f(t)` samples.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// `interval:a,b`, `bounded` (= interval:0,1) or `line`; defaults to the signal's own domain.
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub kernel: String,
    #[command(flatten)]
    pub signal: SignalArgs,
    #[arg(long)]
    pub n: u64,
    /// Number of grid points.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use this lower bound for the denominator instead of the computed one.
    #[arg(long)]
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long, default_value = "power:2")]
    pub phi: String,
    #[command(flatten)]
    pub signal: SignalArgs,
    /// Comma-separated, strictly increasing.
    #[arg(long, default_value = "8,16,32,64,128")]
    pub scales: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Existing output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,
    /// Luxemburg bisection tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of draws.
    #[arg(long, default_value_t = 200)]
    pub size: usize,
    /// Kernels to draw from (repeatable); defaults to fejer and bspline:4.
    #[arg(long)]
    pub kernel: Vec<String>,
    /// Comma-separated scales to draw from.
    #[arg(long, default_value = "16,32")]
    pub scales: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also write the summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Maps a library error to the CLI's exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownName { .. } => EXIT_UNKNOWN_NAME,
        Error::InadmissibleKernel { .. } => EXIT_INADMISSIBLE,
        Error::EmptyIndexSet { .. } => EXIT_EMPTY_INDEX_SET,
        Error::Io(_) | Error::Csv { .. } => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

/// Parses `interval:a,b`, `bounded` or `line`.
pub fn parse_domain(text: &str) -> Result<Domain<f64>, Error> {
    let unknown = || Error::UnknownName {
        kind: "domain",
        name: text.to_string(),
    };
    match text.trim() {
        "line" | "real-line" => Ok(Domain::RealLine),
        "bounded" => Ok(Domain::unit()),
        other => {
            let args = other.strip_prefix("interval:").ok_or_else(unknown)?;
            let (a, b) = args.split_once(',').ok_or_else(unknown)?;
            let a: f64 = a.trim().parse().map_err(|_| unknown())?;
            let b: f64 = b.trim().parse().map_err(|_| unknown())?;
            Domain::interval(a, b)
        }
    }
}

/// Parses a comma-separated, strictly increasing list of positive scales.
pub fn parse_scales(text: &str) -> Result<Vec<u64>, Error> {
    let scales: Vec<u64> = text
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidParameter(format!("bad scale list `{text}`")))?;
    if scales.is_empty() || scales[0] == 0 || scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "scales must be positive and strictly increasing, got `{text}`"
        )));
    }
    Ok(scales)
}

fn load_signal(args: &SignalArgs) -> Result<Signal<f64>, Error> {
    let domain = args.domain.as_deref().map(parse_domain).transpose()?;
    match (&args.signal, &args.csv) {
        (Some(name), _) => {
            let s = Signal::catalog(name)?;
            Ok(match domain {
                Some(d) if d != s.domain() => s.with_domain(d),
                _ => s,
            })
        }
        (None, Some(path)) => {
            let imported = from_csv(path, domain, true)?;
            if imported.clamped > 0 {
                eprintln!(
                    "warning: clamped {} negative samples to zero",
                    imported.clamped
                );
            }
            Ok(imported.signal)
        }
        (None, None) => Err(Error::InvalidParameter(
            "either --signal or --csv is required".into(),
        )),
    }
}

fn operator_config(
    kernel: &Kernel<f64>,
    n: u64,
    domain: Domain<f64>,
    lower: Option<f64>,
) -> Result<OperatorConfig<f64>, Error> {
    match lower {
        Some(a) => OperatorConfig::with_lower_bound(kernel.clone(), n, domain, a),
        None => OperatorConfig::new(kernel.clone(), n, domain),
    }
}

/// Runs a parsed command, writing normal output to `out`.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<i32, Error> {
    match cli.command {
        Command::KernelInfo(args) => kernel_info(args, out),
        Command::Reconstruct(args) => reconstruct(args, out),
        Command::Converge(args) => converge(args, out),
        Command::Verify(args) => verify(args, out),
    }
}

fn fmt_moment(m: Option<maxprod_core::Moment<f64>>) -> String {
    match m {
        Some(maxprod_core::Moment::Finite(v)) => format!("{v:.10}"),
        Some(maxprod_core::Moment::Diverges) => "diverges".into(),
        None => "n/a".into(),
    }
}

fn kernel_info<W: Write>(args: KernelInfoArgs, out: &mut W) -> Result<i32, Error> {
    let kernel = Kernel::<f64>::from_name(&args.kernel)?;
    let kind = parse_domain(&args.domain)?.kind();
    let d = check_assumptions(&kernel, kind, args.beta)?;
    if args.json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&d).expect("diagnostics serialize")
        )?;
        return Ok(EXIT_OK);
    }
    let yes_no = |b: bool| if b { "satisfied" } else { "fails" };
    writeln!(out, "kernel            {}", d.kernel)?;
    writeln!(
        out,
        "domain            {}",
        match kind {
            DomainKind::BoundedInterval => "bounded interval",
            DomainKind::RealLine => "real line",
        }
    )?;
    writeln!(out, "m_0               {}", fmt_moment(d.moment(0.0)))?;
    writeln!(out, "m_1               {}", fmt_moment(d.moment(1.0)))?;
    if d.beta != 0.0 && d.beta != 1.0 {
        writeln!(out, "m_{:<16}{}", d.beta, fmt_moment(d.moment(d.beta)))?;
    }
    writeln!(out, "a_chi [-3/2,3/2]  {:.10}", d.a_chi_bounded)?;
    writeln!(out, "a_chi [-1/2,1/2]  {:.10}", d.a_chi_line)?;
    match d.l1_norm {
        Some(v) => writeln!(out, "||chi||_1         {v:.10}")?,
        None => writeln!(out, "||chi||_1         n/a")?,
    }
    match d.sup_norm {
        Some(v) => writeln!(out, "||chi||_inf       {v:.10}")?,
        None => writeln!(out, "||chi||_inf       n/a")?,
    }
    writeln!(
        out,
        "{:<18}{}",
        format!("(chi1) beta={}", d.beta),
        yes_no(d.satisfies_chi1)
    )?;
    writeln!(out, "(chi2)            {}", yes_no(d.satisfies_chi2))?;
    writeln!(out, "(chi2')           {}", yes_no(d.satisfies_chi2_prime))?;
    writeln!(
        out,
        "verdict           {}",
        if d.admissible {
            "admissible"
        } else {
            "not admissible"
        }
    )?;
    Ok(EXIT_OK)
}

fn reconstruct<W: Write>(args: ReconstructArgs, out: &mut W) -> Result<i32, Error> {
    let kernel = Kernel::<f64>::from_name(&args.kernel)?;
    let f = load_signal(&args.signal)?;
    let config = operator_config(&kernel, args.n, f.domain(), args.lower_bound)?;
    let op = Reconstruction::new(&config, &f)?;
    let (lo, hi) = match f.domain() {
        Domain::Interval { a, b } => (a, b),
        Domain::RealLine => {
            let (s0, s1) = f.support().ok_or_else(|| Error::UnboundedSupport {
                signal: f.name().to_string(),
            })?;
            (s0 - 1.0, s1 + 1.0)
        }
    };
    let points = args.grid.max(1);
    let grid: Vec<f64> = if points == 1 {
        vec![lo]
    } else {
        (0..points)
            .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).min(hi))
            .collect()
    };
    let mut text = String::from("x,f,K_n_f\n");
    for &x in &grid {
        text.push_str(&format!("{},{},{}\n", x, f.evaluate(x), op.eval(x)?));
    }
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn converge<W: Write>(args: ConvergeArgs, out: &mut W) -> Result<i32, Error> {
    let kernel = Kernel::<f64>::from_name(&args.kernel)?;
    let phi = PhiFunction::<f64>::from_name(&args.phi)?;
    let f = load_signal(&args.signal)?;
    let scales = parse_scales(&args.scales)?;
    if !args.out.is_dir() {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("output directory {} does not exist", args.out.display()),
        )));
    }
    // fail fast on the smallest scale before spending time on the others
    operator_config(&kernel, scales[0], f.domain(), args.lower_bound)?;
    let mut setup = ConvergenceSetup::new(kernel.clone(), phi, args.lambda, scales);
    setup.grid_points = args.grid;
    setup.lower_bound = args.lower_bound;
    setup.luxemburg_tol = args.tol;
    let report = run_convergence(&f, &setup)?;
    let json_path = args.out.join("convergence.json");
    let csv_path = args.out.join("convergence.csv");
    fs::write(&json_path, report.to_json() + "\n")?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    fs::write(&csv_path, csv)?;
    writeln!(out, "n\tsup_error\tmodular_error\tluxemburg_error\tvalid")?;
    for i in 0..report.scales.len() {
        writeln!(
            out,
            "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}",
            report.scales[i],
            report.sup_errors[i],
            report.modular_errors[i],
            report.luxemburg_errors[i],
            report.valid[i]
        )?;
    }
    let rate = |r: Option<f64>| r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
    writeln!(
        out,
        "fitted rates: sup {}, modular {}, luxemburg {}",
        rate(report.fitted_rate.sup),
        rate(report.fitted_rate.modular),
        rate(report.fitted_rate.luxemburg)
    )?;
    writeln!(
        out,
        "wrote {} and {}",
        json_path.display(),
        csv_path.display()
    )?;
    Ok(EXIT_OK)
}

fn verify<W: Write>(args: VerifyArgs, out: &mut W) -> Result<i32, Error> {
    let mut config = CampaignConfig::<f64>::new(args.seed, args.size);
    config.tol = args.tol;
    config.scales = parse_scales(&args.scales)?;
    if !args.kernel.is_empty() {
        config.kernels = args
            .kernel
            .iter()
            .map(|k| Kernel::from_name(k))
            .collect::<Result<_, _>>()?;
    }
    let summary = run_campaign(&config)?;
    writeln!(out, "seed {}, {} draws", summary.seed, summary.draws)?;
    for fam in &summary.families {
        let worst = fam
            .worst_slack
            .map(|w| format!("{w:.3e}"))
            .unwrap_or_else(|| "n/a".into());
        writeln!(
            out,
            "{:<24} passed {:>5}  failed {:>5}  worst slack {}",
            fam.family, fam.passed, fam.failed, worst
        )?;
        for ctx in fam.failures.iter().take(5) {
            writeln!(out, "    failure: {ctx}")?;
        }
    }
    if let Some(path) = &args.out {
        fs::write(
            path,
            serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        )?;
    }
    Ok(if summary.all_passed() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains_parse() {
        assert_eq!(parse_domain("line").unwrap(), Domain::RealLine);
        assert_eq!(
            parse_domain("interval:0,2").unwrap(),
            Domain::Interval { a: 0.0, b: 2.0 }
        );
        assert_eq!(parse_domain("bounded").unwrap(), Domain::unit());
        assert!(matches!(
            parse_domain("disk"),
            Err(Error::UnknownName { .. })
        ));
        assert!(parse_domain("interval:2,1").is_err());
    }

    #[test]
    fn scales_parse() {
        assert_eq!(parse_scales("8, 16,32").unwrap(), vec![8, 16, 32]);
        assert!(parse_scales("16,8").is_err());
        assert!(parse_scales("0,8").is_err());
        assert!(parse_scales("a").is_err());
    }

    #[test]
    fn exit_codes_are_stable() {
        let unknown = Error::UnknownName {
            kind: "kernel",
            name: "x".into(),
        };
        assert_eq!(exit_code(&unknown), 2);
        let bad = Error::InadmissibleKernel {
            kernel: "bspline:3".into(),
            a_chi: 0.0,
        };
        assert_eq!(exit_code(&bad), 3);
        assert_eq!(
            exit_code(&Error::EmptyIndexSet {
                n: 1,
                a: 0.0,
                b: 0.5
            }),
            4
        );
        assert_eq!(exit_code(&Error::Io(io::Error::other("x"))), 5);
    }
}
