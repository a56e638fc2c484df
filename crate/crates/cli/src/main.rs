use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mdlvq::config::ExperimentConfig;
use mdlvq::experiment::{sweep, Experiment};
use mdlvq::hr;
use mdlvq::labeling::IndexAssignment;
use mdlvq::loss::Subset;
use mdlvq::report::{self, Metadata};
use mdlvq::verify;
use mdlvq::Error;

/// Design, label and simulate multiple-description lattice vector quantizers.
#[derive(Parser, Debug)]
#[command(name = "mdlvq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; defaults to the config's `output` key, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the number of simulated vectors.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Largest number of labeled central points.
    #[arg(long, global = true)]
    cap: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the high-resolution design.
    Design,
    /// Build the index assignment and write its table.
    Assign,
    /// Simulate one configuration.
    Simulate {
        /// Use this assignment table instead of building one.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Re-design and simulate for each value of one loss probability.
    Sweep {
        /// Loss probability to vary, e.g. `p0`.
        #[arg(long = "sweep-param")]
        param: String,
        /// Comma-separated values.
        #[arg(long = "sweep-values", value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the self-check suite.
    Verify {
        /// Also re-validate a simulation report written by `simulate`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Infeasible(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleRate { .. }
            | Error::DegenerateChannel(_)
            | Error::CapExceeded { .. }
            | Error::NotClean(_)
            | Error::InsufficientCandidates { .. } => Failure::Infeasible(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

struct Loaded {
    cfg: ExperimentConfig,
    exp: Experiment,
}

fn load(cli: &Cli) -> Result<Loaded, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = cli.seed {
        cfg.set("seed", s.to_string());
    }
    if let Some(n) = cli.n {
        cfg.set("vectors", n.to_string());
    }
    if let Some(c) = cli.cap {
        cfg.set("cap", c.to_string());
    }
    let exp = cfg
        .to_experiment()
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if exp.psi().1 {
        eprintln!("warning: no default expansion factor for this lattice and K; using psi = 1");
    }
    Ok(Loaded { cfg, exp })
}

fn output(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<Box<dyn Write>, Failure> {
    let path = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output()).map(PathBuf::from));
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn design(cli: &Cli) -> Result<(), Failure> {
    let Loaded { cfg, exp } = load(cli)?;
    let d = exp.design()?;
    let nf: Vec<f64> = d.ni_snapped.iter().map(|&n| n as f64).collect();
    let pred = hr::predict_distortion(d.nu_rescaled, &nf, &exp.source, &exp.channel, &exp.constants()?)?;
    eprintln!("tau_*        {}", d.tau_star);
    eprintln!("psi          {}", d.psi);
    eprintln!("nu (opt)     {}", d.nu_opt);
    eprintln!("N (opt)      {:?}", d.ni_opt);
    eprintln!("N (snapped)  {:?}", d.ni_snapped);
    eprintln!("nu (scaled)  {}", d.nu_rescaled);
    eprintln!("R_c          {} (before snapping {})", d.rc_snapped, d.rc_opt);
    eprintln!("R_i          {:?}", d.ri_snapped);
    eprintln!(
        "distortion   {} = central {} + zero {} + side {}",
        pred.total, pred.central_term, pred.zero_term, pred.side_term
    );
    let meta = Metadata::new(&cfg.canonical(), exp.seed);
    let mut w = output(cli, Some(&cfg))?;
    report::write_design(&mut w, &meta, &d, &pred)?;
    w.flush()?;
    Ok(())
}

fn print_side_distortions(asg: &IndexAssignment) -> Result<(), Failure> {
    eprintln!("N_pi {}  total cost {}", asg.n_pi(), asg.total_cost());
    for l in Subset::all(asg.k()).filter(|l| !l.is_empty() && l.len() < asg.k()) {
        eprintln!("side distortion {l}: {}", asg.side_distortion(l)?);
    }
    Ok(())
}

fn assign(cli: &Cli) -> Result<(), Failure> {
    let Loaded { cfg, exp } = load(cli)?;
    let d = exp.design()?;
    let asg = exp.assignment(&d)?;
    print_side_distortions(&asg)?;
    let mut w = output(cli, Some(&cfg))?;
    asg.write_table(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path, exp: &Experiment) -> Result<IndexAssignment, Failure> {
    let f = File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let asg = IndexAssignment::read_table(BufReader::new(f), &exp.channel)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if asg.setup().central().kind() != exp.lattice {
        return Err(Failure::Config(format!(
            "{}: table is for {}, config says {}",
            path.display(),
            asg.setup().central().kind(),
            exp.lattice
        )));
    }
    Ok(asg)
}

fn simulate(cli: &Cli, table: Option<&Path>) -> Result<(), Failure> {
    let Loaded { cfg, exp } = load(cli)?;
    let asg = match table {
        Some(p) => read_table(p, &exp)?,
        None => exp.assignment(&exp.design()?)?,
    };
    let r = exp.simulate(&asg)?;
    eprintln!(
        "empirical {} +- {}  predicted {}",
        r.empirical_total, r.standard_error, r.predicted.total
    );
    let meta = Metadata::new(&cfg.canonical(), exp.seed);
    let mut w = output(cli, Some(&cfg))?;
    report::write_run(&mut w, &meta, &r, &asg, &exp.source)?;
    w.flush()?;
    Ok(())
}

fn parse_param(s: &str) -> Result<usize, Failure> {
    s.trim_start_matches(['p', 'P'])
        .parse()
        .map_err(|_| Failure::Config(format!("bad --sweep-param '{s}', expected e.g. p0")))
}

fn run_sweep(cli: &Cli, param: &str, values: &[f64]) -> Result<(), Failure> {
    let Loaded { cfg, exp } = load(cli)?;
    let index = parse_param(param)?;
    let points = sweep(&exp, index, values)?;
    for p in &points {
        eprintln!(
            "p{index} = {}: N {:?}  empirical {}  predicted {}",
            p.value, p.design.ni_snapped, p.report.empirical_total, p.report.predicted.total
        );
    }
    let mut canon = cfg.canonical();
    canon.push_str(&format!("sweep = p{index}: {values:?}\n"));
    let meta = Metadata::new(&canon, exp.seed);
    let mut w = output(cli, Some(&cfg))?;
    report::write_sweep(&mut w, &meta, index, &points)?;
    w.flush()?;
    Ok(())
}

fn run_verify(cli: &Cli, report_path: Option<&Path>) -> Result<(), Failure> {
    let mut results = verify::run_all(cli.seed.unwrap_or(1))?;
    if let Some(p) = report_path {
        let f = File::open(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        let table = report::read_csv(BufReader::new(f))?;
        results.push(verify::check_run_table(&table)?);
    }
    let rows = verify::prop1_table(&verify::PROP1_INDICES)?;
    let mut out = io::stdout().lock();
    writeln!(out, "N,N_pi,measured,predicted,ratio")?;
    for r in &rows {
        writeln!(out, "{},{},{},{},{}", r.n, r.n_pi, r.measured, r.predicted, r.ratio)?;
    }
    let mut failed = Vec::new();
    for r in &results {
        writeln!(out, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail)?;
        if !r.passed {
            failed.push(r.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design => design(&cli),
        Command::Assign => assign(&cli),
        Command::Simulate { table } => simulate(&cli, table.as_deref()),
        Command::Sweep { param, values } => run_sweep(&cli, param, values),
        Command::Verify { report } => run_verify(&cli, report.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("infeasible: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(3)
        }
    }
}
