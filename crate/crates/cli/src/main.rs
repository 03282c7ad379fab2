use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wigner_lab::experiment::{
    decompose_rescaled, run, spectrum_table, EnsembleConfig, EnsembleKind, ExperimentConfig,
    ExperimentKind, OutputFormat, RunReport, SpectrumEmit,
};
use wigner_lab::io::{write_matrix_binary, write_matrix_csv, Table};
use wigner_lab::stats::NormalizationKind;
use wigner_lab::Group;

const EXIT_FAIL: u8 = 2;
const EXIT_USAGE: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "wigner-lab",
    version,
    about = "Monte Carlo experiments on Wigner random matrices"
)]
struct Cli {
    /// Experiment configuration (JSON); flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "WIGNER_LAB_THREADS")]
    threads: Option<usize>,
    /// Output directory. Without it tables go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Also write per-trial raw samples.
    #[arg(long, global = true)]
    dump_samples: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one matrix M and write it as dense CSV (or binary).
    Sample {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long)]
        binary: bool,
    },
    /// Spectral data of one sample of A = sqrt(n) M.
    Spectrum {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long, default_value = "adhoc")]
        normalization: NormalizationKind,
        #[arg(long, default_value = "eigenvalues")]
        emit: SpectrumEmit,
    },
    /// Law of one eigenvector coefficient against its Haar limit.
    EigvecDist(ExperimentArgs),
    /// Projection central limit theorem.
    Clt(ExperimentArgs),
    /// Compare a smooth functional between two moment-matched ensembles.
    FourMoment(ExperimentArgs),
    /// Resolvent coefficient at E + i eta; eta = 0 switches to inverse mode.
    Resolvent(ExperimentArgs),
    /// Inverse-matrix coefficient and level repulsion at a real energy.
    Inverse(ExperimentArgs),
    /// Smallest eigenvalue gaps.
    GapStats(ExperimentArgs),
    /// Largest rescaled eigenvector coefficient.
    Delocalization(ExperimentArgs),
    /// Entry law of Haar matrices.
    HaarCompare(ExperimentArgs),
    /// Deviation of the resolvent from the semicircle transform.
    LocalLaw(ExperimentArgs),
}

#[derive(Args, Debug, Clone)]
struct EnsembleArgs {
    #[arg(long)]
    ensemble: Option<EnsembleKind>,
    /// Off-diagonal atom law for `--ensemble custom`.
    #[arg(long)]
    atom_file: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ExperimentArgs {
    #[command(flatten)]
    ens: EnsembleArgs,
    /// Second ensemble for four-moment comparisons.
    #[arg(long)]
    ensemble_b: Option<EnsembleKind>,
    /// Eigenvalue index, 1-based.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    normalization: Option<NormalizationKind>,
    #[arg(long = "E", allow_hyphen_values = true)]
    energy: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_parser = parse_group)]
    group: Option<Group>,
    /// Run even if the ensembles do not match to fourth order.
    #[arg(long)]
    allow_hypothesis_violation: bool,
}

fn parse_group(s: &str) -> std::result::Result<Group, String> {
    match s {
        "orthogonal" => Ok(Group::Orthogonal),
        "unitary" => Ok(Group::Unitary),
        other => Err(format!("unknown group {other:?} (orthogonal|unitary)")),
    }
}

fn kind_of(cmd: &Command) -> Option<(ExperimentKind, &ExperimentArgs)> {
    Some(match cmd {
        Command::EigvecDist(a) => (ExperimentKind::EigvecDist, a),
        Command::Clt(a) => (ExperimentKind::Clt, a),
        Command::FourMoment(a) => (ExperimentKind::FourMoment, a),
        Command::Resolvent(a) => (ExperimentKind::Resolvent, a),
        Command::Inverse(a) => (ExperimentKind::Inverse, a),
        Command::GapStats(a) => (ExperimentKind::GapStats, a),
        Command::Delocalization(a) => (ExperimentKind::Delocalization, a),
        Command::HaarCompare(a) => (ExperimentKind::HaarCompare, a),
        Command::LocalLaw(a) => (ExperimentKind::LocalLaw, a),
        Command::Sample { .. } | Command::Spectrum { .. } => return None,
    })
}

fn base_config(cli: &Cli, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.experiment != kind {
                bail!(
                    "configuration is for {:?} but the subcommand asks for {kind:?}",
                    c.experiment
                );
            }
            c
        }
        None => ExperimentConfig::new(kind, EnsembleKind::Goe, 100, 1000, 0),
    };
    if let Some(s) = cli.seed {
        c.master_seed = s;
    }
    if let Some(t) = cli.trials {
        c.trials = t;
    }
    if let Some(f) = cli.format {
        c.output.format = f;
    }
    if let Some(d) = &cli.out {
        c.output.dir = Some(d.clone());
    }
    c.output.dump_samples |= cli.dump_samples;
    Ok(c)
}

fn apply_ensemble(c: &mut ExperimentConfig, e: &EnsembleArgs) {
    if let Some(k) = e.ensemble {
        c.ensemble = EnsembleConfig::of(k);
    }
    if let Some(f) = &e.atom_file {
        c.ensemble.atom_file = Some(f.clone());
    }
    if let Some(n) = e.n {
        c.n = n;
    }
}

fn experiment_config(
    cli: &Cli,
    kind: ExperimentKind,
    a: &ExperimentArgs,
) -> Result<ExperimentConfig> {
    let mut c = base_config(cli, kind)?;
    apply_ensemble(&mut c, &a.ens);
    if let Some(k) = a.ensemble_b {
        c.ensemble_b = Some(EnsembleConfig::of(k));
    }
    let o = &mut c.observable;
    o.index = a.index.or(o.index);
    o.p = a.p.unwrap_or(o.p);
    o.q = a.q.unwrap_or(o.q);
    o.normalization = a.normalization.or(o.normalization);
    o.energy = a.energy.unwrap_or(o.energy);
    o.eta = a.eta.unwrap_or(o.eta);
    o.group = a.group.unwrap_or(o.group);
    o.allow_hypothesis_violation |= a.allow_hypothesis_violation;
    c.validate()?;
    Ok(c)
}

fn write_table(table: &Table, format: OutputFormat, w: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => table.write_csv(w)?,
        OutputFormat::Json => table.write_json(w)?,
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn run_experiment(c: &ExperimentConfig) -> Result<bool> {
    let outcome = run(c)?;
    let report = RunReport::new(c, &outcome);
    for r in &outcome.reports {
        eprintln!("{}", r.verdict_line());
    }
    let ext = match c.output.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    match &c.output.dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
            let mut w = create(dir, "report.json")?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            let mut w = create(dir, &format!("plotdata.{ext}"))?;
            write_table(&outcome.table, c.output.format, &mut w)?;
            let mut w = create(dir, "config.json")?;
            writeln!(w, "{}", c.to_json()?)?;
            if c.output.dump_samples {
                if let Some(samples) = &outcome.samples {
                    let mut t = Table::new(&["trial", "value"]);
                    for (k, &x) in samples.iter().enumerate() {
                        t.push(vec![k.into(), x.into()]);
                    }
                    write_table(&t, c.output.format, create(dir, &format!("samples.{ext}"))?)?;
                }
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write_table(&outcome.table, c.output.format, &mut w)?;
            if c.output.format == OutputFormat::Json {
                writeln!(w)?;
            }
        }
    }
    Ok(report.pass)
}

fn output_sink(cli: &Cli, name: &str) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(create(dir, name)?)
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Some((kind, args)) = kind_of(&cli.command) {
        let c = experiment_config(cli, kind, args)?;
        return run_experiment(&c);
    }
    match &cli.command {
        Command::Sample { ens, binary } => {
            let mut c = base_config(cli, ExperimentKind::GapStats)?;
            apply_ensemble(&mut c, ens);
            c.validate()?;
            let sample = c.spec()?.sample(c.master_seed);
            if *binary {
                let mut w = output_sink(cli, "matrix.bin")?;
                write_matrix_binary(&mut w, &sample.matrix)?;
                w.flush()?;
            } else {
                let mut w = output_sink(cli, "matrix.csv")?;
                write_matrix_csv(&mut w, &sample.matrix)?;
                w.flush()?;
            }
        }
        Command::Spectrum {
            ens,
            normalization,
            emit,
        } => {
            let mut c = base_config(cli, ExperimentKind::GapStats)?;
            apply_ensemble(&mut c, ens);
            c.validate()?;
            let sample = c.spec()?.sample(c.master_seed);
            let d = decompose_rescaled(&sample, normalization.for_trial(c.master_seed))?;
            let table = spectrum_table(&d, *emit)?;
            let format = cli.format.unwrap_or(OutputFormat::Csv);
            let ext = if format == OutputFormat::Csv {
                "csv"
            } else {
                "json"
            };
            let mut w = output_sink(cli, &format!("spectrum.{ext}"))?;
            write_table(&table, format, &mut w)?;
            w.flush()?;
        }
        _ => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_USAGE);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
