//! `ktt`: command-line front end for the Kinematic Theory Transform.
//!
//! Exit codes: 0 success, 1 when one or more inputs failed (the batch
//! continues), 2 on usage errors. All diagnostics go to standard error;
//! payload files carry no timestamps, so identical invocations produce
//! byte-identical outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ktt_core::io::{
    plan_to_document, read_plan, read_trajectories, write_delimited, write_plan, write_report,
    report_column, ReportRow, TrajectoryFormat,
};
use ktt_core::reconstruct::reconstruct_trajectory;
use ktt_core::trajectory::{resample_uniform, velocity_components};
use ktt_core::{
    extract, generate_synthetic, io, jarque_bera, mann_whitney_u, ExtractorConfig, KernelKind,
    LinkKind, SynthSpec, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Gaussian,
    Lognormal,
    Gamma,
    Beta,
    Dbl,
    Gev,
}

impl KernelArg {
    fn kind(self) -> KernelKind {
        match self {
            KernelArg::Gaussian => KernelKind::Gaussian,
            KernelArg::Lognormal => KernelKind::Lognormal,
            KernelArg::Gamma => KernelKind::Gamma,
            KernelArg::Beta => KernelKind::Beta,
            KernelArg::Dbl => KernelKind::DoubleBoundedLognormal,
            KernelArg::Gev => KernelKind::Gev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LinkArg {
    Arc,
    Clothoid,
}

impl LinkArg {
    fn kind(self) -> LinkKind {
        match self {
            LinkArg::Arc => LinkKind::Arc,
            LinkArg::Clothoid => LinkKind::Clothoid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Pen,
}

impl FormatArg {
    fn format(self) -> TrajectoryFormat {
        match self {
            FormatArg::Csv => TrajectoryFormat::DelimitedText,
            FormatArg::Pen => TrajectoryFormat::PenCapture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatTest {
    Jb,
    Mwu,
}

/// Decompose 2D movement trajectories into overlapping strokes and back.
#[derive(Parser)]
#[command(name = "ktt", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract stroke plans from trajectory files.
    Extract(ExtractCmd),
    /// Synthesize a trajectory from a stored plan.
    Reconstruct(ReconstructCmd),
    /// Extract with several kernel/link configurations and tabulate SNRs.
    Compare(CompareCmd),
    /// Generate a seeded synthetic plan and trajectory.
    Synth(SynthCmd),
    /// Run a statistical test over report columns.
    Stats(StatsCmd),
}

#[derive(Args)]
struct ExtractCmd {
    /// Input files or glob patterns.
    #[arg(required = true)]
    inputs: Vec<String>,
    /// Input layout: csv is `t,x,y`; pen is a pen-capture stream.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Velocity kernel family.
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Link curve family.
    #[arg(long, value_enum)]
    link: Option<LinkArg>,
    /// Analysis resampling rate, Hz.
    #[arg(long, default_value_t = 200.0)]
    rate: f64,
    /// Plan output: a file for a single trajectory, a directory otherwise.
    #[arg(long)]
    out_plan: Option<PathBuf>,
    /// Report file (delimited text, one row per trajectory).
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Series output: aligned original/reconstructed samples for plotting
    /// (a file for a single trajectory, a directory otherwise).
    #[arg(long)]
    out_series: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructCmd {
    /// Plan file produced by `extract` or `synth`.
    #[arg(long)]
    plan: PathBuf,
    /// Output sampling rate, Hz.
    #[arg(long, default_value_t = 200.0)]
    rate: f64,
    /// Trajectory output file (`t,x,y`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareCmd {
    /// Input files or glob patterns.
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Kernel families to try (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lognormal")]
    kernels: Vec<KernelArg>,
    /// Link families to try (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "clothoid")]
    links: Vec<LinkArg>,
    #[arg(long, default_value_t = 200.0)]
    rate: f64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, default_value_t = 3)]
    strokes: usize,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long, value_enum)]
    link: Option<LinkArg>,
    /// Fraction of each stroke's duration shared with its predecessor.
    #[arg(long, default_value_t = 0.25)]
    overlap: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trajectory output file (`t,x,y`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the ground-truth plan here.
    #[arg(long)]
    out_plan: Option<PathBuf>,
}

#[derive(Args)]
struct StatsCmd {
    /// Which test to run.
    #[arg(long, value_enum)]
    test: StatTest,
    /// Report file to read the sample from.
    #[arg(long)]
    report: PathBuf,
    /// Column holding the sample.
    #[arg(long, default_value = "snr_v")]
    column: String,
    /// Second report for the Mann-Whitney comparison (defaults to the
    /// first report).
    #[arg(long)]
    report_b: Option<PathBuf>,
    /// Column for the second Mann-Whitney sample (defaults to --column).
    #[arg(long)]
    column_b: Option<String>,
}

/// Optional defaults file named by KTT_CONFIG: `key value` lines with
/// keys `kernel` and `link`. Flags always win.
struct Defaults {
    kernel: KernelKind,
    link: LinkKind,
}

fn load_defaults() -> Result<Defaults, String> {
    let base = ExtractorConfig::default();
    let mut d = Defaults {
        kernel: base.kernel_kind,
        link: base.link_kind,
    };
    let Some(path) = std::env::var_os("KTT_CONFIG") else {
        return Ok(d);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once(char::is_whitespace) else {
            return Err(format!("bad config line {line:?}"));
        };
        let value = value.trim();
        match key {
            "kernel" => d.kernel = KernelKind::from_name(value).map_err(|e| e.to_string())?,
            "link" => d.link = LinkKind::from_name(value).map_err(|e| e.to_string())?,
            other => return Err(format!("unknown config key {other:?}")),
        }
    }
    Ok(d)
}

/// Expand literal paths and glob patterns, preserving order and
/// sorting each pattern's matches for determinism.
fn expand_inputs(inputs: &[String]) -> Result<Vec<PathBuf>, String> {
    let mut out = Vec::new();
    for raw in inputs {
        if raw.contains(['*', '?', '[']) {
            let mut matches: Vec<PathBuf> = glob::glob(raw)
                .map_err(|e| format!("bad pattern {raw:?}: {e}"))?
                .filter_map(|m| m.ok())
                .collect();
            matches.sort();
            if matches.is_empty() {
                return Err(format!("pattern {raw:?} matched no files"));
            }
            out.extend(matches);
        } else {
            out.push(PathBuf::from(raw));
        }
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Per-trajectory output path: the target itself for a single
/// trajectory, or `<target>/<name>.<ext>` when the batch has several.
fn out_path(target: &Path, name: &str, ext: &str, multi: bool) -> PathBuf {
    if multi || target.is_dir() {
        let safe: String = name
            .chars()
            .map(|c| if c == '#' || c == '/' { '_' } else { c })
            .collect();
        target.join(format!("{safe}.{ext}"))
    } else {
        target.to_path_buf()
    }
}

/// Aligned original/reconstructed series for external plotting.
fn series_text(original: &Trajectory, recon: &Trajectory) -> Result<String, String> {
    use std::fmt::Write as _;
    let (oxv, oyv) = velocity_components(original).map_err(|e| e.to_string())?;
    let (rxv, ryv) = velocity_components(recon).map_err(|e| e.to_string())?;
    let mut s = String::from("t,x_orig,y_orig,v_orig,x_recon,y_recon,v_recon\n");
    for (i, (o, r)) in original.samples().iter().zip(recon.samples()).enumerate() {
        let vo = oxv[i].hypot(oyv[i]);
        let vr = rxv[i].hypot(ryv[i]);
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            o.t, o.x, o.y, vo, r.x, r.y, vr
        );
    }
    Ok(s)
}

fn run_extract(cmd: &ExtractCmd) -> Result<bool, String> {
    let defaults = load_defaults()?;
    let cfg = ExtractorConfig {
        kernel_kind: cmd.kernel.map(KernelArg::kind).unwrap_or(defaults.kernel),
        link_kind: cmd.link.map(LinkArg::kind).unwrap_or(defaults.link),
        resample_rate: cmd.rate,
        ..ExtractorConfig::default()
    };
    let paths = expand_inputs(&cmd.inputs)?;
    let mut trajectories = Vec::new();
    let mut had_failures = false;
    for path in &paths {
        match read_trajectories(path, cmd.format.format()) {
            Ok(mut ts) => trajectories.append(&mut ts),
            Err(e) => {
                eprintln!("ktt: {}: {e}", path.display());
                had_failures = true;
            }
        }
    }
    let multi = trajectories.len() > 1;
    let mut rows = Vec::new();
    for traj in &trajectories {
        let name = traj.meta.clone();
        let result = match extract(traj, &cfg) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("ktt: {name}: {e}");
                had_failures = true;
                continue;
            }
        };
        for w in &result.warnings {
            eprintln!("ktt: {name}: warning: {w}");
        }
        if let Some(target) = &cmd.out_plan {
            let text = write_plan(&plan_to_document(&result.plan));
            write_file(&out_path(target, &name, "plan", multi), &text)?;
        }
        if let Some(target) = &cmd.out_series {
            let resampled = resample_uniform(traj, cmd.rate).map_err(|e| e.to_string())?;
            let recon = reconstruct_trajectory(&result.plan, &resampled.times())
                .map_err(|e| e.to_string())?;
            let text = series_text(&resampled, &recon)?;
            write_file(&out_path(target, &name, "series.csv", multi), &text)?;
        }
        eprintln!(
            "ktt: {name}: {} strokes, SNR_t {:.2} dB, SNR_v {:.2} dB ({} passes)",
            result.report.n_strokes, result.report.snr_t, result.report.snr_v, result.passes_used
        );
        rows.push(ReportRow {
            source: name,
            config: cfg.id(),
            snr_t: result.report.snr_t,
            snr_v: result.report.snr_v,
            n_strokes: result.report.n_strokes,
            passes: result.passes_used,
            warnings: result.warnings.len(),
        });
    }
    if let Some(path) = &cmd.out_report {
        write_file(path, &write_report(&rows))?;
    }
    if rows.is_empty() {
        return Err("no trajectory was extracted successfully".into());
    }
    Ok(had_failures)
}

fn run_reconstruct(cmd: &ReconstructCmd) -> Result<(), String> {
    let text = std::fs::read_to_string(&cmd.plan)
        .map_err(|e| format!("cannot read {}: {e}", cmd.plan.display()))?;
    let doc = read_plan(&text).map_err(|e| e.to_string())?;
    let plan = io::document_to_plan(&doc).map_err(|e| e.to_string())?;
    if !(cmd.rate.is_finite() && cmd.rate > 0.0) {
        return Err(format!("invalid rate {}", cmd.rate));
    }
    let (lo, hi) = plan
        .time_span(1e-9)
        .ok_or("plan has no active time span")?;
    let lo = lo.min(0.0) - 0.05;
    let hi = hi + 0.05;
    let n = ((hi - lo) * cmd.rate).round() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| lo + i as f64 / cmd.rate).collect();
    let traj = reconstruct_trajectory(&plan, &times).map_err(|e| e.to_string())?;
    let out = write_delimited(&traj);
    match &cmd.out {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn run_compare(cmd: &CompareCmd) -> Result<bool, String> {
    let mut cfgs = Vec::new();
    for &k in &cmd.kernels {
        for &l in &cmd.links {
            cfgs.push(ExtractorConfig {
                kernel_kind: k.kind(),
                link_kind: l.kind(),
                resample_rate: cmd.rate,
                ..ExtractorConfig::default()
            });
        }
    }
    let paths = expand_inputs(&cmd.inputs)?;
    let mut had_failures = false;
    let mut rows = Vec::new();
    for path in &paths {
        let trajectories = match read_trajectories(path, cmd.format.format()) {
            Ok(ts) => ts,
            Err(e) => {
                eprintln!("ktt: {}: {e}", path.display());
                had_failures = true;
                continue;
            }
        };
        for traj in &trajectories {
            for cfg in &cfgs {
                match extract(traj, cfg) {
                    Ok(r) => rows.push(ReportRow {
                        source: traj.meta.clone(),
                        config: cfg.id(),
                        snr_t: r.report.snr_t,
                        snr_v: r.report.snr_v,
                        n_strokes: r.report.n_strokes,
                        passes: r.passes_used,
                        warnings: r.warnings.len(),
                    }),
                    Err(e) => {
                        eprintln!("ktt: {} [{}]: {e}", traj.meta, cfg.id());
                        had_failures = true;
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return Err("no (input, config) pair succeeded".into());
    }
    let text = write_report(&rows);
    match &cmd.out_report {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(had_failures)
}

fn run_synth(cmd: &SynthCmd) -> Result<(), String> {
    let defaults = load_defaults()?;
    let spec = SynthSpec {
        n_strokes: cmd.strokes,
        kernel_kind: cmd.kernel.map(KernelArg::kind).unwrap_or(defaults.kernel),
        link_kind: cmd.link.map(LinkArg::kind).unwrap_or(defaults.link),
        overlap_fraction: cmd.overlap,
        seed: cmd.seed,
    };
    let (plan, traj) = generate_synthetic(&spec).map_err(|e| e.to_string())?;
    if let Some(path) = &cmd.out_plan {
        write_file(path, &write_plan(&plan_to_document(&plan)))?;
    }
    let out = write_delimited(&traj);
    match &cmd.out {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn run_stats(cmd: &StatsCmd) -> Result<(), String> {
    let read_column = |path: &Path, column: &str| -> Result<Vec<f64>, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        report_column(&text, column).map_err(|e| e.to_string())
    };
    let a = read_column(&cmd.report, &cmd.column)?;
    let result = match cmd.test {
        StatTest::Jb => {
            println!("test jb");
            println!("column {}", cmd.column);
            println!("n {}", a.len());
            jarque_bera(&a).map_err(|e| e.to_string())?
        }
        StatTest::Mwu => {
            let path_b = cmd.report_b.as_ref().unwrap_or(&cmd.report);
            let column_b = cmd.column_b.as_deref().unwrap_or(&cmd.column);
            let b = read_column(path_b, column_b)?;
            println!("test mwu");
            println!("column_a {}", cmd.column);
            println!("column_b {column_b}");
            println!("n_a {}", a.len());
            println!("n_b {}", b.len());
            mann_whitney_u(&a, &b).map_err(|e| e.to_string())?
        }
    };
    println!("statistic {:?}", result.statistic);
    println!("p_value {:?}", result.p_value);
    println!("reject_at_5pct {}", result.reject_at_5pct);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let outcome: Result<bool, String> = match &cli.command {
        Command::Extract(cmd) => run_extract(cmd),
        Command::Reconstruct(cmd) => run_reconstruct(cmd).map(|()| false),
        Command::Compare(cmd) => run_compare(cmd),
        Command::Synth(cmd) => run_synth(cmd).map(|()| false),
        Command::Stats(cmd) => run_stats(cmd).map(|()| false),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(message) => {
            eprintln!("ktt: {message}");
            ExitCode::from(1)
        }
    }
}
