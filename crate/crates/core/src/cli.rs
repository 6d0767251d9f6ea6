//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage error, 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analyzer::{check_click_table, MAX_STATEVECTOR_USERS};
use crate::channel::{ChannelParams, PAPER_PRESET};
use crate::multiplexing::{asymptotic_gap, grouping_efficiency, MultiplexConfig};
use crate::yields::{sweep, McBudget, YieldMode, YieldPoint};
use crate::{Error, Result};

/// Directory searched for `<name>.toml` channel presets before the built-ins.
pub const PRESET_DIR_ENV: &str = "GHZREP_PRESET_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const SWEEP_HEADER: [&str; 6] = ["l_km", "n_users", "Q", "e_b_max", "e_p", "yield"];

#[derive(Parser, Debug)]
#[command(name = "ghz-repeater", version, about = "Two-dimensional photonic GHZ repeater simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Yield versus distance as CSV.
    Sweep(SweepArgs),
    /// Exhaustive check of the analyzer click table.
    AnalyzerCheck {
        /// Inclusive range of group sizes, e.g. 2..6.
        #[arg(long, default_value = "2..6")]
        n: String,
    },
    /// Grouping efficiency versus multiplexing number as CSV.
    Multiplexing {
        #[arg(long)]
        n_users: usize,
        #[arg(long)]
        eta: f64,
        /// Comma-separated, ascending multiplexing numbers.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Analytic,
    MonteCarlo,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// Channel preset name.
    #[arg(long)]
    preset: Option<String>,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated user counts.
    #[arg(long, value_delimiter = ',')]
    n_users: Option<Vec<usize>>,
    /// Distance grid as start:stop:step in km, stop inclusive.
    #[arg(long)]
    distance: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Photons per user per slot in monte-carlo mode.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

/// Keys accepted in a `--config` file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    n_users: Option<Vec<usize>>,
    distance: Option<String>,
    mode: Option<ModeArg>,
    trials: Option<u64>,
    seed: Option<u64>,
    m: Option<u64>,
    out: Option<PathBuf>,
    l_att_km: Option<f64>,
    tau_a_s: Option<f64>,
    c_m_per_s: Option<f64>,
    p_qnd: Option<f64>,
    efficiency: Option<f64>,
    dark_count_prob: Option<f64>,
}

/// Fully resolved sweep configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub channel: ChannelParams,
    pub n_users: Vec<usize>,
    pub distances_km: Vec<f64>,
    pub mode: ModeArg,
    pub trials: u64,
    pub seed: u64,
    pub m: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn yield_mode(&self) -> YieldMode {
        match self.mode {
            ModeArg::Analytic => YieldMode::Analytic,
            ModeArg::MonteCarlo => YieldMode::MonteCarlo(McBudget {
                trials: self.trials,
                m: self.m,
                seed: self.seed,
            }),
        }
    }
}

/// Looks up `name` in the preset directory, then among the built-ins.
pub fn load_preset(name: &str) -> Result<ChannelParams> {
    if let Some(dir) = std::env::var_os(PRESET_DIR_ENV) {
        let path = Path::new(&dir).join(format!("{name}.toml"));
        if path.exists() {
            let text = read_file(&path)?;
            let params: ChannelParams = toml::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            params.validate()?;
            return Ok(params);
        }
    }
    ChannelParams::preset(name).ok_or_else(|| Error::invalid(format!("preset: unknown preset `{name}`")))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `start:stop:step` into an ascending grid that includes `stop` when
/// it lies on the grid.
pub fn parse_distance_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::invalid(format!("distance: expected start:stop:step, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || start < 0.0 {
        return Err(bad());
    }
    if step <= 0.0 {
        return Err(Error::invalid("distance: step must be positive"));
    }
    if stop < start {
        return Err(Error::invalid("distance: grid is empty (stop < start)"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Parses an inclusive range `a..b`; a single number is a one-element range.
pub fn parse_n_range(spec: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || Error::invalid(format!("n: expected a range like 2..6, got `{spec}`"));
    let (a, b) = match spec.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (spec, spec),
    };
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    if a < 2 || b > MAX_STATEVECTOR_USERS {
        return Err(Error::invalid(format!(
            "n: supported group sizes are 2..{MAX_STATEVECTOR_USERS}, got {spec}"
        )));
    }
    Ok(a..=b)
}

fn resolve_sweep(args: &SweepArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => toml::from_str::<FileConfig>(&read_file(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        None => FileConfig::default(),
    };
    let preset = args
        .preset
        .clone()
        .or(file.preset)
        .unwrap_or_else(|| PAPER_PRESET.to_string());
    let mut channel = load_preset(&preset)?;
    let overrides = [
        (&mut channel.l_att_km, file.l_att_km),
        (&mut channel.tau_a_s, file.tau_a_s),
        (&mut channel.c_m_per_s, file.c_m_per_s),
        (&mut channel.p_qnd, file.p_qnd),
        (&mut channel.detector.efficiency, file.efficiency),
        (&mut channel.detector.dark_count_prob, file.dark_count_prob),
    ];
    for (slot, value) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    channel.validate()?;

    let n_users = args
        .n_users
        .clone()
        .or(file.n_users)
        .unwrap_or_else(|| vec![6, 12, 20]);
    if n_users.is_empty() || n_users.iter().any(|&n| n < 2) {
        return Err(Error::invalid("n-users: each user count must be at least 2"));
    }
    let grid = args
        .distance
        .clone()
        .or(file.distance)
        .unwrap_or_else(|| "0:300:10".to_string());
    let mode = args.mode.or(file.mode).unwrap_or(ModeArg::Analytic);
    let trials = args.trials.or(file.trials).unwrap_or(100_000);
    if mode == ModeArg::MonteCarlo && trials == 0 {
        return Err(Error::invalid("trials: must be at least 1 in monte-carlo mode"));
    }
    if mode == ModeArg::MonteCarlo {
        if let Some(&n) = n_users.iter().find(|&&n| n > MAX_STATEVECTOR_USERS) {
            return Err(Error::invalid(format!(
                "n-users: monte-carlo mode supports at most {MAX_STATEVECTOR_USERS} users, got {n}"
            )));
        }
    }
    let m = args.m.or(file.m).unwrap_or(64);
    if m == 0 {
        return Err(Error::invalid("m: must be at least 1"));
    }
    Ok(RunConfig {
        channel,
        n_users,
        distances_km: parse_distance_grid(&grid)?,
        mode,
        trials,
        seed: args.seed.or(file.seed).unwrap_or(0),
        m,
        out: args.out.clone().or(file.out),
    })
}

fn fmt_sig(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes the sweep CSV with a fixed column order and 9 significant digits.
pub fn write_sweep_csv<W: Write>(points: &[YieldPoint], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for p in points {
        w.write_record([
            fmt_sig(p.l_km),
            p.n_users.to_string(),
            fmt_sig(p.q),
            fmt_sig(p.e_b_max()),
            fmt_sig(p.e_p),
            fmt_sig(p.d),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of a sweep CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SweepRow {
    pub l_km: f64,
    pub n_users: usize,
    #[serde(rename = "Q")]
    pub q: f64,
    pub e_b_max: f64,
    pub e_p: f64,
    #[serde(rename = "yield")]
    pub d: f64,
}

pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(e.to_string()))
}

/// Runs a resolved sweep and returns the CSV bytes.
pub fn sweep_csv(cfg: &RunConfig) -> Result<Vec<u8>> {
    let points = sweep(&cfg.channel, &cfg.n_users, &cfg.distances_km, cfg.yield_mode())?;
    let mut buf = Vec::new();
    write_sweep_csv(&points, &mut buf).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(buf)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let cfg = resolve_sweep(args)?;
    let bytes = match args.threads {
        Some(0) => return Err(Error::invalid("threads: must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(format!("threads: {e}")))?
            .install(|| sweep_csv(&cfg))?,
        None => sweep_csv(&cfg)?,
    };
    emit(&bytes, cfg.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_analyzer_check(spec: &str) -> Result<i32> {
    let range = parse_n_range(spec)?;
    let tol = 1e-12;
    let mut all_pass = true;
    let mut report = String::new();
    for n in range {
        let check = check_click_table(n)?;
        let pass = check.passes(tol);
        all_pass &= pass;
        for c in [&check.plus, &check.minus] {
            let label = if c.sign > 0 { "Phi+" } else { "Phi-" };
            report.push_str(&format!(
                "n={n} {label}: {} success patterns, P(own class)={:.12}, P(other class)={:.3e} {}\n",
                c.correct_patterns,
                c.correct_prob,
                c.wrong_prob,
                if c.passes(tol) { "PASS" } else { "FAIL" }
            ));
        }
    }
    emit(report.as_bytes(), None)?;
    Ok(if all_pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Grouping-efficiency table as CSV bytes: `M,Q,gap,undersized`.
pub fn multiplexing_csv(n_users: usize, eta: f64, m_list: &[u64]) -> Result<Vec<u8>> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("eta: must be in (0, 1], got {eta}")));
    }
    let gaps = asymptotic_gap(n_users, eta, m_list)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_parse = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["M", "Q", "gap", "undersized"]).map_err(to_parse)?;
    for (m, gap) in gaps {
        let cfg = MultiplexConfig::new(n_users, m, eta)?;
        w.write_record([
            m.to_string(),
            fmt_sig(grouping_efficiency(&cfg)?),
            fmt_sig(gap),
            cfg.is_undersized().to_string(),
        ])
        .map_err(to_parse)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidArgument(_) | Error::Parse(_) | Error::Unsupported(_) => EXIT_USAGE,
        Error::InsufficientStatistics { .. } | Error::NoPositiveYield => EXIT_VERIFY_FAILED,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::AnalyzerCheck { n } => cmd_analyzer_check(n),
        Command::Multiplexing {
            n_users,
            eta,
            m,
            out,
        } => multiplexing_csv(*n_users, *eta, m)
            .and_then(|bytes| emit(&bytes, out.as_deref()))
            .map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_grids() {
        assert_eq!(parse_distance_grid("0:300:10").unwrap().len(), 31);
        assert_eq!(parse_distance_grid("5:5:1").unwrap(), vec![5.0]);
        assert_eq!(parse_distance_grid("0:1:0.25").unwrap().len(), 5);
        assert!(parse_distance_grid("10:0:1").is_err());
        assert!(parse_distance_grid("0:10:0").is_err());
        assert!(parse_distance_grid("0:10").is_err());
        assert!(parse_distance_grid("a:b:c").is_err());
    }

    #[test]
    fn n_ranges() {
        assert_eq!(parse_n_range("2..6").unwrap(), 2..=6);
        assert_eq!(parse_n_range("2..=4").unwrap(), 2..=4);
        assert_eq!(parse_n_range("3").unwrap(), 3..=3);
        assert!(parse_n_range("6..2").is_err());
        assert!(parse_n_range("1..3").is_err());
        assert!(parse_n_range("2..9").is_err());
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "n_users = [3]\ndistance = \"0:20:10\"\nseed = 9\ndark_count_prob = 1e-6\n",
        )
        .unwrap();
        let args = SweepArgs {
            config: Some(path),
            seed: Some(4),
            ..Default::default()
        };
        let cfg = resolve_sweep(&args).unwrap();
        assert_eq!(cfg.n_users, vec![3]);
        assert_eq!(cfg.distances_km, vec![0.0, 10.0, 20.0]);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.channel.detector.dark_count_prob, 1e-6);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n_user = [3]\n").unwrap();
        let args = SweepArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(resolve_sweep(&args), Err(Error::Parse(_))));
    }

    #[test]
    fn multiplexing_table() {
        let text = String::from_utf8(multiplexing_csv(3, 0.5, &[1, 2]).unwrap()).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "M,Q,gap,undersized");
        assert!(rows[1].starts_with("1,1.25000000e-1,"));
        assert!(rows[2].starts_with("2,2.18750000e-1,"));
        assert!(rows[1].ends_with(",true"));
        assert!(multiplexing_csv(3, 0.0, &[1]).is_err());
    }
}
