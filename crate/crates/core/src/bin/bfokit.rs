use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bfokit::bfo_model::AircraftState;
use bfokit::config::AnalysisConfig;
use bfokit::descent::{AccelerationEstimator, DescentBoundsTable, Hypothesis};
use bfokit::geodesy::{GeodeticPosition, GroundKinematics};
use bfokit::io::{self, fmt_f64, render_table};
use bfokit::pipeline::{self, HypothesisChoice, SweepOverrides};
use bfokit::units::{fpm_to_mps, knots_to_mps};
use bfokit::{Error, UtcTime};

#[derive(Parser)]
#[command(name = "bfokit", version, about = "BFO forward model and descent-rate bounds for SATCOM logs")]
struct Cli {
    /// Analysis configuration (TOML).
    #[arg(long, short, global = true, env = "BFOKIT_CONFIG")]
    config: Option<PathBuf>,

    #[arg(long, short, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand)]
enum Command {
    /// Predict the BFO of one aircraft state and show its terms.
    PredictBfo(PredictArgs),
    /// BFO error against assumed track angle at the configured crossing.
    TrackSweep(SweepArgs),
    /// Fit the cruise BFO trend and extrapolate it.
    Trend(TrendArgs),
    /// Warm-up drift bounds from the configured log-on sequences.
    LogonDrift,
    /// Descent-rate bounds for the final log-on pair.
    DescentBounds(DescentArgs),
    /// Estimate the fixed frequency bias from bursts logged at the gate.
    CalibrateBias(CalibrateArgs),
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    time: String,
    #[arg(long, allow_hyphen_values = true)]
    lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    lon: f64,
    /// Metres above the ellipsoid.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alt: f64,
    #[arg(long, default_value_t = 0.0)]
    speed_kts: f64,
    #[arg(long, default_value_t = 0.0)]
    track_deg: f64,
    /// Positive up.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    vrate_fpm: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    time: Option<String>,
    #[arg(long, value_delimiter = ',')]
    speed_kts: Option<Vec<f64>>,
    #[arg(long)]
    step_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    measured_hz: Option<f64>,
    /// Also write one `track_sweep_<speed>kts.csv` per speed here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TrendArgs {
    /// `START..END`, e.g. `19:41Z..00:11Z`.
    #[arg(long)]
    window: Option<String>,
    #[arg(long, value_delimiter = ',')]
    extrapolate: Option<Vec<String>>,
    /// Add track offsets taken from the configured sweep.
    #[arg(long)]
    offsets_from_sweep: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum HypothesisArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Midpoint,
    MinToMin,
    MaxToMax,
}

#[derive(Args)]
struct DescentArgs {
    #[arg(long, value_enum, default_value_t = HypothesisArg::Both)]
    hypothesis: HypothesisArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Midpoint)]
    estimator: EstimatorArg,
    /// Also write the range and rate tables as CSV files here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// `START..END`; defaults to the configured window.
    #[arg(long)]
    tarmac_window: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&e, format);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn report_error(e: &Error, format: Format) {
    if format == Format::Json {
        let lines = match e {
            Error::Parse { errors, .. } => errors.clone(),
            _ => Vec::new(),
        };
        let kind = match e {
            Error::OutOfRange { .. } => "out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::InsufficientData(_) => "insufficient_data",
            Error::InvalidInput(_) => "invalid_input",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        };
        let body = serde_json::json!({ "error": { "kind": kind, "message": e.to_string(), "lines": lines } });
        eprintln!("{body}");
    } else {
        eprintln!("error: {e}");
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    let path = cli
        .config
        .ok_or_else(|| Error::Config("no configuration given (use --config or BFOKIT_CONFIG)".into()))?;
    let cfg = AnalysisConfig::load(&path)?;
    let f = cli.format;
    match cli.command {
        Command::PredictBfo(a) => predict(&cfg, a, f),
        Command::TrackSweep(a) => track_sweep(&cfg, a, f),
        Command::Trend(a) => trend(&cfg, a, f),
        Command::LogonDrift => logon_drift(&cfg, f),
        Command::DescentBounds(a) => descent(&cfg, a, f),
        Command::CalibrateBias(a) => calibrate(&cfg, a, f),
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn window(cfg: &AnalysisConfig, s: &str) -> Result<(UtcTime, UtcTime), Error> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::InvalidInput(format!("window '{s}' is not START..END")))?;
    let (a, b) = (cfg.parse_time(a)?, cfg.parse_time(b)?);
    if b <= a {
        return Err(Error::InvalidInput(format!("window '{s}' ends before it starts")));
    }
    Ok((a, b))
}

fn predict(cfg: &AnalysisConfig, a: PredictArgs, f: Format) -> Result<String, Error> {
    let aircraft = AircraftState {
        position: GeodeticPosition::new(a.lat, a.lon, a.alt)?,
        kinematics: GroundKinematics::new(knots_to_mps(a.speed_kts), a.track_deg, fpm_to_mps(a.vrate_fpm))?,
        time: cfg.parse_time(&a.time)?,
    };
    let p = pipeline::predict(cfg, &aircraft)?;
    let t = &p.terms;
    let values = [
        ("bfo_hz", p.bfo_hz),
        ("uplink_doppler_hz", t.uplink_doppler),
        ("downlink_doppler_hz", t.downlink_doppler),
        ("aes_compensation_hz", t.aes_compensation),
        ("sat_plus_afc_hz", t.sat_plus_afc),
        ("bias_hz", t.bias),
    ];
    Ok(match f {
        Format::Json => json(&p),
        Format::Csv => {
            let mut cols = vec!["time_utc"];
            cols.extend(values.iter().map(|v| v.0));
            let mut row = vec![p.time.to_string()];
            row.extend(values.iter().map(|v| fmt_f64(v.1)));
            render_table(&[], &cols, &[row])
        }
        Format::Pretty => {
            let mut out = format!("{}\n", p.time);
            for (name, v) in values {
                out.push_str(&format!("{name:<22}{v:>12.3}\n"));
            }
            out
        }
    })
}

fn track_sweep(cfg: &AnalysisConfig, a: SweepArgs, f: Format) -> Result<String, Error> {
    let o = SweepOverrides {
        time: a.time.as_deref().map(|t| cfg.parse_time(t)).transpose()?,
        speeds_kts: a.speed_kts,
        step_deg: a.step_deg,
        measured_bfo: a.measured_hz,
    };
    let report = pipeline::sweep(cfg, &o)?;
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
        for c in &report.curves {
            io::write_text(
                &dir.join(format!("track_sweep_{}kts.csv", fmt_f64(c.speed_kts))),
                &io::render_track_curve(&c.curve),
            )?;
        }
    }
    Ok(match f {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .curves
                .iter()
                .flat_map(|c| {
                    c.curve
                        .points
                        .iter()
                        .map(move |p| vec![fmt_f64(c.speed_kts), fmt_f64(p.track_deg), fmt_f64(p.bfo_error_hz)])
                })
                .collect();
            render_table(&[], &["speed_kts", "track_deg", "bfo_error_hz"], &rows)
        }
        Format::Pretty => {
            let mut out = format!("track sweep at {} against {} Hz\n", report.time, report.measured_bfo_hz);
            for c in &report.curves {
                out.push_str(&format!(
                    "{:>6} kts  peak-to-peak {:>7.2} Hz  south offset {:>7.2} Hz  north offset {:>7.2} Hz\n",
                    c.speed_kts, c.peak_to_peak_hz, c.south_offset_hz, c.north_offset_hz
                ));
            }
            out
        }
    })
}

fn trend(cfg: &AnalysisConfig, a: TrendArgs, f: Format) -> Result<String, Error> {
    let w = a.window.as_deref().map(|s| window(cfg, s)).transpose()?;
    let at = a
        .extrapolate
        .map(|v| v.iter().map(|s| cfg.parse_time(s)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let offsets = if a.offsets_from_sweep {
        Some(pipeline::reference_offsets(cfg)?)
    } else {
        None
    };
    let report = pipeline::trend(cfg, w, at, offsets)?;
    Ok(match f {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .extrapolations
                .iter()
                .map(|e| {
                    vec![
                        e.time.to_string(),
                        fmt_f64(e.bfo_hz),
                        e.far_from_window.to_string(),
                        e.expected_south_hz.map(fmt_f64).unwrap_or_default(),
                        e.expected_north_hz.map(fmt_f64).unwrap_or_default(),
                    ]
                })
                .collect();
            render_table(
                &[],
                &["time_utc", "bfo_hz", "far_from_window", "expected_south_hz", "expected_north_hz"],
                &rows,
            )
        }
        Format::Pretty => {
            let m = &report.model;
            let mut out = format!(
                "trend over {} .. {} ({} bursts): {:.2} Hz/h, {:.2} Hz at start, rms residual {:.2} Hz\n",
                m.window.0, m.window.1, m.count, m.slope, m.intercept, m.residual_rms
            );
            for e in &report.extrapolations {
                out.push_str(&format!(
                    "{}  {:>8.2} Hz{}",
                    e.time,
                    e.bfo_hz,
                    if e.far_from_window { "  (far from window)" } else { "" }
                ));
                if let (Some(s), Some(n)) = (e.expected_south_hz, e.expected_north_hz) {
                    out.push_str(&format!("  expected south {s:.2} Hz, north {n:.2} Hz"));
                }
                out.push('\n');
            }
            out
        }
    })
}

fn logon_drift(cfg: &AnalysisConfig, f: Format) -> Result<String, Error> {
    let report = pipeline::logon_drift(cfg)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    Ok(match f {
        Format::Json => json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .sequences
                .iter()
                .map(|s| {
                    vec![
                        s.id.clone(),
                        s.compensation_mode.to_string(),
                        serde_json::to_value(s.settled)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_owned))
                            .unwrap_or_default(),
                        opt(s.logon_minus_settled),
                        fmt_f64(s.ack_minus_settled),
                        opt(s.ack_below_logon),
                    ]
                })
                .collect();
            render_table(
                &[],
                &[
                    "seq_id",
                    "comp_mode",
                    "settled",
                    "logon_minus_settled_hz",
                    "ack_minus_settled_hz",
                    "ack_below_logon_hz",
                ],
                &rows,
            )
        }
        Format::Pretty => {
            let b = &report.bounds;
            format!(
                "log-on minus settled  [{}, {}] Hz\nack minus settled     [{}, {}] Hz\nack below log-on      [{}, {}] Hz\n",
                b.logon_minus_settled.min,
                b.logon_minus_settled.max,
                b.ack_minus_settled.min,
                b.ack_minus_settled.max,
                b.ack_below_logon.min,
                b.ack_below_logon.max
            )
        }
    })
}

fn table_name(t: &DescentBoundsTable) -> &'static str {
    match t.hypothesis {
        Some(Hypothesis::PowerOutage) => "power_outage",
        Some(Hypothesis::OtherCause) => "other_cause",
        None => "combined",
    }
}

/// `13600` → `13,600`.
fn grouped(v: f64) -> String {
    let digits = format!("{}", v.abs().round() as i64);
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if v < 0.0 && v.round() != 0.0 {
        out.insert(0, '-');
    }
    out
}

fn descent(cfg: &AnalysisConfig, a: DescentArgs, f: Format) -> Result<String, Error> {
    let choice = match a.hypothesis {
        HypothesisArg::One => HypothesisChoice::One(Hypothesis::PowerOutage),
        HypothesisArg::Two => HypothesisChoice::One(Hypothesis::OtherCause),
        HypothesisArg::Both => HypothesisChoice::Both,
    };
    let estimator = match a.estimator {
        EstimatorArg::Midpoint => AccelerationEstimator::Midpoint,
        EstimatorArg::MinToMin => AccelerationEstimator::MinToMin,
        EstimatorArg::MaxToMax => AccelerationEstimator::MaxToMax,
    };
    let report = pipeline::descent(cfg, choice, estimator)?;
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
        for t in &report.tables {
            let name = table_name(t);
            io::write_text(&dir.join(format!("{name}_ranges.csv")), &io::render_bfo_ranges(t))?;
            io::write_text(&dir.join(format!("{name}_rates.csv")), &io::render_descent_rates(t))?;
        }
        if let Some(c) = &report.combined {
            io::write_text(&dir.join("combined_bounds.csv"), &io::render_outer_bounds(c))?;
        }
    }
    Ok(match f {
        Format::Json => json(&report),
        Format::Csv => match &report.combined {
            Some(c) => io::render_outer_bounds(c),
            None => io::render_descent_rates(&report.tables[0]),
        },
        Format::Pretty => {
            let mut out = String::new();
            for t in &report.tables {
                out.push_str(&format!("{}\n", table_name(t)));
                out.push_str("  timestamp               BFO range (Hz)    min south    min north    max south    max north\n");
                for r in &t.rows {
                    let x = r.rates;
                    out.push_str(&format!(
                        "  {}  [{:>5}, {:>5}]  {:>9} fpm {:>8} fpm {:>8} fpm {:>8} fpm\n",
                        r.time,
                        r.range.adjusted.lower,
                        r.range.adjusted.upper,
                        grouped(x.min_south),
                        grouped(x.min_north),
                        grouped(x.max_south),
                        grouped(x.max_north)
                    ));
                }
            }
            if let Some(c) = &report.combined {
                out.push_str("combined\n");
                for r in &c.rows {
                    let (lo, hi) = r.rates.outer();
                    out.push_str(&format!("  {}  {:>9} fpm to {:>9} fpm\n", r.time, grouped(lo), grouped(hi)));
                }
            }
            if let Some(acc) = report.acceleration {
                out.push_str(&format!(
                    "downward acceleration {} fpm/s, {:.2} m/s^2, {:.2} g\n",
                    grouped(acc.fpm_per_s),
                    acc.mps2,
                    acc.g
                ));
            }
            out
        }
    })
}

fn calibrate(cfg: &AnalysisConfig, a: CalibrateArgs, f: Format) -> Result<String, Error> {
    let w = a.tarmac_window.as_deref().map(|s| window(cfg, s)).transpose()?;
    let r = pipeline::calibrate(cfg, w)?;
    Ok(match f {
        Format::Json => json(&r),
        Format::Csv => render_table(&[], &["bias_hz", "count"], &[vec![fmt_f64(r.bias_hz), r.count.to_string()]]),
        Format::Pretty => format!(
            "bias {:.2} Hz from {} bursts between {} and {}\n",
            r.bias_hz, r.count, r.window.0, r.window.1
        ),
    })
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}
