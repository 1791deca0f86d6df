use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use wetspell::distributions::TemperedSFParams;
use wetspell::fitting::{self, FitReport, FittedParams, MleOptions, ModelKind, TABLE_MIN_DURATIONS};
use wetspell::hypothesis::{daily_max_test, StatisticName, VerdictRecord};
use wetspell::segmentation::{extract_wet_periods, mean_inter_onset_gap, read_daily_csv, WetPeriod};
use wetspell::simulate::{self, SeriesConfig, SimConfig};
use wetspell::windowing::{horizon_to_m, moving_scan, nested_counts, scan_records};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::io::{self, Format};
use crate::manifest::{sidecar, FileDigest, RunManifest};

pub const DEFAULT_HORIZON_DAYS: u32 = 30;

#[derive(Debug, Clone, Copy)]
pub struct Context {
    /// The `--seed` flag; commands fall back to their config's seed, then 0.
    pub seed: Option<u64>,
    pub threads: usize,
}

/// What a command read, wrote and worked out.
struct Run {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    resolved: BTreeMap<String, Value>,
    manifest: PathBuf,
}

type Resolved = BTreeMap<String, Value>;

/// Runs one command on a pool of `ctx.threads` workers and writes its
/// manifest. Returns the manifest path (none for `replay`).
pub fn execute(cmd: &Command, ctx: Context) -> CliResult<Option<PathBuf>> {
    if let Command::Replay(a) = cmd {
        replay(a)?;
        return Ok(None);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let run = pool.install(|| match cmd {
        Command::Segment(a) => segment(a),
        Command::Fit(a) => fit(a),
        Command::TestDaily(a) => test_daily(a),
        Command::Scan(a) => scan(a),
        Command::Simulate(a) => simulate(a, ctx.seed),
        Command::Synth(a) => synth(a, ctx.seed.unwrap_or(0)),
        Command::Replay(_) => unreachable!(),
    })?;
    let seed = match cmd {
        Command::Simulate(_) => run.resolved.get("seed").and_then(Value::as_u64).unwrap_or(0),
        _ => ctx.seed.unwrap_or(0),
    };
    let mut manifest = RunManifest::new(cmd, seed, ctx.threads, run.resolved);
    manifest.inputs = run.inputs.iter().map(|p| FileDigest::of(p)).collect::<CliResult<_>>()?;
    manifest.outputs = run
        .outputs
        .iter()
        .map(|p| FileDigest::of(p))
        .collect::<CliResult<_>>()?;
    io::write_json(&run.manifest, &manifest)?;
    info!("manifest written to {}", run.manifest.display());
    Ok(Some(run.manifest))
}

fn check_epsilon(eps: f64) -> CliResult<f64> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(CliError::Config(format!(
            "significance level must lie in (0, 1), got {eps}"
        )))
    }
}

fn orders(q: &[f64]) -> CliResult<[f64; 3]> {
    <[f64; 3]>::try_from(q).map_err(|_| CliError::Config(format!("need three quantile orders, got {}", q.len())))
}

fn load_periods(path: &Path, filter: &PeriodFilter, resolved: &mut Resolved) -> CliResult<Vec<WetPeriod>> {
    let mut periods = io::read_periods(path)?;
    let mut stations: Vec<Option<&str>> = periods.iter().map(|p| p.station.as_deref()).collect();
    stations.dedup();
    stations.sort_unstable();
    stations.dedup();
    match &filter.station {
        Some(s) => periods.retain(|p| p.station.as_deref() == Some(s.as_str())),
        None if stations.len() > 1 => {
            return Err(CliError::Config(format!(
                "{} holds {} stations; choose one with --station",
                path.display(),
                stations.len()
            )))
        }
        None => {}
    }
    if filter.exclude_flagged {
        periods.retain(|p| !p.flagged);
    }
    if periods.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no wet periods left to analyse",
            path.display()
        )));
    }
    resolved.insert("periods".into(), json!(periods.len()));
    Ok(periods)
}

/// The negative binomial shape: given, or fitted to the durations.
fn resolve_r(given: Option<f64>, periods: &[WetPeriod], opts: &MleOptions, resolved: &mut Resolved) -> CliResult<f64> {
    if let Some(r) = given {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::Config(format!("r must be positive, got {r}")));
        }
        resolved.insert("r".into(), json!(r));
        resolved.insert("r_source".into(), json!("given"));
        return Ok(r);
    }
    let durations: Vec<u32> = periods.iter().map(|p| p.duration).collect();
    let nb = fitting::fit_negbin::<f64>(&durations, opts)?;
    let source = if nb.fallback { "negbin_moments" } else { "negbin_mle" };
    if nb.fallback {
        warn!("negative binomial MLE failed; using the method-of-moments shape");
    }
    resolved.insert("r".into(), json!(nb.params.r()));
    resolved.insert("r_source".into(), json!(source));
    resolved.insert("negbin_p".into(), json!(nb.params.p()));
    Ok(nb.params.r())
}

fn segment(a: &SegmentArgs) -> CliResult<Run> {
    io::expect_format(&a.output, &[Format::Json, Format::Csv])?;
    let series = read_daily_csv(io::open(&a.input)?)?;
    let mut periods = Vec::new();
    for s in &series {
        let p = extract_wet_periods(s, a.wet_threshold, a.missing.into())?;
        info!(
            "{}: {} days, {} wet periods",
            s.station().unwrap_or("series"),
            s.len(),
            p.len()
        );
        periods.extend(p);
    }
    io::write_periods(&a.output, &periods)?;
    let mut resolved = Resolved::new();
    resolved.insert("wet_threshold".into(), json!(a.wet_threshold));
    resolved.insert("missing".into(), json!(a.missing));
    resolved.insert("stations".into(), json!(series.len()));
    resolved.insert("periods".into(), json!(periods.len()));
    resolved.insert("flagged".into(), json!(periods.iter().filter(|p| p.flagged).count()));
    Ok(Run {
        inputs: vec![a.input.clone()],
        outputs: vec![a.output.clone()],
        resolved,
        manifest: sidecar(&a.output),
    })
}

fn fit(a: &FitArgs) -> CliResult<Run> {
    let mut resolved = Resolved::new();
    let periods = load_periods(&a.periods, &a.filter, &mut resolved)?;
    let q = orders(&a.quantiles)?;
    let opts = MleOptions {
        min_samples: a.min_samples,
        ..MleOptions::default()
    };
    resolved.insert("quantile_orders".into(), json!(q));
    if a.table {
        io::expect_format(&a.output, &[Format::Csv])?;
        let r = resolve_r(a.r, &periods, &opts, &mut resolved)?;
        let rows = fitting::fit_table(&periods, r, q, &TABLE_MIN_DURATIONS)?;
        resolved.insert("min_durations".into(), json!(TABLE_MIN_DURATIONS));
        io::write_csv(&a.output, &rows)?;
    } else {
        io::expect_format(&a.output, &[Format::Json])?;
        let model = ModelKind::from(a.model);
        let r = match model {
            ModelKind::TemperedSfQuantile | ModelKind::TemperedSfLs => {
                Some(resolve_r(a.r, &periods, &opts, &mut resolved)?)
            }
            _ => None,
        };
        let report = fitting::fit_report(model, &periods, a.min_duration, r, q, &opts)?;
        if report.fallback {
            warn!("maximum likelihood failed; reporting the method-of-moments fit");
        }
        info!(
            "{:?} on {} periods: discrepancy {}",
            model, report.sample_size, report.discrepancy
        );
        resolved.insert("min_duration".into(), json!(report.censor_min_duration));
        io::write_json(&a.output, &report)?;
    }
    Ok(Run {
        inputs: vec![a.periods.clone()],
        outputs: vec![a.output.clone()],
        resolved,
        manifest: sidecar(&a.output),
    })
}

#[derive(Serialize)]
struct ThresholdRow {
    epsilon: f64,
    level: f64,
    threshold: f64,
}

fn tempered_params(
    a: &TestDailyArgs,
    periods: &[WetPeriod],
    resolved: &mut Resolved,
) -> CliResult<TemperedSFParams<f64>> {
    if let Some(path) = &a.fit {
        let report: FitReport<f64> = io::read_json(path)?;
        let FittedParams::TemperedSf(p) = report.params else {
            return Err(CliError::Config(format!(
                "{}: holds a {:?} fit, not a tempered Snedecor-Fisher one",
                path.display(),
                report.model
            )));
        };
        resolved.insert("params_source".into(), json!("fit_file"));
        return Ok(p);
    }
    let opts = MleOptions::default();
    let r = resolve_r(a.r, periods, &opts, resolved)?;
    if let (Some(lambda), Some(gamma)) = (a.lambda, a.gamma) {
        resolved.insert("params_source".into(), json!("given"));
        return Ok(TemperedSFParams::new(r, lambda, gamma)?);
    }
    let model = ModelKind::from(a.model);
    if !matches!(model, ModelKind::TemperedSfQuantile | ModelKind::TemperedSfLs) {
        return Err(CliError::Config(
            "the daily test needs --model tsf-quantile or tsf-ls".into(),
        ));
    }
    let q = orders(&a.quantiles)?;
    let report = fitting::fit_report(model, periods, a.min_duration, Some(r), q, &opts)?;
    resolved.insert("params_source".into(), json!(model));
    resolved.insert("min_duration".into(), json!(report.censor_min_duration));
    if model == ModelKind::TemperedSfQuantile {
        resolved.insert("quantile_orders".into(), json!(q));
    }
    match report.params {
        FittedParams::TemperedSf(p) => Ok(p),
        _ => unreachable!("tempered model"),
    }
}

fn test_daily(a: &TestDailyArgs) -> CliResult<Run> {
    io::expect_format(&a.output, &[Format::Jsonl, Format::Csv])?;
    let thresholds_path = a
        .thresholds
        .clone()
        .unwrap_or_else(|| a.output.with_extension("thresholds.csv"));
    io::expect_format(&thresholds_path, &[Format::Csv])?;
    let eps: Vec<f64> = a.epsilon.iter().map(|&e| check_epsilon(e)).collect::<CliResult<_>>()?;
    if eps.is_empty() {
        return Err(CliError::Config("need at least one significance level".into()));
    }
    let mut resolved = Resolved::new();
    let periods = load_periods(&a.periods, &a.filter, &mut resolved)?;
    let params = tempered_params(a, &periods, &mut resolved)?;
    resolved.insert("params".into(), json!(params));
    resolved.insert("epsilon".into(), json!(eps));

    let mut records = Vec::with_capacity(periods.len() * eps.len());
    for p in &periods {
        for &e in &eps {
            records.push(VerdictRecord::new(
                p.start_date,
                &daily_max_test(p.max_daily, &params, e)?,
            ));
        }
    }
    let rows = eps
        .iter()
        .map(|&e| {
            Ok(ThresholdRow {
                epsilon: e,
                level: 1.0 - e,
                threshold: params.quantile(1.0 - e)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    for (row, &e) in rows.iter().zip(&eps) {
        let n = records.iter().filter(|r| r.epsilon == e && r.reject).count();
        info!(
            "epsilon {e}: threshold {}, {n} of {} periods rejected",
            row.threshold,
            periods.len()
        );
    }
    io::write_records(&a.output, &records)?;
    io::write_csv(&thresholds_path, &rows)?;

    let mut inputs = vec![a.periods.clone()];
    inputs.extend(a.fit.clone());
    Ok(Run {
        inputs,
        outputs: vec![a.output.clone(), thresholds_path],
        resolved,
        manifest: sidecar(&a.output),
    })
}

fn scan(a: &ScanArgs) -> CliResult<Run> {
    io::expect_format(&a.output, &[Format::Jsonl, Format::Csv])?;
    let eps = check_epsilon(a.epsilon)?;
    let mut resolved = Resolved::new();
    let periods = load_periods(&a.periods, &a.filter, &mut resolved)?;
    let m = match a.m {
        Some(m) => m,
        None => {
            let days = a.horizon_days.unwrap_or(DEFAULT_HORIZON_DAYS);
            let gap = mean_inter_onset_gap(&periods)?;
            resolved.insert("horizon_days".into(), json!(days));
            resolved.insert("mean_gap".into(), json!(gap));
            horizon_to_m(days, gap)
        }
    };
    if m < 2 {
        return Err(CliError::Config(format!("window width must be at least 2, got {m}")));
    }
    resolved.insert("m".into(), json!(m));
    resolved.insert("epsilon".into(), json!(eps));
    resolved.insert("target".into(), json!(a.target));
    let r = resolve_r(a.r, &periods, &MleOptions::default(), &mut resolved)?;
    let volumes: Vec<f64> = periods.iter().map(|p| p.total).collect();
    let verdicts = moving_scan(&volumes, m, r, eps, a.target.into())?;
    let counts = nested_counts(&verdicts);
    info!(
        "m = {m}: regular {}, relative {}, intermediate {}, absolute {}",
        counts[0], counts[1], counts[2], counts[3]
    );
    resolved.insert("nested_counts".into(), json!(counts));
    io::write_records(&a.output, &scan_records(&periods, &verdicts))?;
    Ok(Run {
        inputs: vec![a.periods.clone()],
        outputs: vec![a.output.clone()],
        resolved,
        manifest: sidecar(&a.output),
    })
}

#[derive(Serialize)]
struct LlnRow {
    n: u64,
    trials: usize,
    ks: f64,
    ks_critical_99: f64,
}

#[derive(Serialize)]
struct MaxDailyRow {
    trials: usize,
    r: f64,
    lambda: f64,
    gamma: f64,
    ks: f64,
    ks_critical_99: f64,
}

#[derive(Serialize)]
struct CalibrationRow {
    test: StatisticName,
    m: usize,
    l: usize,
    r: f64,
    epsilon: f64,
    trials: usize,
    rejection_rate: f64,
    band_low: f64,
    band_high: f64,
    within_band: bool,
}

fn simulate(a: &SimulateArgs, cli_seed: Option<u64>) -> CliResult<Run> {
    let mut cfg: SimConfig = io::read_config(&a.config)?;
    if cfg.lln.is_none() && cfg.max_daily.is_none() && cfg.frechet.is_none() && cfg.calibration.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no experiment configured",
            a.config.display()
        )));
    }
    cfg.seed = cli_seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let (seed, trials) = (cfg.seed, cfg.trials);
    let crit = simulate::ks_critical_99(trials);
    let mut outputs = Vec::new();

    if let Some(lln) = &cfg.lln {
        let rows: Vec<LlnRow> = simulate::verify_lln_negbin_sums(lln, &cfg.n_grid, trials, seed)?
            .into_iter()
            .map(|p| LlnRow {
                n: p.n,
                trials,
                ks: p.ks,
                ks_critical_99: crit,
            })
            .collect();
        outputs.push(write_into(&a.output_dir, "lln.csv", &rows)?);
    }
    if let Some(params) = &cfg.max_daily {
        let ks = simulate::verify_max_daily_law(params, trials, seed)?;
        let row = MaxDailyRow {
            trials,
            r: params.r(),
            lambda: params.lambda(),
            gamma: params.gamma(),
            ks,
            ks_critical_99: crit,
        };
        outputs.push(write_into(&a.output_dir, "max_daily.csv", &[row])?);
    }
    if let Some(f) = &cfg.frechet {
        let points = simulate::verify_frechet_limit(f.r1, f.c, f.gamma, &f.m_grid)?;
        outputs.push(write_into(&a.output_dir, "frechet.csv", &points)?);
    }
    if !cfg.calibration.is_empty() {
        let rows = cfg
            .calibration
            .iter()
            .map(|c| {
                let rate = simulate::calibrate_test(c.test, c.m, c.l, c.r, c.epsilon, trials, seed)?;
                let (lo, hi) = simulate::binomial_band(c.epsilon, trials);
                Ok(CalibrationRow {
                    test: c.test,
                    m: c.m,
                    l: c.l,
                    r: c.r,
                    epsilon: c.epsilon,
                    trials,
                    rejection_rate: rate,
                    band_low: lo,
                    band_high: hi,
                    within_band: lo <= rate && rate <= hi,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        outputs.push(write_into(&a.output_dir, "calibration.csv", &rows)?);
    }

    let mut resolved = Resolved::new();
    resolved.insert("seed".into(), json!(seed));
    resolved.insert("trials".into(), json!(trials));
    resolved.insert(
        "config".into(),
        serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?,
    );
    Ok(Run {
        inputs: vec![a.config.clone()],
        outputs,
        resolved,
        manifest: a.output_dir.join(crate::manifest::MANIFEST_SUFFIX),
    })
}

fn write_into<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    io::write_csv(&path, rows)?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn synth(a: &SynthArgs, seed: u64) -> CliResult<Run> {
    io::expect_format(&a.output, &[Format::Csv])?;
    let cfg: SeriesConfig = io::read_config(&a.config)?;
    let series = simulate::synthetic_series(&cfg, seed)?;
    let rows: Vec<(String, String)> = series
        .records()
        .iter()
        .map(|r| {
            (
                r.date.to_string(),
                r.precip.map(|v| v.to_string()).unwrap_or_else(|| "NA".into()),
            )
        })
        .collect();
    #[derive(Serialize)]
    struct Day<'a> {
        date: &'a str,
        precip_mm: &'a str,
    }
    let days: Vec<Day> = rows.iter().map(|(d, p)| Day { date: d, precip_mm: p }).collect();
    io::write_csv(&a.output, &days)?;
    let mut resolved = Resolved::new();
    resolved.insert("days".into(), json!(series.len()));
    Ok(Run {
        inputs: vec![a.config.clone()],
        outputs: vec![a.output.clone()],
        resolved,
        manifest: sidecar(&a.output),
    })
}

fn replay(a: &ReplayArgs) -> CliResult<()> {
    let recorded: RunManifest = io::read_json(&a.manifest)?;
    if recorded.version != env!("CARGO_PKG_VERSION") {
        warn!(
            "manifest written by version {}, replaying with {}",
            recorded.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    for input in &recorded.inputs {
        let now = FileDigest::of(&input.path)?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Mismatch(format!(
                "input {} changed since the recorded run",
                input.path.display()
            )));
        }
    }
    let mut cmd = recorded.args.clone();
    if matches!(cmd, Command::Replay(_)) {
        return Err(CliError::Config("a replay manifest cannot itself be replayed".into()));
    }
    std::fs::create_dir_all(&a.output_dir).map_err(|e| CliError::io(&a.output_dir, e))?;
    let dir = std::path::absolute(&a.output_dir).map_err(|e| CliError::io(&a.output_dir, e))?;
    cmd.redirect(&dir);
    let ctx = Context {
        seed: Some(recorded.seed),
        threads: 1,
    };
    let manifest_path = execute(&cmd, ctx)?.expect("not a replay");
    let replayed: RunManifest = io::read_json(&manifest_path)?;

    let mut differing = Vec::new();
    for old in &recorded.outputs {
        let name = old.path.file_name();
        match replayed.outputs.iter().find(|n| n.path.file_name() == name) {
            Some(new) if new.sha256 == old.sha256 => {}
            Some(_) => differing.push(format!("{} differs", old.path.display())),
            None => differing.push(format!("{} was not produced", old.path.display())),
        }
    }
    if replayed.outputs.len() != recorded.outputs.len() {
        differing.push(format!(
            "{} outputs recorded, {} replayed",
            recorded.outputs.len(),
            replayed.outputs.len()
        ));
    }
    if !differing.is_empty() {
        return Err(CliError::Mismatch(differing.join("; ")));
    }
    println!(
        "{} outputs replayed bit-identically into {}",
        recorded.outputs.len(),
        dir.display()
    );
    Ok(())
}
