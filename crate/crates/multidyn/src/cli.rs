//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use multidyn_core::control::{run_baseline, run_scenario};
use multidyn_core::ident::{identify, IdentProblem};
use multidyn_core::perception::{
    active_uncurl_scan, apparent_period, contact_onset, current_shift, detect_contact, with_contact_link, ContactEvent,
    DetectorConfig,
};
use multidyn_core::scenario::{load_config, ScenarioConfig, ScenarioKind};
use multidyn_core::sizeest::{
    dataset_plan, default_diameters, default_wrap_config, holdout_evaluation, predict, run_sample, train_ensemble,
    EnsembleParams, Provenance, WrapSample,
};

use crate::csvlog::{fmt_num, measured_current, read_text, write_log, write_text, Table};
use crate::dataset::{lookup_entry, read_dataset, read_sample, write_dataset};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::model;
use crate::pool::{default_jobs, map_ordered};
use crate::report::{report, ReportInputs, ReportKind};

/// Root for default output directories (`$MULTIDYN_OUT/<command>`).
pub const OUT_ENV: &str = "MULTIDYN_OUT";
pub const DEFAULT_OUT_ROOT: &str = "multidyn-out";

#[derive(Debug, Parser)]
#[command(name = "multidyn", version, about = "Tendon-driven continuum robot simulation, perception and size estimation")]
pub struct Cli {
    /// More progress on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory, created if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config or dataset.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct Jobs {
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Jobs {
    fn get(&self) -> usize {
        self.jobs.unwrap_or_else(default_jobs).max(1)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its log.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario kind when no config is given.
        #[arg(long, default_value = "force-step")]
        scenario: String,
    },
    /// Fit (η, b_m, J_m) to a reference log.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Reference log; `i_real` is used when present, else `i_obs_dstar_0`.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Excitation config; defaults to the reference log's header.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 2000)]
        max_evals: usize,
    },
    /// Run the contact detector over a logged current.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: PathBuf,
        /// Column to watch; defaults to `i_real`, else `i_obs_dstar_filt_0`.
        #[arg(long)]
        column: Option<String>,
        /// Config whose detector thresholds override the log header.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Current shift of the same contact applied at several links.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jobs: Jobs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 8, 14, 20, 23])]
        links: Vec<usize>,
    },
    /// Apparent period of a periodic contact applied at several links.
    Period {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jobs: Jobs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 12, 23])]
        links: Vec<usize>,
    },
    /// Active uncurl scan against the contact in the config.
    Uncurl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate a labelled wrap dataset.
    GenDataset {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jobs: Jobs,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Cylinder diameters in mm.
        #[arg(long, value_delimiter = ',')]
        diameters: Option<Vec<f64>>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Train the stacked size estimator on a dataset directory.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Fold held out for the reported MAE and R².
        #[arg(long, default_value_t = 0)]
        holdout: usize,
    },
    /// Estimate the diameter of one sample.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Model file or the directory holding `model.json`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sample: PathBuf,
    },
    /// Plot data and summary numbers for a log or result table.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// force-step, extreme-curl, detection, sensitivity, period or size.
        #[arg(long)]
        kind: String,
        /// Baseline log drawn next to a force step.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Config whose detector thresholds override the log header.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Identify { .. } => "identify",
            Command::Detect { .. } => "detect",
            Command::Sensitivity { .. } => "sensitivity",
            Command::Period { .. } => "period",
            Command::Uncurl { .. } => "uncurl",
            Command::GenDataset { .. } => "gen-dataset",
            Command::Train { .. } => "train",
            Command::Predict { .. } => "predict",
            Command::Report { .. } => "report",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Identify { common, .. }
            | Command::Detect { common, .. }
            | Command::Sensitivity { common, .. }
            | Command::Period { common, .. }
            | Command::Uncurl { common, .. }
            | Command::GenDataset { common, .. }
            | Command::Train { common, .. }
            | Command::Predict { common, .. }
            | Command::Report { common, .. } => common,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Results go to stdout, errors to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(&cli, &argv) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx<'a> {
    out: PathBuf,
    seed: Option<u64>,
    verbose: u8,
    manifest: RunManifest,
    argv: &'a [String],
}

impl Ctx<'_> {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn out_dir(common: &Common, command: &str) -> PathBuf {
    match &common.out {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from);
            root.join(command)
        }
    }
}

/// Runs a parsed command; returns the lines to print.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Vec<String>> {
    let name = cli.command.name();
    let common = cli.command.common();
    let out = out_dir(common, name);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut ctx = Ctx { out, seed: common.seed, verbose: cli.verbose, manifest: RunManifest::new(name, argv), argv };
    let lines = match &cli.command {
        Command::Simulate { config, scenario, .. } => simulate(&mut ctx, config.as_deref(), scenario)?,
        Command::Identify { reference, config, starts, max_evals, .. } => {
            identify_cmd(&mut ctx, reference, config.as_deref(), *starts, *max_evals)?
        }
        Command::Detect { log, column, config, .. } => detect(&mut ctx, log, column.as_deref(), config.as_deref())?,
        Command::Sensitivity { jobs, config, links, .. } => sensitivity(&mut ctx, config.as_deref(), links, jobs.get())?,
        Command::Period { jobs, config, links, .. } => period(&mut ctx, config.as_deref(), links, jobs.get())?,
        Command::Uncurl { config, .. } => uncurl(&mut ctx, config.as_deref())?,
        Command::GenDataset { jobs, config, diameters, reps, .. } => {
            gen_dataset(&mut ctx, config.as_deref(), diameters.as_deref(), *reps, jobs.get())?
        }
        Command::Train { data, folds, holdout, .. } => train(&mut ctx, data, *folds, *holdout)?,
        Command::Predict { model, sample, .. } => predict_cmd(&mut ctx, model, sample)?,
        Command::Report { input, kind, baseline, config, .. } => {
            report_cmd(&mut ctx, input, kind, baseline.as_deref(), config.as_deref())?
        }
    };
    if ctx.manifest.seed.is_none() {
        ctx.manifest.seed = ctx.seed;
    }
    ctx.manifest.write(&ctx.out)?;
    debug_assert_eq!(ctx.manifest.args, ctx.argv);
    Ok(lines)
}

fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = read_text(path)?;
    load_config(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// `--config` if given, else the defaults of `kind`; `--seed` applied last.
fn resolve_config(ctx: &mut Ctx, path: Option<&Path>, kind: ScenarioKind) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => read_config(p)?,
        None => ScenarioConfig::new(kind),
    };
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    ctx.manifest.seed = Some(cfg.seed);
    ctx.manifest.config = Some(cfg.clone());
    Ok(cfg)
}

fn simulate(ctx: &mut Ctx, config: Option<&Path>, scenario: &str) -> Result<Vec<String>> {
    let kind = ScenarioKind::parse(scenario).ok_or_else(|| CliError::Usage(format!("unknown scenario `{scenario}`")))?;
    let cfg = resolve_config(ctx, config, kind)?;
    ctx.note(format!("simulating {} for {} s", cfg.kind.as_str(), cfg.duration));
    let log = run_scenario(&cfg)?;
    write_log(&ctx.path("log.csv"), &log)?;
    let mut lines = vec![format!("log = {}", ctx.path("log.csv").display()), format!("rows = {}", log.len())];
    if cfg.baseline {
        let base = run_baseline(&cfg)?;
        write_log(&ctx.path("baseline.csv"), &base)?;
        lines.push(format!("baseline = {}", ctx.path("baseline.csv").display()));
    }
    ctx.manifest.extra.push(("rows".into(), log.len().to_string()));
    Ok(lines)
}

fn identify_cmd(ctx: &mut Ctx, reference: &Path, config: Option<&Path>, starts: usize, max_evals: usize) -> Result<Vec<String>> {
    let table = Table::read(reference)?;
    table.require(&["t"])?;
    let (signal, current) = measured_current(&table, "i_obs_dstar_0")?;
    let mut cfg = match config {
        Some(p) => read_config(p)?,
        None => table
            .config()?
            .ok_or_else(|| CliError::config(format!("{}: no config header; pass --config", reference.display())))?,
    };
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    ctx.manifest.seed = Some(cfg.seed);
    ctx.manifest.config = Some(cfg.clone());
    let mut prob = IdentProblem::new(table.column("t").unwrap_or_default(), current, &cfg);
    prob.excitation = vec![cfg];
    prob.starts = starts;
    prob.max_evals = max_evals;
    ctx.note(format!("identifying from {} ({} samples, {starts} starts)", signal, prob.reference.len()));
    let res = identify(&prob)?;

    let mut trace = String::from("evaluation,best_so_far\n");
    for (k, v) in res.best_so_far.iter().enumerate() {
        trace.push_str(&format!("{},{}\n", k + 1, fmt_num(*v)));
    }
    write_text(&ctx.path("objective.csv"), &trace)?;
    let mut st = String::from("start,eta_0,b_m_0,j_m_0,eta,b_m,j_m,objective,evaluations\n");
    for (k, s) in res.starts.iter().enumerate() {
        let f = |p: [f64; 3]| p.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",");
        st.push_str(&format!("{k},{},{},{},{}\n", f(s.start), f(s.best), fmt_num(s.best_value), s.evaluations));
    }
    write_text(&ctx.path("starts.csv"), &st)?;
    let lines = vec![
        format!("signal = {signal}"),
        format!("eta = {}", fmt_num(res.p_star[0])),
        format!("b_m = {}", fmt_num(res.p_star[1])),
        format!("j_m = {}", fmt_num(res.p_star[2])),
        format!("objective = {}", fmt_num(res.objective)),
        format!("evaluations = {}", res.evaluations),
    ];
    write_text(&ctx.path("summary.txt"), &(lines.join("\n") + "\n"))?;
    Ok(lines)
}

fn events_csv(events: &[ContactEvent]) -> String {
    let mut s = String::from("time,rule,value,baseline\n");
    for e in events {
        s.push_str(&format!("{},{},{},{}\n", fmt_num(e.time), e.rule.as_str(), fmt_num(e.value), fmt_num(e.baseline)));
    }
    s
}

fn event_lines(events: &[ContactEvent]) -> Vec<String> {
    let mut lines = vec![format!("events = {}", events.len())];
    for e in events {
        lines.push(format!("event t = {} s rule = {}", fmt_num(e.time), e.rule.as_str()));
    }
    lines
}

fn detect(ctx: &mut Ctx, log: &Path, column: Option<&str>, config: Option<&Path>) -> Result<Vec<String>> {
    let table = Table::read(log)?;
    let (name, trace) = match column {
        Some(c) => {
            table.require(&[c])?;
            (c.to_string(), table.column(c).unwrap_or_default())
        }
        None => measured_current(&table, "i_obs_dstar_filt_0")?,
    };
    let dt = table.dt().filter(|d| *d > 0.0).ok_or_else(|| CliError::config("cannot tell the sample spacing"))?;
    let det: DetectorConfig = match config {
        Some(p) => read_config(p)?.detector,
        None => table.config()?.map(|c| c.detector).unwrap_or_default(),
    };
    ctx.note(format!("watching {name} at dt = {dt}"));
    let events = detect_contact(&trace, dt, &det)?;
    write_text(&ctx.path("events.csv"), &events_csv(&events))?;
    ctx.manifest.extra.push(("signal".into(), name));
    Ok(event_lines(&events))
}

fn sensitivity(ctx: &mut Ctx, config: Option<&Path>, links: &[usize], jobs: usize) -> Result<Vec<String>> {
    let cfg = resolve_config(ctx, config, ScenarioKind::SingleContact)?;
    let onset = contact_onset(&cfg.contact.kind);
    ctx.note(format!("{} runs on {jobs} workers", links.len()));
    let shifts = map_ordered(links, jobs, |&link| {
        let mut c = cfg.clone();
        c.contact.kind = with_contact_link(cfg.contact.kind, link);
        run_scenario(&c).map(|log| current_shift(&log, onset))
    })
    .into_iter()
    .collect::<std::result::Result<Vec<f64>, _>>()?;
    let mut csv = String::from("link,shift\n");
    for (l, s) in links.iter().zip(&shifts) {
        csv.push_str(&format!("{l},{}\n", fmt_num(*s)));
    }
    write_text(&ctx.path("sensitivity.csv"), &csv)?;
    let r = report(&Table::parse(&csv)?, ReportKind::Sensitivity, &ReportInputs::default())?;
    r.write(&ctx.out)?;
    let mut lines: Vec<String> = links.iter().zip(&shifts).map(|(l, s)| format!("link {l}: shift = {} A", fmt_num(*s))).collect();
    lines.extend(r.summary.iter().map(|(k, v)| format!("{k} = {v}")));
    Ok(lines)
}

fn period(ctx: &mut Ctx, config: Option<&Path>, links: &[usize], jobs: usize) -> Result<Vec<String>> {
    let cfg = resolve_config(ctx, config, ScenarioKind::PeriodicContact)?;
    let onset = contact_onset(&cfg.contact.kind);
    let traces = map_ordered(links, jobs, |&link| {
        let mut c = cfg.clone();
        c.contact.kind = with_contact_link(cfg.contact.kind, link);
        run_scenario(&c).map(|log| log.rows.iter().filter(|r| r.t >= onset).map(|r| (r.t, r.i_obs_dstar_filt[0])).collect::<Vec<_>>())
    })
    .into_iter()
    .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut csv = String::from("link,apparent_period\n");
    let mut tidy = String::from("series,t,value\n");
    let mut lines = Vec::new();
    for (l, tr) in links.iter().zip(&traces) {
        let values: Vec<f64> = tr.iter().map(|p| p.1).collect();
        let p = apparent_period(&values, cfg.dt).unwrap_or(f64::NAN);
        csv.push_str(&format!("{l},{}\n", fmt_num(p)));
        lines.push(format!("link {l}: apparent period = {} s", fmt_num(p)));
        for (t, v) in tr {
            tidy.push_str(&format!("link_{l},{},{}\n", fmt_num(*t), fmt_num(*v)));
        }
    }
    write_text(&ctx.path("period.csv"), &csv)?;
    write_text(&ctx.path("period_traces.csv"), &tidy)?;
    report(&Table::parse(&csv)?, ReportKind::Period, &ReportInputs::default())?.write(&ctx.out)?;
    Ok(lines)
}

fn uncurl(ctx: &mut Ctx, config: Option<&Path>) -> Result<Vec<String>> {
    let cfg = resolve_config(ctx, config, ScenarioKind::ActiveUncurl)?;
    let out = active_uncurl_scan(&cfg, &cfg.contact, &cfg.detector)?;
    write_log(&ctx.path("log.csv"), &out.log)?;
    let events: Vec<ContactEvent> = out.event.into_iter().collect();
    write_text(&ctx.path("events.csv"), &events_csv(&events))?;
    let mut lines = event_lines(&events);
    if let Some(tc) = out.first_contact {
        lines.push(format!("first_contact = {} s", fmt_num(tc)));
        if let Some(e) = events.first() {
            lines.push(format!("latency = {} ms", fmt_num((e.time - tc) * 1e3)));
        }
    }
    Ok(lines)
}

fn gen_dataset(ctx: &mut Ctx, config: Option<&Path>, diameters_mm: Option<&[f64]>, reps: usize, jobs: usize) -> Result<Vec<String>> {
    let mut base = match config {
        Some(p) => read_config(p)?,
        None => default_wrap_config(),
    };
    let seed = ctx.seed.unwrap_or(base.seed);
    base.seed = seed;
    ctx.manifest.seed = Some(seed);
    ctx.manifest.config = Some(base.clone());
    let diameters: Vec<f64> = match diameters_mm {
        Some(d) => d.iter().map(|v| v * 1e-3).collect(),
        None => default_diameters(),
    };
    let plan = dataset_plan(&diameters, reps, seed)?;
    ctx.note(format!("{} wrap runs on {jobs} workers", plan.len()));
    let results = map_ordered(&plan, jobs, |p| run_sample(&base, p));
    let mut samples = Vec::new();
    let mut failures = String::from("id,diameter,error\n");
    let mut failed = 0;
    for (p, r) in plan.iter().zip(results) {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => {
                failed += 1;
                eprintln!("warning: sample {} (diameter {} m) failed: {e}", p.id, fmt_num(p.diameter));
                failures.push_str(&format!("{},{},\"{e}\"\n", p.id, fmt_num(p.diameter)));
            }
        }
    }
    if samples.is_empty() {
        return Err(CliError::Numerical("every wrap run failed".into()));
    }
    write_dataset(&ctx.out, &samples)?;
    if failed > 0 {
        write_text(&ctx.path("failures.csv"), &failures)?;
    }
    ctx.manifest.extra.push(("samples".into(), samples.len().to_string()));
    ctx.manifest.extra.push(("reps".into(), reps.to_string()));
    Ok(vec![format!("samples = {}", samples.len()), format!("failed = {failed}"), format!("dataset = {}", ctx.out.display())])
}

fn train(ctx: &mut Ctx, data: &Path, folds: usize, holdout: usize) -> Result<Vec<String>> {
    let samples = read_dataset(data)?;
    let params = EnsembleParams { folds, seed: ctx.seed.unwrap_or(0), ..EnsembleParams::default() };
    ctx.manifest.seed = Some(params.seed);
    ctx.note(format!("training on {} samples", samples.len()));
    let m = train_ensemble(&samples, &params)?;
    model::save(&ctx.path(model::MODEL_FILE), &m)?;
    let h = holdout_evaluation(&samples, &params, holdout)?;
    let mut csv = String::from("id,y_true,y_pred\n");
    for ((id, y), p) in h.ids.iter().zip(&h.y_true).zip(&h.y_pred) {
        csv.push_str(&format!("{id},{},{}\n", fmt_num(*y), fmt_num(*p)));
    }
    write_text(&ctx.path("predictions.csv"), &csv)?;
    let mut per = String::from("diameter,mean_prediction\n");
    for (d, p) in &h.per_label {
        per.push_str(&format!("{},{}\n", fmt_num(*d), fmt_num(*p)));
    }
    write_text(&ctx.path("per_label.csv"), &per)?;
    report(&Table::parse(&csv)?, ReportKind::Size, &ReportInputs::default())?.write(&ctx.out)?;
    ctx.manifest.extra.push(("data".into(), data.display().to_string()));
    Ok(vec![
        format!("model = {}", ctx.path(model::MODEL_FILE).display()),
        format!("holdout_mae_mm = {}", fmt_num(h.metrics.mae * 1e3)),
        format!("holdout_r2 = {}", fmt_num(h.metrics.r2)),
    ])
}

/// Sample with its manifest label, or an unlabelled trace file with
/// `current`, `displacement` and `t` (or a `# dt` header).
fn load_sample(path: &Path) -> Result<(WrapSample, Option<f64>)> {
    if let Some(entry) = lookup_entry(path)? {
        let s = read_sample(path, &entry)?;
        return Ok((s, Some(entry.diameter)));
    }
    let t = Table::read(path)?;
    t.require(&["current", "displacement"])?;
    let dt = t.dt().filter(|d| *d > 0.0).ok_or_else(|| CliError::config("cannot tell the sample spacing"))?;
    let s = WrapSample {
        id: 0,
        // placeholder label, never read by the predictor
        diameter: 1.0,
        current: t.column("current").unwrap_or_default(),
        displacement: t.column("displacement").unwrap_or_default(),
        dt,
        seed: 0,
        provenance: Provenance::External,
    };
    Ok((s, None))
}

fn predict_cmd(ctx: &mut Ctx, model_path: &Path, sample: &Path) -> Result<Vec<String>> {
    let m = model::load(model_path)?;
    let (s, label) = load_sample(sample)?;
    let d = predict(&m, &s)?;
    let mut lines = vec![format!("predicted_diameter_mm = {}", fmt_num(d * 1e3))];
    lines.push(match label {
        Some(y) => format!("true_diameter_mm = {}", fmt_num(y * 1e3)),
        None => "true_diameter_mm = unknown".to_string(),
    });
    write_text(&ctx.path("prediction.txt"), &(lines.join("\n") + "\n"))?;
    ctx.manifest.extra.push(("model".into(), model_path.display().to_string()));
    ctx.manifest.extra.push(("sample".into(), sample.display().to_string()));
    Ok(lines)
}

fn report_cmd(ctx: &mut Ctx, input: &Path, kind: &str, baseline: Option<&Path>, config: Option<&Path>) -> Result<Vec<String>> {
    let kind = ReportKind::parse(kind).ok_or_else(|| CliError::Usage(format!("unknown report kind `{kind}`")))?;
    let table = Table::read(input)?;
    let base = baseline.map(Table::read).transpose()?;
    let detector = config.map(read_config).transpose()?.map(|c| c.detector);
    let r = report(&table, kind, &ReportInputs { baseline: base.as_ref(), detector })?;
    r.write(&ctx.out)?;
    ctx.manifest.extra.push(("input".into(), input.display().to_string()));
    Ok(r.summary.iter().map(|(k, v)| format!("{k} = {v}")).collect())
}
