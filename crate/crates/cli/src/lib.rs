//! Command-line front end: scenario loading, dispatch and rendering.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 usage error,
//! 3 scenario/config error, 4 computation error, 5 I/O error.

pub mod args;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;

use mrwlan_core::oracle::compare_with_closed_form;
use mrwlan_core::state::{enumerate_states, DEFAULT_STATE_BUDGET};
use mrwlan_core::{
    analyze, event_probabilities, parse_scenarios, throughput_sweep, AnalysisOptions,
    AttemptProbTable, DelayedAckModel, MixProbabilities, PhyParams64, ScenarioConfig,
};
use mrwlan_sim::{run_simulation, run_simulation_traced, SimConfig, SimError, SimResult};

use args::{
    AckModelArg, AnalyzeArgs, Cli, Command, ModelArgs, SimArgs, SimulateArgs, SweepArgs,
    VerifyArgs, SCENARIO_DIR_ENV,
};
use output::{write_rows, write_sweep, ComparisonRow, SimRow, SweepRow, VerifyRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Oracle power-iteration tolerance.
const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Compute(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Compute(_) => EXIT_COMPUTE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Compute(m) | CliError::Io(m) => m,
        }
    }
}

impl From<mrwlan_core::Error> for CliError {
    fn from(e: mrwlan_core::Error) -> Self {
        use mrwlan_core::Error as E;
        match e {
            E::Parse(_)
            | E::InvalidScenario(_)
            | E::InvalidParameter(_)
            | E::TruncationTooLarge(_)
            | E::StateBudget { .. } => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => CliError::Config(e.to_string()),
            SimError::Model(m) => m.into(),
            SimError::Trace(_) => CliError::Io(e.to_string()),
            SimError::SaturationLost { .. } => CliError::Compute(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, stdout),
        Command::Simulate(a) => cmd_simulate(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
        Command::Sweep(a) => cmd_sweep(&a, stdout),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "mrwlan: {}", e.message());
            e.exit_code()
        }
    };
    if stdout.flush().is_err() && code == EXIT_OK {
        return EXIT_IO;
    }
    code
}

/// Candidate locations for a scenario argument, in lookup order.
pub fn scenario_candidates(name: &str, env_dir: Option<&Path>) -> Vec<PathBuf> {
    let given = PathBuf::from(name);
    let mut out = vec![given.clone()];
    if given.is_absolute() {
        return out;
    }
    let mut dirs: Vec<PathBuf> = env_dir.map(Path::to_path_buf).into_iter().collect();
    dirs.push(PathBuf::from("scenarios"));
    for dir in dirs {
        out.push(dir.join(name));
        if given.extension().is_none() {
            out.push(dir.join(format!("{name}.toml")));
        }
    }
    out
}

fn read_scenario_text(name: &str) -> CliResult<(String, String)> {
    if name == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return Ok(("stdin".into(), text));
    }
    let env_dir = std::env::var_os(SCENARIO_DIR_ENV).map(PathBuf::from);
    let candidates = scenario_candidates(name, env_dir.as_deref());
    for path in &candidates {
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            return Ok((path.display().to_string(), text));
        }
    }
    Err(CliError::Config(format!(
        "scenario `{name}` not found (looked in: {})",
        candidates
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Loads every scenario named on the command line, in order.
pub fn load_scenarios(names: &[String]) -> CliResult<Vec<ScenarioConfig>> {
    let mut all = Vec::new();
    for name in names {
        let (origin, text) = read_scenario_text(name)?;
        let parsed =
            parse_scenarios(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        all.extend(parsed);
    }
    Ok(all)
}

fn ack_model(a: AckModelArg) -> DelayedAckModel {
    match a {
        AckModelArg::PerPacket => DelayedAckModel::PerPacket,
        AckModelArg::Literal => DelayedAckModel::Literal,
    }
}

fn analysis_options(m: &ModelArgs) -> AnalysisOptions {
    AnalysisOptions {
        n_max: m.n_max,
        ack_model: ack_model(m.ack_model),
        retry_limit: m.retry_limit,
        collision_uses_rts_length: m.collision_uses_rts_length,
        ..AnalysisOptions::default()
    }
}

fn sim_config(s: &ScenarioConfig, a: &SimArgs, retry_limit: u32, rts: bool) -> SimConfig {
    SimConfig {
        seed: a.seed,
        sim_duration: a.duration,
        warmup: a.warmup,
        tcp_window: a.window,
        retry_limit,
        collision_uses_rts_length: rts,
        ..SimConfig::new(s.clone(), a.seed)
    }
}

fn comparison_row(
    s: &ScenarioConfig,
    a: &AnalyzeArgs,
    opts: &AnalysisOptions,
) -> CliResult<ComparisonRow> {
    let rep = analyze(s, opts)?;
    let mut row = ComparisonRow {
        label: s.label.clone(),
        standard: s.standard.name().into(),
        d: s.d,
        stations: s.total_stations(),
        analysis_mbps: rep.phi_mbps,
        packets_per_s: rep.phi_packets_per_s,
        captured_mass: rep.captured_mass,
        n_max: rep.n_max,
        oracle_l1: None,
        simulation_mbps: None,
        ci_halfwidth_mbps: None,
        error_percent: None,
    };
    if a.verify {
        let p = MixProbabilities::from_counts(&s.counts())?;
        let cmp = compare_with_closed_form(
            &p,
            s.d,
            opts.ack_model,
            a.oracle_n_max,
            DEFAULT_STATE_BUDGET,
            ORACLE_TOL,
        )?;
        row.oracle_l1 = Some(cmp.l1_distance);
    }
    if a.simulate {
        let r = run_simulation(&sim_config(
            s,
            &a.sim,
            opts.retry_limit,
            opts.collision_uses_rts_length,
        ))?;
        row.set_simulation(r.aggregate_mbps, r.ci_halfwidth_mbps);
    }
    Ok(row)
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<i32> {
    let scenarios = load_scenarios(&a.common.scenarios)?;
    let opts = analysis_options(&a.model);
    if let Some(spec) = &a.sweep {
        return sweep(&scenarios, spec, &opts, a.common.format, out);
    }
    let rows: Vec<ComparisonRow> = scenarios
        .par_iter()
        .map(|s| comparison_row(s, a, &opts))
        .collect::<CliResult<_>>()?;
    write_rows(out, &rows, a.common.format)?;
    Ok(EXIT_OK)
}

fn sim_row(r: &SimResult) -> SimRow {
    SimRow {
        label: r.label.clone(),
        seed: r.seed,
        aggregate_mbps: r.aggregate_mbps,
        ci_halfwidth_mbps: r.ci_halfwidth_mbps,
        min_sta_mbps: r.per_sta_mbps.iter().copied().fold(f64::INFINITY, f64::min),
        max_sta_mbps: r.per_sta_mbps.iter().copied().fold(0.0, f64::max),
        collision_fraction: r.collision_fraction,
        mean_nonempty_stas: r.mean_nonempty_stas,
        sim_time_s: r.counters.sim_time,
    }
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let scenarios = load_scenarios(&a.common.scenarios)?;
    let cfgs: Vec<SimConfig> = scenarios
        .iter()
        .map(|s| sim_config(s, &a.sim, a.retry_limit, a.collision_uses_rts_length))
        .collect();
    let results: Vec<SimResult> = match &a.trace {
        Some(path) => {
            if cfgs.len() != 1 {
                return Err(CliError::Usage(format!(
                    "--trace needs exactly one scenario, got {}",
                    cfgs.len()
                )));
            }
            let file =
                File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            let r = run_simulation_traced(&cfgs[0], &mut w)?;
            w.flush()?;
            vec![r]
        }
        None => cfgs
            .par_iter()
            .map(run_simulation)
            .collect::<Result<_, _>>()?,
    };
    let rows: Vec<SimRow> = results.iter().map(sim_row).collect();
    write_rows(out, &rows, a.common.format)?;
    Ok(EXIT_OK)
}

/// Largest deviation of the slot-event probabilities from a distribution,
/// over every state with at most `n_max` backlogged stations.
pub fn identity_max_error(s: &ScenarioConfig, n_max: usize) -> CliResult<f64> {
    let p = MixProbabilities::<f64>::from_counts(&s.counts())?;
    let bp = PhyParams64::standard(s.standard).backoff(mrwlan_core::DEFAULT_RETRY_LIMIT)?;
    let betas = AttemptProbTable::<f64>::build(n_max + 1, &bp)?;
    let mut worst = 0.0f64;
    for state in enumerate_states(p.k(), n_max, DEFAULT_STATE_BUDGET)? {
        let beta = betas.get(state.total() as usize + 1);
        let e = event_probabilities(state.counts(), &p, beta)?;
        worst = worst.max((e.total() - 1.0).abs());
    }
    Ok(worst)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<i32> {
    let scenarios = load_scenarios(&a.common.scenarios)?;
    let model = ack_model(a.ack_model);
    let rows: Vec<VerifyRow> = scenarios
        .par_iter()
        .map(|s| {
            let p = MixProbabilities::from_counts(&s.counts())?;
            let cmp = compare_with_closed_form(
                &p,
                s.d,
                model,
                a.n_max,
                DEFAULT_STATE_BUDGET,
                ORACLE_TOL,
            )?;
            let identity = identity_max_error(s, a.n_max)?;
            Ok(VerifyRow {
                label: s.label.clone(),
                d: s.d,
                n_max: a.n_max,
                states: cmp.states,
                oracle_l1: cmp.l1_distance,
                identity_max_error: identity,
                pass: cmp.l1_distance < a.tolerance && identity < 1e-12,
            })
        })
        .collect::<CliResult<_>>()?;
    write_rows(out, &rows, a.common.format)?;
    Ok(if rows.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

fn sweep(
    scenarios: &[ScenarioConfig],
    spec: &args::SweepSpec,
    opts: &AnalysisOptions,
    format: args::Format,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let per: Vec<Vec<SweepRow>> = scenarios
        .par_iter()
        .map(|s| {
            let reports = throughput_sweep::<f64>(s, &spec.axis, opts)?;
            Ok(reports
                .iter()
                .zip(&spec.values)
                .map(|(r, v)| SweepRow {
                    label: s.label.clone(),
                    axis: spec.name.into(),
                    value: v.clone(),
                    analysis_mbps: r.phi_mbps,
                    captured_mass: r.captured_mass,
                    n_max: r.n_max,
                })
                .collect())
        })
        .collect::<CliResult<_>>()?;
    let rows: Vec<SweepRow> = per.into_iter().flatten().collect();
    write_sweep(out, &rows, format)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CliResult<i32> {
    let scenarios = load_scenarios(&a.common.scenarios)?;
    sweep(
        &scenarios,
        &a.sweep,
        &analysis_options(&a.model),
        a.common.format,
        out,
    )
}
