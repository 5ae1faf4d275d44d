use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mrwlan_core::SweepAxis;

/// Environment variable naming the directory searched for scenario files.
pub const SCENARIO_DIR_ENV: &str = "MRWLAN_SCENARIO_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "mrwlan",
    version,
    about = "TCP download throughput of a multirate 802.11 access point",
    after_help = "Exit codes: 0 success, 1 verification mismatch, 2 usage error, \
                  3 scenario/config error, 4 computation error, 5 I/O error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical aggregate throughput, optionally checked against the
    /// oracle and the simulator.
    Analyze(AnalyzeArgs),
    /// Discrete-event simulation of each scenario.
    Simulate(SimulateArgs),
    /// Closed-form stationary law and slot-event identity checks.
    Verify(VerifyArgs),
    /// Analytical throughput along one parameter axis.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum AckModelArg {
    /// Each data packet triggers an ACK with probability 1/d.
    #[default]
    PerPacket,
    /// Balance equation with 1/d on the departure side.
    Literal,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario files (TOML). `-` reads standard input. Names not found
    /// relative to the working directory are looked up in
    /// $MRWLAN_SCENARIO_DIR, then in ./scenarios, with or without `.toml`.
    #[arg(required = true, value_name = "SCENARIO")]
    pub scenarios: Vec<String>,

    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Truncation level of the ACK-backlog distribution.
    #[arg(long)]
    pub n_max: Option<usize>,

    /// Time AP-involved collisions by the RTS length rather than the data ACK.
    #[arg(long)]
    pub collision_uses_rts_length: bool,

    #[arg(long, value_enum, default_value_t = AckModelArg::PerPacket)]
    pub ack_model: AckModelArg,

    /// Highest backoff stage.
    #[arg(long, default_value_t = mrwlan_core::DEFAULT_RETRY_LIMIT)]
    pub retry_limit: u32,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Simulated seconds.
    #[arg(long, default_value_t = mrwlan_sim::config::DEFAULT_DURATION_S)]
    pub duration: f64,

    /// Seconds excluded from statistics.
    #[arg(long, default_value_t = mrwlan_sim::config::DEFAULT_WARMUP_S)]
    pub warmup: f64,

    /// TCP window per station, packets.
    #[arg(long, default_value_t = mrwlan_sim::config::DEFAULT_WINDOW)]
    pub window: u32,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimArgs,

    /// Also solve the chain numerically and report its L1 gap to the closed form.
    #[arg(long)]
    pub verify: bool,

    /// Truncation used by --verify.
    #[arg(long, default_value_t = 12)]
    pub oracle_n_max: usize,

    /// Also simulate each scenario and report the relative error.
    #[arg(long)]
    pub simulate: bool,

    /// Sweep one axis instead: `d=1,2`, `n_max=30,40` or `counts=2/3/2/3,1/2/3/4`.
    #[arg(long, value_name = "AXIS=V1,V2,..", conflicts_with_all = ["verify", "simulate"])]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimArgs,

    #[arg(long)]
    pub collision_uses_rts_length: bool,

    #[arg(long, default_value_t = mrwlan_core::DEFAULT_RETRY_LIMIT)]
    pub retry_limit: u32,

    /// Write the event trace of a single scenario to this file.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,

    /// Truncation of the numerically solved chain.
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,

    #[arg(long, value_enum, default_value_t = AckModelArg::PerPacket)]
    pub ack_model: AckModelArg,

    /// Largest acceptable L1 gap.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,

    /// `d=1,2`, `n_max=30,40` or `counts=2/3/2/3,1/2/3/4`.
    #[arg(long, value_name = "AXIS=V1,V2,..")]
    pub sweep: SweepSpec,
}

/// Parsed `--sweep` value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: &'static str,
    pub values: Vec<String>,
    pub axis: SweepAxis,
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, list) = s
            .split_once('=')
            .ok_or_else(|| format!("expected AXIS=V1,V2,.. but got `{s}`"))?;
        let values: Vec<String> = list.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(format!("empty value in `{list}`"));
        }
        let num = |v: &String| {
            v.parse::<u64>()
                .map_err(|_| format!("`{v}` is not a non-negative integer"))
        };
        let (name, axis) = match key.trim() {
            "d" => (
                "d",
                SweepAxis::DelayedAck(
                    values
                        .iter()
                        .map(|v| num(v).and_then(|x| u32::try_from(x).map_err(|e| e.to_string())))
                        .collect::<Result<_, _>>()?,
                ),
            ),
            "n_max" | "n-max" => (
                "n_max",
                SweepAxis::NMax(
                    values
                        .iter()
                        .map(|v| num(v).map(|x| x as usize))
                        .collect::<Result<_, _>>()?,
                ),
            ),
            "counts" => (
                "counts",
                SweepAxis::Counts(
                    values
                        .iter()
                        .map(|v| {
                            v.split('/')
                                .map(|c| {
                                    c.trim()
                                        .parse::<u32>()
                                        .map_err(|_| format!("bad count `{c}` in `{v}`"))
                                })
                                .collect::<Result<Vec<u32>, _>>()
                        })
                        .collect::<Result<_, _>>()?,
                ),
            ),
            other => {
                return Err(format!(
                    "unknown sweep axis `{other}` (use d, n_max or counts)"
                ))
            }
        };
        Ok(Self { name, values, axis })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn sweep_specs() {
        let s: SweepSpec = "d=1,2".parse().unwrap();
        assert_eq!(s.axis, SweepAxis::DelayedAck(vec![1, 2]));
        let s: SweepSpec = "n-max=30, 40".parse().unwrap();
        assert_eq!(s.axis, SweepAxis::NMax(vec![30, 40]));
        assert_eq!(s.name, "n_max");
        let s: SweepSpec = "counts=2/3/2/3,1/2/3/4".parse().unwrap();
        assert_eq!(
            s.axis,
            SweepAxis::Counts(vec![vec![2, 3, 2, 3], vec![1, 2, 3, 4]])
        );
        assert!("d".parse::<SweepSpec>().is_err());
        assert!("rate=1".parse::<SweepSpec>().is_err());
        assert!("d=1,,2".parse::<SweepSpec>().is_err());
        assert!("d=-1".parse::<SweepSpec>().is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "mrwlan",
            "analyze",
            "a.toml",
            "--format=json",
            "--n-max",
            "40",
            "--simulate",
            "--seed",
            "7",
            "--duration",
            "20",
            "--window",
            "64",
            "--collision-uses-rts-length",
            "--verify",
        ])
        .unwrap();
        let Command::Analyze(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.common.format, Format::Json);
        assert_eq!(a.model.n_max, Some(40));
        assert!(a.simulate && a.verify && a.model.collision_uses_rts_length);
        assert_eq!((a.sim.seed, a.sim.duration, a.sim.window), (7, 20.0, 64));
        assert!(Cli::try_parse_from([
            "mrwlan",
            "analyze",
            "a.toml",
            "--sweep",
            "d=1,2",
            "--simulate"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["mrwlan", "analyze"]).is_err());
    }
}
