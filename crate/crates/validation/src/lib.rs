//! Fixture scenarios and the reference throughputs they are checked against.
//!
//! The fixture files live in the workspace `scenarios/` directory. Each
//! reference value is the aggregate TCP throughput in Mbit/s published for
//! the corresponding row, once from the analytical model and once from a
//! packet-level simulator.

use std::path::PathBuf;

use mrwlan_core::{parse_scenarios, ScenarioConfig};

pub struct Fixture {
    pub file: &'static str,
    pub analysis_mbps: &'static [f64],
    pub simulation_mbps: &'static [f64],
}

pub const B_D1: Fixture = Fixture {
    file: "11b-d1",
    analysis_mbps: &[1.0569, 0.8397, 0.9167, 1.4667],
    simulation_mbps: &[1.0492, 0.8329, 0.9093, 1.4549],
};

pub const B_D2: Fixture = Fixture {
    file: "11b-d2",
    analysis_mbps: &[1.1221, 0.8889, 0.9715, 1.5647],
    simulation_mbps: &[1.1131, 0.8814, 0.9637, 1.5523],
};

pub const G_D1: Fixture = Fixture {
    file: "11g-d1",
    analysis_mbps: &[8.14, 8.16, 8.31, 10.22, 10.38, 12.27],
    simulation_mbps: &[8.18, 8.20, 8.32, 10.25, 10.41, 12.31],
};

/// Published with the same numbers as the d = 1 set, so only the scenarios
/// are used.
pub const G_D2_FILE: &str = "11g-d2";

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn load(file: &str) -> Vec<ScenarioConfig> {
    let path = scenarios_dir().join(format!("{file}.toml"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_scenarios(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn all_fixture_files() -> [&'static str; 4] {
    [B_D1.file, B_D2.file, G_D1.file, G_D2_FILE]
}
