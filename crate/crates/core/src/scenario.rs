//! Scenario description and its TOML document format.
//!
//! ```toml
//! label = "11b-d1-row1"
//! standard = "802.11b"
//! d = 1
//! classes = [
//!     { rate_mbps = 11, stations = 2 },
//!     { rate_mbps = 5.5, stations = 3 },
//! ]
//! ```
//!
//! A file may instead hold several `[[scenario]]` tables with the same keys.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::phy::{RateClass, Standard};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub label: String,
    pub standard: Standard,
    /// Rate classes, strictly descending in rate.
    pub classes: Vec<RateClass>,
    /// Delayed-ACK factor: one TCP ACK per `d` data packets.
    pub d: u32,
    pub n_max: Option<usize>,
}

impl ScenarioConfig {
    /// Validates and canonicalises (sorts classes fastest first).
    pub fn new(
        label: impl Into<String>,
        standard: Standard,
        mut classes: Vec<RateClass>,
        d: u32,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidScenario(
                "at least one rate class is required".into(),
            ));
        }
        if d == 0 {
            return Err(Error::InvalidScenario(
                "delayed-ACK factor d must be >= 1".into(),
            ));
        }
        for c in &classes {
            if !(c.rate > 0.0 && c.rate.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "rate {} bit/s is not positive",
                    c.rate
                )));
            }
            if c.stations == 0 {
                return Err(Error::InvalidScenario(format!(
                    "class at {} Mbit/s needs a positive station count",
                    c.rate / 1e6
                )));
            }
        }
        classes.sort_by(|a, b| b.rate.total_cmp(&a.rate));
        if let Some(w) = classes.windows(2).find(|w| w[0].rate == w[1].rate) {
            return Err(Error::InvalidScenario(format!(
                "duplicate rate {} Mbit/s",
                w[0].rate / 1e6
            )));
        }
        Ok(Self {
            label: label.into(),
            standard,
            classes,
            d,
            n_max: None,
        })
    }

    pub fn with_n_max(mut self, n_max: Option<usize>) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_d(mut self, d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidScenario(
                "delayed-ACK factor d must be >= 1".into(),
            ));
        }
        self.d = d;
        Ok(self)
    }

    /// Replaces station counts class by class; classes set to zero are dropped.
    pub fn with_counts(&self, counts: &[u32]) -> Result<Self> {
        if counts.len() != self.classes.len() {
            return Err(Error::InvalidScenario(format!(
                "expected {} counts, got {}",
                self.classes.len(),
                counts.len()
            )));
        }
        let classes = self
            .classes
            .iter()
            .zip(counts)
            .filter(|(_, &m)| m > 0)
            .map(|(c, &m)| RateClass::new(c.rate, m))
            .collect();
        Ok(Self::new(self.label.clone(), self.standard, classes, self.d)?.with_n_max(self.n_max))
    }

    /// `M`
    pub fn total_stations(&self) -> u32 {
        self.classes.iter().map(|c| c.stations).sum()
    }

    pub fn counts(&self) -> Vec<u32> {
        self.classes.iter().map(|c| c.stations).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.rate).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioDoc::from(self)).expect("scenario serialises to TOML")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    label: Option<String>,
    standard: Standard,
    #[serde(default = "one")]
    d: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<i64>,
    #[serde(default)]
    classes: Vec<ClassDoc>,
}

fn one() -> i64 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    #[serde(
        default,
        deserialize_with = "number",
        skip_serializing_if = "Option::is_none"
    )]
    rate_mbps: Option<f64>,
    #[serde(
        default,
        deserialize_with = "number",
        skip_serializing_if = "Option::is_none"
    )]
    rate_bps: Option<f64>,
    stations: i64,
}

// TOML keeps integers and floats apart; rates may be written either way.
fn number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        I(i64),
        F(f64),
    }
    Ok(Option::<Num>::deserialize(d)?.map(|n| match n {
        Num::I(i) => i as f64,
        Num::F(f) => f,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSetDoc {
    scenario: Vec<ScenarioDoc>,
}

impl From<&ScenarioConfig> for ScenarioDoc {
    fn from(c: &ScenarioConfig) -> Self {
        ScenarioDoc {
            label: Some(c.label.clone()),
            standard: c.standard,
            d: i64::from(c.d),
            n_max: c.n_max.map(|n| n as i64),
            classes: c
                .classes
                .iter()
                .map(|k| {
                    let mbps = k.rate / 1e6;
                    let exact = mbps * 1e6 == k.rate;
                    ClassDoc {
                        rate_mbps: exact.then_some(mbps),
                        rate_bps: (!exact).then_some(k.rate),
                        stations: i64::from(k.stations),
                    }
                })
                .collect(),
        }
    }
}

impl ScenarioDoc {
    fn into_config(self, fallback_label: &str) -> Result<ScenarioConfig> {
        let d = u32::try_from(self.d)
            .ok()
            .filter(|&d| d >= 1)
            .ok_or_else(|| {
                Error::InvalidScenario(format!("delayed-ACK factor d must be >= 1, got {}", self.d))
            })?;
        let n_max = self
            .n_max
            .map(|n| {
                usize::try_from(n)
                    .map_err(|_| Error::InvalidScenario(format!("n_max must be >= 0, got {n}")))
            })
            .transpose()?;
        let classes = self
            .classes
            .into_iter()
            .map(|c| {
                let rate = match (c.rate_mbps, c.rate_bps) {
                    (Some(m), None) => m * 1e6,
                    (None, Some(b)) => b,
                    _ => {
                        return Err(Error::InvalidScenario(
                            "each class needs exactly one of rate_mbps or rate_bps".into(),
                        ))
                    }
                };
                let stations = u32::try_from(c.stations)
                    .ok()
                    .filter(|&m| m > 0)
                    .ok_or_else(|| {
                        Error::InvalidScenario(format!(
                            "station count must be positive, got {}",
                            c.stations
                        ))
                    })?;
                Ok(RateClass::new(rate, stations))
            })
            .collect::<Result<Vec<_>>>()?;
        let label = self.label.unwrap_or_else(|| fallback_label.to_string());
        Ok(ScenarioConfig::new(label, self.standard, classes, d)?.with_n_max(n_max))
    }
}

fn parse_err(e: toml::de::Error) -> Error {
    Error::Parse(e.message().trim().to_string())
}

/// Parses a single-scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(parse_err)?;
    doc.into_config("scenario")
}

/// Parses either a single scenario or a list of `[[scenario]]` tables.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioConfig>> {
    let value: toml::Table = toml::from_str(text).map_err(parse_err)?;
    if value.contains_key("scenario") {
        let set: ScenarioSetDoc = toml::from_str(text).map_err(parse_err)?;
        if set.scenario.is_empty() {
            return Err(Error::InvalidScenario("scenario list is empty".into()));
        }
        set.scenario
            .into_iter()
            .enumerate()
            .map(|(i, doc)| doc.into_config(&format!("scenario-{}", i + 1)))
            .collect()
    } else {
        Ok(vec![parse_scenario(text)?])
    }
}
