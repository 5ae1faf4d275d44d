//! PHY/MAC timing constants and channel-occupancy durations.
//!
//! Lengths are kept in bytes and converted to bits where they are divided by a
//! rate. Times are in seconds and rates in bit/s.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::attempt::BackoffParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Supported 802.11 physical layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Standard {
    Dot11b,
    Dot11g,
}

impl Standard {
    /// PHY rates (Mbit/s) available to an associated station, fastest first.
    pub fn rates_mbps(self) -> &'static [f64] {
        match self {
            Standard::Dot11b => &[11.0, 5.5, 2.0, 1.0],
            Standard::Dot11g => &[54.0, 48.0, 36.0, 24.0, 18.0, 12.0, 6.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Standard::Dot11b => "802.11b",
            Standard::Dot11g => "802.11g",
        }
    }
}

impl fmt::Display for Standard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Standard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "802.11b" | "80211b" | "11b" | "b" => Ok(Standard::Dot11b),
            "802.11g" | "80211g" | "11g" | "g" => Ok(Standard::Dot11g),
            other => Err(Error::InvalidScenario(format!(
                "unknown standard {other:?} (expected 802.11b or 802.11g)"
            ))),
        }
    }
}

impl Serialize for Standard {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Standard {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Timing and frame-length constants of one PHY.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams<T> {
    pub max_phy_rate: T,
    /// Rate of RTS, CTS and the MAC ACK answering the AP's data frame.
    pub control_rate: T,
    pub preamble_time: T,
    pub phy_header_time: T,
    pub mac_header_bytes: u32,
    pub rts_bytes: u32,
    pub cts_bytes: u32,
    pub mac_ack_bytes: u32,
    pub ip_header_bytes: u32,
    pub tcp_header_bytes: u32,
    pub tcp_ack_bytes: u32,
    pub tcp_payload_bytes: u32,
    pub slot_time: T,
    pub difs: T,
    pub sifs: T,
    pub eifs: T,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Time AP-involved collisions by the RTS frame at the control rate
    /// instead of the TCP-ACK sized frame at the destination rate.
    pub collision_uses_rts_length: bool,
}

fn bits<T: Real>(bytes: u32) -> T {
    T::lit(8.0 * f64::from(bytes))
}

fn check_rate<T: Real>(rate: T) -> Result<()> {
    if rate > T::zero() && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRate(rate.to_f64_lossy()))
    }
}

impl<T: Real> PhyParams<T> {
    /// Parameter set used for the analysis of the given standard.
    ///
    /// 802.11g has no separate PLCP preamble entry; its 20 µs PHY overhead
    /// covers preamble and header, so `preamble_time` is zero.
    pub fn standard(standard: Standard) -> Self {
        let us = |x: f64| T::lit(x * 1e-6);
        let common =
            |max_rate: f64, control: f64, tp: f64, tphy: f64, slot: f64, difs: f64, cw_min| {
                PhyParams {
                    max_phy_rate: T::lit(max_rate),
                    control_rate: T::lit(control),
                    preamble_time: us(tp),
                    phy_header_time: us(tphy),
                    mac_header_bytes: 34,
                    rts_bytes: 20,
                    cts_bytes: 14,
                    mac_ack_bytes: 14,
                    ip_header_bytes: 20,
                    tcp_header_bytes: 20,
                    tcp_ack_bytes: 20,
                    tcp_payload_bytes: 1460,
                    slot_time: us(slot),
                    difs: us(difs),
                    sifs: us(10.0),
                    eifs: us(364.0),
                    cw_min,
                    cw_max: 1023,
                    collision_uses_rts_length: false,
                }
            };
        match standard {
            Standard::Dot11b => common(11e6, 2e6, 144.0, 48.0, 20.0, 50.0, 31),
            Standard::Dot11g => common(54e6, 6e6, 0.0, 20.0, 9.0, 28.0, 15),
        }
    }

    pub fn with_collision_uses_rts_length(mut self, on: bool) -> Self {
        self.collision_uses_rts_length = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_phy_rate", self.max_phy_rate),
            ("control_rate", self.control_rate),
            ("phy_header_time", self.phy_header_time),
            ("slot_time", self.slot_time),
            ("difs", self.difs),
            ("sifs", self.sifs),
            ("eifs", self.eifs),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.preamble_time.is_nan() || self.preamble_time < T::zero() {
            return Err(Error::InvalidParameter("preamble_time must be >= 0".into()));
        }
        if self.tcp_payload_bytes <= self.tcp_ack_bytes {
            return Err(Error::InvalidParameter(
                "TCP payload must be longer than a TCP ACK".into(),
            ));
        }
        self.backoff(0).map(|_| ())
    }

    /// Backoff parameters with the given retry limit.
    pub fn backoff(&self, retry_limit: u32) -> Result<BackoffParams> {
        BackoffParams::new(self.cw_min, self.cw_max, retry_limit)
    }

    fn phy_overhead(&self) -> T {
        self.preamble_time + self.phy_header_time
    }

    /// AP data delivery to a station at `rate`: RTS, CTS, DATA, ACK exchange
    /// followed by DIFS. Control frames go at the control rate.
    pub fn t_s_ap(&self, rate: T) -> Result<T> {
        check_rate(rate)?;
        let o = self.phy_overhead();
        let cc = self.control_rate;
        let data = self.mac_header_bytes
            + self.ip_header_bytes
            + self.tcp_header_bytes
            + self.tcp_payload_bytes;
        Ok(o + bits::<T>(self.rts_bytes) / cc
            + self.sifs
            + o
            + bits::<T>(self.cts_bytes) / cc
            + self.sifs
            + o
            + bits::<T>(data) / rate
            + self.sifs
            + o
            + bits::<T>(self.mac_ack_bytes) / cc
            + self.difs)
    }

    /// TCP-ACK delivery from a station at `rate` using basic access.
    pub fn t_s_sta(&self, rate: T) -> Result<T> {
        check_rate(rate)?;
        let o = self.phy_overhead();
        let frame = self.mac_header_bytes + self.ip_header_bytes + self.tcp_ack_bytes;
        Ok(o + bits::<T>(frame) / rate
            + self.sifs
            + o
            + bits::<T>(self.mac_ack_bytes) / rate
            + self.difs)
    }

    /// Collision involving the AP while it addresses a station at `rate`.
    pub fn t_c_ap(&self, rate: T) -> Result<T> {
        if self.collision_uses_rts_length {
            check_rate(rate)?;
            return Ok(self.phy_overhead()
                + bits::<T>(self.rts_bytes) / self.control_rate
                + self.eifs);
        }
        self.t_c_sta(rate)
    }

    /// Collision among stations whose slowest member uses `rate`.
    pub fn t_c_sta(&self, rate: T) -> Result<T> {
        check_rate(rate)?;
        let frame = self.mac_header_bytes + self.ip_header_bytes + self.tcp_ack_bytes;
        Ok(self.phy_overhead() + bits::<T>(frame) / rate + self.eifs)
    }

    /// All four occupancy durations for one rate.
    pub fn durations(&self, rate: T) -> Result<Durations<T>> {
        Ok(Durations {
            s_ap: self.t_s_ap(rate)?,
            c_ap: self.t_c_ap(rate)?,
            s_sta: self.t_s_sta(rate)?,
            c_sta: self.t_c_sta(rate)?,
        })
    }

    /// TCP payload carried by one AP data frame, in bits.
    pub fn payload_bits(&self) -> T {
        bits(self.tcp_payload_bytes)
    }
}

/// Channel occupancy of each event kind at one rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Durations<T> {
    pub s_ap: T,
    pub c_ap: T,
    pub s_sta: T,
    pub c_sta: T,
}

/// A group of stations associated at the same PHY rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateClass {
    /// bit/s
    pub rate: f64,
    pub stations: u32,
}

impl RateClass {
    pub fn new(rate: f64, stations: u32) -> Self {
        Self { rate, stations }
    }

    pub fn mbps(rate_mbps: f64, stations: u32) -> Self {
        Self::new(rate_mbps * 1e6, stations)
    }
}
