use std::io::Write;

use serde::Serialize;

use crate::args::Format;

/// One analysed scenario, with the optional oracle and simulation columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub standard: String,
    pub d: u32,
    pub stations: u32,
    pub analysis_mbps: f64,
    pub packets_per_s: f64,
    pub captured_mass: f64,
    pub n_max: usize,
    pub oracle_l1: Option<f64>,
    pub simulation_mbps: Option<f64>,
    pub ci_halfwidth_mbps: Option<f64>,
    /// `|analysis − simulation| / simulation · 100`.
    pub error_percent: Option<f64>,
}

impl ComparisonRow {
    pub fn set_simulation(&mut self, sim_mbps: f64, ci: f64) {
        self.simulation_mbps = Some(sim_mbps);
        self.ci_halfwidth_mbps = Some(ci);
        self.error_percent = Some((self.analysis_mbps - sim_mbps).abs() / sim_mbps * 100.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub label: String,
    pub seed: u64,
    pub aggregate_mbps: f64,
    pub ci_halfwidth_mbps: f64,
    pub min_sta_mbps: f64,
    pub max_sta_mbps: f64,
    pub collision_fraction: f64,
    pub mean_nonempty_stas: f64,
    pub sim_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub label: String,
    pub d: u32,
    pub n_max: usize,
    pub states: usize,
    pub oracle_l1: f64,
    /// Largest `|Σ event probabilities − 1|` over the same states.
    pub identity_max_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub axis: String,
    pub value: String,
    pub analysis_mbps: f64,
    pub captured_mass: f64,
    pub n_max: usize,
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn opt4(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), f4)
}

fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

pub trait Tabular: Serialize {
    fn headers() -> Vec<&'static str>;
    fn cells(&self) -> Vec<String>;
}

impl Tabular for ComparisonRow {
    fn headers() -> Vec<&'static str> {
        vec![
            "scenario",
            "std",
            "d",
            "M",
            "analysis",
            "simulation",
            "± ci",
            "error %",
            "oracle L1",
            "mass",
            "N_max",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            self.standard.clone(),
            self.d.to_string(),
            self.stations.to_string(),
            f4(self.analysis_mbps),
            opt4(self.simulation_mbps),
            opt4(self.ci_halfwidth_mbps),
            self.error_percent
                .map_or_else(|| "-".into(), |e| format!("{e:.2}")),
            self.oracle_l1.map_or_else(|| "-".into(), sci),
            format!("{:.10}", self.captured_mass),
            self.n_max.to_string(),
        ]
    }
}

impl Tabular for SimRow {
    fn headers() -> Vec<&'static str> {
        vec![
            "scenario",
            "seed",
            "Mbit/s",
            "± ci",
            "min STA",
            "max STA",
            "coll. frac",
            "mean backlog",
            "time s",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            self.seed.to_string(),
            f4(self.aggregate_mbps),
            f4(self.ci_halfwidth_mbps),
            f4(self.min_sta_mbps),
            f4(self.max_sta_mbps),
            f4(self.collision_fraction),
            f4(self.mean_nonempty_stas),
            f4(self.sim_time_s),
        ]
    }
}

impl Tabular for VerifyRow {
    fn headers() -> Vec<&'static str> {
        vec![
            "scenario",
            "d",
            "N_max",
            "states",
            "oracle L1",
            "identity err",
            "result",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            self.d.to_string(),
            self.n_max.to_string(),
            self.states.to_string(),
            sci(self.oracle_l1),
            sci(self.identity_max_error),
            if self.pass { "ok" } else { "MISMATCH" }.into(),
        ]
    }
}

/// Space-aligned table; the first column is left-aligned, the rest right.
pub fn render_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            if i == 0 {
                s.push_str(c);
                s.extend(std::iter::repeat_n(' ', pad));
            } else {
                s.extend(std::iter::repeat_n(' ', pad));
                s.push_str(c);
            }
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(headers);
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

pub fn write_rows<R: Tabular>(
    out: &mut dyn Write,
    rows: &[R],
    format: Format,
) -> std::io::Result<()> {
    match format {
        Format::Table => {
            let headers: Vec<String> = R::headers().into_iter().map(String::from).collect();
            let cells: Vec<Vec<String>> = rows.iter().map(Tabular::cells).collect();
            out.write_all(render_table(&headers, &cells).as_bytes())
        }
        Format::Csv => write_csv(out, rows),
        Format::Json => write_json(out, rows),
    }
}

pub fn write_csv<R: Serialize>(out: &mut dyn Write, rows: &[R]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn write_json<R: Serialize>(out: &mut dyn Write, rows: &[R]) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, rows)?;
    writeln!(out)
}

/// Sweep output: one column per axis value in table form, long rows otherwise.
pub fn write_sweep(out: &mut dyn Write, rows: &[SweepRow], format: Format) -> std::io::Result<()> {
    if format != Format::Table {
        return if format == Format::Csv {
            write_csv(out, rows)
        } else {
            write_json(out, rows)
        };
    }
    let mut values: Vec<&str> = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !values.contains(&r.value.as_str()) {
            values.push(&r.value);
        }
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let axis = rows.first().map_or("", |r| r.axis.as_str());
    let mut headers = vec!["scenario".to_string()];
    headers.extend(values.iter().map(|v| format!("{axis}={v}")));
    let cells: Vec<Vec<String>> = labels
        .iter()
        .map(|l| {
            let mut c = vec![l.to_string()];
            for v in &values {
                let hit = rows.iter().find(|r| r.label == *l && r.value == *v);
                c.push(hit.map_or_else(|| "-".into(), |r| f4(r.analysis_mbps)));
            }
            c
        })
        .collect();
    out.write_all(render_table(&headers, &cells).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ComparisonRow {
        ComparisonRow {
            label: "a".into(),
            standard: "802.11b".into(),
            d: 1,
            stations: 10,
            analysis_mbps: 1.0,
            packets_per_s: 85.6,
            captured_mass: 1.0,
            n_max: 30,
            oracle_l1: None,
            simulation_mbps: None,
            ci_halfwidth_mbps: None,
            error_percent: None,
        }
    }

    #[test]
    fn error_percent_only_with_simulation() {
        let mut r = row();
        assert!(r.error_percent.is_none());
        r.set_simulation(0.8, 0.01);
        assert!((r.error_percent.unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn table_alignment() {
        let t = render_table(
            &["x".into(), "value".into()],
            &[
                vec!["long-name".into(), "1.0000".into()],
                vec!["b".into(), "12.5000".into()],
            ],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "x            value");
        assert_eq!(lines[2], "long-name   1.0000");
        assert_eq!(lines[3], "b          12.5000");
    }

    #[test]
    fn csv_leaves_missing_columns_empty() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("label,standard,d,stations,analysis_mbps"));
        assert!(lines.next().unwrap().ends_with(",,,,"));
    }

    #[test]
    fn sweep_table_pivots() {
        let r = |l: &str, v: &str, x: f64| SweepRow {
            label: l.into(),
            axis: "d".into(),
            value: v.into(),
            analysis_mbps: x,
            captured_mass: 1.0,
            n_max: 30,
        };
        let mut buf = Vec::new();
        write_sweep(
            &mut buf,
            &[r("a", "1", 1.0), r("a", "2", 2.0), r("b", "1", 3.0)],
            Format::Table,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scenario     d=1     d=2\n"));
        assert!(text.contains("b         3.0000       -"));
    }
}
