//! Versioned run reports and their JSON / CSV renderings.
//!
//! CSV output is one long table with the columns
//! `method,record,key,lo,hi,value`, so width histories and per-trial
//! figures can be pivoted by any plotting tool.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contractor::{ContractionResult, ContractionStatus, WidthSample};
use crate::network::{MeasurementSet, StatePoint, ThreePhaseNetwork};
use crate::oracle::{Method, MethodSummary};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Names of the state variables in [`crate::network::StateBox`] order.
pub fn state_names(net: &ThreePhaseNetwork) -> Vec<String> {
    let bus = |prefix: &str| {
        net.bus_phases()
            .iter()
            .map(|&(b, p)| format!("{prefix} bus:{} {p}", net.buses()[b].id.0))
            .collect::<Vec<_>>()
    };
    let branch = |prefix: &str| {
        net.branch_phases()
            .iter()
            .map(|&(b, p)| format!("{prefix} branch:{} {p}", net.branches()[b].id.0))
            .collect::<Vec<_>>()
    };
    [bus("e"), bus("f"), branch("i_re"), branch("i_im")].concat()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedInterval {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEntry {
    pub name: String,
    pub pseudo: bool,
    pub initial_lo: f64,
    pub initial_hi: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Width trace as parallel columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WidthHistory {
    pub iteration: Vec<usize>,
    pub state: Vec<f64>,
    pub measurement: Vec<f64>,
}

impl WidthHistory {
    pub fn from_samples(samples: &[WidthSample]) -> Self {
        WidthHistory {
            iteration: (0..samples.len()).collect(),
            state: samples.iter().map(|s| s.state).collect(),
            measurement: samples.iter().map(|s| s.measurement).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub status: ContractionStatus,
    pub iterations: usize,
    pub wid_avr: f64,
    pub ratio: f64,
    /// Present when the true state is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub credibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
    pub width_history: WidthHistory,
    pub states: Vec<NamedInterval>,
    pub measurements: Vec<MeasurementEntry>,
}

impl MethodReport {
    pub fn new(
        method: Method,
        net: &ThreePhaseNetwork,
        meas: &MeasurementSet,
        result: &ContractionResult,
        (wid_avr, ratio): (f64, f64),
    ) -> Self {
        let s = &result.final_states;
        let ivs = s.e.iter().chain(&s.f).chain(&s.i_re).chain(&s.i_im);
        let states = state_names(net)
            .into_iter()
            .zip(ivs)
            .map(|(name, iv)| NamedInterval {
                name,
                lo: iv.lo(),
                hi: iv.hi(),
            })
            .collect();
        let measurements = meas
            .items
            .iter()
            .zip(&result.final_measurements)
            .map(|(m, iv)| {
                let z0 = m.interval();
                MeasurementEntry {
                    name: m.label(),
                    pseudo: m.is_pseudo,
                    initial_lo: z0.lo(),
                    initial_hi: z0.hi(),
                    lo: iv.lo(),
                    hi: iv.hi(),
                }
            })
            .collect();
        MethodReport {
            method,
            status: result.status,
            iterations: result.iterations_used,
            wid_avr,
            ratio,
            credibility: None,
            coverage: None,
            elapsed_s: None,
            width_history: WidthHistory::from_samples(&result.width_history),
            states,
            measurements,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub format_version: u32,
    pub kind: String,
    pub network: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub methods: Vec<MethodReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub format_version: u32,
    pub kind: String,
    pub network: String,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
    pub methods: Vec<MethodSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateValue {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub format_version: u32,
    pub kind: String,
    pub network: String,
    pub load_scale: f64,
    pub max_mismatch: f64,
    pub states: Vec<StateValue>,
}

impl OracleReport {
    pub fn new(net: &ThreePhaseNetwork, load_scale: f64, x: &StatePoint, mismatch: f64) -> Self {
        let values = x.e.iter().chain(&x.f).chain(&x.i_re).chain(&x.i_im);
        OracleReport {
            format_version: REPORT_VERSION,
            kind: "oracle".into(),
            network: net.name.clone(),
            load_scale,
            max_mismatch: mismatch,
            states: state_names(net)
                .into_iter()
                .zip(values)
                .map(|(name, &value)| StateValue { name, value })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct Row<'a> {
    method: &'a str,
    record: &'a str,
    key: String,
    lo: Option<f64>,
    hi: Option<f64>,
    value: Option<String>,
}

struct Table<'a> {
    rows: Vec<Row<'a>>,
}

impl<'a> Table<'a> {
    fn interval(&mut self, method: &'a str, record: &'a str, key: String, iv: (f64, f64)) {
        self.rows.push(Row {
            method,
            record,
            key,
            lo: Some(iv.0),
            hi: Some(iv.1),
            value: None,
        });
    }

    fn value(&mut self, method: &'a str, record: &'a str, key: String, v: impl ToString) {
        self.rows.push(Row {
            method,
            record,
            key,
            lo: None,
            hi: None,
            value: Some(v.to_string()),
        });
    }

    fn finish(self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.rows {
            w.serialize(r).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }
}

fn status_name(s: ContractionStatus) -> &'static str {
    match s {
        ContractionStatus::Converged => "converged",
        ContractionStatus::IterationLimit => "iteration_limit",
        ContractionStatus::EmptySet => "empty_set",
    }
}

fn history_rows<'a>(t: &mut Table<'a>, method: &'a str, h: &WidthHistory) {
    for (i, w) in h.iteration.iter().zip(&h.state) {
        t.value(method, "width_state", i.to_string(), w);
    }
    for (i, w) in h.iteration.iter().zip(&h.measurement) {
        t.value(method, "width_measurement", i.to_string(), w);
    }
}

impl EstimateReport {
    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => json_bytes(self),
            ReportFormat::Csv => {
                let mut t = Table { rows: Vec::new() };
                for m in &self.methods {
                    let name = m.method.name();
                    t.value(name, "metric", "status".into(), status_name(m.status));
                    t.value(name, "metric", "iterations".into(), m.iterations);
                    t.value(name, "metric", "wid_avr".into(), m.wid_avr);
                    t.value(name, "metric", "ratio".into(), m.ratio);
                    if let Some(c) = m.credibility {
                        t.value(name, "metric", "credibility".into(), c);
                    }
                    if let Some(s) = m.elapsed_s {
                        t.value(name, "metric", "elapsed_s".into(), s);
                    }
                    history_rows(&mut t, name, &m.width_history);
                    for s in &m.states {
                        t.interval(name, "state", s.name.clone(), (s.lo, s.hi));
                    }
                    for z in &m.measurements {
                        t.interval(name, "measurement", z.name.clone(), (z.lo, z.hi));
                    }
                }
                t.finish()
            }
        }
    }
}

impl MonteCarloReport {
    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => json_bytes(self),
            ReportFormat::Csv => {
                let mut t = Table { rows: Vec::new() };
                for m in &self.methods {
                    let name = m.method.name();
                    t.value(name, "metric", "credibility".into(), m.credibility);
                    t.value(name, "metric", "mean_wid_avr".into(), m.mean_wid_avr);
                    t.value(name, "metric", "mean_ratio".into(), m.mean_ratio);
                    for tr in &m.trials {
                        let k = tr.seed.to_string();
                        t.value(name, "trial_status", k.clone(), status_name(tr.status));
                        t.value(name, "trial_iterations", k.clone(), tr.iterations);
                        t.value(name, "trial_wid_avr", k.clone(), tr.wid_avr);
                        t.value(name, "trial_ratio", k.clone(), tr.ratio);
                        t.value(name, "trial_state_coverage", k.clone(), tr.state_coverage);
                        t.value(name, "trial_measurement_coverage", k.clone(), tr.measurement_coverage);
                        t.value(name, "trial_pseudo_shrunk", k, tr.pseudo_shrunk);
                    }
                }
                if let Some(s) = self.elapsed_s {
                    t.value("", "metric", "elapsed_s".into(), s);
                }
                t.finish()
            }
        }
    }
}

impl OracleReport {
    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => json_bytes(self),
            ReportFormat::Csv => {
                let mut t = Table { rows: Vec::new() };
                t.value("", "metric", "max_mismatch".into(), self.max_mismatch);
                for s in &self.states {
                    t.value("", "state", s.name.clone(), s.value);
                }
                t.finish()
            }
        }
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable report");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeders;

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn state_names_follow_state_order() {
        let net = feeders::six_bus();
        let names = state_names(&net);
        let nb = net.bus_phases().len();
        let nr = net.branch_phases().len();
        assert_eq!(names.len(), 2 * nb + 2 * nr);
        assert_eq!(names[0], "e bus:1 a");
        assert_eq!(names[nb], "f bus:1 a");
        assert!(names[2 * nb].starts_with("i_re branch:"));
    }

    #[test]
    fn csv_width_history_is_columnar() {
        let h = WidthHistory::from_samples(&[
            WidthSample { state: 1.0, measurement: 0.5 },
            WidthSample { state: 0.25, measurement: 0.5 },
        ]);
        let mut t = Table { rows: Vec::new() };
        history_rows(&mut t, "rdm", &h);
        let text = String::from_utf8(t.finish()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("method,record,key,lo,hi,value"));
        assert_eq!(lines.next(), Some("rdm,width_state,0,,,1"));
        assert_eq!(lines.nth(1), Some("rdm,width_measurement,0,,,0.5"));
    }
}
