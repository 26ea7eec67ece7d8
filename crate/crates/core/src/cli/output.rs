use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::EpidemicIndicators;
use crate::integrator::{EventKind, Trajectory};

use super::CliError;

pub const TRAJECTORY_HEADER: &str = "t,s,i,rho,d,v,J,V,event";
pub const SWEEP_HEADER: &str =
    "value,tau,objective,peak_i,peak_time,duration,total_deaths,total_vaccinated,total_cost";

/// Nine significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn trajectory_csv(traj: &Trajectory, population: Option<f64>) -> String {
    let scale = population.unwrap_or(1.0);
    let mut out = String::with_capacity(traj.times().len() * 120);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    let events = traj.events();
    for ((t, st), v) in traj
        .times()
        .iter()
        .zip(traj.states())
        .zip(traj.vaccination_rates())
    {
        let tags: Vec<&str> = events
            .iter()
            .filter(|e| e.time == *t)
            .map(|e| e.kind.name())
            .collect();
        let c = &st.state;
        let row = [
            num(*t),
            num(c.s * scale),
            num(c.i * scale),
            num(c.rho * scale),
            num(c.d * scale),
            num(*v),
            num(st.cost),
            num(st.vaccine),
            tags.join(";"),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write_text(path, &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
}

pub fn event_records(traj: &Trajectory) -> Vec<EventRecord> {
    traj.events()
        .iter()
        .map(|e| EventRecord {
            time: e.time,
            kind: e.kind,
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub value: f64,
    pub tau: f64,
    pub objective: f64,
    pub indicators: EpidemicIndicators,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let ind = &r.indicators;
        let cells = [
            r.value,
            r.tau,
            r.objective,
            ind.peak_i,
            ind.peak_time,
            ind.duration,
            ind.total_deaths,
            ind.total_vaccinated,
            ind.total_cost,
        ];
        let line: Vec<String> = cells.iter().map(|x| num(*x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
