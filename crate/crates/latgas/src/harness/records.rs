//! Per-replica nucleation records and their CSV serialization.
//!
//! One CSV row per replica. Scalar fields are plain columns; the tube
//! stage times and the per-window verdicts are packed into single columns
//! (`2x2<100;3x3>600` — `<` marks a last-before-exit time, `>` a
//! first-after-exit time, an empty value means "never"), so records can be
//! re-judged at other window exponents without rerunning anything.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::classify::ExitMode;
use crate::harness::tube::TubeReport;
use crate::lattice::Site;

/// Everything measured on one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct NucleationRecord {
    pub beta: f64,
    pub replica: u32,
    /// RNG stream index used for this replica.
    pub stream: u64,
    pub side: u32,
    pub theta_eff: f64,
    /// Clock time of the first departure from the subcritical set;
    /// `None` when the run was truncated (conceptually infinite).
    pub tau_exit: Option<f64>,
    pub exit_mode: ExitMode,
    /// Rounded baricenter of the triggering cluster.
    pub trigger_center: Option<Site>,
    pub trigger_volume: Option<u32>,
    /// Distinct pre-move clusters merged by the triggering move.
    pub clusters_joined: Option<u32>,
    pub events: u64,
    pub max_cluster: u32,
    pub samples: u64,
    /// Sampled instants before the exit at which the configuration was
    /// outside the subcritical set (must be zero).
    pub subcritical_violations: u64,
    pub particles_initial: u32,
    pub particles_final: u32,
    /// Tube stage times; `None` when the run was truncated.
    pub tube: Option<TubeReport>,
    /// Per window exponent delta: (delta, full-chain pass, subcritical
    /// half pass).
    pub tube_pass: Vec<(f64, bool, bool)>,
}

/// Flat CSV row mirror of [`NucleationRecord`].
#[derive(Debug, Serialize, Deserialize)]
struct Row {
    beta: f64,
    replica: u32,
    stream: u64,
    side: u32,
    theta_eff: f64,
    tau_exit: Option<f64>,
    exit_mode: String,
    trigger_x: Option<i32>,
    trigger_y: Option<i32>,
    trigger_volume: Option<u32>,
    clusters_joined: Option<u32>,
    events: u64,
    max_cluster: u32,
    samples: u64,
    subcritical_violations: u64,
    particles_initial: u32,
    particles_final: u32,
    tube: String,
    tube_pass: String,
}

fn pack_time(t: Option<f64>) -> String {
    t.map(|t| t.to_string()).unwrap_or_default()
}

fn unpack_time(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse {
        line: 0,
        msg: format!("bad stage time `{s}`"),
    })
}

/// `2x2<100;2x3<;3x3>600`, or `!reason` for an aborted analysis.
fn pack_tube(report: &TubeReport) -> String {
    if let Some(reason) = &report.aborted {
        return format!("!{}", reason.replace(';', ","));
    }
    let mut parts = Vec::new();
    for (d, t) in report.sub_dims.iter().zip(&report.last_sub) {
        parts.push(format!("{}x{}<{}", d.0, d.1, pack_time(*t)));
    }
    for (d, t) in report.super_dims.iter().zip(&report.first_super) {
        parts.push(format!("{}x{}>{}", d.0, d.1, pack_time(*t)));
    }
    parts.join(";")
}

fn unpack_tube(s: &str, tau_exit: Option<f64>) -> Result<Option<TubeReport>> {
    if s.is_empty() {
        return Ok(None);
    }
    let tau_exit = tau_exit.unwrap_or(f64::INFINITY);
    if let Some(reason) = s.strip_prefix('!') {
        return Ok(Some(TubeReport {
            box_rect: None,
            center: None,
            aborted: Some(reason.to_string()),
            tau_exit,
            sub_dims: Vec::new(),
            last_sub: Vec::new(),
            super_dims: Vec::new(),
            first_super: Vec::new(),
        }));
    }
    let mut report = TubeReport {
        box_rect: None,
        center: None,
        aborted: None,
        tau_exit,
        sub_dims: Vec::new(),
        last_sub: Vec::new(),
        super_dims: Vec::new(),
        first_super: Vec::new(),
    };
    for part in s.split(';') {
        let (kind, marker) = if part.contains('<') {
            (true, '<')
        } else if part.contains('>') {
            (false, '>')
        } else {
            return Err(Error::Parse {
                line: 0,
                msg: format!("bad tube entry `{part}`"),
            });
        };
        let (dims, time) = part.split_once(marker).expect("marker just found");
        let (d1, d2) = dims.split_once('x').ok_or(Error::Parse {
            line: 0,
            msg: format!("bad tube dims `{dims}`"),
        })?;
        let parse_dim = |v: &str| {
            v.parse::<u32>().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad tube dims `{dims}`"),
            })
        };
        let d = (parse_dim(d1)?, parse_dim(d2)?);
        let t = unpack_time(time)?;
        if kind {
            report.sub_dims.push(d);
            report.last_sub.push(t);
        } else {
            report.super_dims.push(d);
            report.first_super.push(t);
        }
    }
    Ok(Some(report))
}

/// `0.05:TT;0.1:FT` — per delta, full-chain then subcritical verdict.
fn pack_pass(pass: &[(f64, bool, bool)]) -> String {
    pass.iter()
        .map(|(d, p, s)| {
            format!(
                "{}:{}{}",
                d,
                if *p { 'T' } else { 'F' },
                if *s { 'T' } else { 'F' }
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn unpack_pass(s: &str) -> Result<Vec<(f64, bool, bool)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|part| {
            let (d, v) = part.split_once(':').ok_or(Error::Parse {
                line: 0,
                msg: format!("bad verdict `{part}`"),
            })?;
            let delta = d.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad verdict delta `{d}`"),
            })?;
            let mut flags = v.chars();
            let mut flag = || match flags.next() {
                Some('T') => Ok(true),
                Some('F') => Ok(false),
                _ => Err(Error::Parse {
                    line: 0,
                    msg: format!("bad verdict flags `{v}`"),
                }),
            };
            Ok((delta, flag()?, flag()?))
        })
        .collect()
}

impl NucleationRecord {
    fn to_row(&self) -> Row {
        Row {
            beta: self.beta,
            replica: self.replica,
            stream: self.stream,
            side: self.side,
            theta_eff: self.theta_eff,
            tau_exit: self.tau_exit,
            exit_mode: self.exit_mode.to_string(),
            trigger_x: self.trigger_center.map(|s| s.x),
            trigger_y: self.trigger_center.map(|s| s.y),
            trigger_volume: self.trigger_volume,
            clusters_joined: self.clusters_joined,
            events: self.events,
            max_cluster: self.max_cluster,
            samples: self.samples,
            subcritical_violations: self.subcritical_violations,
            particles_initial: self.particles_initial,
            particles_final: self.particles_final,
            tube: self.tube.as_ref().map(pack_tube).unwrap_or_default(),
            tube_pass: pack_pass(&self.tube_pass),
        }
    }

    fn from_row(row: Row) -> Result<NucleationRecord> {
        Ok(NucleationRecord {
            beta: row.beta,
            replica: row.replica,
            stream: row.stream,
            side: row.side,
            theta_eff: row.theta_eff,
            tau_exit: row.tau_exit,
            exit_mode: row.exit_mode.parse()?,
            trigger_center: match (row.trigger_x, row.trigger_y) {
                (Some(x), Some(y)) => Some(Site::new(x, y)),
                _ => None,
            },
            trigger_volume: row.trigger_volume,
            clusters_joined: row.clusters_joined,
            events: row.events,
            max_cluster: row.max_cluster,
            samples: row.samples,
            subcritical_violations: row.subcritical_violations,
            particles_initial: row.particles_initial,
            particles_final: row.particles_final,
            tube: unpack_tube(&row.tube, row.tau_exit)?,
            tube_pass: unpack_pass(&row.tube_pass)?,
        })
    }
}

/// Writes records as CSV with a header row.
pub fn write_records_csv<W: Write>(records: &[NucleationRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for record in records {
        w.serialize(record.to_row())
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<NucleationRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: Row = row.map_err(|e| Error::Parse {
            line: out.len() + 2,
            msg: e.to_string(),
        })?;
        out.push(NucleationRecord::from_row(row)?);
    }
    Ok(out)
}

pub fn records_to_string(records: &[NucleationRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })
}

pub fn records_from_str(text: &str) -> Result<Vec<NucleationRecord>> {
    read_records_csv(text.as_bytes())
}
