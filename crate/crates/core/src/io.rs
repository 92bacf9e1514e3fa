//! Matrix JSON and counts CSV formats, plus the repair step applied to
//! ingested matrices.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::QuditDensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, MatrixJson};
use crate::tomography::{CountsTable, ProcessMatrix, ProjectorSet, CANONICAL_NAMES};

/// Largest single repair accepted before ingestion fails.
pub const REPAIR_CAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    Symmetrize,
    ClipNegative,
    Renormalize,
    /// Trace deviation that was recorded but left in place.
    TraceDeviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub source: String,
    pub kind: RepairKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentLog {
    pub entries: Vec<Adjustment>,
}

impl AdjustmentLog {
    fn record(&mut self, source: &str, kind: RepairKind, magnitude: f64) -> Result<()> {
        // exact rounding noise is not worth a log line
        if magnitude <= 1e-12 {
            return Ok(());
        }
        self.entries.push(Adjustment {
            source: source.to_string(),
            kind,
            magnitude,
        });
        if magnitude > REPAIR_CAP {
            return Err(Error::DataQuality(format!(
                "{source}: {kind:?} repair of {magnitude:.4} exceeds {REPAIR_CAP}"
            )));
        }
        Ok(())
    }

    pub fn for_source<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a Adjustment> + 'a {
        self.entries.iter().filter(move |a| a.source == source)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_matrix_json(text: &str, source: &str) -> Result<CMatrix> {
    let mj: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    mj.to_matrix().map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{source}: {location}"),
            message,
        },
        other => other,
    })
}

pub fn read_matrix_json(path: &Path) -> Result<CMatrix> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_json(&text, &path.display().to_string())
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&MatrixJson::from_matrix(m)).expect("matrix serializes")
}

/// Symmetrize, clip negative eigenvalues and renormalize a density matrix.
pub fn repair_density(
    source: &str,
    m: &CMatrix,
    log: &mut AdjustmentLog,
) -> Result<QuditDensityMatrix> {
    if !m.is_square() || m.nrows() < 2 {
        return Err(Error::InvalidState(format!(
            "{source}: not a square matrix"
        )));
    }
    log.record(
        source,
        RepairKind::Symmetrize,
        linalg::hermiticity_residual(m),
    )?;
    let h = linalg::hermitian_part(m);
    let (vals, vecs) = linalg::eigh(&h);
    log.record(source, RepairKind::ClipNegative, (-vals[0]).max(0.0))?;
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let p = linalg::hermitian_part(&linalg::from_eigen(&clipped, &vecs));
    let tr = linalg::trace(&p).re;
    if !(tr > 0.0) {
        return Err(Error::DataQuality(format!("{source}: non-positive trace")));
    }
    log.record(source, RepairKind::Renormalize, (tr - 1.0).abs())?;
    QuditDensityMatrix::new(p / c(tr, 0.0))
}

/// Symmetrize and clip a printed χ; its trace deviation is logged but kept,
/// since χ is only ever applied through normalized outputs.
pub fn repair_process(source: &str, m: &CMatrix, log: &mut AdjustmentLog) -> Result<ProcessMatrix> {
    if m.shape() != (9, 9) {
        return Err(Error::DimensionMismatch {
            expected: 9,
            found: m.nrows(),
        });
    }
    log.record(
        source,
        RepairKind::Symmetrize,
        linalg::hermiticity_residual(m),
    )?;
    let h = linalg::hermitian_part(m);
    let (vals, vecs) = linalg::eigh(&h);
    log.record(source, RepairKind::ClipNegative, (-vals[0]).max(0.0))?;
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let p = linalg::hermitian_part(&linalg::from_eigen(&clipped, &vecs));
    log.record(
        source,
        RepairKind::TraceDeviation,
        (linalg::trace(&p).re - 1.0).abs(),
    )?;
    Ok(ProcessMatrix::unchecked(p))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ingested {
    State(QuditDensityMatrix),
    Process(ProcessMatrix),
}

/// Reads a matrix file and repairs it; 9×9 matrices are taken as χ, anything
/// else as a density matrix.
pub fn ingest_matrix(path: &Path, log: &mut AdjustmentLog) -> Result<Ingested> {
    let m = read_matrix_json(path)?;
    let source = path.display().to_string();
    if m.nrows() == 9 {
        repair_process(&source, &m, log).map(Ingested::Process)
    } else {
        repair_density(&source, &m, log).map(Ingested::State)
    }
}

/// Parses `setting,count` rows. Settings must all come from the canonical
/// names or all from `mub1`..`mub12`; every setting must appear exactly once.
pub fn parse_counts_csv(
    text: &str,
    source: &str,
    exposure: f64,
) -> Result<(ProjectorSet, CountsTable)> {
    let perr = |line: usize, message: String| Error::Parse {
        location: format!("{source}:{line}"),
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "setting,count" => {}
        Some((i, h)) => {
            return Err(perr(
                i + 1,
                format!("expected header `setting,count`, found `{h}`"),
            ))
        }
        None => return Err(perr(1, "empty file".into())),
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let mut parts = l.split(',');
        let (Some(name), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(perr(i + 1, format!("expected two fields, found `{l}`")));
        };
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|e| perr(i + 1, format!("count `{}`: {e}", count.trim())))?;
        rows.push((i + 1, name.trim().to_string(), count));
    }
    let set = match rows.first() {
        Some((_, n, _)) if CANONICAL_NAMES.contains(&n.as_str()) => ProjectorSet::canonical(),
        Some(_) => ProjectorSet::mub(),
        None => return Err(perr(2, "no counts".into())),
    };
    let mut counts = vec![None; set.len()];
    for (line, name, n) in rows {
        let k = set
            .index_of(&name)
            .ok_or_else(|| perr(line, format!("unknown setting `{name}`")))?;
        if counts[k].replace(n).is_some() {
            return Err(perr(line, format!("duplicate setting `{name}`")));
        }
    }
    let counts = counts
        .into_iter()
        .enumerate()
        .map(|(k, n)| n.ok_or_else(|| perr(0, format!("missing setting `{}`", set.names()[k]))))
        .collect::<Result<Vec<_>>>()?;
    let table = CountsTable::new(counts, exposure)?;
    Ok((set, table))
}

pub fn counts_to_csv(set: &ProjectorSet, table: &CountsTable) -> String {
    let mut s = String::from("setting,count\n");
    for (name, n) in set.names().iter().zip(&table.counts) {
        let _ = writeln!(s, "{name},{n}");
    }
    s
}

/// `x,value,error` rows for plotting.
pub fn series_csv(x: &[f64], value: &[f64], error: &[f64]) -> String {
    let mut s = String::from("x,value,error\n");
    for ((x, v), e) in x.iter().zip(value).zip(error) {
        let _ = writeln!(s, "{x},{v},{e}");
    }
    s
}
