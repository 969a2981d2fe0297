use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One aggregated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub kind: String,
    pub label: String,
    pub noise: String,
    pub n: usize,
    pub epsilon: f64,
    /// Experiment-specific axis (rank, layers, circuit noise, ...).
    pub param: f64,
    pub trials: usize,
    pub kept: usize,
    pub discarded: usize,
    pub mean_uncorrected: f64,
    pub stderr_uncorrected: f64,
    pub mean_corrected: f64,
    pub stderr_corrected: f64,
    pub mean_keep: f64,
    /// Corrected over uncorrected mean.
    pub ratio: Option<f64>,
    /// Analytic or predicted value for comparison, when one exists.
    pub reference: Option<f64>,
    pub final_cost: Option<f64>,
    pub seed: u64,
    pub notes: String,
}

pub const CSV_HEADER: &str = "kind,label,noise,n,epsilon,param,trials,kept,discarded,\
mean_uncorrected,stderr_uncorrected,mean_corrected,stderr_corrected,mean_keep,ratio,reference,\
final_cost,seed,notes";

fn float(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0.0"
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ResultRecord {
    pub fn to_csv_row(&self) -> String {
        [
            text(&self.kind),
            text(&self.label),
            text(&self.noise),
            self.n.to_string(),
            float(self.epsilon),
            float(self.param),
            self.trials.to_string(),
            self.kept.to_string(),
            self.discarded.to_string(),
            float(self.mean_uncorrected),
            float(self.stderr_uncorrected),
            float(self.mean_corrected),
            float(self.stderr_corrected),
            float(self.mean_keep),
            opt(self.ratio),
            opt(self.reference),
            opt(self.final_cost),
            self.seed.to_string(),
            text(&self.notes),
        ]
        .join(",")
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f = split_csv(line)?;
        if f.len() != 19 {
            return Err(Error::Parse(format!("expected 19 columns, found {}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse::<f64>()
                .map_err(|e| Error::Parse(format!("column {i} ({:?}): {e}", f[i])))
        };
        let int = |i: usize| -> Result<usize> {
            f[i].parse::<usize>()
                .map_err(|e| Error::Parse(format!("column {i} ({:?}): {e}", f[i])))
        };
        let maybe = |i: usize| -> Result<Option<f64>> {
            if f[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        Ok(Self {
            kind: f[0].clone(),
            label: f[1].clone(),
            noise: f[2].clone(),
            n: int(3)?,
            epsilon: num(4)?,
            param: num(5)?,
            trials: int(6)?,
            kept: int(7)?,
            discarded: int(8)?,
            mean_uncorrected: num(9)?,
            stderr_uncorrected: num(10)?,
            mean_corrected: num(11)?,
            stderr_corrected: num(12)?,
            mean_keep: num(13)?,
            ratio: maybe(14)?,
            reference: maybe(15)?,
            final_cost: maybe(16)?,
            seed: f[17]
                .parse()
                .map_err(|e| Error::Parse(format!("seed column: {e}")))?,
            notes: f[18].clone(),
        })
    }
}

fn split_csv(line: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', true) => quoted = false,
            ('"', false) if cur.is_empty() => quoted = true,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if quoted {
        return Err(Error::Parse("unterminated quoted field".into()));
    }
    out.push(cur);
    Ok(out)
}

pub fn to_csv(records: &[ResultRecord]) -> String {
    let mut s = String::with_capacity(256 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}", r.to_csv_row());
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(Error::Parse("missing or unexpected CSV header".into())),
    }
    lines.filter(|l| !l.is_empty()).map(ResultRecord::from_csv_row).collect()
}

/// Write `contents` next to `path` and rename it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn emit_report(records: &[ResultRecord], path: &Path) -> Result<()> {
    write_atomic(path, to_csv(records).as_bytes())
}
