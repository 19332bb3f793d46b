//! Loading stream files into an oracle and a list of updates.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dynclust::metric::stream::{parse_header, parse_matrix, parse_record, Record};
use dynclust::{DistanceOracle, MetricKind, PointId, UpdateOp};

/// A fully parsed stream.
pub struct Stream {
    /// Oracle holding every point ever inserted; identifiers follow
    /// insertion order.
    pub oracle: DistanceOracle,
    /// The updates, in file order.
    pub ops: Vec<UpdateOp>,
    /// Coordinate dimension (0 for matrix streams).
    pub dim: usize,
}

/// Reads `path`. Labels are interned in insertion order; re-inserting a
/// deleted label creates a new point. `metric` overrides the header's
/// distance function for coordinate streams.
pub fn load(path: &Path, metric: Option<MetricKind>) -> Result<Stream> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| anyhow!("{}: empty stream file", path.display()))?;
    let mut header = parse_header(first)?;
    let mut oracle = match (&header.file, header.metric) {
        (Some(file), MetricKind::Matrix) => {
            if metric.is_some() {
                bail!("--metric cannot override a matrix stream");
            }
            let mpath = path.parent().unwrap_or(Path::new(".")).join(file);
            let mtext = fs::read_to_string(&mpath).with_context(|| format!("cannot read {}", mpath.display()))?;
            DistanceOracle::from_matrix(parse_matrix(&mtext)?)?
        }
        _ => {
            if let Some(m) = metric {
                if matches!(m, MetricKind::Matrix | MetricKind::Adversary) {
                    bail!("--metric {m} needs a matrix or adversarial source, not a coordinate stream");
                }
                header.metric = m;
            }
            DistanceOracle::new(header.metric)
        }
    };
    let is_matrix = header.metric == MetricKind::Matrix;
    let mut live: HashMap<String, PointId> = HashMap::new();
    let mut ops = Vec::new();
    let mut dim = header.dim.unwrap_or(0);
    for (i, line) in lines {
        let line_no = i + 1;
        match parse_record(line, line_no, &header)? {
            None => {}
            Some(Record::Insert { label, coords }) => {
                if live.contains_key(&label) {
                    bail!("line {line_no}: point `{label}` is already active");
                }
                if is_matrix && !coords.is_empty() {
                    bail!("line {line_no}: matrix streams carry no coordinates");
                }
                if dim == 0 && !matches!(header.metric, MetricKind::Jaccard | MetricKind::Matrix) {
                    dim = coords.len();
                }
                let id = oracle.register(coords).with_context(|| format!("line {line_no}"))?;
                live.insert(label, id);
                ops.push(UpdateOp::Insert(id));
            }
            Some(Record::Delete { label }) => {
                let id = live.remove(&label).ok_or_else(|| anyhow!("line {line_no}: point `{label}` is not active"))?;
                ops.push(UpdateOp::Delete(id));
            }
        }
    }
    Ok(Stream { oracle, ops, dim })
}
