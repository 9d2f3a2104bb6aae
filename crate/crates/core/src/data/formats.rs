//! Plain-text readers and writers. Every reader takes the text plus a
//! source name used in positioned error messages.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{EcrmError, Result};
use crate::hierarchy::HierarchyDag;
use crate::label::{validate_ranking, Label, LabelKind};
use crate::linalg::Matrix;
use crate::spaces::{ConstraintMatrix, FlowNetwork};

fn read(path: &Path) -> Result<(String, String)> {
    let text = fs::read_to_string(path)?;
    Ok((text, path.display().to_string()))
}

/// Non-empty rows of whitespace-separated tokens parsed as `T`, with their
/// 1-based line numbers. Blank lines are rejected.
fn parse_rows<T: FromStr>(text: &str, source: &str, what: &str) -> Result<Vec<(usize, Vec<T>)>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(EcrmError::parse(source, lineno, "empty line"));
        }
        let row = tokens
            .iter()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| EcrmError::parse(source, lineno, format!("cannot parse {t:?} as {what}")))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push((lineno, row));
    }
    if rows.is_empty() {
        return Err(EcrmError::parse(source, 1, "file is empty"));
    }
    let width = rows[0].1.len();
    for (lineno, row) in &rows {
        if row.len() != width {
            return Err(EcrmError::parse(
                source,
                *lineno,
                format!("expected {width} values, found {}", row.len()),
            ));
        }
    }
    Ok(rows)
}

pub fn parse_features(text: &str, source: &str) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = parse_rows::<f64>(text, source, "a real number")?
        .into_iter()
        .map(|(lineno, row)| {
            if row.iter().all(|v| v.is_finite()) {
                Ok(row)
            } else {
                Err(EcrmError::parse(source, lineno, "non-finite value"))
            }
        })
        .collect::<Result<_>>()?;
    Matrix::from_rows(&rows)
}

pub fn parse_binary_labels(text: &str, source: &str) -> Result<Vec<Label>> {
    parse_rows::<u8>(text, source, "0 or 1")?
        .into_iter()
        .map(|(lineno, row)| {
            if row.iter().all(|&b| b <= 1) {
                Ok(Label::Bits(row))
            } else {
                Err(EcrmError::parse(source, lineno, "labels must be 0 or 1"))
            }
        })
        .collect()
}

pub fn parse_permutations(text: &str, source: &str) -> Result<Vec<Label>> {
    parse_rows::<usize>(text, source, "a rank")?
        .into_iter()
        .map(|(lineno, row)| {
            validate_ranking(&row).map_err(|e| EcrmError::parse(source, lineno, e.to_string()))?;
            Ok(Label::Ranking(row))
        })
        .collect()
}

pub fn parse_flows(text: &str, source: &str) -> Result<Vec<Label>> {
    let m = parse_features(text, source)?;
    Ok(m.rows_iter().map(|r| Label::Vector(r.to_vec())).collect())
}

pub fn parse_labels(text: &str, source: &str, kind: LabelKind) -> Result<Vec<Label>> {
    match kind {
        LabelKind::Bits => parse_binary_labels(text, source),
        LabelKind::Ranking => parse_permutations(text, source),
        LabelKind::Vector => parse_flows(text, source),
    }
}

/// One arc `parent child` per line; the node count is one more than the
/// largest id.
pub fn parse_hierarchy(text: &str, source: &str) -> Result<HierarchyDag> {
    let rows = parse_rows::<usize>(text, source, "a node id")?;
    let mut arcs = Vec::with_capacity(rows.len());
    for (lineno, row) in rows {
        if row.len() != 2 {
            return Err(EcrmError::parse(source, lineno, "expected `parent child`"));
        }
        arcs.push((row[0], row[1]));
    }
    let d = 1 + arcs.iter().map(|&(p, c)| p.max(c)).max().unwrap_or(0);
    HierarchyDag::new(d, arcs)
}

/// `nodes N arcs M`, then `M` lines `tail head`, then `N` lines `node b`.
pub fn parse_network(text: &str, source: &str) -> Result<FlowNetwork> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| EcrmError::parse(source, 1, "file is empty"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let (nodes, arcs) = match tokens.as_slice() {
        ["nodes", n, "arcs", m] => (
            n.parse::<usize>()
                .map_err(|_| EcrmError::parse(source, 1, "bad node count"))?,
            m.parse::<usize>()
                .map_err(|_| EcrmError::parse(source, 1, "bad arc count"))?,
        ),
        _ => return Err(EcrmError::parse(source, 1, "expected `nodes N arcs M`")),
    };
    let mut arc_list = Vec::with_capacity(arcs);
    for _ in 0..arcs {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| EcrmError::parse(source, text.lines().count() + 1, "missing arc line"))?;
        let t: Vec<&str> = line.split_whitespace().collect();
        let parsed = match t.as_slice() {
            [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        let (tail, head) = parsed.ok_or_else(|| EcrmError::parse(source, lineno, "expected `tail head`"))?;
        if tail == head {
            return Err(EcrmError::Cycle(format!("{source}:{lineno}: self-loop on node {tail}")));
        }
        arc_list.push((tail, head));
    }
    let mut supply = vec![None; nodes];
    for _ in 0..nodes {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| EcrmError::parse(source, text.lines().count() + 1, "missing supply line"))?;
        let t: Vec<&str> = line.split_whitespace().collect();
        let parsed = match t.as_slice() {
            [a, b] => a.parse::<usize>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        let (node, b) = parsed.ok_or_else(|| EcrmError::parse(source, lineno, "expected `node b_value`"))?;
        if node >= nodes || supply[node].is_some() {
            return Err(EcrmError::parse(source, lineno, format!("node {node} out of range or repeated")));
        }
        supply[node] = Some(b);
    }
    if let Some((lineno, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(EcrmError::parse(source, lineno, "unexpected trailing content"));
    }
    let supply: Vec<f64> = supply.into_iter().map(|b| b.expect("every node seen once")).collect();
    FlowNetwork::new(nodes, arc_list, supply)
}

/// Integer matrix, one row per line.
pub fn parse_matrix(text: &str, source: &str) -> Result<ConstraintMatrix> {
    let rows = parse_rows::<i64>(text, source, "an integer")?;
    ConstraintMatrix::from_rows(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Matrix> {
    let (text, source) = read(path.as_ref())?;
    parse_features(&text, &source)
}

pub fn load_binary_labels(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let (text, source) = read(path.as_ref())?;
    parse_binary_labels(&text, &source)
}

pub fn load_permutations(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let (text, source) = read(path.as_ref())?;
    parse_permutations(&text, &source)
}

pub fn load_flows(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let (text, source) = read(path.as_ref())?;
    parse_flows(&text, &source)
}

pub fn load_labels(path: impl AsRef<Path>, kind: LabelKind) -> Result<Vec<Label>> {
    let (text, source) = read(path.as_ref())?;
    parse_labels(&text, &source, kind)
}

pub fn load_hierarchy(path: impl AsRef<Path>) -> Result<HierarchyDag> {
    let (text, source) = read(path.as_ref())?;
    parse_hierarchy(&text, &source)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<FlowNetwork> {
    let (text, source) = read(path.as_ref())?;
    parse_network(&text, &source)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<ConstraintMatrix> {
    let (text, source) = read(path.as_ref())?;
    parse_matrix(&text, &source)
}

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn format_features(x: &Matrix) -> String {
    x.rows_iter().map(|r| join(r.iter()) + "\n").collect()
}

/// Labels one per line in the same encoding the readers accept.
pub fn format_labels(labels: &[Label]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

pub fn format_hierarchy(dag: &HierarchyDag) -> String {
    dag.arcs().iter().map(|(p, c)| format!("{p} {c}\n")).collect()
}

pub fn format_network(net: &FlowNetwork) -> String {
    let mut out = format!("nodes {} arcs {}\n", net.num_nodes(), net.arcs().len());
    for (t, h) in net.arcs() {
        out.push_str(&format!("{t} {h}\n"));
    }
    for (node, b) in net.supply().iter().enumerate() {
        out.push_str(&format!("{node} {b}\n"));
    }
    out
}

pub fn save_features(path: impl AsRef<Path>, x: &Matrix) -> Result<()> {
    Ok(fs::write(path, format_features(x))?)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &[Label]) -> Result<()> {
    Ok(fs::write(path, format_labels(labels))?)
}
