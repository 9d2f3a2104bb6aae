//! Text model files.
//!
//! ```text
//! ECRM-MODEL 1
//! kernel rbf 0.5
//! lambda 0.1 m 3 p 2 intercept none
//! <m input rows>
//! labels bits
//! <m label rows>
//! ```
//!
//! Additive models put `variant additive` on the second line and replace the
//! label block with the hierarchy and the coefficients:
//!
//! ```text
//! hierarchy d 3 arcs 2 neighborhood adjacent
//! <arcs, one `parent child` per line>
//! alpha
//! <m*d rows `a0 a1`, sample-major>
//! ```
//!
//! Floats are written in shortest round-trip form, so a saved model reloads
//! bit for bit. The factorization is recomputed on load.

use std::fs;
use std::path::Path;

use crate::additive::{AdditiveModel, Neighborhood};
use crate::error::{EcrmError, Result};
use crate::hierarchy::HierarchyDag;
use crate::kernel::{InterceptMode, KernelSpec, TrainedModel};
use crate::label::{Label, LabelKind};
use crate::linalg::Matrix;

use crate::data::parse_labels;

const MAGIC: &str = "ECRM-MODEL 1";

#[derive(Debug, Clone)]
pub enum SavedModel {
    Standard(TrainedModel),
    Additive(AdditiveModel),
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn kernel_line(kernel: &KernelSpec) -> String {
    match kernel {
        KernelSpec::Linear => "kernel linear".to_string(),
        KernelSpec::Rbf { gamma } => format!("kernel rbf {gamma}"),
    }
}

fn write_inputs(out: &mut String, inputs: &Matrix) {
    for row in inputs.rows_iter() {
        out.push_str(&join(row));
        out.push('\n');
    }
}

pub fn format_model(model: &SavedModel) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    match model {
        SavedModel::Standard(m) => {
            out.push_str(&kernel_line(m.kernel()));
            out.push('\n');
            out.push_str(&format!(
                "lambda {} m {} p {} intercept {}\n",
                m.lambda(),
                m.num_samples(),
                m.input_dim(),
                m.intercept().name()
            ));
            write_inputs(&mut out, m.inputs());
            out.push_str(&format!("labels {}\n", m.labels()[0].kind().name()));
            for label in m.labels() {
                out.push_str(&format!("{label}\n"));
            }
        }
        SavedModel::Additive(a) => {
            out.push_str("variant additive\n");
            out.push_str(&kernel_line(a.kernel()));
            out.push('\n');
            out.push_str(&format!(
                "lambda {} m {} p {} intercept none\n",
                a.lambda(),
                a.inputs().nrows(),
                a.inputs().ncols()
            ));
            write_inputs(&mut out, a.inputs());
            out.push_str(&format!(
                "hierarchy d {} arcs {} neighborhood {}\n",
                a.dag().len(),
                a.dag().arcs().len(),
                a.neighborhood().name()
            ));
            for (p, c) in a.dag().arcs() {
                out.push_str(&format!("{p} {c}\n"));
            }
            out.push_str("alpha\n");
            for pair in a.alpha().chunks(2) {
                out.push_str(&join(pair));
                out.push('\n');
            }
        }
    }
    out
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
    source: &'a str,
}

impl<'a> Reader<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| EcrmError::parse(self.source, self.pos + 1, format!("missing {what}")))?;
        self.pos += 1;
        Ok((self.pos, line))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> EcrmError {
        EcrmError::parse(self.source, line, msg)
    }

    fn floats(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let (lineno, line) = self.next(what)?;
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(lineno, format!("cannot parse {t:?} as a number"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != count {
            return Err(self.err(lineno, format!("expected {count} values in {what}, found {}", values.len())));
        }
        Ok(values)
    }
}

fn parse_kernel(r: &mut Reader<'_>) -> Result<KernelSpec> {
    let (lineno, line) = r.next("kernel line")?;
    let t: Vec<&str> = line.split_whitespace().collect();
    match t.as_slice() {
        ["kernel", "linear"] => Ok(KernelSpec::Linear),
        ["kernel", "rbf", g] => {
            let gamma = g.parse::<f64>().map_err(|_| r.err(lineno, "bad gamma"))?;
            KernelSpec::rbf(gamma).map_err(|e| r.err(lineno, e.to_string()))
        }
        _ => Err(r.err(lineno, "expected `kernel linear` or `kernel rbf <gamma>`")),
    }
}

fn parse_sizes(r: &mut Reader<'_>) -> Result<(f64, usize, usize, InterceptMode)> {
    let (lineno, line) = r.next("size line")?;
    let t: Vec<&str> = line.split_whitespace().collect();
    let bad = || r.err(lineno, "expected `lambda <f> m <int> p <int> intercept <none|centered>`");
    match t.as_slice() {
        ["lambda", l, "m", m, "p", p, "intercept", i] => Ok((
            l.parse().map_err(|_| bad())?,
            m.parse().map_err(|_| bad())?,
            p.parse().map_err(|_| bad())?,
            InterceptMode::from_name(i).ok_or_else(bad)?,
        )),
        _ => Err(bad()),
    }
}

pub fn parse_model(text: &str, source: &str) -> Result<SavedModel> {
    let mut r = Reader {
        lines: text.lines().collect(),
        pos: 0,
        source,
    };
    let (lineno, magic) = r.next("header")?;
    if magic.trim() != MAGIC {
        return Err(r.err(lineno, format!("expected `{MAGIC}`")));
    }
    let additive = r.lines.get(1).map(|l| l.trim()) == Some("variant additive");
    if additive {
        r.next("variant")?;
    }
    let kernel = parse_kernel(&mut r)?;
    let (lambda, m, p, intercept) = parse_sizes(&mut r)?;
    if m == 0 {
        return Err(r.err(r.pos, "model has no training samples"));
    }
    let mut data = Vec::with_capacity(m * p);
    for _ in 0..m {
        data.extend(r.floats(p, "input row")?);
    }
    let inputs = Matrix::from_vec(m, p, data)?;

    let model = if additive {
        let (lineno, line) = r.next("hierarchy line")?;
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || r.err(lineno, "expected `hierarchy d <int> arcs <int> neighborhood <self|adjacent>`");
        let (d, narcs, hood) = match t.as_slice() {
            ["hierarchy", "d", d, "arcs", a, "neighborhood", n] => (
                d.parse::<usize>().map_err(|_| bad())?,
                a.parse::<usize>().map_err(|_| bad())?,
                Neighborhood::from_name(n).ok_or_else(bad)?,
            ),
            _ => return Err(bad()),
        };
        let mut arcs = Vec::with_capacity(narcs);
        for _ in 0..narcs {
            let (lineno, line) = r.next("arc line")?;
            let t: Vec<&str> = line.split_whitespace().collect();
            let arc = match t.as_slice() {
                [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            arcs.push(arc.ok_or_else(|| r.err(lineno, "expected `parent child`"))?);
        }
        let dag = HierarchyDag::new(d, arcs)?;
        let (lineno, line) = r.next("alpha header")?;
        if line.trim() != "alpha" {
            return Err(r.err(lineno, "expected `alpha`"));
        }
        let mut alpha = Vec::with_capacity(2 * m * d);
        for _ in 0..m * d {
            alpha.extend(r.floats(2, "alpha row")?);
        }
        SavedModel::Additive(AdditiveModel::from_parts(kernel, lambda, dag, hood, inputs, alpha)?)
    } else {
        let (lineno, line) = r.next("labels header")?;
        let kind = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["labels", k] => LabelKind::from_name(k),
            _ => None,
        }
        .ok_or_else(|| r.err(lineno, "expected `labels <bits|ranks|real>`"))?;
        let start = r.pos;
        let end = start + m;
        if r.lines.len() < end {
            return Err(r.err(r.lines.len() + 1, "missing label rows"));
        }
        let block = r.lines[start..end].join("\n");
        let labels: Vec<Label> = parse_labels(&block, source, kind).map_err(|e| match e {
            EcrmError::Parse(mut p) => {
                p.line += start;
                EcrmError::Parse(p)
            }
            other => other,
        })?;
        r.pos = end;
        SavedModel::Standard(TrainedModel::fit(kernel, lambda, inputs, labels, intercept)?)
    };
    if let Some(extra) = r.lines[r.pos..].iter().position(|l| !l.trim().is_empty()) {
        return Err(r.err(r.pos + extra + 1, "unexpected trailing content"));
    }
    Ok(model)
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    Ok(fs::write(path, format_model(model))?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_model(&text, &path.display().to_string())
}
