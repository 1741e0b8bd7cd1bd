//! File formats: network and AR-model JSON, time-series CSV, bound-table
//! CSV, and graph exports. Writers are deterministic (fixed field order,
//! shortest round-trip float formatting), so identical inputs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::connectivity::ManifestGraph;
use crate::error::{Error, Result};
use crate::lsar::RegularizationConfig;
use crate::netgen::{HigherOrderNetwork, PartitionedNetwork};
use crate::simulate::{TimeSeriesData, RNG_ALGORITHM};
use crate::spectral::{ARModel, Provenance, TheoryBounds};

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_mat(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::format(format!(
            "{name}: expected {nrows} rows, found {}",
            rows.len()
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::format(format!(
                "{name}: row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(Error::format(format!("{name}: non-finite entry {v}")));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// On-disk schema of a partitioned network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n_m: usize,
    pub n_l: usize,
    pub a11: Vec<Vec<f64>>,
    pub a12: Vec<Vec<f64>>,
    pub a21: Vec<Vec<f64>>,
    pub a22: Vec<Vec<f64>>,
    pub manifest_labels: Vec<usize>,
    pub latent_labels: Vec<usize>,
}

impl NetworkFile {
    pub fn from_network(net: &PartitionedNetwork) -> Self {
        Self {
            n_m: net.n_m(),
            n_l: net.n_l(),
            a11: mat_to_rows(net.a11()),
            a12: mat_to_rows(net.a12()),
            a21: mat_to_rows(net.a21()),
            a22: mat_to_rows(net.a22()),
            manifest_labels: net.manifest_labels().to_vec(),
            latent_labels: net.latent_labels().to_vec(),
        }
    }

    pub fn into_network(self) -> Result<PartitionedNetwork> {
        let (n_m, n_l) = (self.n_m, self.n_l);
        PartitionedNetwork::new(
            rows_to_mat(&self.a11, n_m, n_m, "a11")?,
            rows_to_mat(&self.a12, n_m, n_l, "a12")?,
            rows_to_mat(&self.a21, n_l, n_m, "a21")?,
            rows_to_mat(&self.a22, n_l, n_l, "a22")?,
            self.manifest_labels,
            self.latent_labels,
        )
    }
}

fn json_context(path: &Path, err: &serde_json::Error) -> Error {
    Error::format(format!(
        "{}: line {}, column {}: {err}",
        path.display(),
        err.line(),
        err.column()
    ))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| json_context(path, &e))
}

pub fn write_network_json(net: &PartitionedNetwork, path: &Path) -> Result<()> {
    write_json(&NetworkFile::from_network(net), path)
}

pub fn read_network_json(path: &Path) -> Result<PartitionedNetwork> {
    read_json::<NetworkFile>(path)?.into_network()
}

/// On-disk schema of a higher-order network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HigherOrderFile {
    pub nu: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub n_m: usize,
}

pub fn write_higher_order_json(hon: &HigherOrderNetwork, path: &Path) -> Result<()> {
    write_json(
        &HigherOrderFile {
            nu: hon.order(),
            coeffs: hon.coeffs().iter().map(mat_to_rows).collect(),
            n_m: hon.n_m(),
        },
        path,
    )
}

pub fn read_higher_order_json(path: &Path) -> Result<HigherOrderNetwork> {
    let file: HigherOrderFile = read_json(path)?;
    if file.coeffs.len() != file.nu {
        return Err(Error::format(format!(
            "{}: nu = {} but {} coefficient matrices",
            path.display(),
            file.nu,
            file.coeffs.len()
        )));
    }
    let n = file.coeffs.first().map_or(0, |c| c.len());
    let coeffs = file
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| rows_to_mat(c, n, n, &format!("coeffs[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    HigherOrderNetwork::new(coeffs, file.n_m)
}

/// On-disk schema of an AR model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ARModelFile {
    pub n_m: usize,
    pub tau: usize,
    pub mats: Vec<Vec<Vec<f64>>>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg: Option<RegularizationConfig>,
}

pub fn write_armodel_json(model: &ARModel, path: &Path) -> Result<()> {
    write_json(
        &ARModelFile {
            n_m: model.dim(),
            tau: model.order(),
            mats: model.mats().iter().map(mat_to_rows).collect(),
            provenance: model.provenance,
            reg: model.reg,
        },
        path,
    )
}

pub fn read_armodel_json(path: &Path) -> Result<ARModel> {
    let file: ARModelFile = read_json(path)?;
    if file.mats.len() != file.tau {
        return Err(Error::format(format!(
            "{}: tau = {} but {} matrices",
            path.display(),
            file.tau,
            file.mats.len()
        )));
    }
    let mats = file
        .mats
        .iter()
        .enumerate()
        .map(|(i, m)| rows_to_mat(m, file.n_m, file.n_m, &format!("mats[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    ARModel::new(mats, file.provenance, file.reg)
}

/// Shortest round-trip scientific notation; reading the text back yields
/// the identical double.
fn fmt_float(v: f64) -> String {
    format!("{v:e}")
}

/// Writes a record as `t,y1..y{n_m}[,u1..u{n_m}]` rows, one per sample,
/// preceded by `# key=value` annotation lines (generator identity, seed,
/// dt label) when known.
pub fn write_timeseries_csv(ts: &TimeSeriesData, path: &Path) -> Result<()> {
    let n_m = ts.n_m();
    let mut text = String::new();
    let _ = writeln!(text, "# rng={RNG_ALGORITHM}");
    if let Some(seed) = ts.seed {
        let _ = writeln!(text, "# seed={seed}");
    }
    if let Some(dt) = &ts.dt_label {
        let _ = writeln!(text, "# dt={dt}");
    }
    text.push('t');
    for i in 1..=n_m {
        let _ = write!(text, ",y{i}");
    }
    if ts.inputs().is_some() {
        for i in 1..=n_m {
            let _ = write!(text, ",u{i}");
        }
    }
    text.push('\n');
    for k in 0..ts.len() {
        let _ = write!(text, "{}", k + 1);
        for i in 0..n_m {
            let _ = write!(text, ",{}", fmt_float(ts.outputs()[(i, k)]));
        }
        if let Some(u) = ts.inputs() {
            for i in 0..n_m {
                let _ = write!(text, ",{}", fmt_float(u[(i, k)]));
            }
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a time-series CSV. Input columns are optional, so externally
/// recorded data with only `y` columns loads too.
pub fn read_timeseries_csv(path: &Path) -> Result<TimeSeriesData> {
    let text = std::fs::read_to_string(path)?;
    let mut seed = None;
    let mut dt_label = None;
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        for part in rest.split_whitespace() {
            if let Some(v) = part.strip_prefix("seed=") {
                seed = v.parse::<u64>().ok();
            } else if let Some(v) = part.strip_prefix("dt=") {
                dt_label = Some(v.to_string());
            }
        }
        lines.next();
    }
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::format(format!("{}: missing header row", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(Error::format(format!(
            "{}: line {}: header must start with 't'",
            path.display(),
            header_no + 1
        )));
    }
    let n_y = cols.iter().skip(1).take_while(|c| c.starts_with('y')).count();
    let n_u = cols.len() - 1 - n_y;
    if n_y == 0 {
        return Err(Error::format(format!(
            "{}: line {}: no y columns in header",
            path.display(),
            header_no + 1
        )));
    }
    for (i, c) in cols.iter().skip(1).enumerate() {
        let expect = if i < n_y {
            format!("y{}", i + 1)
        } else {
            format!("u{}", i + 1 - n_y)
        };
        if *c != expect {
            return Err(Error::format(format!(
                "{}: line {}: column {} is '{c}', expected '{expect}'",
                path.display(),
                header_no + 1,
                i + 2
            )));
        }
    }
    if n_u != 0 && n_u != n_y {
        return Err(Error::format(format!(
            "{}: line {}: {n_u} input columns for {n_y} output columns",
            path.display(),
            header_no + 1
        )));
    }

    let mut y_rows: Vec<Vec<f64>> = Vec::new();
    let mut u_rows: Vec<Vec<f64>> = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::format(format!(
                "{}: line {}: {} fields, expected {}",
                path.display(),
                no + 1,
                fields.len(),
                cols.len()
            )));
        }
        let parse = |idx: usize| -> Result<f64> {
            fields[idx].trim().parse::<f64>().map_err(|_| {
                Error::format(format!(
                    "{}: line {}: field '{}' ({}) is not a number",
                    path.display(),
                    no + 1,
                    cols[idx],
                    fields[idx]
                ))
            })
        };
        parse(0)?; // t column: validated, not stored
        let mut y = Vec::with_capacity(n_y);
        for i in 0..n_y {
            y.push(parse(1 + i)?);
        }
        y_rows.push(y);
        if n_u > 0 {
            let mut u = Vec::with_capacity(n_u);
            for i in 0..n_u {
                u.push(parse(1 + n_y + i)?);
            }
            u_rows.push(u);
        }
    }
    if y_rows.is_empty() {
        return Err(Error::format(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let n = y_rows.len();
    let outputs = DMatrix::from_fn(n_y, n, |i, k| y_rows[k][i]);
    let inputs = if n_u > 0 {
        Some(DMatrix::from_fn(n_y, n, |i, k| u_rows[k][i]))
    } else {
        None
    };
    let mut ts = TimeSeriesData::new(outputs, inputs)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    ts.seed = seed;
    ts.dt_label = dt_label;
    Ok(ts)
}

/// `tau,gamma,bound` rows for a tabulated theory bound.
pub fn write_bound_table_csv(bounds: &TheoryBounds, path: &Path) -> Result<()> {
    let mut text = String::from("tau,gamma,bound\n");
    for tau in 1..=bounds.tau_max() {
        let _ = writeln!(
            text,
            "{tau},{},{}",
            fmt_float(bounds.gamma_at(tau)),
            fmt_float(bounds.bound_at(tau))
        );
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Graph export: adjacency lists with weights and orders. Node ids are
/// 1-based manifest positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n_m: usize,
    pub threshold: f64,
    pub direct: Vec<DirectEdge>,
    pub indirect: Vec<IndirectEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectEdge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndirectEdge {
    pub src: usize,
    pub dst: usize,
    pub orders: Vec<usize>,
    pub min_order: usize,
}

impl GraphFile {
    pub fn from_graph(graph: &ManifestGraph) -> Self {
        let n_m = graph.n_m();
        let mut direct = Vec::new();
        let mut indirect = Vec::new();
        for q in 0..n_m {
            for p in 0..n_m {
                if graph.has_direct(q, p) {
                    direct.push(DirectEdge {
                        src: p + 1,
                        dst: q + 1,
                        weight: graph.direct()[(q, p)],
                    });
                }
                let orders = graph.indirect_orders(q, p);
                if !orders.is_empty() {
                    indirect.push(IndirectEdge {
                        src: p + 1,
                        dst: q + 1,
                        orders: orders.to_vec(),
                        min_order: orders[0],
                    });
                }
            }
        }
        direct.sort_by_key(|e| (e.src, e.dst));
        indirect.sort_by_key(|e| (e.src, e.dst));
        Self {
            n_m,
            threshold: graph.threshold_used(),
            direct,
            indirect,
        }
    }
}

pub fn write_graph_json(graph: &ManifestGraph, path: &Path) -> Result<()> {
    write_json(&GraphFile::from_graph(graph), path)
}

/// Plot-ready edge list: `src,dst,kind,weight_or_order`, direct edges
/// first (weight), then indirect pairs (minimal order).
pub fn write_graph_edge_csv(graph: &ManifestGraph, path: &Path) -> Result<()> {
    let file = GraphFile::from_graph(graph);
    let mut text = String::from("src,dst,kind,weight_or_order\n");
    for e in &file.direct {
        let _ = writeln!(text, "{},{},direct,{}", e.src, e.dst, fmt_float(e.weight));
    }
    for e in &file.indirect {
        let _ = writeln!(text, "{},{},indirect,{}", e.src, e.dst, e.min_order);
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_fit_report_json(report: &crate::lsar::FitReport, path: &Path) -> Result<()> {
    write_json(report, path)
}
