//! Reproducible experiment sweeps: the error surface over data length,
//! model order, and seed, and the per-order optimal-error/bound table.
//! Cells are independent, seeded by a stable hash of their coordinates,
//! and assembled in sorted order, so parallel execution cannot change any
//! output byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::NetworkFile;
use crate::lsar::{lsar_fit, lsar_fit_regularized, RegularizationConfig};
use crate::netgen::PartitionedNetwork;
use crate::simulate::simulate;
use crate::spectral::{ar_tf, hinf_distance, manifest_tf, optimal_ar, theory_bound};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell RNG seed, a pure function of the cell coordinates.
pub fn cell_seed(seed_base: u64, n: usize, tau: usize, replicate: u64) -> u64 {
    let mut h = splitmix64(seed_base ^ 0xA076_1D64_78BD_642F);
    for w in [n as u64, tau as u64, replicate] {
        h = splitmix64(h ^ w);
    }
    h
}

/// Where the ground-truth network of a sweep comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    Path(PathBuf),
    Inline(NetworkFile),
}

impl NetworkSource {
    pub fn load(&self) -> Result<PartitionedNetwork> {
        match self {
            NetworkSource::Path(p) => crate::io::read_network_json(p),
            NetworkSource::Inline(f) => f.clone().into_network(),
        }
    }
}

fn default_grid() -> usize {
    4096
}

fn default_alpha() -> f64 {
    0.1
}

/// Sweep configuration, mirroring the command-line flags. Flags override
/// file values; the resolved form is echoed next to the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSource>,
    pub n_list: Vec<usize>,
    pub tau_list: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg: Option<RegularizationConfig>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.tau_list.is_empty() || self.seeds.is_empty() {
            return Err(Error::invalid(
                "n_list, tau_list, and seeds must all be nonempty",
            ));
        }
        let tau_max = *self.tau_list.iter().max().unwrap();
        for &n in &self.n_list {
            if n <= tau_max {
                return Err(Error::invalid(format!(
                    "data length {n} must exceed the largest model order {tau_max}"
                )));
            }
        }
        if self.grid_size < 2 {
            return Err(Error::invalid("grid size must be at least 2"));
        }
        if let Some(r) = &self.reg {
            r.validate()?;
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One `(N, tau, seed)` cell of the error surface. Failed cells keep
/// their row with the error column filled.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub n: usize,
    pub tau: usize,
    pub seed: u64,
    pub hinf_error: Option<f64>,
    pub coeff_error: Option<f64>,
    pub error: Option<String>,
}

/// Simulate/fit/compare for every `(N, tau, seed)` cell. Cells run in a
/// work pool; the returned rows are sorted by `(N, tau, seed)`.
pub fn error_surface(net: &PartitionedNetwork, config: &ExperimentConfig) -> Vec<SurfaceRow> {
    let mut cells = Vec::new();
    for &n in &config.n_list {
        for &tau in &config.tau_list {
            for &seed in &config.seeds {
                cells.push((n, tau, seed));
            }
        }
    }
    let truth = manifest_tf(net);
    let mut rows: Vec<SurfaceRow> = cells
        .into_par_iter()
        .map(|(n, tau, seed)| {
            let run = || -> Result<(f64, f64)> {
                let data = simulate(net, n, cell_seed(seed, n, tau, 0), None)?;
                let fit = match &config.reg {
                    Some(r) => lsar_fit_regularized(&data, tau, r)?,
                    None => lsar_fit(&data, tau)?,
                };
                let hinf = hinf_distance(&ar_tf(&fit), &truth, config.grid_size)?;
                let opt = optimal_ar(net, tau);
                let coeff = fit
                    .mats()
                    .iter()
                    .zip(opt.mats())
                    .map(|(a, b)| (a - b).amax())
                    .fold(0.0, f64::max);
                Ok((hinf, coeff))
            };
            match run() {
                Ok((hinf, coeff)) => SurfaceRow {
                    n,
                    tau,
                    seed,
                    hinf_error: Some(hinf),
                    coeff_error: Some(coeff),
                    error: None,
                },
                Err(e) => SurfaceRow {
                    n,
                    tau,
                    seed,
                    hinf_error: None,
                    coeff_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.n, r.tau, r.seed));
    rows
}

pub fn write_surface_csv(rows: &[SurfaceRow], path: &Path) -> Result<()> {
    let mut text = String::from("N,tau,seed,hinf_error,coeff_error,error\n");
    for r in rows {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.n,
            r.tau,
            r.seed,
            fmt(r.hinf_error),
            fmt(r.coeff_error),
            r.error.as_deref().unwrap_or("")
        );
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// `(tau, optimal_error, gamma, bound)` rows comparing the optimal-AR
/// error against the tabulated theory bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub tau: usize,
    pub optimal_error: f64,
    pub gamma: f64,
    pub bound: f64,
}

pub fn bound_table(
    net: &PartitionedNetwork,
    rho_bar: Option<f64>,
    tau_max: usize,
    grid_size: usize,
) -> Result<Vec<BoundRow>> {
    let bounds = theory_bound(net, rho_bar, tau_max, grid_size)?;
    let truth = manifest_tf(net);
    let mut rows = Vec::with_capacity(tau_max);
    for tau in 1..=tau_max {
        let err = hinf_distance(&ar_tf(&optimal_ar(net, tau)), &truth, grid_size)?;
        rows.push(BoundRow {
            tau,
            optimal_error: err,
            gamma: bounds.gamma_at(tau),
            bound: bounds.bound_at(tau),
        });
    }
    Ok(rows)
}

pub fn write_bound_rows_csv(rows: &[BoundRow], path: &Path) -> Result<()> {
    let mut text = String::from("tau,optimal_error,gamma,bound\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{:e},{:e},{:e}",
            r.tau, r.optimal_error, r.gamma, r.bound
        );
    }
    std::fs::write(path, text)?;
    Ok(())
}
