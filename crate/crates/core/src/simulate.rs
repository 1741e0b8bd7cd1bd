//! Stochastic simulation of a partitioned network: white Gaussian input on
//! the manifest nodes, zero input on the (passive) latent nodes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::netgen::{stability_report, PartitionedNetwork};

/// Identity of the generator behind `gaussian_input`, recorded in data
/// files so archived runs stay reproducible.
pub const RNG_ALGORITHM: &str = "chacha8+std-normal/1";

/// Overflow guard: simulation aborts when any state magnitude passes this.
const OVERFLOW_GUARD: f64 = 1e100;

/// A manifest output record `y(1..N)` (column `k` holds `y(k+1)`), with the
/// driving inputs `u_m(0..N-1)` when they are known.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesData {
    outputs: DMatrix<f64>,
    inputs: Option<DMatrix<f64>>,
    pub seed: Option<u64>,
    pub dt_label: Option<String>,
}

impl TimeSeriesData {
    pub fn new(outputs: DMatrix<f64>, inputs: Option<DMatrix<f64>>) -> Result<Self> {
        if outputs.ncols() == 0 || outputs.nrows() == 0 {
            return Err(Error::invalid("time series must be nonempty"));
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("time series entries must be finite"));
        }
        if let Some(u) = &inputs {
            if u.shape() != outputs.shape() {
                return Err(Error::invalid(format!(
                    "inputs must match outputs shape {}x{}, got {}x{}",
                    outputs.nrows(),
                    outputs.ncols(),
                    u.nrows(),
                    u.ncols()
                )));
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("input entries must be finite"));
            }
        }
        Ok(Self {
            outputs,
            inputs,
            seed: None,
            dt_label: None,
        })
    }

    pub fn n_m(&self) -> usize {
        self.outputs.nrows()
    }

    /// Number of recorded samples N.
    pub fn len(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.ncols() == 0
    }

    /// `y(k)` for `k = 1..=N`.
    pub fn output(&self, k: usize) -> nalgebra::DVectorView<'_, f64> {
        self.outputs.column(k - 1)
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    pub fn inputs(&self) -> Option<&DMatrix<f64>> {
        self.inputs.as_ref()
    }

    /// Splits the record at `floor(fraction * N)` samples into a training
    /// prefix and a holdout suffix, each a standalone record.
    pub fn split(&self, fraction: f64) -> Result<(TimeSeriesData, TimeSeriesData)> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(Error::invalid("split fraction must be in (0, 1)"));
        }
        let n = self.len();
        let n_train = ((n as f64) * fraction).floor() as usize;
        if n_train == 0 || n_train >= n {
            return Err(Error::invalid(format!(
                "split {fraction} leaves an empty side of a {n}-sample record"
            )));
        }
        let take = |range: std::ops::Range<usize>| -> TimeSeriesData {
            TimeSeriesData {
                outputs: self.outputs.columns(range.start, range.len()).into_owned(),
                inputs: self
                    .inputs
                    .as_ref()
                    .map(|u| u.columns(range.start, range.len()).into_owned()),
                seed: self.seed,
                dt_label: self.dt_label.clone(),
            }
        };
        Ok((take(0..n_train), take(n_train..n)))
    }
}

/// `n_m x n` matrix of i.i.d. standard normal draws, column `k` being
/// `u_m(k)`. Deterministic per seed.
pub fn gaussian_input(n_m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    assert!(n_m >= 1 && n >= 1, "dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // column-major fill matches the draw order column by column
    DMatrix::from_fn(n_m, n, |_, _| rng.sample(StandardNormal))
}

/// Simulates `x(k+1) = A x(k) + [u_m(k); 0]` from `x(0) = x0` (zero when
/// absent) and records `y(k) = x_m(k)` for `k = 1..=n`, drawing the input
/// from `gaussian_input(n_m, n, seed)`.
pub fn simulate(
    net: &PartitionedNetwork,
    n: usize,
    seed: u64,
    x0: Option<&DVector<f64>>,
) -> Result<TimeSeriesData> {
    simulate_with_burn_in(net, n, seed, x0, 0)
}

/// As [`simulate`], but first runs `burn_in` extra steps and discards their
/// outputs, so the record starts closer to stationarity.
pub fn simulate_with_burn_in(
    net: &PartitionedNetwork,
    n: usize,
    seed: u64,
    x0: Option<&DVector<f64>>,
    burn_in: usize,
) -> Result<TimeSeriesData> {
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let total = n + burn_in;
    let inputs = gaussian_input(net.n_m(), total, seed);
    let mut ts = simulate_with_input(net, &inputs, x0)?;
    if burn_in > 0 {
        ts = TimeSeriesData {
            outputs: ts.outputs.columns(burn_in, n).into_owned(),
            inputs: ts.inputs.map(|u| u.columns(burn_in, n).into_owned()),
            seed: None,
            dt_label: None,
        };
    }
    ts.seed = Some(seed);
    Ok(ts)
}

/// Core recursion with a caller-supplied input sequence (column `k` is
/// `u_m(k)`). Warns, but does not fail, when the network is unstable;
/// aborts with a numeric-overflow error if the state actually blows up.
pub fn simulate_with_input(
    net: &PartitionedNetwork,
    inputs: &DMatrix<f64>,
    x0: Option<&DVector<f64>>,
) -> Result<TimeSeriesData> {
    let n_m = net.n_m();
    let n_state = net.n();
    if inputs.nrows() != n_m {
        return Err(Error::invalid(format!(
            "input rows {} != manifest count {n_m}",
            inputs.nrows()
        )));
    }
    let steps = inputs.ncols();
    if steps == 0 {
        return Err(Error::invalid("input sequence must be nonempty"));
    }
    let report = stability_report(net);
    if !report.stable {
        log::warn!(
            "simulating an unstable network (rho = {:.6}); trajectories may diverge",
            report.rho_full
        );
    }

    let a = net.full_matrix();
    let mut x = match x0 {
        Some(v) => {
            if v.len() != n_state {
                return Err(Error::invalid(format!(
                    "x0 length {} != state dimension {n_state}",
                    v.len()
                )));
            }
            v.clone()
        }
        None => DVector::zeros(n_state),
    };
    let mut next = DVector::zeros(n_state);
    let mut outputs = DMatrix::zeros(n_m, steps);
    for k in 0..steps {
        // next = A x + [u_m(k); 0]
        next.fill(0.0);
        next.rows_mut(0, n_m).copy_from(&inputs.column(k));
        next.gemv(1.0, &a, &x, 1.0);
        if next.iter().any(|v| !v.is_finite() || v.abs() > OVERFLOW_GUARD) {
            return Err(Error::NumericOverflow { step: k + 1 });
        }
        outputs.column_mut(k).copy_from(&next.rows(0, n_m));
        std::mem::swap(&mut x, &mut next);
    }
    TimeSeriesData::new(outputs, Some(inputs.clone()))
}
