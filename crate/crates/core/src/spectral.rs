//! Transfer functions of partitioned networks and AR models, H-infinity
//! norms and distances over frequency grids, the optimal AR coefficient
//! sequence, and the computable exponential error bound.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsar::RegularizationConfig;
use crate::netgen::{spectral_radius, PartitionedNetwork};

type CMatrix = DMatrix<Complex<f64>>;

/// Condition estimate above which a frequency-response matrix is treated
/// as singular.
const SINGULAR_COND: f64 = 1e14;

/// How an AR model was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    OptimalFromNetwork,
    Lsar,
    LsarRegularized,
}

/// An auto-regressive model `x(k+1) = sum_{i<tau} mats[i] x(k-i) + u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ARModel {
    mats: Vec<DMatrix<f64>>,
    pub provenance: Provenance,
    pub reg: Option<RegularizationConfig>,
}

impl ARModel {
    pub fn new(
        mats: Vec<DMatrix<f64>>,
        provenance: Provenance,
        reg: Option<RegularizationConfig>,
    ) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::invalid("AR model needs at least one matrix"));
        }
        let n_m = mats[0].nrows();
        if n_m == 0 {
            return Err(Error::invalid("AR model dimension must be positive"));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.nrows() != n_m || m.ncols() != n_m {
                return Err(Error::invalid(format!(
                    "AR matrix {i} must be {n_m}x{n_m}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("AR coefficients must be finite"));
            }
        }
        Ok(Self {
            mats,
            provenance,
            reg,
        })
    }

    /// Model order tau.
    pub fn order(&self) -> usize {
        self.mats.len()
    }

    /// Manifest dimension.
    pub fn dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn mats(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    /// Spectral norm of each coefficient block.
    pub fn block_norms(&self) -> Vec<f64> {
        self.mats
            .iter()
            .map(|m| {
                if m.is_empty() {
                    0.0
                } else {
                    m.clone().svd(false, false).singular_values[0]
                }
            })
            .collect()
    }
}

/// An evaluable transfer function from manifest input to manifest state,
/// in partitioned-state form or AR form.
#[derive(Debug, Clone)]
pub enum TransferFn {
    /// `(zI - A11 - A12 (zI - A22)^-1 A21)^-1`
    State(PartitionedNetwork),
    /// `(zI - sum_i z^-i mats[i])^-1`
    Ar(ARModel),
}

/// Manifest transfer function of the full partitioned network.
pub fn manifest_tf(net: &PartitionedNetwork) -> TransferFn {
    TransferFn::State(net.clone())
}

/// Transfer function of an AR model.
pub fn ar_tf(model: &ARModel) -> TransferFn {
    TransferFn::Ar(model.clone())
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

/// Frequency evaluator with the omega-independent work done once: complex
/// copies of the coefficient blocks and, for the partitioned form, a
/// Hessenberg factorization `A22 = Q H Q^T` so each frequency costs
/// O(n_l^2) instead of a fresh O(n_l^3) factorization.
enum Evaluator {
    State {
        a11: CMatrix,
        /// `A12 Q`
        a12q: CMatrix,
        /// `Q^T A21`
        qta21: CMatrix,
        /// upper Hessenberg similarity image of `A22`
        hess: CMatrix,
    },
    Ar {
        mats: Vec<CMatrix>,
    },
}

/// Solves `(z I - H) X = B` in place for upper Hessenberg `H`, by adjacent
/// -row elimination with partial pivoting. Returns `None` on a zero pivot.
fn hessenberg_solve(hess: &CMatrix, z: Complex<f64>, rhs: &mut CMatrix) -> Option<()> {
    let n = hess.nrows();
    let mut m = -hess.clone();
    for i in 0..n {
        m[(i, i)] += z;
    }
    for k in 0..n {
        if k + 1 < n && m[(k + 1, k)].norm_sqr() > m[(k, k)].norm_sqr() {
            m.swap_rows(k, k + 1);
            rhs.swap_rows(k, k + 1);
        }
        let pivot = m[(k, k)];
        if pivot == Complex::new(0.0, 0.0) {
            return None;
        }
        if k + 1 < n {
            let factor = m[(k + 1, k)] / pivot;
            if factor != Complex::new(0.0, 0.0) {
                for j in k..n {
                    let v = m[(k, j)];
                    m[(k + 1, j)] -= factor * v;
                }
                for j in 0..rhs.ncols() {
                    let v = rhs[(k, j)];
                    rhs[(k + 1, j)] -= factor * v;
                }
            }
        }
    }
    // back substitution on the upper triangle
    for j in 0..rhs.ncols() {
        for i in (0..n).rev() {
            let mut acc = rhs[(i, j)];
            for k in i + 1..n {
                acc -= m[(i, k)] * rhs[(k, j)];
            }
            rhs[(i, j)] = acc / m[(i, i)];
        }
    }
    Some(())
}

impl Evaluator {
    fn new(tf: &TransferFn) -> Self {
        match tf {
            TransferFn::State(net) => {
                let n_l = net.n_l();
                if n_l == 0 {
                    Evaluator::State {
                        a11: to_complex(net.a11()),
                        a12q: CMatrix::zeros(net.n_m(), 0),
                        qta21: CMatrix::zeros(0, net.n_m()),
                        hess: CMatrix::zeros(0, 0),
                    }
                } else {
                    let hess = net.a22().clone().hessenberg();
                    let q = hess.q();
                    Evaluator::State {
                        a11: to_complex(net.a11()),
                        a12q: to_complex(&(net.a12() * &q)),
                        qta21: to_complex(&(q.transpose() * net.a21())),
                        hess: to_complex(&hess.h()),
                    }
                }
            }
            TransferFn::Ar(model) => Evaluator::Ar {
                mats: model.mats().iter().map(to_complex).collect(),
            },
        }
    }

    /// The inverse-form matrix `M(omega) = T(omega)^-1`.
    fn inverse_matrix_at(&self, omega: f64) -> Result<CMatrix> {
        let z = Complex::from_polar(1.0, omega);
        match self {
            Evaluator::State {
                a11,
                a12q,
                qta21,
                hess,
            } => {
                let n_m = a11.nrows();
                let mut m = CMatrix::identity(n_m, n_m) * z;
                m -= a11;
                if hess.nrows() > 0 {
                    let mut solved = qta21.clone();
                    hessenberg_solve(hess, z, &mut solved)
                        .ok_or(Error::SingularAt { omega })?;
                    if solved.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        // latent resolvent blew up: z sits on a latent pole
                        return Err(Error::SingularAt { omega });
                    }
                    m -= a12q * solved;
                }
                Ok(m)
            }
            Evaluator::Ar { mats } => {
                let n_m = mats[0].nrows();
                let mut m = CMatrix::identity(n_m, n_m) * z;
                let zinv = z.inv();
                let mut w = Complex::new(1.0, 0.0); // z^-i
                for mat in mats {
                    let mut scaled = mat.clone();
                    scaled *= w;
                    m -= scaled;
                    w *= zinv;
                }
                Ok(m)
            }
        }
    }

    fn matrix_at(&self, omega: f64) -> Result<CMatrix> {
        let m = self.inverse_matrix_at(omega)?;
        let sv = m.clone().svd(false, false).singular_values;
        let smax = sv[0];
        let smin = sv[sv.len() - 1];
        if !(smin.is_finite() && smax.is_finite()) || smin * SINGULAR_COND <= smax {
            return Err(Error::SingularAt { omega });
        }
        m.lu().try_inverse().ok_or(Error::SingularAt { omega })
    }

    fn sigma_max_at(&self, omega: f64) -> Result<f64> {
        let m = self.inverse_matrix_at(omega)?;
        let sv = m.svd(false, false).singular_values;
        let smax = sv[0];
        let smin = sv[sv.len() - 1];
        if !(smin.is_finite() && smax.is_finite()) || smin * SINGULAR_COND <= smax {
            return Err(Error::SingularAt { omega });
        }
        Ok(1.0 / smin)
    }
}

impl TransferFn {
    pub fn n_m(&self) -> usize {
        match self {
            TransferFn::State(net) => net.n_m(),
            TransferFn::Ar(model) => model.dim(),
        }
    }

    /// The inverse-form matrix `M(omega) = T(omega)^-1`, assembled without
    /// inverting the outer system.
    pub fn inverse_matrix_at(&self, omega: f64) -> Result<CMatrix> {
        Evaluator::new(self).inverse_matrix_at(omega)
    }

    /// `T(omega)`, with a singularity error when the inverse form has a
    /// condition estimate above 1e14.
    pub fn matrix_at(&self, omega: f64) -> Result<CMatrix> {
        Evaluator::new(self).matrix_at(omega)
    }

    /// Largest singular value of `T(omega)`, computed as the reciprocal of
    /// the smallest singular value of the inverse form.
    pub fn sigma_max_at(&self, omega: f64) -> Result<f64> {
        Evaluator::new(self).sigma_max_at(omega)
    }
}

/// The optimal AR sequence of the manifest subnetwork:
/// `mats[0] = A11`, `mats[i] = A12 A22^(i-1) A21`.
pub fn optimal_ar(net: &PartitionedNetwork, tau: usize) -> ARModel {
    assert!(tau >= 1, "model order must be at least 1");
    let mut mats = Vec::with_capacity(tau);
    mats.push(net.a11().clone());
    if tau > 1 {
        // running product A22^(i-1) A21
        let mut prod = net.a21().clone();
        for _ in 1..tau {
            mats.push(net.a12() * &prod);
            prod = net.a22() * prod;
        }
    }
    ARModel::new(mats, Provenance::OptimalFromNetwork, None)
        .expect("network blocks give consistent AR matrices")
}

/// Maximum of a scalar frequency response over `[-pi, pi]`: a uniform grid
/// followed by golden-section refinement around the grid argmax. The grid
/// maximum is exact under any evaluation order, so parallel evaluation
/// cannot change the result.
fn sup_over_grid<F>(f: F, grid_size: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if grid_size < 2 {
        return Err(Error::invalid("grid size must be at least 2"));
    }
    let step = 2.0 * std::f64::consts::PI / (grid_size as f64 - 1.0);
    let omega_at = |i: usize| -std::f64::consts::PI + step * i as f64;
    let best = (0..grid_size)
        .into_par_iter()
        .map(|i| {
            let w = omega_at(i);
            f(w).map(|v| (v, i))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                // deterministic argmax: larger value, ties to smaller index
                Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                })
            },
        )?;
    let (mut fmax, argmax) = best;

    // golden refinement on the bracket one grid step either side
    let lo = (omega_at(argmax) - step).max(-std::f64::consts::PI);
    let hi = (omega_at(argmax) + step).min(std::f64::consts::PI);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > 1e-12 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
        fmax = fmax.max(f1.max(f2));
    }
    Ok(fmax)
}

/// H-infinity norm: sup over omega of the largest singular value, refined
/// from a `grid_size`-point grid. A certified lower bound on the true sup.
pub fn hinf_norm(t: &TransferFn, grid_size: usize) -> Result<f64> {
    let ev = Evaluator::new(t);
    sup_over_grid(|w| ev.sigma_max_at(w), grid_size)
}

/// H-infinity norm of the pointwise difference `t1 - t2`.
pub fn hinf_distance(t1: &TransferFn, t2: &TransferFn, grid_size: usize) -> Result<f64> {
    if t1.n_m() != t2.n_m() {
        return Err(Error::invalid(format!(
            "transfer function dimensions differ: {} vs {}",
            t1.n_m(),
            t2.n_m()
        )));
    }
    let e1 = Evaluator::new(t1);
    let e2 = Evaluator::new(t2);
    sup_over_grid(
        |w| {
            let d = e1.matrix_at(w)? - e2.matrix_at(w)?;
            Ok(d.svd(false, false).singular_values[0])
        },
        grid_size,
    )
}

/// Smallest verified constant with `||a22^i|| <= kappa * rho_bar^i` for all
/// `i <= horizon`:  `kappa = max_i ||a22^i|| / rho_bar^i`.
pub fn kappa_for(a22: &DMatrix<f64>, rho_bar: f64, horizon: usize) -> Result<f64> {
    let rho = spectral_radius(a22)?;
    if !(rho_bar > rho && rho_bar < 1.0) {
        return Err(Error::invalid(format!(
            "rho_bar must lie in (rho(a22), 1) = ({rho}, 1), got {rho_bar}"
        )));
    }
    if horizon < a22.nrows() {
        return Err(Error::invalid(format!(
            "horizon {horizon} below latent dimension {}",
            a22.nrows()
        )));
    }
    if a22.is_empty() {
        return Ok(1.0);
    }
    let spec_norm = |m: &DMatrix<f64>| m.clone().svd(false, false).singular_values[0];
    let mut kappa: f64 = 1.0; // i = 0 term: ||I|| / 1
    let mut power = DMatrix::<f64>::identity(a22.nrows(), a22.ncols());
    let mut weight = 1.0;
    for _ in 1..=horizon {
        power = &power * a22;
        weight *= rho_bar;
        kappa = kappa.max(spec_norm(&power) / weight);
    }
    Ok(kappa)
}

/// [`kappa_for`] with the horizon grown automatically (starting from
/// `max(n_l, 200)`) until the last ratio falls below 1e-3 of the running
/// maximum, i.e. comfortably past the transient.
pub fn kappa_for_auto(a22: &DMatrix<f64>, rho_bar: f64) -> Result<f64> {
    let rho = spectral_radius(a22)?;
    if !(rho_bar > rho && rho_bar < 1.0) {
        return Err(Error::invalid(format!(
            "rho_bar must lie in (rho(a22), 1) = ({rho}, 1), got {rho_bar}"
        )));
    }
    if a22.is_empty() {
        return Ok(1.0);
    }
    let spec_norm = |m: &DMatrix<f64>| m.clone().svd(false, false).singular_values[0];
    let mut kappa: f64 = 1.0;
    let mut power = DMatrix::<f64>::identity(a22.nrows(), a22.ncols());
    let mut weight = 1.0;
    let mut i = 0usize;
    let min_horizon = a22.nrows().max(200);
    loop {
        i += 1;
        power = &power * a22;
        weight *= rho_bar;
        let ratio = spec_norm(&power) / weight;
        kappa = kappa.max(ratio);
        if i >= min_horizon && (ratio <= 1e-3 * kappa || i >= 100_000) {
            return Ok(kappa);
        }
    }
}

/// The computable pieces of the exponential error bound: for each order
/// `tau`, `gamma(tau)` and `bound(tau) = gamma(tau) * rho_bar^tau`, with the
/// certified `(rho_bar, kappa)` pair.
#[derive(Debug, Clone)]
pub struct TheoryBounds {
    pub rho_bar: f64,
    pub kappa: f64,
    /// `gamma[tau - 1]` is gamma(tau), tau = 1..=tau_max.
    pub gamma: Vec<f64>,
    /// `bound[tau - 1] = gamma(tau) * rho_bar^tau`.
    pub bound: Vec<f64>,
}

impl TheoryBounds {
    pub fn gamma_at(&self, tau: usize) -> f64 {
        self.gamma[tau - 1]
    }

    pub fn bound_at(&self, tau: usize) -> f64 {
        self.bound[tau - 1]
    }

    pub fn tau_max(&self) -> usize {
        self.gamma.len()
    }
}

/// Default pinch of `rho_bar` halfway between `rho(a22)` and 1.
pub fn default_rho_bar(net: &PartitionedNetwork) -> Result<f64> {
    let rho = spectral_radius(net.a22())?;
    if rho >= 1.0 {
        return Err(Error::invalid(format!(
            "latent block is not Schur stable (rho = {rho})"
        )));
    }
    Ok((rho + 1.0) / 2.0)
}

/// Tabulates `gamma(tau) = kappa ||T|| ||A12|| ||A21|| / (rho_bar -
/// rho_bar^2) * ||T_ar(., tau)||` and the bound `gamma(tau) rho_bar^tau`
/// for `tau = 1..=tau_max`.
pub fn theory_bound(
    net: &PartitionedNetwork,
    rho_bar: Option<f64>,
    tau_max: usize,
    grid_size: usize,
) -> Result<TheoryBounds> {
    if tau_max == 0 {
        return Err(Error::invalid("tau_max must be at least 1"));
    }
    let rho_bar = match rho_bar {
        Some(r) => r,
        None => default_rho_bar(net)?,
    };
    let kappa = kappa_for_auto(net.a22(), rho_bar)?;
    let spec_norm = |m: &DMatrix<f64>| {
        if m.is_empty() {
            0.0
        } else {
            m.clone().svd(false, false).singular_values[0]
        }
    };
    let t_norm = hinf_norm(&manifest_tf(net), grid_size)?;
    let a12_norm = spec_norm(net.a12());
    let a21_norm = spec_norm(net.a21());
    let prefix = kappa * t_norm * a12_norm * a21_norm / (rho_bar - rho_bar * rho_bar);

    let mut gamma = Vec::with_capacity(tau_max);
    let mut bound = Vec::with_capacity(tau_max);
    for tau in 1..=tau_max {
        let ar_norm = hinf_norm(&ar_tf(&optimal_ar(net, tau)), grid_size)?;
        let g = prefix * ar_norm;
        gamma.push(g);
        bound.push(g * rho_bar.powi(tau as i32));
    }
    Ok(TheoryBounds {
        rho_bar,
        kappa,
        gamma,
        bound,
    })
}
