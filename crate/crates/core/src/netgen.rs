//! Ground-truth network models: the manifest/latent partition of an LTI
//! adjacency matrix, stability checks, generators for the benchmark
//! topologies (directed ring, Erdős–Rényi), and the order-1 lifting of
//! higher-order difference equations.
//!
//! Convention: adjacency entry `(q, p)` is the weight of the directed edge
//! `p -> q`, so `x(k+1) = A x(k) + u(k)` propagates along edges.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An LTI network adjacency matrix split into manifest/latent blocks.
///
/// The first `n_m` states of the assembled system are the manifest nodes,
/// in the order given at partition time; label vectors remember the
/// original (1-based) node identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedNetwork {
    a11: DMatrix<f64>,
    a12: DMatrix<f64>,
    a21: DMatrix<f64>,
    a22: DMatrix<f64>,
    manifest_labels: Vec<usize>,
    latent_labels: Vec<usize>,
}

impl PartitionedNetwork {
    /// Assembles a network from its four blocks, checking dimensional
    /// consistency and label disjointness.
    pub fn new(
        a11: DMatrix<f64>,
        a12: DMatrix<f64>,
        a21: DMatrix<f64>,
        a22: DMatrix<f64>,
        manifest_labels: Vec<usize>,
        latent_labels: Vec<usize>,
    ) -> Result<Self> {
        let n_m = a11.nrows();
        let n_l = a22.nrows();
        if a11.ncols() != n_m {
            return Err(Error::invalid("a11 must be square"));
        }
        if a22.ncols() != n_l {
            return Err(Error::invalid("a22 must be square"));
        }
        if a12.shape() != (n_m, n_l) {
            return Err(Error::invalid(format!(
                "a12 must be {}x{}, got {}x{}",
                n_m,
                n_l,
                a12.nrows(),
                a12.ncols()
            )));
        }
        if a21.shape() != (n_l, n_m) {
            return Err(Error::invalid(format!(
                "a21 must be {}x{}, got {}x{}",
                n_l,
                n_m,
                a21.nrows(),
                a21.ncols()
            )));
        }
        if manifest_labels.len() != n_m || latent_labels.len() != n_l {
            return Err(Error::invalid("label lists must match block dimensions"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &l in manifest_labels.iter().chain(latent_labels.iter()) {
            if !seen.insert(l) {
                return Err(Error::invalid(format!("duplicate node label {l}")));
            }
        }
        for m in [&a11, &a12, &a21, &a22] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("adjacency entries must be finite"));
            }
        }
        Ok(Self {
            a11,
            a12,
            a21,
            a22,
            manifest_labels,
            latent_labels,
        })
    }

    pub fn n_m(&self) -> usize {
        self.a11.nrows()
    }

    pub fn n_l(&self) -> usize {
        self.a22.nrows()
    }

    pub fn n(&self) -> usize {
        self.n_m() + self.n_l()
    }

    pub fn a11(&self) -> &DMatrix<f64> {
        &self.a11
    }

    pub fn a12(&self) -> &DMatrix<f64> {
        &self.a12
    }

    pub fn a21(&self) -> &DMatrix<f64> {
        &self.a21
    }

    pub fn a22(&self) -> &DMatrix<f64> {
        &self.a22
    }

    pub fn manifest_labels(&self) -> &[usize] {
        &self.manifest_labels
    }

    pub fn latent_labels(&self) -> &[usize] {
        &self.latent_labels
    }

    /// The assembled `n x n` adjacency `[a11 a12; a21 a22]`.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let (n_m, n_l) = (self.n_m(), self.n_l());
        let mut a = DMatrix::zeros(n_m + n_l, n_m + n_l);
        a.view_mut((0, 0), (n_m, n_m)).copy_from(&self.a11);
        a.view_mut((0, n_m), (n_m, n_l)).copy_from(&self.a12);
        a.view_mut((n_m, 0), (n_l, n_m)).copy_from(&self.a21);
        a.view_mut((n_m, n_m), (n_l, n_l)).copy_from(&self.a22);
        a
    }

    /// Undoes the partition permutation, recovering the original matrix
    /// with entry `(q, p)` at the original label positions.
    pub fn unpermuted_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let full = self.full_matrix();
        let perm: Vec<usize> = self
            .manifest_labels
            .iter()
            .chain(self.latent_labels.iter())
            .map(|&l| l - 1)
            .collect();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(perm[i], perm[j])] = full[(i, j)];
            }
        }
        a
    }
}

/// A system of difference equations of order `nu`:
/// `x(k+1) = sum_i coeffs[i] x(k-i) + u(k)`, with the first
/// `manifest_count` states manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderNetwork {
    coeffs: Vec<DMatrix<f64>>,
    manifest_count: usize,
}

impl HigherOrderNetwork {
    pub fn new(coeffs: Vec<DMatrix<f64>>, manifest_count: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("at least one coefficient matrix required"));
        }
        let n = coeffs[0].nrows();
        for (i, c) in coeffs.iter().enumerate() {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::invalid(format!(
                    "coefficient {i} must be {n}x{n}, got {}x{}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        if manifest_count > n {
            return Err(Error::invalid("manifest_count exceeds dimension"));
        }
        Ok(Self {
            coeffs,
            manifest_count,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn n_m(&self) -> usize {
        self.manifest_count
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }
}

/// Spectral radii of the full network and of the latent block, with the
/// Schur-stability flags they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub rho_full: f64,
    pub rho_latent: f64,
    pub stable: bool,
    pub latent_stable: bool,
}

/// Largest eigenvalue modulus of a square matrix.
///
/// Uses the dense Schur decomposition with a bounded iteration budget;
/// highly defective matrices (e.g. pure relay shifts from order lifting)
/// can stall that iteration, in which case the radius is taken from the
/// Gelfand limit `||A^(2^j)||^(1/2^j)` by repeated squaring, which
/// converges from above and is exact for nilpotent inputs.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    let max_iter = 100.max(40 * m.nrows());
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, max_iter) {
        return Ok(schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max));
    }
    Ok(gelfand_radius(m))
}

/// `lim_k ||A^k||^(1/k)` via norm-tracked repeated squaring.
fn gelfand_radius(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 || !norm.is_finite() {
        return if norm == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let mut b = m / norm;
    let mut log_rho = norm.ln(); // log ||A^(2^j)|| / 2^j
    let mut halving = 0.5f64;
    for _ in 0..64 {
        b = &b * &b;
        let r = b.norm(); // <= 1 for the Frobenius norm of a unit matrix
        if r == 0.0 {
            return 0.0;
        }
        log_rho += r.ln() * halving;
        b /= r;
        halving *= 0.5;
    }
    log_rho.exp()
}

/// Radii and stability flags for a partitioned network.
pub fn stability_report(net: &PartitionedNetwork) -> StabilityReport {
    let rho_full = spectral_radius(&net.full_matrix()).expect("full matrix is square");
    let rho_latent = spectral_radius(net.a22()).expect("a22 is square");
    StabilityReport {
        rho_full,
        rho_latent,
        stable: rho_full < 1.0,
        latent_stable: rho_latent < 1.0,
    }
}

/// Partitions an `n x n` adjacency matrix, putting the given manifest
/// nodes first (in the given order) and the remaining nodes after them in
/// ascending index order. Indices are 1-based.
pub fn partition(a: &DMatrix<f64>, manifest_indices: &[usize]) -> Result<PartitionedNetwork> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("adjacency matrix must be square"));
    }
    if manifest_indices.is_empty() {
        return Err(Error::invalid("manifest index set must be nonempty"));
    }
    let mut is_manifest = vec![false; n];
    for &idx in manifest_indices {
        if idx == 0 || idx > n {
            return Err(Error::invalid(format!(
                "manifest index {idx} out of range 1..={n}"
            )));
        }
        if is_manifest[idx - 1] {
            return Err(Error::invalid(format!("duplicate manifest index {idx}")));
        }
        is_manifest[idx - 1] = true;
    }
    let manifest_labels: Vec<usize> = manifest_indices.to_vec();
    let latent_labels: Vec<usize> = (1..=n).filter(|&i| !is_manifest[i - 1]).collect();
    let perm: Vec<usize> = manifest_labels
        .iter()
        .chain(latent_labels.iter())
        .map(|&l| l - 1)
        .collect();

    let n_m = manifest_labels.len();
    let block = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            a[(perm[rows.start + i], perm[cols.start + j])]
        })
    };
    PartitionedNetwork::new(
        block(0..n_m, 0..n_m),
        block(0..n_m, n_m..n),
        block(n_m..n, 0..n_m),
        block(n_m..n, n_m..n),
        manifest_labels,
        latent_labels,
    )
}

/// Smallest power `tau22 <= max(n_l, 1)` with `||a22^tau22||_max <= tol`,
/// i.e. the nilpotency degree of an acyclic latent block. `None` when the
/// block is not nilpotent (Cayley-Hamilton caps the search at the
/// dimension).
pub fn latent_acyclicity_index(a22: &DMatrix<f64>, tol: f64) -> Option<usize> {
    assert!(tol >= 0.0, "tolerance must be nonnegative");
    assert_eq!(a22.nrows(), a22.ncols(), "a22 must be square");
    let n_l = a22.nrows();
    if n_l == 0 {
        return Some(1);
    }
    let mut power = a22.clone();
    for k in 1..=n_l {
        if power.amax() <= tol {
            return Some(k);
        }
        if k < n_l {
            power = &power * a22;
        }
    }
    None
}

/// Rewrites an order-`nu` system in order-1 partitioned form. The lifted
/// manifest state is `x_m(k)`; the lifted latent state stacks
/// `x_l(k), x_m(k-1), x_l(k-1), ..., x_m(k-nu+1), x_l(k-nu+1)`, with
/// identity relay blocks shifting the delayed copies forward each step.
pub fn lift_higher_order(hon: &HigherOrderNetwork) -> PartitionedNetwork {
    let nu = hon.order();
    let n = hon.n();
    let n_m = hon.n_m();
    let n_l = n - n_m;

    // block (r, c) of coefficient i: r, c in {manifest, latent}
    let coeff = |i: usize, r: bool, c: bool| -> DMatrix<f64> {
        let m = &hon.coeffs()[i];
        let (r0, rl) = if r { (0, n_m) } else { (n_m, n_l) };
        let (c0, cl) = if c { (0, n_m) } else { (n_m, n_l) };
        m.view((r0, c0), (rl, cl)).into_owned()
    };

    let lifted_latent = n_l + (nu - 1) * n;
    let mut a12 = DMatrix::zeros(n_m, lifted_latent);
    let mut a21 = DMatrix::zeros(lifted_latent, n_m);
    let mut a22 = DMatrix::zeros(lifted_latent, lifted_latent);

    // Column-block offsets within the lifted latent state: block 0 is
    // x_l(k); blocks (2d-1, 2d) are x_m(k-d), x_l(k-d) for d = 1..nu-1.
    let offsets: Vec<(usize, usize)> = {
        let mut v = Vec::with_capacity(2 * nu - 1);
        let mut off = 0;
        v.push((off, n_l));
        off += n_l;
        for _ in 1..nu {
            v.push((off, n_m));
            off += n_m;
            v.push((off, n_l));
            off += n_l;
        }
        v
    };

    // a12: [A^(0)_12, A^(1)_11, A^(1)_12, ..., A^(nu-1)_11, A^(nu-1)_12]
    a12.view_mut((0, 0), (n_m, n_l)).copy_from(&coeff(0, true, false));
    for d in 1..nu {
        let (o_m, _) = offsets[2 * d - 1];
        let (o_l, _) = offsets[2 * d];
        a12.view_mut((0, o_m), (n_m, n_m)).copy_from(&coeff(d, true, true));
        a12.view_mut((0, o_l), (n_m, n_l)).copy_from(&coeff(d, true, false));
    }

    // a21: [A^(0)_21; I_{n_m}; 0; ...; 0]
    a21.view_mut((0, 0), (n_l, n_m)).copy_from(&coeff(0, false, true));
    if nu > 1 {
        a21.view_mut((n_l, 0), (n_m, n_m)).fill_with_identity();
    }

    // a22 row block 0 (dynamics of x_l(k+1)):
    // [A^(0)_22, A^(1)_21, A^(1)_22, ..., A^(nu-1)_21, A^(nu-1)_22]
    a22.view_mut((0, 0), (n_l, n_l)).copy_from(&coeff(0, false, false));
    for d in 1..nu {
        let (o_m, _) = offsets[2 * d - 1];
        let (o_l, _) = offsets[2 * d];
        a22.view_mut((0, o_m), (n_l, n_m)).copy_from(&coeff(d, false, true));
        a22.view_mut((0, o_l), (n_l, n_l)).copy_from(&coeff(d, false, false));
    }
    // Relay rows: row block r >= 2 copies column block r - 2. (Row block 1,
    // x_m(k), is fed by the identity in a21 instead.)
    for r in 2..2 * nu - 1 {
        let (ro, rl) = offsets[r];
        let (co, cl) = offsets[r - 2];
        debug_assert_eq!(rl, cl);
        a22.view_mut((ro, co), (rl, cl)).fill_with_identity();
    }

    // Labels: x_i(k-d) gets label d*n + i, so delay-0 states keep their
    // original identifiers.
    let manifest_labels: Vec<usize> = (1..=n_m).collect();
    let mut latent_labels: Vec<usize> = (n_m + 1..=n).collect();
    for d in 1..nu {
        latent_labels.extend((1..=n_m).map(|i| d * n + i));
        latent_labels.extend((n_m + 1..=n).map(|i| d * n + i));
    }

    let a11 = coeff(0, true, true);
    PartitionedNetwork::new(a11, a12, a21, a22, manifest_labels, latent_labels)
        .expect("lifted blocks are dimensionally consistent")
}

/// Directed ring `1 -> 2 -> ... -> n -> 1` with uniform edge weight and
/// uniform self-loop weight, partitioned by the given manifest indices.
pub fn gen_ring(
    n: usize,
    edge_weight: f64,
    self_loop: f64,
    manifest_indices: &[usize],
) -> Result<PartitionedNetwork> {
    if n < 2 {
        return Err(Error::invalid("ring needs at least 2 nodes"));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[((i + 1) % n, i)] = edge_weight;
        a[(i, i)] = self_loop;
    }
    partition(&a, manifest_indices)
}

/// Weighted Erdős–Rényi digraph: each unordered pair gets both directed
/// edges with probability `p`, with independent uniform weights on
/// `(w_min, w_max)`; `n_manifest` manifest nodes are then drawn uniformly.
/// Pair scan, weight draws, and manifest selection all consume one seeded
/// stream, so the result is a pure function of the arguments.
pub fn gen_erdos_renyi(
    n: usize,
    p: f64,
    w_min: f64,
    w_max: f64,
    n_manifest: usize,
    seed: u64,
) -> Result<PartitionedNetwork> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("edge probability must be in [0, 1]"));
    }
    if w_min > w_max {
        return Err(Error::invalid("w_min must not exceed w_max"));
    }
    if n_manifest == 0 || n_manifest > n {
        return Err(Error::invalid("n_manifest must be in 1..=n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight_dist = rand::distr::Uniform::new(w_min, w_max)
        .map_err(|e| Error::invalid(format!("bad weight range: {e}")))?;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                a[(j, i)] = rng.sample(weight_dist); // edge i -> j
                a[(i, j)] = rng.sample(weight_dist); // edge j -> i
            }
        }
    }
    let mut manifest: Vec<usize> = rand::seq::index::sample(&mut rng, n, n_manifest)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    manifest.sort_unstable();
    partition(&a, &manifest)
}
