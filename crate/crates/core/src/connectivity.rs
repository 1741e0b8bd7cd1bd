//! Interpretation of AR coefficient blocks as a manifest interaction
//! graph: order-0 entries are direct edges, order-`i` entries are
//! interactions routed through `i` latent relay steps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::PartitionedNetwork;
use crate::spectral::ARModel;

/// How the presence threshold is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSpec {
    /// `theta = alpha * max |A_i(q,p)|` over all blocks;
    /// `exclude_diagonal` drops self-loops from the normalizing maximum
    /// (they usually dominate), not from the reported edges.
    Proportional { alpha: f64, exclude_diagonal: bool },
    /// A fixed cutoff, tested against the order-0 block only; higher
    /// blocks are not classified in this mode.
    Absolute { theta: f64 },
}

/// Classified manifest interaction structure. Pairs are matrix positions
/// `(q, p)`: entry `(q, p)` is the edge `p -> q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestGraph {
    n_m: usize,
    /// Thresholded copy of the order-0 block: entries below the threshold
    /// are exactly zero.
    direct: DMatrix<f64>,
    /// For each `(q, p)`, the sorted orders `i >= 1` whose block entry
    /// passes the threshold.
    indirect_orders: Vec<Vec<Vec<usize>>>,
    threshold: f64,
}

impl ManifestGraph {
    pub fn n_m(&self) -> usize {
        self.n_m
    }

    pub fn direct(&self) -> &DMatrix<f64> {
        &self.direct
    }

    pub fn has_direct(&self, q: usize, p: usize) -> bool {
        self.direct[(q, p)] != 0.0
    }

    pub fn indirect_orders(&self, q: usize, p: usize) -> &[usize] {
        &self.indirect_orders[q][p]
    }

    /// Smallest passing order for `(q, p)`, when any.
    pub fn min_order(&self, q: usize, p: usize) -> Option<usize> {
        self.indirect_orders[q][p].first().copied()
    }

    pub fn threshold_used(&self) -> f64 {
        self.threshold
    }

    /// Ordered pairs with at least one indirect order.
    pub fn indirect_pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for q in 0..self.n_m {
            for p in 0..self.n_m {
                if !self.indirect_orders[q][p].is_empty() {
                    v.push((q, p));
                }
            }
        }
        v
    }
}

/// Classifies with the paper's proportional rule: threshold
/// `alpha * max |A_i(q,p)|` over all blocks, diagonal included.
pub fn classify(model: &ARModel, alpha: f64) -> Result<ManifestGraph> {
    classify_with(
        model,
        &ThresholdSpec::Proportional {
            alpha,
            exclude_diagonal: false,
        },
    )
}

/// Classifies with an explicit threshold rule.
pub fn classify_with(model: &ARModel, spec: &ThresholdSpec) -> Result<ManifestGraph> {
    let n_m = model.dim();
    if n_m == 0 || model.mats().is_empty() {
        return Err(Error::invalid("cannot classify an empty model"));
    }
    let (theta, classify_higher) = match *spec {
        ThresholdSpec::Proportional {
            alpha,
            exclude_diagonal,
        } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::invalid("alpha must lie in [0, 1]"));
            }
            let mut max = 0.0f64;
            for mat in model.mats() {
                for q in 0..n_m {
                    for p in 0..n_m {
                        if exclude_diagonal && q == p {
                            continue;
                        }
                        max = max.max(mat[(q, p)].abs());
                    }
                }
            }
            (alpha * max, true)
        }
        ThresholdSpec::Absolute { theta } => {
            if !(theta >= 0.0 && theta.is_finite()) {
                return Err(Error::invalid("absolute threshold must be nonnegative"));
            }
            (theta, false)
        }
    };

    let passes = |v: f64| v != 0.0 && v.abs() >= theta;
    let direct = model.mats()[0].map(|v| if passes(v) { v } else { 0.0 });
    let mut indirect_orders = vec![vec![Vec::new(); n_m]; n_m];
    if classify_higher {
        for (i, mat) in model.mats().iter().enumerate().skip(1) {
            for q in 0..n_m {
                for p in 0..n_m {
                    if passes(mat[(q, p)]) {
                        indirect_orders[q][p].push(i);
                    }
                }
            }
        }
    }
    Ok(ManifestGraph {
        n_m,
        direct,
        indirect_orders,
        threshold: theta,
    })
}

/// A minimal latent-path order together with how to read it: the order
/// counts latent nodes on a path exactly only when the generating latent
/// subnetwork is acyclic; otherwise it is a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentPathOrder {
    pub order: usize,
    pub exact: bool,
}

/// Smallest order `i >= 1` whose block entry `(q, p)` passes the
/// proportional threshold. `p` and `q` are 0-based manifest positions;
/// `latent_acyclic` is the caller's knowledge about the generating
/// network and only affects the `exact` flag.
pub fn min_latent_path(
    model: &ARModel,
    p: usize,
    q: usize,
    alpha: f64,
    latent_acyclic: bool,
) -> Result<Option<LatentPathOrder>> {
    let n_m = model.dim();
    if p >= n_m || q >= n_m {
        return Err(Error::invalid(format!(
            "node positions must be below {n_m}, got p={p}, q={q}"
        )));
    }
    if p == q {
        return Err(Error::invalid("p and q must be distinct manifest nodes"));
    }
    let graph = classify(model, alpha)?;
    Ok(graph.min_order(q, p).map(|order| LatentPathOrder {
        order,
        exact: latent_acyclic,
    }))
}

/// Precision/recall of a classified graph against the generating network:
/// direct edges against the support of `a11`, indirect pairs against
/// latent-path reachability `p -> (latent)+ -> q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphComparison {
    pub direct_precision: f64,
    pub direct_recall: f64,
    pub direct_f1: f64,
    /// Fraction of all ordered pairs (diagonal included) whose direct
    /// classification matches the truth.
    pub direct_accuracy: f64,
    pub indirect_precision: f64,
    pub indirect_recall: f64,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    // empty-set convention: no predictions means perfect precision
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Latent-mediated reachability of the true network on supports: pair
/// `(q, p)` is reachable when some `a12 a22^(i-1) a21` walk connects them.
/// Boolean arithmetic avoids weight-cancellation coincidences.
fn latent_reachability(truth: &PartitionedNetwork, alpha: f64) -> Vec<Vec<bool>> {
    let n_m = truth.n_m();
    let n_l = truth.n_l();
    let nonzero = |v: f64| v.abs() > alpha;
    let mut reach = vec![vec![false; n_m]; n_m];
    if n_l == 0 {
        return reach;
    }
    // frontier[l][p]: latent node l reachable from manifest p in i steps
    let mut frontier = vec![vec![false; n_m]; n_l];
    for l in 0..n_l {
        for p in 0..n_m {
            frontier[l][p] = nonzero(truth.a21()[(l, p)]);
        }
    }
    for _ in 0..n_l {
        for q in 0..n_m {
            for p in 0..n_m {
                if !reach[q][p] {
                    reach[q][p] = (0..n_l)
                        .any(|l| nonzero(truth.a12()[(q, l)]) && frontier[l][p]);
                }
            }
        }
        let mut next = vec![vec![false; n_m]; n_l];
        for l2 in 0..n_l {
            for p in 0..n_m {
                next[l2][p] = (0..n_l)
                    .any(|l| nonzero(truth.a22()[(l2, l)]) && frontier[l][p]);
            }
        }
        frontier = next;
    }
    reach
}

/// Scores direct and indirect detection against the true network.
/// `alpha` is the magnitude above which a true entry counts as an edge
/// (zero means exact support).
pub fn compare_graphs(
    estimated: &ManifestGraph,
    truth: &PartitionedNetwork,
    alpha: f64,
) -> Result<GraphComparison> {
    let n_m = truth.n_m();
    if estimated.n_m() != n_m {
        return Err(Error::invalid(format!(
            "graph has {} nodes but network has {n_m}",
            estimated.n_m()
        )));
    }
    let reach = latent_reachability(truth, alpha);
    let (mut dtp, mut dfp, mut dfn, mut dtn) = (0usize, 0usize, 0usize, 0usize);
    let (mut itp, mut ifp, mut ifn) = (0usize, 0usize, 0usize);
    for q in 0..n_m {
        for p in 0..n_m {
            let true_direct = truth.a11()[(q, p)].abs() > alpha;
            let est_direct = estimated.has_direct(q, p);
            match (est_direct, true_direct) {
                (true, true) => dtp += 1,
                (true, false) => dfp += 1,
                (false, true) => dfn += 1,
                (false, false) => dtn += 1,
            }
            let true_indirect = reach[q][p];
            let est_indirect = !estimated.indirect_orders(q, p).is_empty();
            match (est_indirect, true_indirect) {
                (true, true) => itp += 1,
                (true, false) => ifp += 1,
                (false, true) => ifn += 1,
                (false, false) => {}
            }
        }
    }
    let (direct_precision, direct_recall, direct_f1) = prf(dtp, dfp, dfn);
    let (indirect_precision, indirect_recall, _) = prf(itp, ifp, ifn);
    Ok(GraphComparison {
        direct_precision,
        direct_recall,
        direct_f1,
        direct_accuracy: (dtp + dtn) as f64 / (n_m * n_m) as f64,
        indirect_precision,
        indirect_recall,
    })
}
