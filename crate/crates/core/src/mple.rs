//! Maximum pseudo-likelihood estimation.
//!
//! The pseudo-likelihood is the product over all ordered dyads of the edge's
//! full conditional given the rest of the observed network. Each dyad's
//! contribution to the value, gradient and Hessian is independent of the
//! others, so the sum is split into fixed-size partitions evaluated in
//! parallel and reduced in partition order. The reduction order depends only
//! on the partition size, never on the number of worker threads.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{dependent_sets, norm2, Cholesky, SquareMatrix};
use crate::network::CountNetwork;
use crate::pmf::{ConditionalPmf, Predictor, Truncation};
use crate::terms::{BoundModel, BoundTerm, DyadContext, ModelSpec};

/// Dyads per reduction partition.
pub const DEFAULT_PARTITION: usize = 4096;

/// Value, gradient and Hessian of the negative log pseudo-likelihood.
#[derive(Debug, Clone)]
pub struct PseudoLikelihood {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SquareMatrix,
}

/// Maps a flat ordered-dyad index to `(i, j)` with `i != j`.
#[inline]
pub fn dyad_at(n: usize, d: usize) -> (usize, usize) {
    let i = d / (n - 1);
    let r = d % (n - 1);
    (i, if r >= i { r + 1 } else { r })
}

/// Basis functions of `k` that all change statistics are multiples of:
/// `k` itself for every edge-linear term, then one per dependence term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basis {
    Count,
    Nonzero,
    Mutuality,
    Waypoint,
}

impl Basis {
    const ALL: [Basis; 4] = [Basis::Count, Basis::Nonzero, Basis::Mutuality, Basis::Waypoint];

    #[inline]
    fn eval(self, ctx: &DyadContext, k: u64) -> f64 {
        match self {
            Basis::Count => k as f64,
            Basis::Nonzero => BoundTerm::Nonzero.nonlinear_from_zero(ctx, k),
            Basis::Mutuality => BoundTerm::Mutuality.nonlinear_from_zero(ctx, k),
            Basis::Waypoint => BoundTerm::WaypointFlow.nonlinear_from_zero(ctx, k),
        }
    }
}

struct Accum {
    value: f64,
    gradient: Vec<f64>,
    hessian: SquareMatrix,
}

impl Accum {
    fn new(p: usize) -> Self {
        Self { value: 0.0, gradient: vec![0.0; p], hessian: SquareMatrix::zeros(p) }
    }

    fn merge(&mut self, other: &Accum) {
        self.value += other.value;
        for (a, b) in self.gradient.iter_mut().zip(&other.gradient) {
            *a += b;
        }
        self.hessian.add_assign(&other.hessian);
    }
}

/// Negative log pseudo-likelihood of `net` at `theta`, with analytic
/// gradient and Hessian.
pub fn neg_log_pseudolikelihood(model: &BoundModel<'_>, theta: &[f64], net: &CountNetwork, partition: usize) -> Result<PseudoLikelihood> {
    let predictor = Predictor::new(model, theta)?;
    let p = model.len();
    let n = net.n_nodes();
    let n_dyads = net.n_dyads();
    let (row_max, col_max) = net.row_col_max();

    // which basis each term loads on
    let basis: Vec<Basis> = model
        .terms
        .iter()
        .map(|t| match t {
            BoundTerm::Nonzero => Basis::Nonzero,
            BoundTerm::Mutuality => Basis::Mutuality,
            BoundTerm::WaypointFlow => Basis::Waypoint,
            _ => Basis::Count,
        })
        .collect();
    let active: Vec<Basis> = Basis::ALL.iter().copied().filter(|b| basis.contains(b)).collect();
    let slot: Vec<usize> = basis.iter().map(|b| active.iter().position(|a| a == b).unwrap()).collect();

    let partition = partition.max(1);
    let n_parts = n_dyads.div_ceil(partition);
    let parts: Vec<Result<Accum>> = (0..n_parts)
        .into_par_iter()
        .map(|part| {
            let mut acc = Accum::new(p);
            let mut pmf = ConditionalPmf::default();
            let mut probs = Vec::new();
            let nb = active.len();
            let mut values = vec![0.0; nb];
            let mut mean = vec![0.0; nb];
            let mut cov = vec![0.0; nb * nb];
            let mut observed = vec![0.0; nb];
            let mut coef = vec![0.0; p];
            let lo = part * partition;
            let hi = (lo + partition).min(n_dyads);
            for d in lo..hi {
                let (i, j) = dyad_at(n, d);
                let ctx = DyadContext::new(net, i, j);
                let hint = row_max[i].max(col_max[j]);
                predictor.conditional_into(&ctx, Truncation::Adaptive { hint }, &mut pmf)?;
                acc.value -= pmf.log_prob(ctx.y_ij);

                probs.clear();
                probs.extend(pmf.probs());
                mean.iter_mut().for_each(|m| *m = 0.0);
                for (k, &pk) in probs.iter().enumerate() {
                    for (b, m) in active.iter().zip(mean.iter_mut()) {
                        *m += pk * b.eval(&ctx, k as u64);
                    }
                }
                cov.iter_mut().for_each(|c| *c = 0.0);
                for (k, &pk) in probs.iter().enumerate() {
                    for (a, b) in active.iter().enumerate() {
                        values[a] = b.eval(&ctx, k as u64) - mean[a];
                    }
                    for a in 0..nb {
                        for b in a..nb {
                            cov[a * nb + b] += pk * values[a] * values[b];
                        }
                    }
                }
                for (a, b) in active.iter().enumerate() {
                    observed[a] = b.eval(&ctx, ctx.y_ij);
                }
                for (t, term) in model.terms.iter().enumerate() {
                    coef[t] = term.linear_factor(i, j).unwrap_or(1.0);
                }
                for t in 0..p {
                    let a = slot[t];
                    acc.gradient[t] += coef[t] * (mean[a] - observed[a]);
                    for u in t..p {
                        let b = slot[u];
                        let c = if a <= b { cov[a * nb + b] } else { cov[b * nb + a] };
                        acc.hessian.add(t, u, coef[t] * coef[u] * c);
                    }
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = Accum::new(p);
    for part in parts {
        total.merge(&part?);
    }
    total.hessian.symmetrize_from_upper();
    Ok(PseudoLikelihood { value: total.value, gradient: total.gradient, hessian: total.hessian })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Convergence threshold on the per-dyad gradient norm.
    pub tol: f64,
    pub max_iter: usize,
    pub partition: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, partition: DEFAULT_PARTITION }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub neg_log_pl: f64,
    pub grad_norm: f64,
    pub step_scale: f64,
}

/// Outcome of [`fit_mple`].
///
/// `grad_norm` is the Euclidean norm of the gradient divided by the number
/// of ordered dyads. Standard errors are the naive MPLE errors from the
/// inverse pseudo-likelihood Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub labels: Vec<String>,
    pub theta: Vec<f64>,
    pub std_err: Vec<f64>,
    pub neg_log_pl: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

impl FitResult {
    pub fn z_scores(&self) -> Vec<f64> {
        self.theta.iter().zip(&self.std_err).map(|(t, s)| t / s).collect()
    }

    /// Two-tailed normal p-values. These inherit the optimism of MPLE
    /// standard errors under dyad dependence.
    pub fn p_values(&self) -> Vec<f64> {
        let normal = Normal::standard();
        self.z_scores().iter().map(|z| 2.0 * normal.sf(z.abs())).collect()
    }

    /// The model with fitted coefficients filled in.
    pub fn apply_to(&self, model: &ModelSpec) -> ModelSpec {
        model.with_theta(&self.theta)
    }
}

/// Starting point: zero everywhere except `sum`, which starts at the log of
/// the mean positive count.
pub fn initial_theta(model: &BoundModel<'_>, net: &CountNetwork) -> Vec<f64> {
    let mean_pos = if net.n_edges() == 0 { 0.0 } else { net.total() as f64 / net.n_edges() as f64 };
    model.terms.iter().map(|t| if matches!(t, BoundTerm::Sum) { (mean_pos + 1e-9).ln() } else { 0.0 }).collect()
}

/// Newton iterations with step halving on the negative log pseudo-likelihood.
pub fn fit_mple(bound: &BoundModel<'_>, net: &CountNetwork, opts: &FitOptions) -> Result<FitResult> {
    fit_mple_fixed(bound, net, opts, &vec![None; bound.len()])
}

/// As [`fit_mple`], holding every coefficient with `fixed[k] = Some(v)` at
/// `v`. Fixed terms report a NaN standard error.
pub fn fit_mple_fixed(bound: &BoundModel<'_>, net: &CountNetwork, opts: &FitOptions, fixed: &[Option<f64>]) -> Result<FitResult> {
    if fixed.len() != bound.len() {
        return Err(Error::InvalidModel(format!("{} fixed entries for {} terms", fixed.len(), bound.len())));
    }
    let labels = bound.labels.clone();
    let free: Vec<usize> = (0..bound.len()).filter(|&k| fixed[k].is_none()).collect();
    let free_labels: Vec<String> = free.iter().map(|&k| labels[k].clone()).collect();
    let n_dyads = net.n_dyads().max(1) as f64;
    let mut theta = initial_theta(bound, net);
    for (t, f) in theta.iter_mut().zip(fixed) {
        if let Some(v) = f {
            *t = *v;
        }
    }
    let mut cur = neg_log_pseudolikelihood(bound, &theta, net, opts.partition)?;
    let mut grad = restrict_vec(&cur.gradient, &free);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut grad_norm = norm2(&grad) / n_dyads;
    trace.push(IterationRecord { iteration: 0, neg_log_pl: cur.value, grad_norm, step_scale: 0.0 });

    while !free.is_empty() && grad_norm >= opts.tol && iterations < opts.max_iter {
        let chol = factor(&restrict(&cur.hessian, &free), &free_labels)?;
        let step = chol.solve(&grad);
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = theta.clone();
            for (&k, s) in free.iter().zip(&step) {
                trial[k] -= scale * s;
            }
            if let Ok(next) = neg_log_pseudolikelihood(bound, &trial, net, opts.partition) {
                let allowed = cur.value - 1e-4 * scale * slope + 1e-12 * cur.value.abs();
                if next.value.is_finite() && next.value <= allowed {
                    accepted = Some((trial, next));
                    break;
                }
            }
            scale *= 0.5;
        }
        iterations += 1;
        let Some((trial, next)) = accepted else {
            break;
        };
        theta = trial;
        cur = next;
        grad = restrict_vec(&cur.gradient, &free);
        grad_norm = norm2(&grad) / n_dyads;
        trace.push(IterationRecord { iteration: iterations, neg_log_pl: cur.value, grad_norm, step_scale: scale });
    }

    let mut std_err = vec![f64::NAN; bound.len()];
    if !free.is_empty() {
        let inv = factor(&restrict(&cur.hessian, &free), &free_labels)?.inverse();
        for (&k, v) in free.iter().zip(inv.diagonal()) {
            std_err[k] = v.sqrt();
        }
    }
    Ok(FitResult { labels, theta, std_err, neg_log_pl: cur.value, grad_norm, iterations, converged: grad_norm < opts.tol, trace })
}

fn restrict(m: &SquareMatrix, idx: &[usize]) -> SquareMatrix {
    let mut out = SquareMatrix::zeros(idx.len());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out.set(a, b, m.get(i, j));
        }
    }
    out
}

fn restrict_vec(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&k| v[k]).collect()
}

fn factor(hessian: &SquareMatrix, labels: &[String]) -> Result<Cholesky> {
    Cholesky::new(hessian).map_err(|_| {
        let mut terms: Vec<String> = dependent_sets(hessian).into_iter().flatten().map(|t| labels[t].clone()).collect();
        terms.dedup();
        Error::Collinear { terms }
    })
}
