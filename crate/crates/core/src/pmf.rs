//! Full conditional distribution of one edge value given the rest of the
//! network, under the Poisson reference measure.

use crate::error::{Error, Result};
use crate::network::CountNetwork;
use crate::terms::{BoundModel, BoundTerm, DyadContext};

/// Smallest initial support bound for adaptive truncation.
pub const MIN_SUPPORT: u64 = 50;
/// Truncation stops once the last support point carries less mass than this.
pub const TAIL_MASS: f64 = 1e-12;
/// Support bounds beyond this are treated as a diverging predictor.
pub const MAX_SUPPORT: u64 = 1 << 24;

/// How the infinite support `{0, 1, 2, ...}` is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Start at `max(2 * hint, MIN_SUPPORT)` and double until the tail is
    /// negligible. `hint` is typically the largest observed count on the
    /// dyad's row or column.
    Adaptive { hint: u64 },
    /// Hard support `0..=cap`; the model itself is truncated.
    Fixed(u64),
}

/// Normalized log-probabilities over `0..=k_max`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConditionalPmf {
    /// `w_k = theta . (g(y_ij = k) - g(y_ij = 0)) - ln k!`
    pub log_weights: Vec<f64>,
    pub log_norm: f64,
}

impl ConditionalPmf {
    pub fn k_max(&self) -> u64 {
        self.log_weights.len() as u64 - 1
    }

    #[inline]
    pub fn log_prob(&self, k: u64) -> f64 {
        self.log_weights.get(k as usize).map_or(f64::NEG_INFINITY, |w| w - self.log_norm)
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.log_prob(k).exp()
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_weights.iter().map(move |w| (w - self.log_norm).exp())
    }

    pub fn mean(&self) -> f64 {
        self.probs().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Inverse-CDF draw for a uniform `u` in [0, 1).
    pub fn sample(&self, u: f64) -> u64 {
        let mut acc = 0.0;
        for (k, p) in self.probs().enumerate() {
            acc += p;
            if u < acc {
                return k as u64;
            }
        }
        // rounding left u above the accumulated mass
        self.log_weights.iter().rposition(|w| (w - self.log_norm).exp() > 0.0).unwrap_or(0) as u64
    }
}

/// Numerically stable `ln sum exp`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Coefficients of a bound model split into the parts the conditional needs.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    pub model: &'a BoundModel<'a>,
    pub theta: &'a [f64],
    theta_nonzero: f64,
    theta_mutuality: f64,
    theta_waypoint: f64,
    linear: Vec<usize>,
}

impl<'a> Predictor<'a> {
    pub fn new(model: &'a BoundModel<'a>, theta: &'a [f64]) -> Result<Self> {
        if theta.len() != model.len() {
            return Err(Error::InvalidModel(format!("{} coefficients for {} terms", theta.len(), model.len())));
        }
        let mut p = Self { model, theta, theta_nonzero: 0.0, theta_mutuality: 0.0, theta_waypoint: 0.0, linear: Vec::new() };
        for (t, (term, &th)) in model.terms.iter().zip(theta).enumerate() {
            match term {
                BoundTerm::Nonzero => p.theta_nonzero += th,
                BoundTerm::Mutuality => p.theta_mutuality += th,
                BoundTerm::WaypointFlow => p.theta_waypoint += th,
                _ => p.linear.push(t),
            }
        }
        Ok(p)
    }

    /// Same coefficients with every dependence term switched off, giving
    /// independent Poisson edges.
    pub fn without_dependence(&self) -> Self {
        Self { theta_nonzero: 0.0, theta_mutuality: 0.0, theta_waypoint: 0.0, ..self.clone() }
    }

    /// `sum over edge-linear terms of theta_t * f_t(X_ij)`.
    #[inline]
    pub fn linear_predictor(&self, i: usize, j: usize) -> f64 {
        self.linear.iter().map(|&t| self.theta[t] * self.model.terms[t].linear_factor(i, j).unwrap()).sum()
    }

    #[inline]
    fn dependence(&self, ctx: &DyadContext, k: u64) -> f64 {
        let mut w = 0.0;
        if self.theta_nonzero != 0.0 && k > 0 {
            w += self.theta_nonzero;
        }
        if self.theta_mutuality != 0.0 {
            w += self.theta_mutuality * k.min(ctx.y_ji) as f64;
        }
        if self.theta_waypoint != 0.0 {
            w += self.theta_waypoint * BoundTerm::WaypointFlow.nonlinear_from_zero(ctx, k);
        }
        w
    }

    /// Conditional pmf of `y_ij` given everything else in `net`.
    pub fn conditional(&self, net: &CountNetwork, i: usize, j: usize, trunc: Truncation) -> Result<ConditionalPmf> {
        let mut pmf = ConditionalPmf::default();
        self.conditional_into(&DyadContext::new(net, i, j), trunc, &mut pmf)?;
        Ok(pmf)
    }

    /// As [`Predictor::conditional`], reusing `out`'s allocation.
    pub fn conditional_into(&self, ctx: &DyadContext, trunc: Truncation, out: &mut ConditionalPmf) -> Result<()> {
        let eta = self.linear_predictor(ctx.i, ctx.j);
        if !eta.is_finite() {
            return Err(Error::NonFinite { i: ctx.i, j: ctx.j });
        }
        let w = &mut out.log_weights;
        w.clear();
        let mut log_fact = 0.0;
        let mut extend = |w: &mut Vec<f64>, upto: u64| {
            for k in w.len() as u64..=upto {
                if k > 0 {
                    log_fact += (k as f64).ln();
                }
                w.push(eta * k as f64 + self.dependence(ctx, k) - log_fact);
            }
        };
        match trunc {
            Truncation::Fixed(cap) => {
                extend(w, cap);
                out.log_norm = log_sum_exp(w);
            }
            Truncation::Adaptive { hint } => {
                let mut k_max = hint.saturating_mul(2).max(MIN_SUPPORT);
                loop {
                    extend(w, k_max);
                    out.log_norm = log_sum_exp(w);
                    let n = w.len();
                    let last = w[n - 1] - out.log_norm;
                    // tail is below the last point and decays at least geometrically
                    let decaying = w[n - 1] - w[n - 2] < -std::f64::consts::LN_2;
                    if last < TAIL_MASS.ln() && decaying {
                        break;
                    }
                    if k_max >= MAX_SUPPORT {
                        return Err(Error::NonFinite { i: ctx.i, j: ctx.j });
                    }
                    k_max = k_max.saturating_mul(2).min(MAX_SUPPORT);
                }
            }
        }
        if !out.log_norm.is_finite() {
            return Err(Error::NonFinite { i: ctx.i, j: ctx.j });
        }
        Ok(())
    }
}
