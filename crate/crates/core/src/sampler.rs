//! Gibbs sampling of count networks from a model with fixed coefficients.
//!
//! A sweep visits every ordered dyad once, in a fresh random order, and
//! redraws the edge exactly from its full conditional. Each chain owns its
//! network; chains with different seeds share nothing mutable.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mple::dyad_at;
use crate::network::CountNetwork;
use crate::pmf::{ConditionalPmf, Predictor, Truncation};
use crate::terms::DyadContext;

pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Observed,
    Empty,
    /// One exact draw from the model with dependence terms removed.
    Independence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in_sweeps: usize,
    pub thin_sweeps: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub init: InitMode,
    /// Hard support cap; `None` uses adaptive truncation.
    pub support_cap: Option<u64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { burn_in_sweeps: 200, thin_sweeps: 20, n_samples: 25, seed: 0, init: InitMode::Observed, support_cap: None }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin_sweeps == 0 {
            return Err(Error::Config("thin_sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// Reusable state for sweeping one chain.
pub struct GibbsSweeper<'p> {
    predictor: &'p Predictor<'p>,
    support_cap: Option<u64>,
    order: Vec<u32>,
    pmf: ConditionalPmf,
}

impl<'p> GibbsSweeper<'p> {
    pub fn new(predictor: &'p Predictor<'p>, n_nodes: usize, support_cap: Option<u64>) -> Self {
        let n_dyads = n_nodes * n_nodes.saturating_sub(1);
        Self { predictor, support_cap, order: (0..n_dyads as u32).collect(), pmf: ConditionalPmf::default() }
    }

    /// One full sweep over all ordered dyads.
    pub fn sweep<R: Rng>(&mut self, net: &mut CountNetwork, rng: &mut R) -> Result<()> {
        let n = net.n_nodes();
        if n < 2 {
            return Ok(());
        }
        debug_assert_eq!(self.order.len(), net.n_dyads());
        self.order.shuffle(rng);
        // support hints from the state at the start of the sweep; adaptive
        // truncation extends past them whenever needed
        let (row_max, col_max) = if self.support_cap.is_none() { net.row_col_max() } else { (vec![], vec![]) };
        for &d in &self.order {
            let (i, j) = dyad_at(n, d as usize);
            let ctx = DyadContext::new(net, i, j);
            let trunc = match self.support_cap {
                Some(cap) => Truncation::Fixed(cap),
                None => Truncation::Adaptive { hint: row_max[i].max(col_max[j]) },
            };
            self.predictor.conditional_into(&ctx, trunc, &mut self.pmf)?;
            let k = self.pmf.sample(rng.random::<f64>());
            if k != ctx.y_ij {
                net.set_edge(i, j, k)?;
            }
        }
        Ok(())
    }
}

/// Resamples every edge of `net` once, in place.
pub fn gibbs_sweep<R: Rng>(predictor: &Predictor<'_>, net: &mut CountNetwork, rng: &mut R) -> Result<()> {
    GibbsSweeper::new(predictor, net.n_nodes(), None).sweep(net, rng)
}

/// Initial state for a chain.
pub fn initial_state<R: Rng>(
    predictor: &Predictor<'_>,
    observed: &CountNetwork,
    init: InitMode,
    support_cap: Option<u64>,
    rng: &mut R,
) -> Result<CountNetwork> {
    match init {
        InitMode::Observed => Ok(observed.clone()),
        InitMode::Empty => Ok(CountNetwork::empty(observed.n_nodes())),
        InitMode::Independence => {
            let indep = predictor.without_dependence();
            let mut net = CountNetwork::empty(observed.n_nodes());
            // with no dependence the empty network is a valid conditioning state
            GibbsSweeper::new(&indep, net.n_nodes(), support_cap).sweep(&mut net, rng)?;
            Ok(net)
        }
    }
}

/// Runs one chain, calling `on_sample(index, network)` for every retained
/// sample. Returns the number of sweeps performed.
pub fn run_chain<F>(predictor: &Predictor<'_>, observed: &CountNetwork, cfg: &SamplerConfig, mut on_sample: F) -> Result<usize>
where
    F: FnMut(usize, &CountNetwork) -> Result<()>,
{
    cfg.validate()?;
    let mut rng = chain_rng(cfg.seed);
    let mut net = initial_state(predictor, observed, cfg.init, cfg.support_cap, &mut rng)?;
    let mut sweeper = GibbsSweeper::new(predictor, net.n_nodes(), cfg.support_cap);
    let mut sweeps = 0;
    for _ in 0..cfg.burn_in_sweeps {
        sweeper.sweep(&mut net, &mut rng)?;
        sweeps += 1;
    }
    for s in 0..cfg.n_samples {
        for _ in 0..cfg.thin_sweeps {
            sweeper.sweep(&mut net, &mut rng)?;
            sweeps += 1;
        }
        on_sample(s, &net)?;
    }
    Ok(sweeps)
}

/// Retained networks of one chain together with each sample's global
/// statistics for every model term.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub networks: Vec<CountNetwork>,
    pub stats: Vec<Vec<f64>>,
}

pub fn sample_networks(predictor: &Predictor<'_>, observed: &CountNetwork, cfg: &SamplerConfig) -> Result<SampleRun> {
    let mut run = SampleRun { networks: Vec::with_capacity(cfg.n_samples), stats: Vec::with_capacity(cfg.n_samples) };
    run_chain(predictor, observed, cfg, |_, net| {
        run.stats.push(predictor.model.global_stats(net));
        run.networks.push(net.clone());
        Ok(())
    })?;
    Ok(run)
}
