use std::sync::Arc;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{self, QSpace};
use crate::rng::{self, domain};
use crate::semigroup::Generator;
use crate::stochastic::{
    constant_drift, convolve, convolve_adapted, drifted_path, sample_noise, simple_integral, Drift, GammaNorm, Integrand,
    NoisePath, OperatorBlock, SignedPermutation, StepProcess, TimeGrid, Trajectory,
};

use super::config::{ExperimentConfig, RecipeSpec};

pub const ROTATION_TABLE: usize = 8;

#[derive(Debug, Clone)]
enum Recipe {
    Constant(OperatorBlock),
    Feedback { block: OperatorBlock, base: f64, amp: f64, scale: f64 },
    Rotation(Vec<OperatorBlock>),
}

/// Everything needed to draw trajectory `k` of a config.
#[derive(Debug)]
pub struct Simulator {
    space: QSpace,
    generator: Generator,
    gamma: GammaNorm,
    recipe: Recipe,
    drift: Option<DVector<f64>>,
    x0: Option<Vec<f64>>,
    d: usize,
}

/// One simulated trajectory with the noise and integrand behind it.
#[derive(Debug, Clone)]
pub struct Sample {
    pub noise: NoisePath,
    pub path: Trajectory,
    pub g: Integrand,
    pub drift: Option<Drift>,
}

fn rotation_table(n: usize, seed: u64) -> Vec<SignedPermutation> {
    let mut r = rng::stream(rng::derive_seed(seed, &[domain::RECIPE]), domain::RECIPE, 0);
    let mut table = vec![SignedPermutation::identity(n)];
    while table.len() < ROTATION_TABLE {
        let mut targets: Vec<usize> = (0..n).collect();
        targets.shuffle(&mut r);
        let signs = (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
        table.push(SignedPermutation::new(targets, signs).expect("shuffled permutation"));
    }
    table
}

impl Simulator {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Self::with_generator(cfg, cfg.build_generator()?)
    }

    pub fn with_generator(cfg: &ExperimentConfig, generator: Generator) -> Result<Self> {
        let space = cfg.space()?;
        let g = cfg.g_matrix()?;
        let d = g.ncols();
        let gamma = GammaNorm::new(cfg.gamma_method(), space, d)?;
        let block = OperatorBlock::new(g, &gamma)?;
        let recipe = match cfg.g {
            RecipeSpec::Constant { .. } => Recipe::Constant(block),
            RecipeSpec::Feedback { base, amp, scale, .. } => Recipe::Feedback { block, base, amp, scale },
            RecipeSpec::Rotation { .. } => {
                Recipe::Rotation(rotation_table(cfg.n, cfg.seed()).iter().map(|p| block.permuted(p)).collect())
            }
        };
        let drifted = cfg.drift.is_some() || cfg.x0.is_some();
        Ok(Self {
            space,
            generator,
            gamma,
            recipe,
            drift: drifted.then(|| DVector::from_column_slice(cfg.drift.as_deref().unwrap_or(&vec![0.0; cfg.n]))),
            x0: drifted.then(|| cfg.x0.clone().unwrap_or_else(|| vec![0.0; cfg.n])),
            d,
        })
    }

    pub fn space(&self) -> QSpace {
        self.space
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn gamma(&self) -> &GammaNorm {
        &self.gamma
    }

    pub fn noise_dim(&self) -> usize {
        self.d
    }

    /// The distinct matrices every block of `g` is a scalar multiple of.
    pub fn basis_blocks(&self) -> Vec<&OperatorBlock> {
        match &self.recipe {
            Recipe::Constant(b) | Recipe::Feedback { block: b, .. } => vec![b],
            Recipe::Rotation(bs) => bs.iter().collect(),
        }
    }

    pub fn grid(horizon: f64, level: u32) -> Result<Arc<TimeGrid>> {
        Ok(Arc::new(TimeGrid::dyadic(horizon, level)?))
    }

    pub fn sample(&self, grid: &Arc<TimeGrid>, seed: u64, index: u64) -> Result<Sample> {
        let noise = sample_noise(grid, self.d, seed, index)?;
        let q = self.space.q();
        let (path, g) = match &self.recipe {
            Recipe::Feedback { block, base, amp, scale } => convolve_adapted(&self.generator, &noise, |_, x, _| {
                block.scaled(base + amp * (scale * geometry::norm_unchecked(x, q)).tanh())
            })?,
            recipe => {
                let g = match recipe {
                    Recipe::Constant(b) => Integrand::constant(grid, b.clone()),
                    Recipe::Rotation(table) => {
                        // independent of the noise, hence adapted
                        let mut r = rng::stream(seed, domain::RECIPE, index);
                        let values = (0..grid.cells()).map(|_| table[r.random_range(0..table.len())].clone()).collect();
                        StepProcess::from_values(grid, values)
                    }
                    Recipe::Feedback { .. } => unreachable!(),
                };
                let path = match (&self.x0, &self.drift) {
                    (Some(x0), Some(v)) => drifted_path(x0, &constant_drift(grid, v.clone()), &g, &noise)?,
                    _ if self.generator.is_zero() => simple_integral(&g, &noise)?,
                    _ => convolve(&self.generator, &g, &noise)?,
                };
                (path, g)
            }
        };
        let drift = self.drift.as_ref().map(|v| constant_drift(grid, v.clone()));
        Ok(Sample { noise, path, g, drift })
    }

    /// `f` applied to trajectories `0..n`, computed in parallel and returned
    /// in index order.
    pub fn ensemble<T, F>(&self, grid: &Arc<TimeGrid>, seed: u64, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Sample) -> Result<T> + Sync,
    {
        (0..n as u64).into_par_iter().map(|k| f(self.sample(grid, seed, k)?)).collect()
    }
}
