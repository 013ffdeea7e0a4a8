use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::QSpace;
use crate::rng::{self, domain};
use crate::semigroup::{self, Generator};
use crate::stochastic::GammaMethod;

/// The experiments the lab knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Maximal,
    Burkholder,
    ItoConvergence,
    RemainderBound,
    Lenglart,
    Yosida,
    DriftBound,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::Maximal,
        Self::Burkholder,
        Self::ItoConvergence,
        Self::RemainderBound,
        Self::Lenglart,
        Self::Yosida,
        Self::DriftBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Maximal => "maximal",
            Self::Burkholder => "burkholder",
            Self::ItoConvergence => "ito_convergence",
            Self::RemainderBound => "remainder_bound",
            Self::Lenglart => "lenglart",
            Self::Yosida => "yosida",
            Self::DriftBound => "drift_bound",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Zero,
    /// `diag(lambdas)`, every entry `<= 0`.
    Diagonal { lambdas: Vec<f64> },
    /// An explicit matrix, certified by sampling.
    Dense {
        matrix: Vec<Vec<f64>>,
        #[serde(default = "default_cert_samples")]
        cert_samples: usize,
    },
    /// `-shift I + S` with a random `S` scaled so that `|S|_q <= 0.9 shift`
    /// (Riesz-Thorin bound), hence a contraction generator on `l^q`.
    ShiftedRandom { shift: f64, seed: u64 },
}

fn default_cert_samples() -> usize {
    256
}

/// How the integrand `g` is produced along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecipeSpec {
    /// `g_t = G`.
    Constant { matrix: Vec<Vec<f64>> },
    /// `g_t = phi(X_t) G`, `phi(x) = base + amp tanh(scale |x|_q)`.
    Feedback { matrix: Vec<Vec<f64>>, base: f64, amp: f64, scale: f64 },
    /// `g_t = P_k G` with `P_k` drawn per cell from a fixed table of signed
    /// permutations, independently of the noise.
    Rotation { matrix: Vec<Vec<f64>> },
}

impl RecipeSpec {
    pub fn matrix_rows(&self) -> &[Vec<f64>] {
        match self {
            Self::Constant { matrix } | Self::Feedback { matrix, .. } | Self::Rotation { matrix } => matrix,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Feedback { .. } => "feedback",
            Self::Rotation { .. } => "rotation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Train,
    Heldout,
}

/// A single number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(v) => v.clone(),
        }
    }
}

/// An experiment description. `P` is `f64` for a runnable config and
/// [`OneOrMany`] for a document in which `p` may list several exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfigOf<P> {
    pub name: String,
    pub experiment: ExperimentKind,
    pub n: usize,
    pub q: f64,
    pub p: P,
    pub horizon: f64,
    /// Dyadic levels `k`: the simulation grid has `2^k` equal cells.
    #[serde(default = "default_mesh_exponents")]
    pub mesh_exponents: Vec<u32>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_generator")]
    pub generator: GeneratorSpec,
    pub g: RecipeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_r")]
    pub r: OneOrMany,
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default)]
    pub m_list: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default)]
    pub role: Role,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

pub type ExperimentConfig = ExperimentConfigOf<f64>;
pub type ConfigDocument = ExperimentConfigOf<OneOrMany>;

fn default_mesh_exponents() -> Vec<u32> {
    vec![8]
}
fn default_trajectories() -> usize {
    10_000
}
fn default_generator() -> GeneratorSpec {
    GeneratorSpec::Zero
}
fn default_epsilon_grid() -> Vec<f64> {
    (0..=6).rev().map(|k| 0.5f64.powi(k)).collect()
}
fn default_r() -> OneOrMany {
    OneOrMany::One(0.5)
}
fn default_quad_points() -> usize {
    257
}
fn default_batches() -> usize {
    20
}

pub const DEFAULT_GAMMA_SAMPLES: usize = 20_000;
pub const MAX_MESH_EXPONENT: u32 = 20;

impl ConfigDocument {
    /// One runnable config per listed `p`, suffixing the name when there is
    /// more than one.
    pub fn expand(self) -> Vec<ExperimentConfig> {
        let ps = self.p.values();
        let many = ps.len() > 1;
        ps.into_iter()
            .map(|p| {
                let name = if many { format!("{}[p={p}]", self.name) } else { self.name.clone() };
                ExperimentConfig {
                    name,
                    experiment: self.experiment,
                    n: self.n,
                    q: self.q,
                    p,
                    horizon: self.horizon,
                    mesh_exponents: self.mesh_exponents.clone(),
                    trajectories: self.trajectories,
                    seed: self.seed,
                    generator: self.generator.clone(),
                    g: self.g.clone(),
                    gamma: self.gamma,
                    drift: self.drift.clone(),
                    x0: self.x0.clone(),
                    epsilon_grid: self.epsilon_grid.clone(),
                    r: self.r.clone(),
                    t_list: self.t_list.clone(),
                    m_list: self.m_list.clone(),
                    group: self.group.clone(),
                    role: self.role,
                    quad_points: self.quad_points,
                    batches: self.batches,
                }
            })
            .collect()
    }
}

fn field_error(name: &str, field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("config `{name}`, field `{field}`: {msg}"))
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str, field: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(field_error(name, field, "matrix must be a nonempty list of equal-length rows"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(field_error(name, field, "matrix entries must be finite"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ExperimentConfig {
    pub fn space(&self) -> Result<QSpace> {
        QSpace::new(self.n, self.q)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// `G`, `n x d`.
    pub fn g_matrix(&self) -> Result<DMatrix<f64>> {
        rows_to_matrix(self.g.matrix_rows(), &self.name, "g.matrix")
    }

    pub fn noise_dim(&self) -> usize {
        self.g.matrix_rows().first().map_or(0, Vec::len)
    }

    pub fn gamma_method(&self) -> GammaMethod {
        self.gamma.unwrap_or(if self.q == 2.0 {
            GammaMethod::Exact2
        } else {
            GammaMethod::Mc { samples: DEFAULT_GAMMA_SAMPLES, seed: rng::derive_seed(self.seed(), &[domain::GAMMA]) }
        })
    }

    pub fn finest_level(&self) -> u32 {
        self.mesh_exponents.iter().copied().max().unwrap_or(0)
    }

    pub fn sorted_levels(&self) -> Vec<u32> {
        let mut v = self.mesh_exponents.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.r.values()
    }

    pub fn generator_is_zero(&self) -> bool {
        match &self.generator {
            GeneratorSpec::Zero => true,
            GeneratorSpec::Diagonal { lambdas } => lambdas.iter().all(|l| *l == 0.0),
            GeneratorSpec::Dense { matrix, .. } => matrix.iter().flatten().all(|v| *v == 0.0),
            GeneratorSpec::ShiftedRandom { .. } => false,
        }
    }

    /// Builds (and for dense matrices certifies) the generator.
    pub fn build_generator(&self) -> Result<Generator> {
        let space = self.space()?;
        let n = self.n;
        let wrap = |e: Error| field_error(&self.name, "generator", e);
        match &self.generator {
            GeneratorSpec::Zero => semigroup::diagonal_generator(&vec![0.0; n], space).map_err(wrap),
            GeneratorSpec::Diagonal { lambdas } => {
                if lambdas.len() != n {
                    return Err(field_error(&self.name, "generator.lambdas", format!("expected {n} entries, got {}", lambdas.len())));
                }
                semigroup::diagonal_generator(lambdas, space).map_err(wrap)
            }
            GeneratorSpec::Dense { matrix, cert_samples } => {
                let m = rows_to_matrix(matrix, &self.name, "generator.matrix")?;
                semigroup::general_generator(m, space, *cert_samples, &CERT_TIMES, rng::derive_seed(self.seed(), &[domain::CERTIFY]))
                    .map_err(wrap)
            }
            GeneratorSpec::ShiftedRandom { shift, seed } => {
                if !(*shift > 0.0) || !shift.is_finite() {
                    return Err(field_error(&self.name, "generator.shift", "must be positive"));
                }
                let m = shifted_random_matrix(n, self.q, *shift, *seed);
                semigroup::general_generator(m, space, 256, &CERT_TIMES, rng::derive_seed(*seed, &[domain::CERTIFY])).map_err(wrap)
            }
        }
    }

    /// Checks every field up front; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let name = self.name.as_str();
        let err = |field: &str, msg: String| Err(field_error(name, field, msg));
        if name.is_empty() {
            return err("name", "must not be empty".into());
        }
        if self.n == 0 {
            return err("n", "dimension must be at least 1".into());
        }
        if !(self.q >= 2.0) || !self.q.is_finite() {
            return err(
                "q",
                format!("q = {} is not allowed: the state space l^q must be 2-smooth, which requires q >= 2", self.q),
            );
        }
        if !(self.p > 0.0) || !self.p.is_finite() {
            return err("p", format!("p = {} must be positive", self.p));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return err("horizon", format!("T = {} must be positive", self.horizon));
        }
        if self.mesh_exponents.is_empty() || self.mesh_exponents.iter().any(|k| *k > MAX_MESH_EXPONENT) {
            return err("mesh_exponents", format!("need at least one level, each at most {MAX_MESH_EXPONENT}"));
        }
        if self.trajectories < 100 {
            return err("trajectories", format!("N = {} must be at least 100", self.trajectories));
        }
        if self.batches < 20 || self.batches > self.trajectories {
            return err("batches", format!("{} batches: need 20 <= batches <= trajectories", self.batches));
        }
        if self.quad_points < 2 {
            return err("quad_points", "must be at least 2".into());
        }
        let g = self.g_matrix()?;
        if g.nrows() != self.n {
            return err("g.matrix", format!("expected {} rows, got {}", self.n, g.nrows()));
        }
        if let RecipeSpec::Feedback { base, amp, scale, .. } = self.g {
            if !(base > 0.0 && base + amp > 0.0 && scale >= 0.0) || !(base + amp + scale).is_finite() {
                return err("g", "feedback needs base > 0, base + amp > 0 and scale >= 0".into());
            }
        }
        if let Some(GammaMethod::Exact2) = self.gamma {
            if self.q != 2.0 {
                return err("gamma", format!("exact gamma norm needs q = 2, got q = {}", self.q));
            }
        }
        if let Some(GammaMethod::Mc { samples, .. }) = self.gamma {
            if samples < 2 {
                return err("gamma.samples", "need at least 2 samples".into());
            }
        }
        for (field, v) in [("drift", &self.drift), ("x0", &self.x0)] {
            if let Some(v) = v {
                if v.len() != self.n || v.iter().any(|x| !x.is_finite()) {
                    return err(field, format!("expected {} finite entries", self.n));
                }
                if !self.generator_is_zero() {
                    return err(field, "drifted processes are simulated with A = 0; set generator to zero".into());
                }
                if matches!(self.g, RecipeSpec::Feedback { .. }) {
                    return err(field, "the feedback recipe is not available for drifted processes".into());
                }
            }
        }
        if self.epsilon_grid.is_empty() || self.epsilon_grid.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return err("epsilon_grid", "needs positive entries".into());
        }
        let rs = self.r_values();
        if rs.is_empty() || rs.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return err("r", "every r must lie in (0, 1)".into());
        }
        if self.t_list.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return err("t_list", "horizons must be positive".into());
        }
        if self.m_list.contains(&0) {
            return err("m_list", "resolvent indices must be >= 1".into());
        }
        match self.experiment {
            ExperimentKind::Burkholder if !self.generator_is_zero() => {
                return err("generator", "the Burkholder experiment integrates without a semigroup: A must be 0".into())
            }
            ExperimentKind::ItoConvergence | ExperimentKind::RemainderBound if self.p < 2.0 => {
                return err("p", format!("p = {} must be at least 2 for the Ito expansion", self.p))
            }
            ExperimentKind::Yosida if self.m_list.is_empty() => return err("m_list", "must not be empty".into()),
            ExperimentKind::DriftBound if self.drift.is_none() => return err("drift", "required for drift_bound".into()),
            ExperimentKind::DriftBound if self.x0.as_ref().is_some_and(|x| x.iter().any(|v| *v != 0.0)) => {
                return err("x0", "drift_bound starts at the origin".into())
            }
            _ => {}
        }
        self.build_generator()?;
        Ok(())
    }
}

pub const CERT_TIMES: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 4.0];

/// `-shift I + S` with random `S` and `|S|_1^{1/q} |S|_inf^{1-1/q} = 0.9 shift`.
pub fn shifted_random_matrix(n: usize, q: f64, shift: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, domain::RECIPE, u64::MAX);
    let s = DMatrix::from_column_slice(n, n, &rng::gaussian_vector(&mut r, n * n));
    let col = (0..n).map(|j| s.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let row = (0..n).map(|i| s.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let bound = col.powf(1.0 / q) * row.powf(1.0 - 1.0 / q);
    let scale = if bound > 0.0 { 0.9 * shift / bound } else { 0.0 };
    s * scale - DMatrix::identity(n, n) * shift
}
