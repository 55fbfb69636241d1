//! Flat `key = value` run configuration.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lop::{AveragingConvention, SwapMode, VPolicy};
use crate::qcore::{ObservableSpectrum, MAX_DIM};
use crate::sme::{Integrator, SmeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Lop,
    StaticObservable,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VPolicyKind {
    Identity,
    UnbiasedPair,
}

impl VPolicyKind {
    pub fn policy(self) -> VPolicy {
        match self {
            VPolicyKind::Identity => VPolicy::Identity,
            VPolicyKind::UnbiasedPair => VPolicy::UnbiasedPair,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    FullSme,
    ReducedOde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const DEFAULT_DELTA0: f64 = 0.01;
pub const DEFAULT_SAMPLES: usize = 1000;
/// `k/β` below this draws a warning.
pub const REGIME_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub k: f64,
    pub beta: f64,
    pub dt: f64,
    pub horizon: f64,
    pub ensemble: usize,
    pub seed: u64,
    /// Observable eigenvalues; empty means equispaced on `[−1, 1]`.
    pub spectrum: Vec<f64>,
    pub protocol: ProtocolKind,
    pub v_policy: VPolicyKind,
    pub swap_mode: SwapMode,
    pub noise: NoiseKind,
    pub engine: Engine,
    pub output_format: OutputFormat,
    pub integrator: Integrator,
    pub convention: AveragingConvention,
    /// Initial `Δ₀`, split over the small eigenvalues by `initial_weights`.
    pub delta0: f64,
    /// Relative weights of the small eigenvalues; empty means `N−1, …, 1`.
    pub initial_weights: Vec<f64>,
    /// Explicit small eigenvalues; overrides `delta0` and the weights.
    pub initial_lambdas: Vec<f64>,
    /// Number of output rows (approximately).
    pub samples: usize,
    /// Equalize-then-swap protocols for N = 3 and N = 4 (unbiased pair).
    pub switching: bool,
    pub epsilon_equal: Option<f64>,
    pub swap_interval: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 3,
            k: 1.0,
            beta: 0.0,
            dt: 1e-5,
            horizon: 1.0,
            ensemble: 1,
            seed: 0,
            spectrum: Vec::new(),
            protocol: ProtocolKind::Lop,
            v_policy: VPolicyKind::Identity,
            swap_mode: SwapMode::Explicit,
            noise: NoiseKind::None,
            engine: Engine::FullSme,
            output_format: OutputFormat::Csv,
            integrator: Integrator::Kraus,
            convention: AveragingConvention::ContinuousCoupling,
            delta0: DEFAULT_DELTA0,
            initial_weights: Vec::new(),
            initial_lambdas: Vec::new(),
            samples: DEFAULT_SAMPLES,
            switching: true,
            epsilon_equal: None,
            swap_interval: None,
        }
    }
}

fn parse_enum<T: DeserializeOwned>(key: &str, v: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim().trim_start_matches('[').trim_end_matches(']');
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

fn parse_optional(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" || v.is_empty() {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

impl SimulationConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "n" => self.n = parse_num(key, v)?,
            "k" => self.k = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "horizon" => self.horizon = parse_num(key, v)?,
            "ensemble" => self.ensemble = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "spectrum" => self.spectrum = parse_list(key, v)?,
            "protocol" => self.protocol = parse_enum(key, v)?,
            "v_policy" => self.v_policy = parse_enum(key, v)?,
            "swap_mode" => self.swap_mode = parse_enum(key, v)?,
            "noise" => self.noise = parse_enum(key, v)?,
            "engine" => self.engine = parse_enum(key, v)?,
            "output_format" => self.output_format = parse_enum(key, v)?,
            "integrator" => self.integrator = parse_enum(key, v)?,
            "convention" => self.convention = parse_enum(key, v)?,
            "delta0" => self.delta0 = parse_num(key, v)?,
            "initial_weights" => self.initial_weights = parse_list(key, v)?,
            "initial_lambdas" => self.initial_lambdas = parse_list(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "switching" => self.switching = parse_num(key, v)?,
            "epsilon_equal" => self.epsilon_equal = parse_optional(key, v)?,
            "swap_interval" => self.swap_interval = parse_optional(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    /// Parses a config file body over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.apply(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn observable_spectrum(&self) -> Result<ObservableSpectrum> {
        if self.spectrum.is_empty() {
            return ObservableSpectrum::new(
                (0..self.n)
                    .map(|i| 1.0 - 2.0 * i as f64 / (self.n as f64 - 1.0))
                    .collect(),
            );
        }
        if self.spectrum.len() != self.n {
            return Err(Error::Config(format!(
                "spectrum has {} values but n = {}",
                self.spectrum.len(),
                self.n
            )));
        }
        ObservableSpectrum::new(self.spectrum.clone())
            .map_err(|e| Error::Config(format!("spectrum: {e}")))
    }

    pub fn delta_x(&self) -> Result<f64> {
        Ok(self.observable_spectrum()?.delta_x())
    }

    /// Isotropic noise rate actually applied.
    pub fn effective_beta(&self) -> f64 {
        match self.noise {
            NoiseKind::None => 0.0,
            NoiseKind::Isotropic => self.beta,
        }
    }

    pub fn sme_params(&self) -> Result<SmeParams> {
        SmeParams::new(self.k, self.dt, self.effective_beta())
    }

    /// Initial small eigenvalues `λ₁ … λ_{N−1}`.
    pub fn small_eigenvalues(&self) -> Result<Vec<f64>> {
        let m = self.n - 1;
        let lambdas = if !self.initial_lambdas.is_empty() {
            self.initial_lambdas.clone()
        } else {
            let w: Vec<f64> = if self.initial_weights.is_empty() {
                (0..m).map(|i| (m - i) as f64).collect()
            } else {
                self.initial_weights.clone()
            };
            if w.len() != m {
                return Err(Error::Config(format!(
                    "initial_weights needs {m} values, got {}",
                    w.len()
                )));
            }
            if w.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::Config("initial_weights must be >= 0".into()));
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Config("initial_weights sum to zero".into()));
            }
            w.iter().map(|x| self.delta0 * x / total).collect()
        };
        if lambdas.len() != m {
            return Err(Error::Config(format!(
                "initial_lambdas needs {m} values, got {}",
                lambdas.len()
            )));
        }
        if lambdas.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Config("initial eigenvalues must be >= 0".into()));
        }
        let total: f64 = lambdas.iter().sum();
        if !(total < 0.5) {
            return Err(Error::Config(format!(
                "initial error probability {total} is not near purity"
            )));
        }
        Ok(lambdas)
    }

    /// Full initial spectrum `(1 − Δ₀, λ₁, …)`.
    pub fn initial_spectrum(&self) -> Result<Vec<f64>> {
        let small = self.small_eigenvalues()?;
        let mut out = vec![1.0 - small.iter().sum::<f64>()];
        out.extend(small);
        Ok(out)
    }

    /// Checks the configuration; returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(2..=MAX_DIM).contains(&self.n) {
            return Err(Error::Config(format!("n must be in 2..={MAX_DIM}, got {}", self.n)));
        }
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be > 0, got {v}")))
            }
        };
        pos("k", self.k)?;
        pos("dt", self.dt)?;
        pos("horizon", self.horizon)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.ensemble == 0 || self.samples == 0 {
            return Err(Error::Config("ensemble and samples must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.delta0) {
            return Err(Error::Config(format!("delta0 must be in [0, 1), got {}", self.delta0)));
        }
        let dx = self.delta_x()?;
        self.small_eigenvalues()?;
        if let Some(e) = self.epsilon_equal {
            pos("epsilon_equal", e)?;
        }
        if let Some(s) = self.swap_interval {
            pos("swap_interval", s)?;
        }
        if self.v_policy == VPolicyKind::UnbiasedPair && self.n < 4 {
            return Err(Error::Config("v_policy unbiased_pair needs n >= 4".into()));
        }
        if self.engine == Engine::FullSme && self.swap_mode == SwapMode::Averaged {
            return Err(Error::Config(
                "swap_mode averaged is only available with engine reduced_ode".into(),
            ));
        }
        if self.engine == Engine::ReducedOde {
            if self.protocol != ProtocolKind::Lop {
                return Err(Error::Config("engine reduced_ode needs protocol lop".into()));
            }
            if self.effective_beta() > 0.0 {
                return Err(Error::Config(
                    "engine reduced_ode has no isotropic noise; use full_sme".into(),
                ));
            }
        }
        let limit = SmeParams::max_stable_dt(self.k, dx);
        if self.dt > limit {
            return Err(Error::StepTooLarge { dt: self.dt, limit });
        }
        if self.effective_beta() > 0.0 && self.k / self.effective_beta() < REGIME_RATIO {
            warnings.push(format!(
                "k/beta = {:.3} < {REGIME_RATIO}: outside the k >> beta regime",
                self.k / self.effective_beta()
            ));
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_file_and_override() {
        let text = "# qutrit\nn = 3\nk=2.0\nspectrum = 1, 0, -1  # lab frame\nprotocol = lop\n";
        let mut c = SimulationConfig::parse(text).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.k, 2.0);
        assert_eq!(c.spectrum, vec![1.0, 0.0, -1.0]);
        c.apply("noise=isotropic").unwrap();
        assert_eq!(c.noise, NoiseKind::Isotropic);
        c.apply("swap_interval=auto").unwrap();
        assert_eq!(c.swap_interval, None);
        assert!(c.apply("colour=blue").is_err());
        assert!(c.apply("protocol=greedy").is_err());
        assert!(SimulationConfig::parse("n = three").is_err());
    }

    #[test]
    fn default_initial_state() {
        let c = SimulationConfig::default();
        let s = c.initial_spectrum().unwrap();
        assert!((s[0] - 0.99).abs() < 1e-15);
        assert!((s[1] - 2.0 * s[2]).abs() < 1e-15);
        assert_eq!(c.observable_spectrum().unwrap().values(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn validation() {
        let mut c = SimulationConfig::default();
        assert!(c.validate().unwrap().is_empty());
        c.dt = 1e-3;
        assert!(matches!(c.validate(), Err(Error::StepTooLarge { .. })));
        c.dt = 1e-5;
        c.noise = NoiseKind::Isotropic;
        c.beta = 0.5;
        assert_eq!(c.validate().unwrap().len(), 1);
        c.v_policy = VPolicyKind::UnbiasedPair;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.v_policy = VPolicyKind::Identity;
        c.swap_mode = SwapMode::Averaged;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.swap_mode = SwapMode::Explicit;
        c.spectrum = vec![1.0, -1.0];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
