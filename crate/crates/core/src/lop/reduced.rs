use serde::{Deserialize, Serialize};

use super::observable::{lop_block, VPolicy};
use super::protocol::Phase;
use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, ObservableSpectrum};

/// Relative pairwise gap below which coupled small eigenvalues are degenerate.
pub const REDUCED_DEGENERACY_TOL: f64 = 1e-9;

/// Small eigenvalues `(λ₁, …, λ_{N−1})`, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub lambdas: Vec<f64>,
}

impl ReducedState {
    pub fn new(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::ContractViolation("need at least one small eigenvalue".into()));
        }
        if lambdas.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::ContractViolation("small eigenvalues must be >= 0".into()));
        }
        let delta: f64 = lambdas.iter().sum();
        if delta > 0.1 + 1e-15 {
            return Err(Error::ContractViolation(format!(
                "Δ = {delta} outside the expansion regime (<= 0.1)"
            )));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { lambdas })
    }

    pub fn delta(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// First-order drift `F` and diffusion `σ` of the small eigenvalues:
///
/// `F_i = −8k λ_i |X_{0i}|² + 8k Σ_{j≥1, j≠i} λ_i λ_j |X_{ji}|² / (λ_i − λ_j)`,
/// `σ_i = √(8k) λ_i (X₀₀ − X_{ii})`.
///
/// `xu` is expressed in the eigenbasis of ρ, index 0 being the target.
/// Index `i` of `lambdas` corresponds to eigenbasis index `i + 1`.
pub fn reduced_drift(lambdas: &[f64], xu: &ComplexMatrix, k: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = lambdas.len();
    if xu.dim() != m + 1 {
        return Err(Error::DimensionMismatch {
            expected: m + 1,
            got: xu.dim(),
        });
    }
    let s8k = (8.0 * k).sqrt();
    let mut f = vec![0.0; m];
    let mut sigma = vec![0.0; m];
    for i in 0..m {
        let li = lambdas[i];
        let mut acc = -li * xu[(0, i + 1)].norm_sqr();
        for j in (0..m).filter(|&j| j != i) {
            let c2 = xu[(j + 1, i + 1)].norm_sqr();
            if c2 == 0.0 {
                continue;
            }
            let gap = li - lambdas[j];
            if gap.abs() < REDUCED_DEGENERACY_TOL * li.abs().max(lambdas[j].abs()) {
                return Err(Error::Degeneracy {
                    i: i + 1,
                    j: j + 1,
                    gap,
                });
            }
            acc += li * lambdas[j] * c2 / gap;
        }
        f[i] = 8.0 * k * acc;
        sigma[i] = s8k * li * (xu[(0, 0)].re - xu[(i + 1, i + 1)].re);
    }
    Ok((f, sigma))
}

/// The deterministic protocols the reduced integrator supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedProtocol {
    /// Equispaced qutrit, centered spectrum `(q, 0, −q)`.
    Qutrit { q: f64 },
    /// N = 4, unbiased-pair V, symmetric spectrum `(x₁, c, −c, −x₁)`.
    FourLevel { x1: f64, c: f64 },
}

impl ReducedProtocol {
    /// Chooses the protocol for a spectrum. Only configurations whose
    /// stochastic terms vanish identically are accepted.
    pub fn from_spectrum(spectrum: &ObservableSpectrum, v: &VPolicy) -> Result<Self> {
        let (c, _) = spectrum.centered();
        let x = c.values();
        match x.len() {
            3 => {
                if x[1].abs() > 1e-12 * x[0].abs().max(1.0) {
                    return Err(Error::Unsupported(
                        "reduced qutrit dynamics is deterministic only for an equispaced spectrum"
                            .into(),
                    ));
                }
                Ok(ReducedProtocol::Qutrit { q: x[0] })
            }
            4 => {
                if *v != VPolicy::UnbiasedPair {
                    return Err(Error::Unsupported(
                        "reduced N = 4 dynamics needs the unbiased_pair V-policy".into(),
                    ));
                }
                let d = (x[1] + x[2]) / 2.0;
                if d.abs() > 1e-12 * x[0].abs().max(1.0) {
                    return Err(Error::Unsupported(format!(
                        "reduced N = 4 dynamics needs a symmetric spectrum (d = {d:.3e} != 0)"
                    )));
                }
                Ok(ReducedProtocol::FourLevel {
                    x1: x[0],
                    c: (x[1] - x[2]) / 2.0,
                })
            }
            n => Err(Error::Unsupported(format!(
                "reduced integration supports N = 3 and N = 4, got N = {n}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ReducedProtocol::Qutrit { .. } => 3,
            ReducedProtocol::FourLevel { .. } => 4,
        }
    }

    pub fn spectrum(&self) -> ObservableSpectrum {
        let v = match *self {
            ReducedProtocol::Qutrit { q } => vec![q, 0.0, -q],
            ReducedProtocol::FourLevel { x1, c } => vec![x1, c, -c, -x1],
        };
        ObservableSpectrum::new(v).expect("nonconstant")
    }

    fn policy(&self) -> VPolicy {
        match self {
            ReducedProtocol::Qutrit { .. } => VPolicy::Identity,
            ReducedProtocol::FourLevel { .. } => VPolicy::UnbiasedPair,
        }
    }

    /// Observable in the labelled basis `(target, a, b, rest…)`; with
    /// `flipped` the roles of `a` and `b` are exchanged.
    pub fn observable(&self, flipped: bool) -> ComplexMatrix {
        let block = lop_block(&self.spectrum(), &self.policy()).expect("valid block");
        if !flipped {
            return block;
        }
        let n = block.dim();
        let perm = |i: usize| match i {
            1 => 2,
            2 => 1,
            i => i,
        };
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(perm(i), perm(j))] = block[(i, j)];
            }
        }
        out
    }

    /// `γ = 8kq²` for the qutrit, `8kx₁²` for N = 4 (reduce-phase rate).
    pub fn leading_rate(&self, k: f64) -> f64 {
        match *self {
            ReducedProtocol::Qutrit { q } => 8.0 * k * q * q,
            ReducedProtocol::FourLevel { x1, .. } => 8.0 * k * x1 * x1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    #[default]
    Explicit,
    Averaged,
}

/// How the smallest eigenvalue couples to the equalized pair in averaged
/// mode (N = 4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AveragingConvention {
    /// Coupled at full rate: one pair member is always partnered with it,
    /// which is what explicit swapping realizes.
    #[default]
    ContinuousCoupling,
    /// Coupled at half rate, its drift averaged like the pair's.
    HalfRate,
}

impl AveragingConvention {
    fn weight(self) -> f64 {
        match self {
            AveragingConvention::ContinuousCoupling => 1.0,
            AveragingConvention::HalfRate => 0.5,
        }
    }
}

/// Fixed point of the averaged N = 4 equations: `(γ, R_ss)` with
/// `R = λ_pair/λ₃`. `None` when the ratio does not settle.
///
/// Continuous coupling: `R = (x₁²+c²)/(x₁²−2c²)`, `γ = (8k/3)(x₁²+c²)`.
/// Half rate: `R = (x₁²+c²)/(x₁²−c²)`, `γ = 2k(x₁²+c²)`.
pub fn averaged_fixed_point(
    k: f64,
    x1: f64,
    c: f64,
    convention: AveragingConvention,
) -> Option<(f64, f64)> {
    let (x2, c2) = (x1 * x1, c * c);
    match convention {
        AveragingConvention::ContinuousCoupling => {
            (x2 > 2.0 * c2).then(|| (8.0 * k / 3.0 * (x2 + c2), (x2 + c2) / (x2 - 2.0 * c2)))
        }
        AveragingConvention::HalfRate => {
            (x2 > c2).then(|| (2.0 * k * (x2 + c2), (x2 + c2) / (x2 - c2)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedOptions {
    pub k: f64,
    pub dt: f64,
    pub horizon: f64,
    pub swap_mode: SwapMode,
    pub convention: AveragingConvention,
    pub epsilon_equal: f64,
    pub swap_interval: f64,
    pub record_every: usize,
}

impl ReducedOptions {
    /// Defaults for `protocol`: `epsilon_equal = 0.01`,
    /// `swap_interval = 0.01/(k δx²)`, explicit swapping.
    pub fn new(protocol: &ReducedProtocol, k: f64, dt: f64, horizon: f64) -> Self {
        let dx = protocol.spectrum().delta_x();
        Self {
            k,
            dt,
            horizon,
            swap_mode: SwapMode::Explicit,
            convention: AveragingConvention::ContinuousCoupling,
            epsilon_equal: super::protocol::DEFAULT_EPSILON_EQUAL,
            swap_interval: super::protocol::default_swap_interval(k, dx),
            record_every: 1,
        }
    }
}

/// Sampled solution of the reduced equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSeries {
    pub times: Vec<f64>,
    /// Small eigenvalues, sorted descending.
    pub lambdas: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub phases: Vec<String>,
    pub switch_time: Option<f64>,
}

impl ReducedSeries {
    /// `((λ₁+λ₂)/2)/λ₃` per sample (N = 4).
    pub fn pair_ratio(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .map(|l| 0.5 * (l[0] + l[1]) / l[2])
            .collect()
    }
}

struct Labelled {
    phase: Phase,
    /// (a, b, rest…) in label order.
    values: Vec<f64>,
}

fn rk4<F>(y: &[f64], dt: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    let k1 = f(y)?;
    let k2 = f(&add(y, &k1, dt / 2.0))?;
    let k3 = f(&add(y, &k2, dt / 2.0))?;
    let k4 = f(&add(y, &k3, dt))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates the deterministic small-eigenvalue equations (RK4).
///
/// The protocol first reduces the largest small eigenvalue until it meets
/// the second (`λ₁ − λ₂ <= epsilon_equal·Δ`), then swaps. In explicit mode
/// the coupled pair member alternates every `swap_interval`; in averaged
/// mode the pair is set to its mean and evolves with the mean of the two
/// members' drifts.
pub fn integrate_reduced(
    state: &ReducedState,
    protocol: &ReducedProtocol,
    opts: &ReducedOptions,
) -> Result<ReducedSeries> {
    let n = protocol.dim();
    if state.lambdas.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: state.lambdas.len(),
        });
    }
    if !(opts.dt > 0.0 && opts.horizon >= 0.0 && opts.record_every >= 1) {
        return Err(Error::ContractViolation("need dt > 0, horizon >= 0, record_every >= 1".into()));
    }
    let k = opts.k;
    let x_a = protocol.observable(false);
    let x_b = protocol.observable(true);
    let drift = |x: &ComplexMatrix, y: &[f64]| reduced_drift(y, x, k).map(|(f, _)| f);
    let averaged = |y: &[f64]| -> Result<Vec<f64>> {
        // y = (m, rest…); evaluate with the pair equal and no a–b coupling.
        let mut full = vec![y[0], y[0]];
        full.extend_from_slice(&y[1..]);
        let f = drift(&x_a, &full)?;
        let mut out = vec![0.5 * (f[0] + f[1])];
        out.extend(f[2..].iter().map(|v| v * opts.convention.weight()));
        Ok(out)
    };

    let steps = (opts.horizon / opts.dt).round() as usize;
    let mut series = ReducedSeries {
        times: Vec::new(),
        lambdas: Vec::new(),
        delta: Vec::new(),
        phases: Vec::new(),
        switch_time: None,
    };
    let mut s = Labelled {
        phase: Phase::Reduce,
        values: state.lambdas.clone(),
    };
    let mut parity = false;
    let record = |series: &mut ReducedSeries, t: f64, s: &Labelled, parity: bool| {
        let mut sorted = s.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        series.times.push(t);
        series.delta.push(sorted.iter().sum());
        series.lambdas.push(sorted);
        series.phases.push(
            match (s.phase, opts.swap_mode, parity) {
                (Phase::Reduce, _, _) => "reduce",
                (Phase::Swap, SwapMode::Averaged, _) => "swap_avg",
                (Phase::Swap, SwapMode::Explicit, false) => "swap_a",
                (Phase::Swap, SwapMode::Explicit, true) => "swap_b",
            }
            .to_string(),
        );
    };

    for step in 0..=steps {
        let t = step as f64 * opts.dt;
        if s.phase == Phase::Reduce {
            let v = &s.values;
            let delta: f64 = v.iter().sum();
            if v[0] - v[1] <= opts.epsilon_equal * delta {
                s.phase = Phase::Swap;
                series.switch_time = Some(t);
                if opts.swap_mode == SwapMode::Averaged {
                    let m = 0.5 * (v[0] + v[1]);
                    s.values[0] = m;
                    s.values[1] = m;
                }
            }
        }
        if s.phase == Phase::Swap && opts.swap_mode == SwapMode::Explicit {
            let elapsed = t - series.switch_time.unwrap_or(t);
            // Nudge so that multiples of swap_interval land on the new half.
            parity = (((elapsed + 1e-9 * opts.dt) / opts.swap_interval).floor() as i64) % 2 == 1;
        }
        if step % opts.record_every == 0 || step == steps {
            record(&mut series, t, &s, parity);
        }
        if step == steps {
            break;
        }
        s.values = match (s.phase, opts.swap_mode) {
            (Phase::Swap, SwapMode::Averaged) => {
                let mut y = vec![s.values[0]];
                y.extend_from_slice(&s.values[2..]);
                let y = rk4(&y, opts.dt, averaged)?;
                let mut out = vec![y[0], y[0]];
                out.extend_from_slice(&y[1..]);
                out
            }
            (Phase::Swap, SwapMode::Explicit) if parity => {
                rk4(&s.values, opts.dt, |y| drift(&x_b, y))?
            }
            _ => rk4(&s.values, opts.dt, |y| drift(&x_a, y))?,
        };
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_observable_has_no_drift() {
        let x = ComplexMatrix::from_real_diagonal(&[1.0, 0.5, -1.0]);
        let (f, s) = reduced_drift(&[0.02, 0.01], &x, 1.0).unwrap();
        assert_eq!(f, vec![0.0, 0.0]);
        let r8 = 8f64.sqrt();
        assert!((s[0] - r8 * 0.02 * 0.5).abs() < 1e-15);
        assert!((s[1] - r8 * 0.01 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn qutrit_drift() {
        let p = ReducedProtocol::Qutrit { q: 1.0 };
        let (f, s) = reduced_drift(&[0.02, 0.01], &p.observable(false), 1.0).unwrap();
        assert!((f[0] + 8.0 * 0.02).abs() < 1e-15);
        assert_eq!((f[1], s[0], s[1]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn four_level_drift() {
        let x = ComplexMatrix::from_real_rows(&[
            &[0.0, 3.0, 0.0, 0.0],
            &[3.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let (f, s) = reduced_drift(&[0.02, 0.01, 0.005], &x, 1.0).unwrap();
        assert!((f[0] + 8.0 * 9.0 * 0.02).abs() < 1e-14);
        let expect = 8.0 * (0.01 * 0.005) / 0.005;
        assert!((f[1] - expect).abs() < 1e-14);
        assert!((f[2] + expect).abs() < 1e-14);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_coupled_pair_rejected() {
        let p = ReducedProtocol::FourLevel { x1: 2.0, c: 1.0 };
        let r = reduced_drift(&[0.02, 0.005, 0.005], &p.observable(false), 1.0);
        assert!(matches!(r, Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn protocol_selection() {
        let s = ObservableSpectrum::new(vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            ReducedProtocol::from_spectrum(&s, &VPolicy::Identity).unwrap(),
            ReducedProtocol::Qutrit { q: 1.0 }
        );
        let s = ObservableSpectrum::new(vec![2.0, 1.5, 0.0]).unwrap();
        assert!(ReducedProtocol::from_spectrum(&s, &VPolicy::Identity).is_err());
        let s = ObservableSpectrum::new(vec![2.0, 1.0, -1.0, -2.0]).unwrap();
        assert_eq!(
            ReducedProtocol::from_spectrum(&s, &VPolicy::UnbiasedPair).unwrap(),
            ReducedProtocol::FourLevel { x1: 2.0, c: 1.0 }
        );
        let s = ObservableSpectrum::new(vec![2.0, 1.0, 0.0, -2.0]).unwrap();
        assert!(matches!(
            ReducedProtocol::from_spectrum(&s, &VPolicy::UnbiasedPair),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn qutrit_reduce_phase_is_exponential() {
        let p = ReducedProtocol::Qutrit { q: 1.0 };
        let mut o = ReducedOptions::new(&p, 1.0, 1e-5, 0.05);
        o.record_every = 100;
        let st = ReducedState::new(vec![0.02, 0.001]).unwrap();
        let s = integrate_reduced(&st, &p, &o).unwrap();
        for (t, l) in s.times.iter().zip(&s.lambdas) {
            let e = 0.02 * (-8.0 * t).exp();
            assert!(((l[0] - e) / e).abs() <= 1e-8);
            assert_eq!(l[1], 0.001);
        }
    }

    #[test]
    fn qutrit_swap_phase_halves_rate() {
        let p = ReducedProtocol::Qutrit { q: 1.0 };
        let mut o = ReducedOptions::new(&p, 1.0, 1e-5, 0.4);
        o.swap_mode = SwapMode::Averaged;
        let st = ReducedState::new(vec![0.02, 0.01]).unwrap();
        let s = integrate_reduced(&st, &p, &o).unwrap();
        let ts = s.switch_time.unwrap();
        let i0 = s.times.iter().position(|&t| t >= ts).unwrap();
        let (t0, d0) = (s.times[i0], s.delta[i0]);
        for i in (i0..s.times.len()).step_by(1000) {
            let e = d0 * (-4.0 * (s.times[i] - t0)).exp();
            assert!(((s.delta[i] - e) / e).abs() < 1e-8);
            assert_eq!(s.lambdas[i][0], s.lambdas[i][1]);
        }
    }

    #[test]
    fn qutrit_switch_time() {
        let p = ReducedProtocol::Qutrit { q: 1.0 };
        let o = ReducedOptions::new(&p, 1.0, 1e-5, 0.2);
        let st = ReducedState::new(vec![0.02, 0.01]).unwrap();
        let s = integrate_reduced(&st, &p, &o).unwrap();
        let gamma = 8.0;
        let tau = 2f64.ln() / gamma;
        let eps = o.epsilon_equal;
        let slack = ((1.0 + eps) / (1.0 - eps)).ln() / gamma + o.dt;
        assert!((s.switch_time.unwrap() - tau).abs() <= slack);
        assert!((tau - 0.0866).abs() < 1e-4);
    }

    #[test]
    fn fixed_points() {
        let (g, r) = averaged_fixed_point(1.0, 2.0, 1.0, AveragingConvention::ContinuousCoupling)
            .unwrap();
        assert!((g - 40.0 / 3.0).abs() < 1e-12 && (r - 2.5).abs() < 1e-12);
        let (g, r) = averaged_fixed_point(1.0, 2.0, 1.0, AveragingConvention::HalfRate).unwrap();
        assert!((g - 10.0).abs() < 1e-12 && (r - 5.0 / 3.0).abs() < 1e-12);
    }
}
