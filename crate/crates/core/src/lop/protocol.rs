use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::observable::{lop_block, observable_in_basis, VPolicy};
use crate::error::{Error, Result};
use crate::qcore::{inner, ComplexMatrix, Observable, ObservableSpectrum, SpectralDecomposition};
use crate::sme::{Controller, ObservableRule};

pub const DEFAULT_EPSILON_EQUAL: f64 = 0.01;

/// `0.01 / (k δx²)`
pub fn default_swap_interval(k: f64, delta_x: f64) -> f64 {
    0.01 / (k * delta_x * delta_x)
}

/// Places the LOP block structure on an ordered basis.
///
/// The basis is remembered from the moment the decision was taken. When the
/// rule is evaluated on a nearby state, each remembered vector is replaced
/// by the new eigenvector it overlaps most (phase aligned). In paired mode
/// slots 1 and 2 are not eigenvectors; they are the remembered pair
/// projected onto the complement of the other slots, which keeps the rule
/// smooth while the pair eigenvalues are (nearly) degenerate.
#[derive(Debug, Clone)]
pub struct BasisRule {
    reference: Vec<Vec<C64>>,
    paired: bool,
    block: ComplexMatrix,
    spectrum: ObservableSpectrum,
}

impl BasisRule {
    pub fn reference(&self) -> &[Vec<C64>] {
        &self.reference
    }
}

impl ObservableRule for BasisRule {
    fn observable(&self, spec: &SpectralDecomposition) -> Result<Observable> {
        let w = realize_basis(&self.reference, spec, self.paired);
        Ok(observable_in_basis(&w, &self.block, &self.spectrum))
    }
}

/// A single step's control decision.
#[derive(Debug, Clone)]
pub enum Decision {
    Basis(BasisRule),
    Static(Observable),
}

impl ObservableRule for Decision {
    fn observable(&self, spec: &SpectralDecomposition) -> Result<Observable> {
        match self {
            Decision::Basis(r) => r.observable(spec),
            Decision::Static(x) => Ok(x.clone()),
        }
    }
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

fn project_out(v: &mut [C64], onto: &[C64]) {
    let p = inner(onto, v);
    for (a, b) in v.iter_mut().zip(onto) {
        *a -= p * b;
    }
}

/// Maps a remembered ordered basis onto the eigenvectors of `spec`.
pub(crate) fn realize_basis(
    reference: &[Vec<C64>],
    spec: &SpectralDecomposition,
    paired: bool,
) -> Vec<Vec<C64>> {
    let n = spec.dim();
    let is_pair = |s: usize| paired && (s == 1 || s == 2);
    let mut used = vec![false; n];
    let mut out: Vec<Vec<C64>> = vec![Vec::new(); n];
    for s in (0..n).filter(|&s| !is_pair(s)) {
        let mut best = (f64::NEG_INFINITY, 0, C64::new(1.0, 0.0));
        for j in (0..n).filter(|&j| !used[j]) {
            let z = inner(&reference[s], spec.vector(j));
            if z.norm() > best.0 {
                best = (z.norm(), j, z);
            }
        }
        let (r, j, z) = best;
        used[j] = true;
        let phase = if r > 1e-12 { z.conj() / r } else { C64::new(1.0, 0.0) };
        out[s] = spec.vector(j).iter().map(|c| c * phase).collect();
    }
    if paired {
        let spare: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
        for s in [1, 2] {
            let mut v = reference[s].clone();
            for _ in 0..2 {
                for a in (0..n).filter(|&a| !is_pair(a) || (s == 2 && a == 1)) {
                    project_out(&mut v, &out[a]);
                }
            }
            if normalize(&mut v) < 1e-6 {
                // Remembered vector lost; fall back to an eigenvector.
                v = spec.vector(spare[s - 1]).to_vec();
                for a in (0..n).filter(|&a| !is_pair(a) || (s == 2 && a == 1)) {
                    project_out(&mut v, &out[a]);
                }
                normalize(&mut v);
            }
            out[s] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Reduce,
    Swap,
}

/// State of the equalize-then-swap protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    pub phase: Phase,
    pub swap_parity: bool,
    pub epsilon_equal: f64,
    pub swap_interval: f64,
    pub switch_time: Option<f64>,
    pair_memory: Option<Vec<Vec<C64>>>,
}

impl ProtocolState {
    pub fn new(epsilon_equal: f64, swap_interval: f64) -> Result<Self> {
        if !(epsilon_equal >= 0.0) {
            return Err(Error::Config("epsilon_equal must be >= 0".into()));
        }
        if !(swap_interval > 0.0) {
            return Err(Error::Config("swap_interval must be > 0".into()));
        }
        Ok(Self {
            phase: Phase::Reduce,
            swap_parity: false,
            epsilon_equal,
            swap_interval,
            switch_time: None,
            pair_memory: None,
        })
    }

    /// Defaults: `epsilon_equal = 0.01`, `swap_interval = 0.01/(k δx²)`.
    pub fn with_defaults(k: f64, delta_x: f64) -> Self {
        Self::new(DEFAULT_EPSILON_EQUAL, default_swap_interval(k, delta_x)).expect("valid defaults")
    }

    pub fn tag(&self) -> &'static str {
        match (self.phase, self.swap_parity) {
            (Phase::Reduce, _) => "reduce",
            (Phase::Swap, false) => "swap_a",
            (Phase::Swap, true) => "swap_b",
        }
    }
}

/// Equalize-then-swap protocol for the qutrit and for N = 4 with the
/// unbiased-pair V-policy.
///
/// While reducing, the target is coupled to the largest small eigenvalue.
/// Once the two largest small eigenvalues agree to within
/// `epsilon_equal·Δ`, the measurement alternates between coupling the
/// target to one member of the pair and to the other (`Xᵘ₂ = O Xᵘ₁ O†` with
/// `O` the flip of the pair) every `swap_interval`.
#[derive(Debug, Clone)]
pub struct SwitchingProtocol {
    state: ProtocolState,
    spectrum: ObservableSpectrum,
    shift: f64,
    block: ComplexMatrix,
}

impl SwitchingProtocol {
    pub fn new(spectrum: &ObservableSpectrum, v: &VPolicy, state: ProtocolState) -> Result<Self> {
        let n = spectrum.len();
        if n < 3 {
            return Err(Error::Unsupported(
                "the switching protocol needs N >= 3".into(),
            ));
        }
        let (centered, shift) = spectrum.centered();
        let block = lop_block(&centered, v)?;
        Ok(Self {
            state,
            spectrum: centered,
            shift,
            block,
        })
    }

    /// Qutrit protocol with identity V.
    pub fn qutrit(spectrum: &ObservableSpectrum, state: ProtocolState) -> Result<Self> {
        if spectrum.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: spectrum.len(),
            });
        }
        Self::new(spectrum, &VPolicy::Identity, state)
    }

    /// N = 4 protocol with the unbiased-pair V-policy.
    pub fn four_level(spectrum: &ObservableSpectrum, state: ProtocolState) -> Result<Self> {
        if spectrum.len() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: spectrum.len(),
            });
        }
        Self::new(spectrum, &VPolicy::UnbiasedPair, state)
    }

    pub fn state(&self) -> &ProtocolState {
        &self.state
    }

    /// Shift `α` applied so that `x_min = −x_max`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn spectrum(&self) -> &ObservableSpectrum {
        &self.spectrum
    }

    pub fn decide_rule(&mut self, t: f64, spec: &SpectralDecomposition) -> Result<BasisRule> {
        if spec.dim() != self.spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: self.spectrum.len(),
                got: spec.dim(),
            });
        }
        let st = &mut self.state;
        let lam = spec.eigenvalues();
        if st.phase == Phase::Reduce {
            let delta = 1.0 - lam[0];
            if lam[1] - lam[2] <= st.epsilon_equal * delta {
                st.phase = Phase::Swap;
                st.switch_time = Some(t);
                st.pair_memory = Some(spec.vectors().to_vec());
            }
        }
        let (reference, paired) = match st.phase {
            Phase::Reduce => (spec.vectors().to_vec(), false),
            Phase::Swap => {
                let elapsed = t - st.switch_time.unwrap_or(t);
                st.swap_parity = ((elapsed / st.swap_interval).floor() as i64) % 2 == 1;
                let memory = st.pair_memory.as_ref().expect("set at switch");
                let w = realize_basis(memory, spec, true);
                let mut ordered = w.clone();
                st.pair_memory = Some(w);
                if st.swap_parity {
                    ordered.swap(1, 2);
                }
                (ordered, true)
            }
        };
        Ok(BasisRule {
            reference,
            paired,
            block: self.block.clone(),
            spectrum: self.spectrum.clone(),
        })
    }
}

/// One protocol step for the qutrit as a pure function of its inputs.
pub fn qutrit_protocol_step(
    state: &ProtocolState,
    spec: &SpectralDecomposition,
    spectrum: &ObservableSpectrum,
    t: f64,
) -> Result<(Observable, ProtocolState)> {
    if spec.dim() != 3 || spectrum.len() != 3 {
        return Err(Error::Unsupported("qutrit protocol needs N = 3".into()));
    }
    let mut p = SwitchingProtocol::qutrit(spectrum, state.clone())?;
    let rule = p.decide_rule(t, spec)?;
    Ok((rule.observable(spec)?, p.state))
}

/// Locally optimal controller built on the sorted decomposition at every
/// step (no memory; near-degenerate small eigenvalues alternate implicitly).
#[derive(Debug, Clone)]
pub struct LopController {
    spectrum: ObservableSpectrum,
    block: ComplexMatrix,
}

impl LopController {
    pub fn new(spectrum: &ObservableSpectrum, v: &VPolicy) -> Result<Self> {
        let spectrum = match v {
            VPolicy::UnbiasedPair => spectrum.centered().0,
            _ => spectrum.clone(),
        };
        let block = lop_block(&spectrum, v)?;
        Ok(Self { spectrum, block })
    }
}

/// Any of the supported feedback controllers.
#[derive(Debug, Clone)]
pub enum ProtocolController {
    Lop(LopController),
    Switching(SwitchingProtocol),
    /// Fixed lab-frame observable (no feedback).
    Static(Observable),
}

impl ProtocolController {
    pub fn switching_state(&self) -> Option<&ProtocolState> {
        match self {
            ProtocolController::Switching(p) => Some(p.state()),
            _ => None,
        }
    }
}

impl Controller for ProtocolController {
    type Rule = Decision;

    fn decide(&mut self, t: f64, spec: &SpectralDecomposition) -> Result<Decision> {
        match self {
            ProtocolController::Lop(c) => Ok(Decision::Basis(BasisRule {
                reference: spec.vectors().to_vec(),
                paired: false,
                block: c.block.clone(),
                spectrum: c.spectrum.clone(),
            })),
            ProtocolController::Switching(p) => Ok(Decision::Basis(p.decide_rule(t, spec)?)),
            ProtocolController::Static(x) => Ok(Decision::Static(x.clone())),
        }
    }

    fn tag(&self) -> String {
        match self {
            ProtocolController::Lop(_) => "lop".into(),
            ProtocolController::Switching(p) => p.state().tag().into(),
            ProtocolController::Static(_) => "static".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_unitary, stream, DensityMatrix};

    fn qutrit_spectrum() -> ObservableSpectrum {
        ObservableSpectrum::new(vec![1.0, 0.0, -1.0]).unwrap()
    }

    fn diag_spec(l: &[f64]) -> SpectralDecomposition {
        DensityMatrix::diagonal(l).unwrap().spectral().unwrap()
    }

    #[test]
    fn reduce_then_swap() {
        let st = ProtocolState::with_defaults(1.0, 2.0);
        let (x, st1) =
            qutrit_protocol_step(&st, &diag_spec(&[0.98, 0.015, 0.005]), &qutrit_spectrum(), 0.0)
                .unwrap();
        assert_eq!(st1.phase, Phase::Reduce);
        assert!((x.matrix()[(1, 0)].norm() - 1.0).abs() < 1e-15);

        let (_, st2) =
            qutrit_protocol_step(&st1, &diag_spec(&[0.98, 0.010, 0.010]), &qutrit_spectrum(), 0.1)
                .unwrap();
        assert_eq!(st2.phase, Phase::Swap);
        assert_eq!(st2.switch_time, Some(0.1));
    }

    #[test]
    fn swap_alternates_between_pair_members() {
        let st = ProtocolState::new(0.01, 0.5).unwrap();
        let spec = diag_spec(&[0.98, 0.010, 0.010]);
        let mut p = SwitchingProtocol::qutrit(&qutrit_spectrum(), st).unwrap();
        let a = p.decide_rule(0.0, &spec).unwrap().observable(&spec).unwrap();
        let b = p.decide_rule(0.6, &spec).unwrap().observable(&spec).unwrap();
        let c = p.decide_rule(1.1, &spec).unwrap().observable(&spec).unwrap();
        assert!((a.matrix()[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!(a.matrix()[(2, 0)].norm() < 1e-14);
        assert!((b.matrix()[(2, 0)].norm() - 1.0).abs() < 1e-14);
        assert!(b.matrix()[(1, 0)].norm() < 1e-14);
        assert!(c.matrix().max_abs_diff(a.matrix()) < 1e-14);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let st = ProtocolState::with_defaults(1.0, 2.0);
        let spec = diag_spec(&[0.97, 0.01, 0.01, 0.01]);
        let sp = ObservableSpectrum::new(vec![1.0, 0.5, 0.0, -1.0]).unwrap();
        assert!(qutrit_protocol_step(&st, &spec, &sp, 0.0).is_err());
    }

    #[test]
    fn realize_tracks_rotated_basis() {
        // Evaluating a rule on a slightly rotated state follows the rotation.
        let mut rng = stream(2, 0);
        let w = random_unitary(3, &mut rng);
        let lam = ComplexMatrix::from_real_diagonal(&[0.97, 0.02, 0.01]);
        let rho = (&(&w * &lam) * &w.adjoint()).hermitian_part();
        let spec = crate::qcore::eigh(&rho).unwrap();
        let mut c = ProtocolController::Lop(LopController::new(&qutrit_spectrum(), &VPolicy::Identity).unwrap());
        let rule = c.decide(0.0, &spec).unwrap();
        let x0 = rule.observable(&spec).unwrap();
        // Same state: identical observable.
        let direct = super::super::observable::build_lop_observable(
            &spec,
            &qutrit_spectrum(),
            &VPolicy::Identity,
        )
        .unwrap();
        assert!(x0.matrix().max_abs_diff(direct.matrix()) < 1e-14);
        // Reversed eigenvector phases give the same observable.
        let flipped: Vec<Vec<C64>> = spec
            .vectors()
            .iter()
            .map(|v| v.iter().map(|z| -z).collect())
            .collect();
        let spec2 = SpectralDecomposition::from_parts(spec.eigenvalues().to_vec(), flipped).unwrap();
        let x1 = rule.observable(&spec2).unwrap();
        assert!(x1.matrix().max_abs_diff(x0.matrix()) < 1e-14);
    }
}
