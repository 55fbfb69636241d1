//! Closed-form rates, bounds and cost functions.

use crate::error::{Error, Result};

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::ContractViolation(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

/// `Δ₀ e^{−2ktδx²/(N−1)}`: the slowest decay any LOP can show.
pub fn decay_bound(delta0: f64, k: f64, deltax: f64, n: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::ContractViolation("need N >= 2".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::ContractViolation(format!("need t >= 0, got {t}")));
    }
    Ok(delta0 * (-2.0 * k * t * deltax * deltax / (n as f64 - 1.0)).exp())
}

/// `β(N−1)/(4kδx²)`: steady-state error under an LOP with isotropic noise.
pub fn lop_steady_state(beta: f64, k: f64, deltax: f64, n: usize) -> Result<f64> {
    check_rate("k", k)?;
    if n < 2 {
        return Err(Error::ContractViolation("need N >= 2".into()));
    }
    Ok(beta * (n as f64 - 1.0) / (4.0 * k * deltax * deltax))
}

/// `β/(4kδx²)`: no protocol reaches a lower steady-state error.
pub fn universal_steady_state_bound(beta: f64, k: f64, deltax: f64) -> Result<f64> {
    check_rate("k", k)?;
    Ok(beta / (4.0 * k * deltax * deltax))
}

/// Printed N = 4 asymptotics for spectrum `(x₁, c, −c, −x₁)`:
/// `γ = (4k/3c²)(x₁²−c²)(x₁²−2c²)` with `R_ss = (x₁²+c²)/(x₁²−c²)` for
/// `x₁ > √2c`, and `γ = 4kx₁²` (no ratio) for `c < x₁ <= √2c`.
pub fn n4_paper_rate(k: f64, x1: f64, c: f64) -> Result<(f64, Option<f64>)> {
    if !(c > 0.0 && x1 > c) {
        return Err(Error::ContractViolation(format!(
            "need x1 > c > 0, got x1 = {x1}, c = {c}"
        )));
    }
    let (x2, c2) = (x1 * x1, c * c);
    if x2 > 2.0 * c2 {
        let gamma = 4.0 * k / (3.0 * c2) * (x2 - c2) * (x2 - 2.0 * c2);
        Ok((gamma, Some((x2 + c2) / (x2 - c2))))
    } else {
        Ok((4.0 * k * x2, None))
    }
}

/// `γ = 8kq²`
pub fn qutrit_gamma(k: f64, q: f64) -> f64 {
    8.0 * k * q * q
}

/// `τ = ln(L1/L2)/γ`: when the qutrit protocol starts swapping.
pub fn qutrit_switch_time(l1: f64, l2: f64, k: f64, q: f64) -> f64 {
    (l1 / l2).ln() / qutrit_gamma(k, q)
}

fn check_qutrit(l1: f64, l2: f64) -> Result<()> {
    if !(l2 > 0.0 && l1 >= l2) {
        return Err(Error::ContractViolation(format!(
            "need L1 >= L2 > 0, got L1 = {l1}, L2 = {l2}"
        )));
    }
    if l1 + l2 > 0.1 + 1e-15 {
        return Err(Error::ContractViolation("need L1 + L2 <= 0.1".into()));
    }
    Ok(())
}

/// Error probability at the horizon under the qutrit LOP, starting
/// `elapsed` before it with small eigenvalues `(L1, L2)`:
/// `L1 e^{−γs} + L2` for `s <= τ`, `2√(L1 L2) e^{−γs/2}` after.
pub fn qutrit_lop_cost(l1: f64, l2: f64, elapsed: f64, k: f64, q: f64) -> Result<f64> {
    check_qutrit(l1, l2)?;
    let g = qutrit_gamma(k, q);
    let tau = qutrit_switch_time(l1, l2, k, q);
    Ok(if elapsed <= tau {
        l1 * (-g * elapsed).exp() + l2
    } else {
        2.0 * (l1 * l2).sqrt() * (-g * elapsed / 2.0).exp()
    })
}

/// Time derivative of the branch-1 cost, `γ L1 e^{−γs}`.
pub fn hjb_lhs(l1: f64, l2: f64, elapsed: f64, k: f64, q: f64) -> Result<f64> {
    check_qutrit(l1, l2)?;
    let tau = qutrit_switch_time(l1, l2, k, q);
    if elapsed > tau {
        return Err(Error::ContractViolation(format!(
            "elapsed {elapsed} beyond the switch time {tau}"
        )));
    }
    let g = qutrit_gamma(k, q);
    Ok(g * l1 * (-g * elapsed).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_bound_examples() {
        assert_eq!(decay_bound(0.01, 1.0, 2.0, 3, 0.0).unwrap(), 0.01);
        let v = decay_bound(0.01, 1.0, 2.0, 3, 1.0).unwrap();
        assert!((v - 0.01 * (-4f64).exp()).abs() < 1e-18);
        let two = decay_bound(1.0, 1.0, 2.0, 2, 0.1).unwrap();
        assert!((two - (-2.0 * 4.0 * 0.1f64).exp()).abs() < 1e-15);
        assert!(decay_bound(0.01, 1.0, 2.0, 1, 0.0).is_err());
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(lop_steady_state(0.0, 1.0, 2.0, 3).unwrap(), 0.0);
        assert!((lop_steady_state(0.01, 1.0, 2.0, 2).unwrap() - 6.25e-4).abs() < 1e-18);
        assert_eq!(
            lop_steady_state(0.01, 1.0, 2.0, 3).unwrap(),
            2.0 * lop_steady_state(0.01, 1.0, 2.0, 2).unwrap()
        );
        assert_eq!(universal_steady_state_bound(0.0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(
            universal_steady_state_bound(0.01, 1.0, 2.0).unwrap(),
            lop_steady_state(0.01, 1.0, 2.0, 2).unwrap()
        );
    }

    #[test]
    fn homogeneity() {
        let s = 3.7;
        let a = decay_bound(0.01, 1.0, 2.0, 3, 0.2).unwrap();
        assert!((decay_bound(0.01 * s, 1.0, 2.0, 3, 0.2).unwrap() - s * a).abs() < 1e-15);
        let b = lop_steady_state(0.01, 1.0, 2.0, 3).unwrap();
        assert!((lop_steady_state(0.01 * s, 1.0, 2.0, 3).unwrap() - s * b).abs() < 1e-15);
        assert!((lop_steady_state(0.01, s, 2.0, 3).unwrap() - b / s).abs() < 1e-15);
        let u = universal_steady_state_bound(0.01, 1.0, 2.0).unwrap();
        assert!((universal_steady_state_bound(0.01 * s, 1.0, 2.0).unwrap() - s * u).abs() < 1e-15);
        assert!((universal_steady_state_bound(0.01, s, 2.0).unwrap() - u / s).abs() < 1e-15);
    }

    #[test]
    fn n4_rate_branches() {
        let (g, r) = n4_paper_rate(1.0, 2.0, 1.0).unwrap();
        assert!((g - 8.0).abs() < 1e-12);
        assert!((r.unwrap() - 5.0 / 3.0).abs() < 1e-12);
        let (g, r) = n4_paper_rate(1.0, 1.2, 1.0).unwrap();
        assert!((g - 5.76).abs() < 1e-12);
        assert!(r.is_none());
        let (g, _) = n4_paper_rate(1.0, 2f64.sqrt() * (1.0 + 1e-9), 1.0).unwrap();
        assert!(g.abs() < 1e-7);
        assert!(n4_paper_rate(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn qutrit_cost_examples() {
        assert_eq!(qutrit_lop_cost(0.02, 0.01, 0.0, 1.0, 1.0).unwrap(), 0.03);
        let tau = qutrit_switch_time(0.02, 0.01, 1.0, 1.0);
        assert!((tau - 2f64.ln() / 8.0).abs() < 1e-15);
        let at = qutrit_lop_cost(0.02, 0.01, tau, 1.0, 1.0).unwrap();
        let after = 2.0 * (0.02f64 * 0.01).sqrt() * (-8.0 * tau / 2.0).exp();
        assert!((at - 0.02).abs() < 1e-15);
        assert!((after - at).abs() < 1e-12);
    }

    #[test]
    fn hjb_lhs_is_cost_derivative() {
        let (l1, l2) = (0.05, 0.005);
        let g = 8.0;
        let h = 1e-6 / g;
        for &s in &[0.0, 0.05, 0.1, 0.2] {
            let lhs = hjb_lhs(l1, l2, s, 1.0, 1.0).unwrap();
            if s == 0.0 {
                assert!((lhs - g * l1).abs() < 1e-15);
                continue;
            }
            let fd = -(qutrit_lop_cost(l1, l2, s + h, 1.0, 1.0).unwrap()
                - qutrit_lop_cost(l1, l2, s - h, 1.0, 1.0).unwrap())
                / (2.0 * h);
            assert!(((fd - lhs) / lhs).abs() < 1e-6, "s={s} fd={fd} lhs={lhs}");
        }
        assert!(hjb_lhs(l1, l2, 1.0, 1.0, 1.0).is_err());
    }
}
