use crate::error::{Error, Result};

/// Fraction of leading samples dropped before fitting a rate.
pub const BURN_IN_FRACTION: f64 = 0.2;
pub const MIN_FIT_SAMPLES: usize = 10;

/// Decay rate of `values(times)`: drops the first 20% of samples, then fits
/// `log(values)` against `times` by least squares. Returns `(γ, r²)` with
/// `γ` the negated slope.
pub fn fit_exponential_rate(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    check(times, values)?;
    let skip = (times.len() as f64 * BURN_IN_FRACTION).floor() as usize;
    fit_log_linear(&times[skip..], &values[skip..])
}

/// The same fit without burn-in.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::ContractViolation("need >= 2 paired samples".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::ContractViolation(format!(
            "rate fit needs positive values, got {v}"
        )));
    }
    let n = times.len() as f64;
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, yv) in times.iter().zip(&y) {
        let (dt, dy) = (t - mt, yv - my);
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ContractViolation("all sample times are equal".into()));
    }
    let slope = sxy / sxx;
    // Zero-variance data: the flat line fits exactly.
    let r2 = if syy <= 1e-30 * (1.0 + my * my) {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    let slope = if syy <= 1e-30 * (1.0 + my * my) { 0.0 } else { slope };
    Ok((-slope, r2))
}

fn check(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: values.len(),
        });
    }
    if times.len() < MIN_FIT_SAMPLES {
        return Err(Error::ContractViolation(format!(
            "rate fit needs >= {MIN_FIT_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    Ok(())
}
