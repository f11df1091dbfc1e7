use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{norm_sqr, GridModel, State};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    #[default]
    ExactEigen,
    ChebyshevPoly,
}

/// Gaussian window e^{−(x−μ)²/2σ²} on the excitation energy x = H − E₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub mode: FilterMode,
    /// Chebyshev degree; chosen from `tolerance` when absent.
    #[serde(default)]
    pub poly_degree: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-3
}

/// FWHM = 2√(2 ln 2)·σ.
pub fn fwhm_factor() -> f64 {
    2.0 * (2.0 * 2f64.ln()).sqrt()
}

impl FilterSpec {
    pub fn new(center: f64, sigma: f64, mode: FilterMode) -> Self {
        Self {
            center,
            sigma,
            mode,
            poly_degree: None,
            tolerance: default_tolerance(),
        }
    }

    pub fn from_fwhm(center: f64, fwhm: f64, mode: FilterMode) -> Self {
        Self::new(center, fwhm / fwhm_factor(), mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.center.is_finite() {
            return Err(invalid(format!("filter needs sigma > 0 (got {})", self.sigma)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(invalid(format!("filter tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        (-(x - self.center).powi(2) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Coefficients of the degree-d Chebyshev interpolant of f on [−1, 1]
/// (c₀ already halved).
pub fn chebyshev_coefficients(f: impl Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let samples: Vec<f64> = (0..m).map(|j| f((PI * (j as f64 + 0.5) / m as f64).cos())).collect();
    let mut c: Vec<f64> = (0..m)
        .map(|k| {
            2.0 / m as f64
                * samples
                    .iter()
                    .enumerate()
                    .map(|(j, s)| s * (k as f64 * PI * (j as f64 + 0.5) / m as f64).cos())
                    .sum::<f64>()
        })
        .collect();
    c[0] /= 2.0;
    c
}

pub fn chebyshev_eval(coefs: &[f64], y: f64) -> f64 {
    // Clenshaw
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coefs.iter().skip(1).rev() {
        let b0 = 2.0 * y * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    y * b1 - b2 + coefs[0]
}

/// max |p(y) − f(y)| over a dense uniform grid on [−1, 1].
pub fn chebyshev_sup_error(f: impl Fn(f64) -> f64, coefs: &[f64]) -> f64 {
    let points = (40 * coefs.len()).max(4001);
    (0..points)
        .map(|i| {
            let y = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            (chebyshev_eval(coefs, y) - f(y)).abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest degree whose interpolant meets `tol` in sup norm, if any up to `max_degree`.
pub fn chebyshev_degree_for_tolerance(f: impl Fn(f64) -> f64, tol: f64, max_degree: usize) -> Option<usize> {
    let ok = |d: usize| chebyshev_sup_error(&f, &chebyshev_coefficients(&f, d)) <= tol;
    let mut hi = 1;
    while !ok(hi) {
        if hi >= max_degree {
            return None;
        }
        hi = (hi * 2).min(max_degree);
    }
    let mut lo = hi / 2;
    // invariant: ok(hi), and lo fails or is zero
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// (λ/(2√(2 ln 2) δ))·ln(1/ε), the degree law for a Gaussian of standard
/// deviation δ on a spectrum of half-width λ.
pub fn filter_degree_estimate(lambda: f64, delta: f64, epsilon: f64) -> f64 {
    lambda / (fwhm_factor() * delta) * (1.0 / epsilon).ln()
}

const MAX_DEGREE: usize = 1 << 16;

/// Applies f(H − E₀) and returns the filtered state with
/// ‖f(H − E₀)φ‖²/‖φ‖².
pub fn gaussian_filter(
    model: &GridModel,
    spec: &FilterSpec,
    psi: &[Complex64],
    ground_energy: f64,
) -> Result<(State, f64)> {
    spec.validate()?;
    let n_in = norm_sqr(psi);
    if psi.len() != model.dim() {
        return Err(invalid("state length does not match the model"));
    }
    if n_in == 0.0 {
        return Err(Error::ZeroNorm("filter input".into()));
    }
    let out = match spec.mode {
        FilterMode::ExactEigen => model.apply_spectral(psi, |e| spec.value(e - ground_energy))?,
        FilterMode::ChebyshevPoly => chebyshev_filter(model, spec, psi, ground_energy)?,
    };
    let p = norm_sqr(&out) / n_in;
    Ok((out, p))
}

fn chebyshev_filter(model: &GridModel, spec: &FilterSpec, psi: &[Complex64], e0: f64) -> Result<State> {
    let (lo, hi) = model.spectral_bounds();
    let mid = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(1e-12);
    let g = |y: f64| spec.value(mid + half * y - e0);
    let degree = match spec.poly_degree {
        Some(d) => d,
        None => chebyshev_degree_for_tolerance(g, spec.tolerance, MAX_DEGREE).ok_or(Error::DegreeTooLow {
            given: MAX_DEGREE,
            required: MAX_DEGREE + 1,
            tolerance: spec.tolerance,
        })?,
    };
    let coefs = chebyshev_coefficients(g, degree);
    if chebyshev_sup_error(g, &coefs) > spec.tolerance {
        let required = chebyshev_degree_for_tolerance(g, spec.tolerance, MAX_DEGREE).unwrap_or(MAX_DEGREE + 1);
        return Err(Error::DegreeTooLow {
            given: degree,
            required,
            tolerance: spec.tolerance,
        });
    }
    log::debug!("chebyshev filter: degree {degree}, half-width {half:.4}");

    let scaled = |v: &[Complex64]| -> State {
        let hv = model.apply_hamiltonian(v);
        hv.iter().zip(v).map(|(h, x)| (h - x * mid) / half).collect()
    };
    let mut prev = psi.to_vec();
    let mut out: State = prev.iter().map(|x| x * coefs[0]).collect();
    if degree == 0 {
        return Ok(out);
    }
    let mut cur = scaled(&prev);
    for (o, c) in out.iter_mut().zip(&cur) {
        *o += c * coefs[1];
    }
    for &ck in &coefs[2..] {
        let hc = scaled(&cur);
        let next: State = hc.iter().zip(&prev).map(|(h, p)| h * 2.0 - p).collect();
        for (o, n) in out.iter_mut().zip(&next) {
            *o += n * ck;
        }
        prev = cur;
        cur = next;
    }
    Ok(out)
}
