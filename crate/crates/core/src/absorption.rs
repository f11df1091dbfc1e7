//! Closed-form cost model for the coherent time-domain absorption algorithm:
//! a second-order product formula over double-factorized fragments, wrapped in
//! a generalized QSP polynomial and a Hadamard test.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};
use crate::linalg::ceil_tol;
use crate::report::{BreakdownEntry, CostReport, GateCount};
use crate::units::{cross_section_prefactor, EUV_OMEGA};

/// Phase-gradient register width used when none is given.
pub const DEFAULT_ROT_BITS: u32 = 18;
/// Qubits beyond the 2N spin-orbital register (phase gradient, QSP and
/// Hadamard ancillas, select/QROM workspace).
pub const DEFAULT_ANCILLA_CONSTANT: u64 = 104;

/// How many Fourier indices the QSP polynomial has to cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeConvention {
    /// Powers −j_max..j_max, realized with U and U†: degree 2·j_max + 1.
    #[default]
    TwoSided,
    /// Powers 0..j_max only: degree j_max.
    OneSided,
}

impl DegreeConvention {
    pub fn degree(self, j_max: u64) -> u64 {
        match self {
            DegreeConvention::TwoSided => 2 * j_max + 1,
            DegreeConvention::OneSided => j_max,
        }
    }
}

fn default_rot_bits() -> u32 {
    DEFAULT_ROT_BITS
}
fn default_ancilla() -> u64 {
    DEFAULT_ANCILLA_CONSTANT
}

/// Parameters of one absorption-estimation run, atomic units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionSpec {
    /// Spatial orbitals N (2N spin orbitals).
    pub n_orbitals: u64,
    /// Double-factorization fragments L.
    pub l_fragments: u64,
    /// Lorentzian broadening γ (Ha).
    pub gamma: f64,
    /// ∥H∥ over the relevant window (Ha); bounds τ by π/∥H∥.
    pub spectral_norm: f64,
    pub j_max: u64,
    /// Time step of the Fourier sum (a.u.).
    pub tau: f64,
    /// |⟨Y₃⟩| (Ha).
    pub y3_magnitude: f64,
    /// 𝒩 = ∥D|Ψ_I⟩∥.
    pub dipole_norm: f64,
    /// Target cross-section error.
    pub epsilon: f64,
    #[serde(default = "default_rot_bits")]
    pub rot_bits: u32,
    /// Probe frequency (Ha); only enters α.
    #[serde(default)]
    pub omega: Option<f64>,
    /// Overrides α = 4πω/3c.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Overrides β computed from (τ, γ, j_max).
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub degree_convention: DegreeConvention,
    #[serde(default = "default_ancilla")]
    pub ancilla_constant: u64,
    /// State-preparation gates per circuit.
    #[serde(default)]
    pub state_prep_cost: u64,
}

impl AbsorptionSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_orbitals >= 1, || "n_orbitals must be >= 1".into())?;
        ensure(self.l_fragments >= 1, || "l_fragments must be >= 1".into())?;
        ensure(self.gamma > 0.0, || format!("gamma must be > 0 (got {})", self.gamma))?;
        ensure(self.tau > 0.0, || format!("tau must be > 0 (got {})", self.tau))?;
        ensure(self.y3_magnitude > 0.0, || "y3_magnitude must be > 0".into())?;
        ensure(self.epsilon > 0.0, || "epsilon must be > 0".into())?;
        ensure(self.dipole_norm >= 0.0, || "dipole_norm must be >= 0".into())?;
        ensure(self.rot_bits >= 3, || "rot_bits must be >= 3".into())?;
        if let Some(a) = self.alpha {
            ensure(a > 0.0, || "alpha must be > 0".into())?;
        }
        if let Some(b) = self.beta {
            ensure(b > 0.0, || "beta must be > 0".into())?;
        }
        if self.spectral_norm > 0.0 && self.tau * self.spectral_norm > std::f64::consts::PI {
            log::warn!(
                "tau * spectral_norm = {:.3} exceeds pi; Fourier sum aliases",
                self.tau * self.spectral_norm
            );
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| cross_section_prefactor(self.omega.unwrap_or(EUV_OMEGA)))
    }

    pub fn beta(&self) -> Result<f64> {
        match self.beta {
            Some(b) => Ok(b),
            None => beta_bound(self.tau, self.gamma, self.j_max),
        }
    }
}

/// Toffolis per single-qubit rotation by phase-gradient addition.
pub fn rotation_cost(rot_bits: u32) -> u128 {
    rot_bits.saturating_sub(2) as u128
}

/// (basis change, Z-matrix evolution) cost of one fragment.
pub fn fragment_cost(n_orbitals: u64, c_rot: u128) -> (u128, u128) {
    let n = n_orbitals as u128;
    let givens = n * n.saturating_sub(1) / 2;
    let c_unitary = (2 * givens * 2 + 2 * n) * c_rot;
    let c_zmatr = (2 * n * (2 * n).saturating_sub(1) / 2) * c_rot;
    (c_unitary, c_zmatr)
}

/// Largest product-formula step with Δ²|⟨Y₃⟩| ≤ γ.
pub fn trotter_step_size(gamma: f64, y3: f64) -> f64 {
    (gamma / y3.abs()).sqrt()
}

/// One-norm β of the truncated Fourier weights, closed form.
pub fn beta_bound(tau: f64, gamma: f64, j_max: u64) -> Result<f64> {
    let gt = gamma * tau;
    if !(gt > 0.0) || !gt.is_finite() {
        return Err(invalid(format!("beta diverges for gamma*tau = {gt}")));
    }
    let r = (-gt).exp();
    // (1 + r − 2 r^{j+1}) / (1 − r), written to avoid cancellation
    let one_minus_r = -(-gt).exp_m1();
    let tail = 2.0 * ((j_max as f64 + 1.0) * -gt).exp();
    Ok(tau / (2.0 * std::f64::consts::PI) * (1.0 + r - tail) / one_minus_r)
}

/// j_max → ∞ limit of [`beta_bound`]: (τ/2π)·coth(γτ/2).
pub fn beta_limit(tau: f64, gamma: f64) -> Result<f64> {
    let gt = gamma * tau;
    if !(gt > 0.0) {
        return Err(invalid(format!("beta diverges for gamma*tau = {gt}")));
    }
    Ok(tau / (2.0 * std::f64::consts::PI) / (gt / 2.0).tanh())
}

/// Chebyshev-bound shot count ⌈(α𝒩β/ε)²⌉.
pub fn shot_count(alpha: f64, dipole_norm: f64, beta: f64, epsilon: f64) -> u64 {
    let x = alpha * dipole_norm * beta / epsilon;
    ceil_tol(x * x).max(1.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionCostBreakdown {
    pub c_rot: u128,
    pub c_unitary: u128,
    pub c_zmatr: u128,
    pub c_fragment: u128,
    pub c_trotter_step: u128,
    pub trotter_step: f64,
    pub trotter_steps_per_tau: u64,
    pub gqsp_degree: u64,
    pub time_evolution: u128,
    pub state_prep: u128,
    pub gates_per_circuit: u128,
    pub alpha: f64,
    pub beta: f64,
    pub shots: u64,
    pub qubits: u64,
}

pub fn absorption_breakdown(spec: &AbsorptionSpec) -> Result<AbsorptionCostBreakdown> {
    spec.validate()?;
    let c_rot = rotation_cost(spec.rot_bits);
    let (c_unitary, c_zmatr) = fragment_cost(spec.n_orbitals, c_rot);
    let c_fragment = c_unitary + c_zmatr;
    let c_trotter_step = 2 * spec.l_fragments as u128 * c_fragment;
    let delta = trotter_step_size(spec.gamma, spec.y3_magnitude);
    let steps = ceil_tol(spec.tau / delta).max(1.0) as u64;
    let degree = spec.degree_convention.degree(spec.j_max);
    let time_evolution = degree as u128 * steps as u128 * c_trotter_step;
    let state_prep = spec.state_prep_cost as u128;
    let alpha = spec.alpha();
    let beta = spec.beta()?;
    Ok(AbsorptionCostBreakdown {
        c_rot,
        c_unitary,
        c_zmatr,
        c_fragment,
        c_trotter_step,
        trotter_step: delta,
        trotter_steps_per_tau: steps,
        gqsp_degree: degree,
        time_evolution,
        state_prep,
        gates_per_circuit: time_evolution + state_prep,
        alpha,
        beta,
        shots: shot_count(alpha, spec.dipole_norm, beta, spec.epsilon),
        qubits: 2 * spec.n_orbitals + spec.ancilla_constant,
    })
}

pub fn absorption_cost(spec: &AbsorptionSpec) -> Result<CostReport> {
    let b = absorption_breakdown(spec)?;
    CostReport::new(
        b.qubits,
        vec![
            BreakdownEntry::new("time_evolution", GateCount::Exact(b.time_evolution)),
            BreakdownEntry::new("state_preparation", GateCount::Exact(b.state_prep)),
        ],
        b.shots,
        vec![format!(
            "rot_bits={} steps_per_tau={} gqsp_degree={} alpha={:.4} beta={:.4}",
            spec.rot_bits, b.trotter_steps_per_tau, b.gqsp_degree, b.alpha, b.beta
        )],
    )
}

/// Picks the phase-gradient width in `range` that minimizes the worst
/// relative gate-count error against `targets` (spec, gates per circuit).
pub fn calibrate_rot_bits(
    targets: &[(AbsorptionSpec, f64)],
    range: std::ops::RangeInclusive<u32>,
) -> Result<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for bits in range {
        let mut worst = 0.0f64;
        for (spec, target) in targets {
            let mut s = spec.clone();
            s.rot_bits = bits;
            let g = absorption_breakdown(&s)?.gates_per_circuit as f64;
            worst = worst.max(((g - target) / target).abs());
        }
        if best.map_or(true, |(_, e)| worst < e) {
            best = Some((bits, worst));
        }
    }
    best.ok_or_else(|| invalid("empty calibration range"))
}
