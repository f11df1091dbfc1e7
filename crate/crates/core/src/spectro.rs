//! Dense small-scale emulation of the time-domain absorption algorithm.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{commutator, eig_unitary, eigh, expm_hermitian, hermitian_deviation, CMatrix, CVector, I};
use crate::units::cross_section_prefactor;

const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-9;

/// Hamiltonian, dipole and reference state, with the spectral data every
/// response function needs precomputed.
#[derive(Debug, Clone)]
pub struct SpectralScene {
    hamiltonian: CMatrix,
    dipole: CMatrix,
    ground_state: CVector,
    ground_energy: f64,
    energies: Vec<f64>,
    /// ⟨k|D|ψ₀⟩ in the eigenbasis of H.
    amplitudes: Vec<Complex64>,
    /// ⟨ψ₀|D|ψ₀⟩.
    dipole_expectation: f64,
}

impl SpectralScene {
    /// Uses the lowest eigenvector of `hamiltonian` as the reference state.
    pub fn new(hamiltonian: CMatrix, dipole: CMatrix) -> Result<Self> {
        check_pair(&hamiltonian, &dipole)?;
        let (_, vecs) = eigh(&hamiltonian);
        let psi = vecs.column(0).into_owned();
        Self::with_ground_state(hamiltonian, dipole, psi)
    }

    pub fn with_ground_state(hamiltonian: CMatrix, dipole: CMatrix, ground_state: CVector) -> Result<Self> {
        check_pair(&hamiltonian, &dipole)?;
        let dim = hamiltonian.nrows();
        if ground_state.len() != dim {
            return Err(invalid(format!("ground state has length {}, expected {dim}", ground_state.len())));
        }
        if (ground_state.norm() - 1.0).abs() > EIGEN_TOL {
            return Err(invalid(format!("ground state norm {} is not 1", ground_state.norm())));
        }
        let h_psi = &hamiltonian * &ground_state;
        let e0 = ground_state.dotc(&h_psi).re;
        let residual = (&h_psi - &ground_state * Complex64::from(e0)).norm();
        if residual > EIGEN_TOL {
            return Err(invalid(format!("reference state is not an eigenvector (residual {residual:.3e})")));
        }
        let (energies, vecs) = eigh(&hamiltonian);
        let d_psi = &dipole * &ground_state;
        let amplitudes = vecs.adjoint() * &d_psi;
        let dipole_expectation = ground_state.dotc(&d_psi).re;
        Ok(Self {
            hamiltonian,
            dipole,
            ground_state,
            ground_energy: e0,
            energies,
            amplitudes: amplitudes.iter().copied().collect(),
            dipole_expectation,
        })
    }

    /// Two levels split by `gap`, coupled by a real dipole element.
    pub fn two_level(gap: f64, coupling: f64) -> Result<Self> {
        let c = Complex64::from;
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(gap)]);
        let d = CMatrix::from_row_slice(2, 2, &[c(0.0), c(coupling), c(coupling), c(0.0)]);
        let psi = CVector::from_vec(vec![c(1.0), c(0.0)]);
        Self::with_ground_state(h, d, psi)
    }

    /// Open tight-binding chain with position dipole.
    pub fn lattice_1d(sites: usize, hopping: f64) -> Result<Self> {
        if sites < 2 {
            return Err(invalid("a chain needs at least two sites"));
        }
        let mut h = CMatrix::zeros(sites, sites);
        let mut d = CMatrix::zeros(sites, sites);
        let centre = (sites as f64 - 1.0) / 2.0;
        for i in 0..sites {
            d[(i, i)] = Complex64::from(i as f64 - centre);
            if i + 1 < sites {
                h[(i, i + 1)] = Complex64::from(-hopping);
                h[(i + 1, i)] = Complex64::from(-hopping);
            }
        }
        Self::new(h, d)
    }

    /// Gaussian-ensemble H and D (spectra of order one). The dipole is
    /// shifted by ⟨ψ₀|D|ψ₀⟩ so that it has no ground-state expectation.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(dim, &mut rng);
        let mut d = random_hermitian(dim, &mut rng);
        let (_, vecs) = eigh(&h);
        let psi = vecs.column(0).into_owned();
        let shift = psi.dotc(&(&d * &psi)).re;
        for i in 0..dim {
            d[(i, i)] -= shift;
        }
        Self::with_ground_state(h, d, psi)
    }

    pub fn from_file_data(data: &SceneFile) -> Result<Self> {
        let h = data.hamiltonian.to_matrix(data.dim, "H")?;
        let d = data.dipole.to_matrix(data.dim, "D")?;
        match &data.psi0 {
            Some(v) => {
                let psi = v.to_vector(data.dim)?;
                Self::with_ground_state(h, d, psi)
            }
            None => Self::new(h, d),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: SceneFile = serde_json::from_str(text)?;
        Self::from_file_data(&data)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }
    pub fn dipole(&self) -> &CMatrix {
        &self.dipole
    }
    pub fn ground_state(&self) -> &CVector {
        &self.ground_state
    }
    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }
    /// Eigenvalues of H, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// (E_k − E_I, |⟨k|D|ψ₀⟩|²) per eigenvector of H.
    pub fn transitions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.energies
            .iter()
            .zip(&self.amplitudes)
            .map(move |(e, a)| (e - self.ground_energy, a.norm_sqr()))
    }
}

fn check_pair(h: &CMatrix, d: &CMatrix) -> Result<()> {
    let dim = h.nrows();
    if dim == 0 || !h.is_square() || d.shape() != h.shape() {
        return Err(invalid(format!("H is {:?}, D is {:?}", h.shape(), d.shape())));
    }
    if dim > 4096 {
        return Err(invalid(format!("dim {dim} exceeds the dense limit 4096")));
    }
    if h.iter().chain(d.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("non-finite matrix entry"));
    }
    let dev = hermitian_deviation(h).max(hermitian_deviation(d));
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    (&a + a.adjoint()) * Complex64::from(0.5 / (dim as f64).sqrt())
}

/// Row-major complex matrix; `im` may be omitted for real data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexArray {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl ComplexArray {
    fn values(&self, len: usize, what: &str) -> Result<Vec<Complex64>> {
        if self.re.len() != len || !(self.im.is_empty() || self.im.len() == len) {
            return Err(invalid(format!(
                "{what}: expected {len} entries, got re={} im={}",
                self.re.len(),
                self.im.len()
            )));
        }
        Ok((0..len)
            .map(|i| Complex64::new(self.re[i], self.im.get(i).copied().unwrap_or(0.0)))
            .collect())
    }

    fn to_matrix(&self, dim: usize, what: &str) -> Result<CMatrix> {
        Ok(CMatrix::from_row_slice(dim, dim, &self.values(dim * dim, what)?))
    }

    fn to_vector(&self, dim: usize) -> Result<CVector> {
        Ok(CVector::from_vec(self.values(dim, "psi0")?))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let (mut re, mut im) = (Vec::new(), Vec::new());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { re, im }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub dim: usize,
    #[serde(rename = "H")]
    pub hamiltonian: ComplexArray,
    #[serde(rename = "D")]
    pub dipole: ComplexArray,
    #[serde(default)]
    pub psi0: Option<ComplexArray>,
}

/// 𝒩 = ‖D ψ₀‖.
pub fn dipole_excited_norm(scene: &SpectralScene) -> f64 {
    scene.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("gamma must be > 0, got {gamma}")))
    }
}

/// ⟨ψ₀|D (H − E_I − ω + iγ)⁻¹ D|ψ₀⟩ by resolution of the identity.
pub fn exact_greens(scene: &SpectralScene, omega: f64, gamma: f64) -> Result<Complex64> {
    check_gamma(gamma)?;
    Ok(scene
        .transitions()
        .map(|(de, w)| Complex64::from(w) / Complex64::new(de - omega, gamma))
        .sum())
}

fn lorentzian(de: f64, omega: f64, gamma: f64) -> f64 {
    gamma / ((de - omega).powi(2) + gamma * gamma)
}

/// Cross-section (4πω/3c) Σ_{F≠I} |⟨F|D|I⟩|² γ/((E_F − E_I − ω)² + γ²).
pub fn kramers_heisenberg(scene: &SpectralScene, omega: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let all: f64 = scene.transitions().map(|(de, w)| w * lorentzian(de, omega, gamma)).sum();
    // the I → I term, whatever the degeneracy of E_I
    let elastic = scene.dipole_expectation.powi(2) * lorentzian(0.0, omega, gamma);
    Ok(cross_section_prefactor(omega) * (all - elastic))
}

/// p(j) = (τ/2π) e^{−γτ|j| + iωτj} for |j| ≤ j_max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierWeights {
    pub tau: f64,
    pub gamma: f64,
    pub omega: f64,
    pub j_max: u64,
    weights: Vec<Complex64>,
    pub beta: f64,
}

impl FourierWeights {
    pub fn p(&self, j: i64) -> Option<Complex64> {
        let idx = j + self.j_max as i64;
        if idx < 0 {
            return None;
        }
        self.weights.get(idx as usize).copied()
    }

    /// Weights ordered from j = −j_max to j_max.
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// e^{−γτ}.
    fn decay(&self) -> f64 {
        (-self.gamma * self.tau).exp()
    }
}

pub fn fourier_weights(omega: f64, gamma: f64, tau: f64, j_max: u64) -> Result<FourierWeights> {
    check_gamma(gamma)?;
    if !(tau > 0.0) || !tau.is_finite() || !omega.is_finite() {
        return Err(invalid(format!("need tau > 0 and finite omega (tau={tau}, omega={omega})")));
    }
    let j = j_max as i64;
    let c = tau / (2.0 * PI);
    let weights: Vec<Complex64> = (-j..=j)
        .map(|k| Complex64::from_polar(c * (-gamma * tau * k.abs() as f64).exp(), omega * tau * k as f64))
        .collect();
    let beta = weights.iter().map(|w| w.norm()).sum();
    Ok(FourierWeights {
        tau,
        gamma,
        omega,
        j_max,
        weights,
        beta,
    })
}

/// 1 − e^{z}, accurate for small |z|.
fn one_minus_exp(z: Complex64) -> Complex64 {
    let em1 = z.re.exp_m1();
    let (s, c) = z.im.sin_cos();
    let half = (z.im / 2.0).sin();
    // e^{x}(cos y + i sin y) − 1 = expm1(x)·cos y − 2 sin²(y/2) + i e^{x} sin y
    -Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// Σ_{j=1}^{J} e^{zj}.
fn geometric_tail(z: Complex64, terms: u64) -> Complex64 {
    if terms == 0 {
        return Complex64::from(0.0);
    }
    let denom = one_minus_exp(z);
    z.exp() * one_minus_exp(z * terms as f64) / denom
}

/// ⟨Dψ₀|G_t|Dψ₀⟩ with G_t = Σ_{|j|≤J} p(j) U^j and U = e^{−i(H−E_I)τ}.
/// The sum is real and tends to −Im 𝒢(ω)/π.
pub fn td_correlator(scene: &SpectralScene, w: &FourierWeights) -> f64 {
    let c = w.tau / (2.0 * PI);
    scene
        .transitions()
        .map(|(de, wt)| {
            let z = Complex64::new(-w.gamma * w.tau, (w.omega - de) * w.tau);
            wt * c * (1.0 + 2.0 * geometric_tail(z, w.j_max).re)
        })
        .sum()
}

/// −2πi [½ p(0) 𝒩² + Σ_{j=1}^{J} p(−j) ⟨Dψ₀|U^{−j}|Dψ₀⟩]: the causal
/// trapezoid sum, which tends to 𝒢(ω) as τ → 0 and J → ∞. Its imaginary
/// part is exactly −π · [`td_correlator`].
pub fn td_greens(scene: &SpectralScene, w: &FourierWeights) -> Complex64 {
    let c = w.tau / (2.0 * PI);
    let s: Complex64 = scene
        .transitions()
        .map(|(de, wt)| {
            let z = Complex64::new(-w.gamma * w.tau, (de - w.omega) * w.tau);
            (Complex64::from(0.5) + geometric_tail(z, w.j_max)) * (wt * c)
        })
        .sum();
    -2.0 * PI * I * s
}

/// Bound on |td_correlator(J) − td_correlator(∞)|.
pub fn td_correlator_tail_bound(norm_sq: f64, w: &FourierWeights) -> f64 {
    let r = w.decay();
    2.0 * norm_sq * w.tau / (2.0 * PI) * r.powf(w.j_max as f64 + 1.0) / (1.0 - r)
}

/// Bound on |td_greens(J) − td_greens(∞)|.
pub fn td_greens_tail_bound(norm_sq: f64, w: &FourierWeights) -> f64 {
    let r = w.decay();
    w.tau * norm_sq * r.powf(w.j_max as f64 + 1.0) / (1.0 - r)
}

#[derive(Debug, Clone)]
pub struct TrotterSpectrum {
    /// Eigenvalues of H = Σ fragments, ascending.
    pub exact: Vec<f64>,
    /// −arg(eigenvalue of U₂(Δ))/Δ, paired with `exact` by eigenvector overlap.
    pub effective: Vec<f64>,
    pub y3: CMatrix,
    /// ⟨E_l|Y₃|E_l⟩.
    pub y3_expectation: Vec<f64>,
    /// −Δ² ⟨E_l|Y₃|E_l⟩.
    pub predicted_shift: Vec<f64>,
}

/// Second-order product e^{−iH_LΔ/2}⋯e^{−iH_2Δ/2} e^{−iH_1Δ} e^{−iH_2Δ/2}⋯e^{−iH_LΔ/2}.
pub fn strang_step(fragments: &[CMatrix], delta: f64) -> CMatrix {
    let halves: Vec<CMatrix> = fragments[1..].iter().map(|f| expm_hermitian(f, delta / 2.0)).collect();
    let mut u = expm_hermitian(&fragments[0], delta);
    for h in &halves {
        u = h * u * h;
    }
    u
}

/// Leading error operator: H_eff = H − Δ² Y₃ + O(Δ⁴) for [`strang_step`].
pub fn y3_operator(fragments: &[CMatrix]) -> CMatrix {
    let n = fragments[0].nrows();
    let mut y = CMatrix::zeros(n, n);
    let mut s = fragments[0].clone();
    for h in &fragments[1..] {
        let sh = commutator(&s, h);
        y += commutator(h, &sh) / Complex64::from(24.0) + commutator(&s, &sh) / Complex64::from(12.0);
        s += h;
    }
    y
}

pub fn trotter_effective_spectrum(fragments: &[CMatrix], delta: f64) -> Result<TrotterSpectrum> {
    let first = fragments.first().ok_or_else(|| invalid("no fragments"))?;
    let dim = first.nrows();
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid(format!("delta must be > 0, got {delta}")));
    }
    let mut h = CMatrix::zeros(dim, dim);
    for f in fragments {
        if f.shape() != (dim, dim) {
            return Err(invalid("fragments differ in shape"));
        }
        let dev = hermitian_deviation(f);
        if dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        h += f;
    }
    let (exact, vecs) = eigh(&h);
    let e_max = exact.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let phase = e_max * delta;
    if phase >= PI {
        return Err(Error::PhaseWrap {
            phase,
            suggested_delta: 0.5 * PI / e_max,
        });
    }
    let (vals, q) = eig_unitary(&strang_step(fragments, delta));

    // greedy maximum-overlap pairing
    let overlap = vecs.adjoint() * &q;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
    for l in 0..dim {
        for m in 0..dim {
            pairs.push((overlap[(l, m)].norm_sqr(), l, m));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_l = vec![false; dim];
    let mut used_m = vec![false; dim];
    let mut effective = vec![0.0; dim];
    for (_, l, m) in pairs {
        if used_l[l] || used_m[m] {
            continue;
        }
        used_l[l] = true;
        used_m[m] = true;
        effective[l] = -vals[m].arg() / delta;
    }

    let y3 = y3_operator(fragments);
    let y3_expectation: Vec<f64> = (0..dim)
        .map(|l| {
            let v = vecs.column(l);
            v.dotc(&(&y3 * v)).re
        })
        .collect();
    let predicted_shift = y3_expectation.iter().map(|y| -delta * delta * y).collect();
    Ok(TrotterSpectrum {
        exact,
        effective,
        y3,
        y3_expectation,
        predicted_shift,
    })
}

/// Outcome of a simulated Hadamard-test campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub shots: u64,
    /// Factor multiplying the sample mean of Z.
    pub scale: f64,
    /// Exact E[Z].
    pub expectation: f64,
}

/// α·π·𝒩²·β: the factor turning E[Z] into a cross-section, where
/// E[Z] = ⟨Φ|G_t|Φ⟩/β on Φ = Dψ₀/𝒩.
pub fn hadamard_scale(scene: &SpectralScene, w: &FourierWeights) -> f64 {
    let n = dipole_excited_norm(scene);
    cross_section_prefactor(w.omega) * PI * n * n * w.beta
}

/// Shots for a one-sigma error of ε: ⌈(scale/ε)²⌉.
pub fn hadamard_shot_budget(scene: &SpectralScene, w: &FourierWeights, epsilon: f64) -> u64 {
    let x = hadamard_scale(scene, w) / epsilon;
    (x * x).ceil().max(1.0) as u64
}

/// Draws `shots` outcomes Z ∈ {−1, 1} of the ideal (always successful)
/// Hadamard test and returns scale · mean(Z).
pub fn hadamard_shot_simulator(
    scene: &SpectralScene,
    w: &FourierWeights,
    shots: u64,
    seed: u64,
) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(invalid("shots must be >= 1"));
    }
    let n = dipole_excited_norm(scene);
    if n == 0.0 {
        return Ok(ShotEstimate {
            estimate: 0.0,
            stderr: 0.0,
            shots,
            scale: 0.0,
            expectation: 0.0,
        });
    }
    let m = (td_correlator(scene, w) / (n * n * w.beta)).clamp(-1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let up = Binomial::new(shots, (1.0 + m) / 2.0)
        .map_err(|e| invalid(e.to_string()))?
        .sample(&mut rng);
    let mean = (2.0 * up as f64 - shots as f64) / shots as f64;
    let scale = hadamard_scale(scene, w);
    Ok(ShotEstimate {
        estimate: scale * mean,
        stderr: scale * ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt(),
        shots,
        scale,
        expectation: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub omega_ha: f64,
    pub sigma_exact: f64,
    pub sigma_td: f64,
    pub sigma_sampled: f64,
    pub stderr: f64,
}

/// Cross-section on a frequency grid: exact, time-domain and sampled.
/// Each frequency gets its own seed derived from `seed`.
pub fn absorption_spectrum(
    scene: &SpectralScene,
    omegas: &[f64],
    gamma: f64,
    tau: f64,
    j_max: u64,
    shots: u64,
    seed: u64,
) -> Result<Vec<SpectrumRow>> {
    omegas
        .iter()
        .enumerate()
        .map(|(i, &omega)| {
            let w = fourier_weights(omega, gamma, tau, j_max)?;
            let shot = hadamard_shot_simulator(scene, &w, shots, seed.wrapping_add(i as u64))?;
            Ok(SpectrumRow {
                omega_ha: omega,
                sigma_exact: kramers_heisenberg(scene, omega, gamma)?,
                sigma_td: cross_section_prefactor(omega) * PI * td_correlator(scene, &w),
                sigma_sampled: shot.estimate,
                stderr: shot.stderr,
            })
        })
        .collect()
}

/// Dense real matrix helper for callers building scenes from real data.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(Complex64::from)
}
