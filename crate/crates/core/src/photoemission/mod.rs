//! Grid emulation of the photoemission correlation function: ground state,
//! dipole excitation, Gaussian energy filter, real-time evolution,
//! continuum projection and kinetic-energy sampling.

mod checkpoint;
mod filter;
mod histogram;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use filter::{
    chebyshev_coefficients, chebyshev_degree_for_tolerance, chebyshev_sup_error, filter_degree_estimate,
    gaussian_filter, FilterMode, FilterSpec,
};
pub use histogram::{kinetic_histogram, kinetic_histogram_range, KineticHistogram};

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::arith::RadiusThreshold;
use crate::error::{invalid, Error, Result};
use crate::linalg::eigh_real;

pub type State = Vec<Complex64>;

/// Largest Hilbert-space dimension the grid emulator accepts.
pub const MAX_DIM: usize = 1 << 20;
/// Largest dimension for which a dense Hamiltonian is built.
pub const DENSE_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// −Z/√(r² + a²).
    SoftCoulomb {
        #[serde(default = "one")]
        charge: f64,
        #[serde(default = "one")]
        softening: f64,
    },
    /// ½ω²r².
    Harmonic { omega: f64 },
    Zero,
}

fn one() -> f64 {
    1.0
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::SoftCoulomb {
            charge: 1.0,
            softening: 1.0,
        }
    }
}

impl PotentialSpec {
    pub fn value(&self, r2: f64) -> f64 {
        match *self {
            PotentialSpec::SoftCoulomb { charge, softening } => -charge / (r2 + softening * softening).sqrt(),
            PotentialSpec::Harmonic { omega } => 0.5 * omega * omega * r2,
            PotentialSpec::Zero => 0.0,
        }
    }
}

/// Exchange symmetry imposed on two-electron data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exchange {
    #[default]
    Symmetric,
    Antisymmetric,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dims: usize,
    pub n_points: usize,
    pub box_length: f64,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default = "one_usize")]
    pub eta: usize,
    /// Softening of the electron-electron repulsion; `null` turns it off.
    #[serde(default = "default_interaction")]
    pub interaction: Option<f64>,
    #[serde(default)]
    pub exchange: Exchange,
}

fn one_usize() -> usize {
    1
}
fn default_interaction() -> Option<f64> {
    Some(1.0)
}

impl ModelConfig {
    pub fn new(dims: usize, n_points: usize, box_length: f64, potential: PotentialSpec) -> Self {
        Self {
            dims,
            n_points,
            box_length,
            potential,
            eta: 1,
            interaction: default_interaction(),
            exchange: Exchange::default(),
        }
    }
}

type Eigen = (Vec<f64>, DMatrix<f64>);

/// η electrons on a periodic cubic grid of N points per axis. Amplitudes are
/// stored row-major over the dims·η axes, particle-major.
pub struct GridModel {
    config: ModelConfig,
    axes: usize,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    eigen: OnceLock<Eigen>,
}

impl fmt::Debug for GridModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridModel").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Clone for GridModel {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            axes: self.axes,
            kinetic: self.kinetic.clone(),
            potential: self.potential.clone(),
            forward: self.forward.clone(),
            inverse: self.inverse.clone(),
            eigen: self.eigen.clone(),
        }
    }
}

impl GridModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let ModelConfig {
            dims,
            n_points: n,
            box_length,
            eta,
            ..
        } = config;
        if dims != 1 && dims != 3 {
            return Err(invalid(format!("dims must be 1 or 3, got {dims}")));
        }
        if !(1..=2).contains(&eta) {
            return Err(invalid(format!("eta must be 1 or 2, got {eta}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid(format!("n_points must be a power of two >= 2, got {n}")));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(invalid(format!("box_length must be > 0, got {box_length}")));
        }
        if let Some(a) = config.interaction {
            if !(a > 0.0) {
                return Err(invalid("interaction softening must be > 0"));
            }
        }
        let axes = dims * eta;
        let dim = n
            .checked_pow(axes as u32)
            .filter(|d| *d <= MAX_DIM)
            .ok_or_else(|| invalid(format!("grid dimension {n}^{axes} exceeds {MAX_DIM}")))?;

        let h = box_length / n as f64;
        let coord = |v: usize| h * (v as f64 - (n / 2) as f64);
        let mom = |m: usize| {
            let p = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
            2.0 * PI * p / box_length
        };
        let mut kinetic = vec![0.0; dim];
        let mut potential = vec![0.0; dim];
        let mut idx = vec![0usize; axes];
        for flat in 0..dim {
            unflatten(flat, n, &mut idx);
            kinetic[flat] = idx.iter().map(|&m| 0.5 * mom(m).powi(2)).sum();
            let mut v = 0.0;
            let mut pos = [[0.0; 3]; 2];
            for p in 0..eta {
                let mut r2 = 0.0;
                for d in 0..dims {
                    let x = coord(idx[p * dims + d]);
                    pos[p][d] = x;
                    r2 += x * x;
                }
                v += config.potential.value(r2);
            }
            if eta == 2 {
                if let Some(a) = config.interaction {
                    let r2: f64 = (0..dims).map(|d| (pos[0][d] - pos[1][d]).powi(2)).sum();
                    v += 1.0 / (r2 + a * a).sqrt();
                }
            }
            potential[flat] = v;
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential is not finite on the grid"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            config,
            axes,
            kinetic,
            potential,
            eigen: OnceLock::new(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }
    pub fn dims(&self) -> usize {
        self.config.dims
    }
    pub fn eta(&self) -> usize {
        self.config.eta
    }
    pub fn n_points(&self) -> usize {
        self.config.n_points
    }
    pub fn box_length(&self) -> f64 {
        self.config.box_length
    }
    pub fn spacing(&self) -> f64 {
        self.config.box_length / self.config.n_points as f64
    }
    /// Total number of grid configurations.
    pub fn dim(&self) -> usize {
        self.kinetic.len()
    }
    pub fn axes(&self) -> usize {
        self.axes
    }

    /// Signed index q = v − N/2 along one axis.
    pub fn signed_index(&self, v: usize) -> i64 {
        v as i64 - (self.config.n_points / 2) as i64
    }

    /// Position x_q = h·q of grid index v.
    pub fn coordinate(&self, v: usize) -> f64 {
        self.spacing() * self.signed_index(v) as f64
    }

    /// k_p = 2πp/L for FFT index m, with p folded into [−N/2, N/2).
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.config.n_points;
        let p = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        2.0 * PI * p / self.config.box_length
    }

    /// Diagonal of T in the momentum basis.
    pub fn kinetic_diagonal(&self) -> &[f64] {
        &self.kinetic
    }
    /// Diagonal of V (external plus interaction) in the position basis.
    pub fn potential_diagonal(&self) -> &[f64] {
        &self.potential
    }

    /// Per-axis grid indices of a flat configuration index.
    pub fn indices(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes];
        unflatten(flat, self.config.n_points, &mut idx);
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &v| acc * self.config.n_points + v)
    }

    /// Unitary multi-axis DFT, position → momentum.
    pub fn to_momentum(&self, psi: &mut [Complex64]) {
        self.fft_all(psi, &self.forward);
    }

    /// Inverse of [`Self::to_momentum`].
    pub fn to_position(&self, psi: &mut [Complex64]) {
        self.fft_all(psi, &self.inverse);
    }

    fn fft_all(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.config.n_points;
        let total = buf.len();
        let scale = 1.0 / (n as f64).sqrt();
        let mut lane = vec![Complex64::from(0.0); n];
        let mut scratch = vec![Complex64::from(0.0); plan.get_inplace_scratch_len()];
        for a in 0..self.axes {
            let stride = n.pow((self.axes - 1 - a) as u32);
            for outer in (0..total).step_by(stride * n) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, l) in lane.iter_mut().enumerate() {
                        *l = buf[base + j * stride];
                    }
                    plan.process_with_scratch(&mut lane, &mut scratch);
                    for (j, l) in lane.iter().enumerate() {
                        buf[base + j * stride] = l * scale;
                    }
                }
            }
        }
    }

    fn check_state(&self, psi: &[Complex64]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(invalid(format!("state has length {}, model needs {}", psi.len(), self.dim())));
        }
        Ok(())
    }

    /// H ψ with T applied in momentum space.
    pub fn apply_hamiltonian(&self, psi: &[Complex64]) -> State {
        let mut k = psi.to_vec();
        self.to_momentum(&mut k);
        for (a, t) in k.iter_mut().zip(&self.kinetic) {
            *a *= t;
        }
        self.to_position(&mut k);
        for ((out, a), v) in k.iter_mut().zip(psi).zip(&self.potential) {
            *out += a * v;
        }
        k
    }

    pub fn energy(&self, psi: &[Complex64]) -> f64 {
        dot(psi, &self.apply_hamiltonian(psi)).re / norm_sqr(psi)
    }

    /// Dense position-basis Hamiltonian (real symmetric).
    pub fn dense_hamiltonian(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > DENSE_MAX_DIM {
            return Err(invalid(format!("dense Hamiltonian limited to dim {DENSE_MAX_DIM}, got {dim}")));
        }
        let mut h = DMatrix::zeros(dim, dim);
        let mut e = vec![Complex64::from(0.0); dim];
        for j in 0..dim {
            e[j] = Complex64::from(1.0);
            let col = self.apply_hamiltonian(&e);
            for i in 0..dim {
                h[(i, j)] = col[i].re;
            }
            e[j] = Complex64::from(0.0);
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// Dense eigendecomposition, computed once per model.
    pub fn eigen(&self) -> Result<&Eigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let h = self.dense_hamiltonian()?;
        Ok(self.eigen.get_or_init(|| eigh_real(&h)))
    }

    /// Applies the exchange symmetry of the model (no-op for one electron).
    pub fn symmetrize(&self, psi: &mut [Complex64]) {
        if self.config.eta != 2 || self.config.exchange == Exchange::None {
            return;
        }
        let sign = if self.config.exchange == Exchange::Symmetric { 1.0 } else { -1.0 };
        let half = self.config.dims;
        let mut idx = vec![0; self.axes];
        for flat in 0..psi.len() {
            unflatten(flat, self.config.n_points, &mut idx);
            let (a, b) = idx.split_at_mut(half);
            a.swap_with_slice(b);
            let other = self.flat_index(&idx);
            if other > flat {
                let s = 0.5 * (psi[flat] + psi[other] * sign);
                psi[flat] = s;
                psi[other] = s * sign;
            } else if other == flat && sign < 0.0 {
                psi[flat] = Complex64::from(0.0);
            }
        }
    }

    /// Eigen-basis action of g(H) on ψ via the dense decomposition.
    pub(crate) fn apply_spectral(&self, psi: &[Complex64], g: impl Fn(f64) -> f64) -> Result<State> {
        let (vals, vecs) = self.eigen()?;
        let dim = self.dim();
        let mut coef = vec![Complex64::from(0.0); dim];
        for (k, c) in coef.iter_mut().enumerate() {
            let col = vecs.column(k);
            let mut s = Complex64::from(0.0);
            for i in 0..dim {
                s += psi[i] * col[i];
            }
            *c = s * g(vals[k]);
        }
        let mut out = vec![Complex64::from(0.0); dim];
        for (k, c) in coef.iter().enumerate() {
            let col = vecs.column(k);
            for i in 0..dim {
                out[i] += c * col[i];
            }
        }
        Ok(out)
    }

    /// Bounds on the spectrum of H: [min V, max T + max V].
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let vmin = self.potential.iter().copied().fold(f64::INFINITY, f64::min);
        let vmax = self.potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tmax = self.kinetic.iter().copied().fold(0.0, f64::max);
        (vmin, tmax + vmax)
    }
}

fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn scale(a: &mut [Complex64], s: f64) {
    for z in a {
        *z *= s;
    }
}

const LANCZOS_KRYLOV: usize = 60;
const LANCZOS_RESTARTS: usize = 400;
pub const GROUND_STATE_RESIDUAL: f64 = 1e-8;

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
pub fn ground_state(model: &GridModel) -> Result<(State, f64)> {
    let dim = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: State = (0..dim)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            Complex64::from(x)
        })
        .collect();
    model.symmetrize(&mut x);
    let n0 = norm_sqr(&x).sqrt();
    if n0 == 0.0 {
        return Err(Error::ZeroNorm("no state with the requested exchange symmetry".into()));
    }
    scale(&mut x, 1.0 / n0);

    let apply = |v: &[Complex64]| {
        let mut w = model.apply_hamiltonian(v);
        model.symmetrize(&mut w);
        w
    };
    let m = LANCZOS_KRYLOV.min(dim);
    let mut residual = f64::INFINITY;
    for restart in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<State> = Vec::with_capacity(m);
        let mut alphas = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        let mut v = x.clone();
        for j in 0..m {
            let mut w = apply(&v);
            let alpha = dot(&v, &w).re;
            basis.push(v);
            alphas.push(alpha);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let beta = norm_sqr(&w).sqrt();
            if j + 1 == m || beta <= 1e-13 * alphas.iter().fold(1.0f64, |a, b| a.max(b.abs())) {
                break;
            }
            betas.push(beta);
            scale(&mut w, 1.0 / beta);
            v = w;
        }
        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let (theta, y) = eigh_real(&t);
        let mut next = vec![Complex64::from(0.0); dim];
        for (i, b) in basis.iter().enumerate() {
            let c = y[(i, 0)];
            for (n, bi) in next.iter_mut().zip(b) {
                *n += bi * c;
            }
        }
        let nn = norm_sqr(&next).sqrt();
        scale(&mut next, 1.0 / nn);
        let hx = apply(&next);
        let e = dot(&next, &hx).re;
        residual = hx
            .iter()
            .zip(&next)
            .map(|(h, x)| (h - x * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        log::debug!("lanczos restart {restart}: theta={:.12} residual={residual:.3e}", theta[0]);
        x = next;
        if residual <= GROUND_STATE_RESIDUAL {
            return Ok((x, e));
        }
    }
    Err(Error::NoConvergence {
        iterations: LANCZOS_RESTARTS,
        residual,
    })
}

/// Multiplies by Σ_{particles, axes} x (signed, centred grid coordinates).
/// Returns the unnormalized vector and its norm 𝒩.
pub fn apply_dipole(model: &GridModel, psi: &[Complex64]) -> Result<(State, f64)> {
    model.check_state(psi)?;
    let mut out = psi.to_vec();
    let mut idx = vec![0; model.axes()];
    for (flat, z) in out.iter_mut().enumerate() {
        unflatten(flat, model.n_points(), &mut idx);
        let x: f64 = idx.iter().map(|&v| model.coordinate(v)).sum();
        *z *= x;
    }
    let norm = norm_sqr(&out).sqrt();
    Ok((out, norm))
}

/// Root-mean-square single-particle radius of a state.
pub fn rms_radius(model: &GridModel, psi: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    let mut idx = vec![0; model.axes()];
    for (flat, z) in psi.iter().enumerate() {
        unflatten(flat, model.n_points(), &mut idx);
        let r2: f64 = idx.iter().map(|&v| model.coordinate(v).powi(2)).sum();
        acc += z.norm_sqr() * r2 / model.eta() as f64;
    }
    (acc / norm_sqr(psi)).sqrt()
}

/// Whether every particle of configuration `flat` sits strictly inside R_c.
pub fn all_inside(model: &GridModel, threshold: &RadiusThreshold, flat: usize) -> bool {
    let idx = model.indices(flat);
    idx.chunks(model.dims()).all(|p| {
        let s: u128 = p.iter().map(|&v| (model.signed_index(v) * model.signed_index(v)) as u128).sum();
        s < threshold.threshold
    })
}

/// Π_c: keeps the configurations with at least one particle at distance
/// ≥ R_c from the box centre. Returns the projected state and its norm².
pub fn continuum_project(model: &GridModel, psi: &[Complex64], r_cutoff: f64) -> Result<(State, f64)> {
    model.check_state(psi)?;
    if !(r_cutoff > 0.0) || !r_cutoff.is_finite() {
        return Err(invalid(format!("r_cutoff must be > 0, got {r_cutoff}")));
    }
    let half_diag = (model.dims() as f64).sqrt() * model.box_length() / 2.0;
    if r_cutoff > half_diag {
        log::warn!("r_cutoff {r_cutoff} exceeds the box half-diagonal {half_diag}: continuum projector is empty");
    }
    let bits = model.n_points().trailing_zeros();
    let th = RadiusThreshold::new(r_cutoff, model.box_length(), bits)?;
    let mut out = psi.to_vec();
    for (flat, z) in out.iter_mut().enumerate() {
        if all_inside(model, &th, flat) {
            *z = Complex64::from(0.0);
        }
    }
    let p = norm_sqr(&out);
    Ok((out, p))
}

/// Probability mass within the outer N/16 (at least one) grid layers of any axis.
pub fn edge_density(model: &GridModel, psi: &[Complex64]) -> f64 {
    let n = model.n_points();
    let layer = (n / 16).max(1);
    let mut idx = vec![0; model.axes()];
    psi.iter()
        .enumerate()
        .filter(|(flat, _)| {
            unflatten(*flat, n, &mut idx);
            idx.iter().any(|&v| v < layer || v >= n - layer)
        })
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Default evolution tolerance on ‖ψ_numeric − ψ_exact‖.
pub const EVOLVE_TOLERANCE: f64 = 1e-7;
const MAX_STEPS: usize = 1 << 22;

/// e^{−iHt}ψ with the default tolerance.
pub fn evolve(model: &GridModel, psi: &[Complex64], t: f64) -> Result<State> {
    evolve_with_tolerance(model, psi, t, EVOLVE_TOLERANCE)
}

/// Split-operator propagation: Strang steps e^{−iVΔ/2}e^{−iTΔ}e^{−iVΔ/2}
/// composed in the fourth-order triple jump, with the step count doubled
/// until two successive results agree to within 15·`tol`.
pub fn evolve_with_tolerance(model: &GridModel, psi: &[Complex64], t: f64, tol: f64) -> Result<State> {
    evolve_controlled(model, psi, t, tol, MAX_STEPS)
}

/// As [`evolve_with_tolerance`] with an explicit cap on the step count.
pub fn evolve_controlled(model: &GridModel, psi: &[Complex64], t: f64, tol: f64, max_steps: usize) -> Result<State> {
    model.check_state(psi)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(psi.to_vec());
    }
    let (lo, hi) = model.spectral_bounds();
    let spread = (hi - lo).max(1e-12);
    let mut steps = ((t * spread / 4.0).ceil() as usize).max(1);
    let mut prev = triple_jump(model, psi, t, steps);
    let mut err = f64::INFINITY;
    while steps * 2 <= max_steps {
        steps *= 2;
        let next = triple_jump(model, psi, t, steps);
        err = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / 15.0;
        log::debug!("evolve: {steps} steps, error estimate {err:.3e}");
        if err <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::StepUnderflow { steps, error: err })
}

fn triple_jump(model: &GridModel, psi: &[Complex64], t: f64, steps: usize) -> State {
    let c = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - c);
    let w0 = -c / (2.0 - c);
    let dt = t / steps as f64;
    let phases = |d: f64| -> (Vec<Complex64>, Vec<Complex64>) {
        (
            model.potential.iter().map(|v| Complex64::from_polar(1.0, -v * d / 2.0)).collect(),
            model.kinetic.iter().map(|k| Complex64::from_polar(1.0, -k * d)).collect(),
        )
    };
    let outer = phases(w1 * dt);
    let inner = phases(w0 * dt);
    let mut x = psi.to_vec();
    for _ in 0..steps {
        for (v, k) in [&outer, &inner, &outer] {
            strang(model, &mut x, v, k);
        }
    }
    x
}

fn strang(model: &GridModel, x: &mut [Complex64], v: &[Complex64], k: &[Complex64]) {
    for (a, p) in x.iter_mut().zip(v) {
        *a *= p;
    }
    model.to_momentum(x);
    for (a, p) in x.iter_mut().zip(k) {
        *a *= p;
    }
    model.to_position(x);
    for (a, p) in x.iter_mut().zip(v) {
        *a *= p;
    }
}

/// e^{−iHt}ψ by dense eigendecomposition.
pub fn evolve_exact(model: &GridModel, psi: &[Complex64], t: f64) -> Result<State> {
    model.check_state(psi)?;
    let (vals, vecs) = model.eigen()?;
    let dim = model.dim();
    let mut out = vec![Complex64::from(0.0); dim];
    for k in 0..dim {
        let col = vecs.column(k);
        let mut c = Complex64::from(0.0);
        for i in 0..dim {
            c += psi[i] * col[i];
        }
        c *= Complex64::from_polar(1.0, -vals[k] * t);
        for i in 0..dim {
            out[i] += c * col[i];
        }
    }
    Ok(out)
}

/// Largest |C₂₁(k) − C₂₂(k)| over momenta, where C₂₁ evaluates
/// ⟨φ|Π_c|k⟩⟨k|Π_c|φ⟩ by explicit plane-wave overlaps and C₂₂ is
/// |FFT(Π_c φ)_k|², with φ = e^{−iHt}·`excited`.
pub fn correlation_identity_check(model: &GridModel, excited: &[Complex64], t: f64, r_cutoff: f64) -> Result<f64> {
    let dim = model.dim();
    if dim > DENSE_MAX_DIM {
        return Err(invalid(format!("identity check limited to dim {DENSE_MAX_DIM}")));
    }
    let phi = evolve(model, excited, t)?;
    let (projected, _) = continuum_project(model, &phi, r_cutoff)?;
    let mut fft = projected.clone();
    model.to_momentum(&mut fft);

    let n = model.n_points();
    let norm = (dim as f64).powf(-0.5);
    let mut worst = 0.0f64;
    let mut plane = vec![Complex64::from(0.0); dim];
    for kflat in 0..dim {
        let kidx = model.indices(kflat);
        for (flat, slot) in plane.iter_mut().enumerate() {
            let ridx = model.indices(flat);
            let phase: f64 = kidx.iter().zip(&ridx).map(|(&m, &v)| (m * v % n) as f64).sum::<f64>() * 2.0 * PI / n as f64;
            *slot = Complex64::from_polar(norm, phase);
        }
        // |k⟩⟨k|Π_c φ, then Π_c, then ⟨φ|·
        let amp = dot(&plane, &projected);
        let ket: State = plane.iter().map(|p| p * amp).collect();
        let (back, _) = continuum_project(model, &ket, r_cutoff)?;
        let lhs = dot(&phi, &back);
        let rhs = fft[kflat].norm_sqr();
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub filter: FilterSpec,
    pub t: f64,
    /// Defaults to three times the ground-state RMS radius.
    #[serde(default)]
    pub r_cutoff: Option<f64>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Upper edge of the equal-width bins; higher energies go to one overflow bin.
    #[serde(default)]
    pub max_energy: Option<f64>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_bins() -> usize {
    32
}
fn default_shots() -> u64 {
    400
}
fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineResult {
    pub ground_energy: f64,
    pub dipole_norm: f64,
    pub filter_success: f64,
    pub continuum_success: f64,
    /// ‖Π_c e^{−iHt} f(H − E₀) D ψ₀‖² / 𝒩², computed without renormalizing.
    pub retained_norm_sqr: f64,
    pub r_cutoff: f64,
    pub edge_density: f64,
    /// Edge density above 1e-6: periodic wrap-around may have set in.
    pub wrap_warning: bool,
    pub histogram: KineticHistogram,
    #[serde(skip)]
    pub final_state: State,
}

pub fn pipeline(model: &GridModel, spec: &PipelineSpec, seed: u64) -> Result<PipelineResult> {
    let (psi0, e0) = ground_state(model)?;
    let (mut d, dn) = apply_dipole(model, &psi0)?;
    if dn == 0.0 {
        return Err(Error::ZeroNorm("dipole annihilates the ground state".into()));
    }
    scale(&mut d, 1.0 / dn);
    let (filtered, p_filter) = gaussian_filter(model, &spec.filter, &d, e0)?;
    let evolved_raw = evolve(model, &filtered, spec.t)?;
    let r_c = spec.r_cutoff.unwrap_or_else(|| 3.0 * rms_radius(model, &psi0));
    let (_, retained) = continuum_project(model, &evolved_raw, r_c)?;

    let mut evolved = evolved_raw.clone();
    if p_filter == 0.0 {
        return Err(Error::ZeroNorm("filter removed the whole excited state".into()));
    }
    scale(&mut evolved, p_filter.powf(-0.5));
    let (projected, p_cont) = continuum_project(model, &evolved, r_c)?;
    let edge = edge_density(model, &evolved);
    if edge > 1e-6 {
        log::warn!("edge density {edge:.3e} exceeds 1e-6; periodic wrap-around likely");
    }
    let histogram = kinetic_histogram_range(model, &projected, spec.bins, spec.max_energy, spec.shots, seed, spec.epsilon)?;
    Ok(PipelineResult {
        ground_energy: e0,
        dipole_norm: dn,
        filter_success: p_filter,
        continuum_success: p_cont,
        retained_norm_sqr: retained,
        r_cutoff: r_c,
        edge_density: edge,
        wrap_warning: edge > 1e-6,
        histogram,
        final_state: projected,
    })
}
