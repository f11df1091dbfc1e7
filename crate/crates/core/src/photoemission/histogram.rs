use num_complex::Complex64;
use rand::distributions::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use super::{norm_sqr, GridModel};
use crate::error::{invalid, Error, Result};

/// Single-electron kinetic-energy distribution of a projected state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticHistogram {
    pub bin_edges: Vec<f64>,
    /// Exact unconditional mass per bin; sums to `success_probability`.
    pub mass: Vec<f64>,
    /// Sampled estimate of mass/success_probability.
    pub sampled: Vec<f64>,
    /// Standard error of each sampled bin.
    pub stderr: Vec<f64>,
    /// ‖state‖², the probability that the continuum projection succeeded.
    pub success_probability: f64,
    pub shots_used: u64,
    pub epsilon: f64,
}

impl KineticHistogram {
    /// Exact distribution conditioned on successful projection.
    pub fn conditional(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m / self.success_probability).collect()
    }

    pub fn max_sampling_error(&self) -> f64 {
        self.sampled
            .iter()
            .zip(self.conditional())
            .map(|(s, p)| (s - p).abs())
            .fold(0.0, f64::max)
    }
}

/// Bins kinetic energies ‖k‖²/2 over [0, max single-particle energy] with
/// `bins` equal-width bins (last bin closed). Each shot draws one
/// configuration from |⟨k|ψ⟩|²/‖ψ‖² and records all η electrons.
pub fn kinetic_histogram(
    model: &GridModel,
    psi: &[Complex64],
    bins: usize,
    shots: u64,
    seed: u64,
    epsilon: f64,
) -> Result<KineticHistogram> {
    kinetic_histogram_range(model, psi, bins, None, shots, seed, epsilon)
}

/// As [`kinetic_histogram`], with the equal-width bins spanning [0, `e_max`]
/// and one extra overflow bin up to the grid maximum when `e_max` is below it.
pub fn kinetic_histogram_range(
    model: &GridModel,
    psi: &[Complex64],
    bins: usize,
    e_max: Option<f64>,
    shots: u64,
    seed: u64,
    epsilon: f64,
) -> Result<KineticHistogram> {
    if bins == 0 {
        return Err(invalid("need at least one bin"));
    }
    if psi.len() != model.dim() {
        return Err(invalid("state length does not match the model"));
    }
    let success = norm_sqr(psi);
    if success == 0.0 {
        return Err(Error::ZeroNorm("projection failed: empty continuum state".into()));
    }
    let n = model.n_points();
    let dims = model.dims();
    let eta = model.eta();
    let grid_max = dims as f64 * 0.5 * model.wavenumber(n / 2).powi(2);
    let top = match e_max {
        Some(e) if !(e > 0.0) => return Err(invalid(format!("e_max must be > 0, got {e}"))),
        Some(e) => e.min(grid_max),
        None => grid_max,
    };
    let width = top / bins as f64;
    let mut bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    if top < grid_max {
        bin_edges.push(grid_max);
    }
    let bins = bin_edges.len() - 1;
    let bin_of = |e: f64| ((e / width) as usize).min(bins - 1);

    let mut phi = psi.to_vec();
    model.to_momentum(&mut phi);
    let probs: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
    // per-configuration list of η bins
    let particle_bins = |flat: usize| -> Vec<usize> {
        model
            .indices(flat)
            .chunks(dims)
            .map(|p| bin_of(p.iter().map(|&m| 0.5 * model.wavenumber(m).powi(2)).sum()))
            .collect()
    };
    let mut mass = vec![0.0; bins];
    for (flat, p) in probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        for b in particle_bins(flat) {
            mass[b] += p / eta as f64;
        }
    }

    let mut sampled = vec![0.0; bins];
    if shots > 0 {
        let dist = WeightedIndex::new(&probs).map_err(|e| invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 1.0 / (shots as f64 * eta as f64);
        for _ in 0..shots {
            for b in particle_bins(dist.sample(&mut rng)) {
                sampled[b] += w;
            }
        }
    }
    let stderr = sampled
        .iter()
        .map(|p| if shots > 0 { (p * (1.0 - p) / shots as f64).sqrt() } else { 0.0 })
        .collect();
    Ok(KineticHistogram {
        bin_edges,
        mass,
        sampled,
        stderr,
        success_probability: success,
        shots_used: shots,
        epsilon,
    })
}
