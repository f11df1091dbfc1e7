//! Physical constants and unit conversions. Everything inside the crate is in
//! atomic units; these helpers exist for the input/output boundary.

use serde::{Deserialize, Serialize};

pub const EV_PER_HARTREE: f64 = 27.211386245988;
pub const HARTREE_PER_EV: f64 = 1.0 / EV_PER_HARTREE;
pub const AU_TIME_PER_FS: f64 = 41.341373335;
pub const SPEED_OF_LIGHT_AU: f64 = 137.035999084;
pub const BOHR_PER_ANGSTROM: f64 = 1.0 / 0.529177210903;
/// EUV photon energy used by the lithography tools (92 eV).
pub const EUV_OMEGA: f64 = 3.38;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hartree_per_ev: f64,
    pub au_time_per_fs: f64,
    pub speed_of_light_au: f64,
    pub euv_omega: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hartree_per_ev: HARTREE_PER_EV,
            au_time_per_fs: AU_TIME_PER_FS,
            speed_of_light_au: SPEED_OF_LIGHT_AU,
            euv_omega: EUV_OMEGA,
        }
    }
}

impl PhysicalConstants {
    /// Checks positivity and that `euv_omega` sits within 0.5% of 92 eV.
    pub fn is_consistent(&self) -> bool {
        let all_pos = self.hartree_per_ev > 0.0
            && self.au_time_per_fs > 0.0
            && self.speed_of_light_au > 0.0
            && self.euv_omega > 0.0;
        let target = 92.0 * self.hartree_per_ev;
        all_pos && ((self.euv_omega - target) / target).abs() <= 5e-3
    }
}

pub fn ev_to_hartree(e: f64) -> f64 {
    e / EV_PER_HARTREE
}

pub fn hartree_to_ev(e: f64) -> f64 {
    e * EV_PER_HARTREE
}

pub fn fs_to_au(t: f64) -> f64 {
    t * AU_TIME_PER_FS
}

pub fn au_to_fs(t: f64) -> f64 {
    t / AU_TIME_PER_FS
}

/// Prefactor 4πω/(3c) of the absorption cross-section.
pub fn cross_section_prefactor(omega: f64) -> f64 {
    4.0 * std::f64::consts::PI * omega / (3.0 * SPEED_OF_LIGHT_AU)
}

/// Length unit in which a box side is quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    #[default]
    Bohr,
    Angstrom,
}

impl LengthUnit {
    pub fn to_bohr(self, x: f64) -> f64 {
        match self {
            LengthUnit::Bohr => x,
            LengthUnit::Angstrom => x * BOHR_PER_ANGSTROM,
        }
    }
}
