//! Closed-form cost model for first-quantized plane-wave photoemission:
//! qubitized block encoding of H, Gaussian eigenstate filter, QSP time
//! evolution, position-operator block encoding and continuum projector.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linalg::{ceil_log2, ceil_log2_u64, ceil_tol};
use crate::report::{BreakdownEntry, CostReport, GateCount};
use crate::units::LengthUnit;

use std::f64::consts::PI;

/// λ_U = κ_U·ηλ_ζ·2ⁿ/Ω^{1/3}, anchored at λ_U = 7.5e6 for η = λ_ζ = 110,
/// n = 15, Ω^{1/3} = 200.
pub const KAPPA_U: f64 = 7.5e6 * 200.0 / (110.0 * 110.0 * 32768.0);
/// λ_V = κ_V·η²·2ⁿ/Ω^{1/3}, anchored at λ_V = 1.23e7 at the same point.
pub const KAPPA_V: f64 = 1.23e7 * 200.0 / (110.0 * 110.0 * 32768.0);

/// Above this n the lattice sum Σ 1/∥ν∥ uses the radial-integral estimate.
pub const LATTICE_EXACT_MAX_N: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AllElectron,
    Pseudopotential,
}

impl Method {
    pub fn short(self) -> &'static str {
        match self {
            Method::AllElectron => "AE",
            Method::Pseudopotential => "PP",
        }
    }
}

/// Prefactor convention for the Gaussian-filter cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPrefactor {
    /// √2·π·λ(sel + 2·prep + c_ref)/δ · log₂(1/ε)
    #[default]
    Sigma,
    /// λ(sel + prep + c_ref)/(2√(2 ln 2)·δ) · log₂(1/ε)
    Fwhm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeSumMode {
    /// Exact for n ≤ 7, estimator above.
    #[default]
    Auto,
    Exact,
    Estimator,
}

fn d_eps_be() -> f64 {
    8e-4
}
fn d_eps_poly() -> f64 {
    1e-3
}
fn d_eps_shots() -> f64 {
    0.01
}
fn d_delta() -> f64 {
    0.067
}
fn d_p_small() -> f64 {
    1e-3
}
fn d_one() -> f64 {
    1.0
}
fn d_csp() -> f64 {
    1e9
}
fn d_br() -> u32 {
    7
}

/// Parameters of one first-quantized photoemission estimate, atomic units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWaveSpec {
    pub method: Method,
    /// Electrons η.
    pub eta: u64,
    /// Sum of nuclear charges λ_ζ.
    pub lambda_zeta: f64,
    /// Cell volume Ω, in `length_unit`³.
    pub omega_cell: f64,
    #[serde(default)]
    pub length_unit: LengthUnit,
    /// Qubits per spatial dimension, N^{1/3} = 2ⁿ.
    pub n_bits: u32,
    /// Block-encoding error (Ha).
    #[serde(default = "d_eps_be")]
    pub epsilon_be: f64,
    /// Error of the filter / evolution polynomials and the uniform-state
    /// preparation.
    #[serde(default = "d_eps_poly")]
    pub epsilon_poly: f64,
    /// Per-bin sampling error; sets shots = ⌈1/ε²⌉.
    #[serde(default = "d_eps_shots")]
    pub epsilon_shots: f64,
    /// Filter energy resolution δ (Ha).
    #[serde(default = "d_delta")]
    pub delta_filter: f64,
    /// Evolution time (a.u.).
    pub t_evolution: f64,
    #[serde(default = "d_p_small")]
    pub p_dipole: f64,
    #[serde(default = "d_p_small")]
    pub p_window: f64,
    #[serde(default = "d_one")]
    pub p_continuum: f64,
    /// Continuum radius (Bohr); informational, P_c carries its effect.
    #[serde(default)]
    pub r_cutoff: Option<f64>,
    /// Initial-state preparation gates.
    #[serde(default = "d_csp")]
    pub c_sp: f64,
    #[serde(default = "d_one")]
    pub p_nu: f64,
    #[serde(default = "d_br")]
    pub b_r: u32,
    #[serde(default)]
    pub kappa_u: Option<f64>,
    #[serde(default)]
    pub kappa_v: Option<f64>,
    #[serde(default)]
    pub filter_prefactor: FilterPrefactor,
    #[serde(default)]
    pub lattice_sum: LatticeSumMode,
}

impl PlaneWaveSpec {
    /// Spec with the default block-encoding, filter and amplification
    /// parameters.
    pub fn new(method: Method, eta: u64, lambda_zeta: f64, box_length: f64, n_bits: u32, t: f64) -> Self {
        Self {
            method,
            eta,
            lambda_zeta,
            omega_cell: box_length.powi(3),
            length_unit: LengthUnit::Bohr,
            n_bits,
            epsilon_be: d_eps_be(),
            epsilon_poly: d_eps_poly(),
            epsilon_shots: d_eps_shots(),
            delta_filter: d_delta(),
            t_evolution: t,
            p_dipole: d_p_small(),
            p_window: d_p_small(),
            p_continuum: 1.0,
            r_cutoff: None,
            c_sp: d_csp(),
            p_nu: 1.0,
            b_r: d_br(),
            kappa_u: None,
            kappa_v: None,
            filter_prefactor: FilterPrefactor::Sigma,
            lattice_sum: LatticeSumMode::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.eta >= 1, || "eta must be >= 1".into())?;
        ensure(self.n_bits >= 1 && self.n_bits <= 40, || "n_bits must be in 1..=40".into())?;
        ensure(self.omega_cell > 0.0, || "omega_cell must be > 0".into())?;
        ensure(self.lambda_zeta >= 0.0, || "lambda_zeta must be >= 0".into())?;
        for (name, p) in [
            ("p_dipole", self.p_dipole),
            ("p_window", self.p_window),
            ("p_continuum", self.p_continuum),
            ("p_nu", self.p_nu),
        ] {
            ensure(p > 0.0 && p <= 1.0, || format!("{name} must be in (0, 1] (got {p})"))?;
        }
        ensure(self.epsilon_be > 0.0, || "epsilon_be must be > 0".into())?;
        ensure(self.epsilon_poly > 0.0, || "epsilon_poly must be > 0".into())?;
        ensure(self.epsilon_shots > 0.0, || "epsilon_shots must be > 0".into())?;
        ensure(self.delta_filter > 0.0, || "delta_filter must be > 0".into())?;
        ensure(self.t_evolution >= 0.0, || "t_evolution must be >= 0".into())?;
        ensure(self.c_sp >= 0.0, || "c_sp must be >= 0".into())?;
        ensure(self.b_r >= 1, || "b_r must be >= 1".into())?;
        Ok(())
    }

    /// Ω^{1/3} in Bohr.
    pub fn box_length(&self) -> f64 {
        self.length_unit.to_bohr(self.omega_cell.cbrt())
    }

    pub fn grid_points_per_dim(&self) -> f64 {
        2f64.powi(self.n_bits as i32)
    }

    fn kappas(&self) -> (f64, f64) {
        (self.kappa_u.unwrap_or(KAPPA_U), self.kappa_v.unwrap_or(KAPPA_V))
    }
}

/// λ_T′ = 6ηπ²·2^{2(n−1)}/Ω^{2/3}.
pub fn lambda_kinetic(spec: &PlaneWaveSpec) -> f64 {
    let l = spec.box_length();
    6.0 * spec.eta as f64 * PI * PI * 4f64.powi(spec.n_bits as i32 - 1) / (l * l)
}

/// (λ_U, λ_V).
pub fn lambda_potentials(spec: &PlaneWaveSpec) -> (f64, f64) {
    let (ku, kv) = spec.kappas();
    let scale = spec.grid_points_per_dim() / spec.box_length();
    let eta = spec.eta as f64;
    (ku * eta * spec.lambda_zeta * scale, kv * eta * eta * scale)
}

/// max(λ_T′ + λ_U + λ_V, (λ_U + λ_V/(1 − 1/η))/p_ν). For η = 1 the pair term
/// is dropped from the second branch.
pub fn lambda_total(lt: f64, lu: f64, lv: f64, p_nu: f64, eta: u64) -> f64 {
    let pair = if eta > 1 {
        lv / (1.0 - 1.0 / eta as f64)
    } else {
        0.0
    };
    (lt + lu + lv).max((lu + pair) / p_nu)
}

/// Σ_{ν∈G₀} 1/∥ν∥ over the nonzero integer vectors with components in
/// [−(2^{n−1}−1), 2^{n−1}−1].
pub fn lattice_sum_exact(n: u32) -> f64 {
    let h = (1i64 << (n - 1)) - 1;
    // sum over the positive octant with multiplicities
    let mut total = 0.0;
    for x in 0..=h {
        for y in 0..=h {
            for z in 0..=h {
                if x == 0 && y == 0 && z == 0 {
                    continue;
                }
                let mult = [x, y, z].iter().map(|&c| if c == 0 { 1.0 } else { 2.0 }).product::<f64>();
                total += mult / ((x * x + y * y + z * z) as f64).sqrt();
            }
        }
    }
    total
}

/// Radial-integral estimate 2π(2ⁿ)²/4 of the same sum.
pub fn lattice_sum_estimate(n: u32) -> f64 {
    2.0 * PI * 4f64.powi(n as i32) / 4.0
}

pub fn lattice_sum(n: u32, mode: LatticeSumMode) -> f64 {
    match mode {
        LatticeSumMode::Exact => lattice_sum_exact(n),
        LatticeSumMode::Estimator => lattice_sum_estimate(n),
        LatticeSumMode::Auto if n <= LATTICE_EXACT_MAX_N => lattice_sum_exact(n),
        LatticeSumMode::Auto => lattice_sum_estimate(n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionBits {
    pub n_m: u32,
    pub n_r: u32,
    pub n_t: u32,
}

/// Smallest bit counts with each of ε_M, ε_R, ε_T at most ε/3.
pub fn precision_bits(spec: &PlaneWaveSpec, lambda: f64) -> PrecisionBits {
    let third = spec.epsilon_be / 3.0;
    let eta = spec.eta as f64;
    let l = spec.box_length();
    let coef_m = 2.0 * eta / (PI * l) * (eta - 1.0 + 2.0 * spec.lambda_zeta);
    let coef_r = eta * spec.lambda_zeta / l * lattice_sum(spec.n_bits, spec.lattice_sum);
    let coef_t = PI * lambda;
    let bits = |c: f64| ceil_log2(c / third).max(1);
    PrecisionBits {
        n_m: bits(coef_m),
        n_r: bits(coef_r),
        n_t: bits(coef_t),
    }
}

/// Bit widths entering the Toffoli and ancilla formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitParams {
    pub n_m: u32,
    pub n_r: u32,
    pub n_t: u32,
    pub n_eta: u32,
    pub n_eta_zeta: u32,
    pub b_r: u32,
}

impl BitParams {
    pub fn for_spec(spec: &PlaneWaveSpec, p: PrecisionBits) -> Self {
        Self {
            n_m: p.n_m,
            n_r: p.n_r,
            n_t: p.n_t,
            n_eta: ceil_log2_u64(spec.eta).max(1),
            n_eta_zeta: ceil_log2(spec.eta as f64 + 2.0 * spec.lambda_zeta).max(1),
            b_r: spec.b_r,
        }
    }
}

/// Ancilla qubits to reflect about: n_ηζ + 2n_η + 6n + n_M + 16.
pub fn reflection_count(n: u32, b: &BitParams) -> u64 {
    (b.n_eta_zeta + 2 * b.n_eta + 6 * n + b.n_m + 16) as u64
}

/// (𝒞_prep, 𝒞_sel) of the block encoding.
pub fn prep_select_costs(n: u32, eta: u64, lambda_zeta: f64, b: &BitParams) -> (f64, f64) {
    let n = n as i64;
    let eta = eta as i64;
    let (nm, nr, nt) = (b.n_m as i64, b.n_r as i64, b.n_t as i64);
    let (nez, br) = (b.n_eta_zeta as i64, b.b_r as i64);
    let prep_uv = (2 * n * n + 15 * n + 4 * nm * (n + 1) - 7) as f64 + lambda_zeta + min_split(lambda_zeta);
    let prep_t = (2 * (n + 9)) as f64;
    let prep_tuv = (2 * (nt + 4 * nez + 2 * br - 12) + 14 * eta + 8 * br - 36) as f64;
    let sel_uv = 24 * n + 6 * n * nr;
    let sel_t = 5 * (n - 1) + 2;
    let sel_tuv = 12 * eta * n - 4 * eta - 8;
    (prep_uv + prep_t + prep_tuv, (sel_uv + sel_t + sel_tuv) as f64)
}

/// min_k (⌈2^{−k} λ_ζ⌉ + 2^k).
fn min_split(lambda_zeta: f64) -> f64 {
    (0..64)
        .map(|k| (lambda_zeta / 2f64.powi(k)).ceil() + 2f64.powi(k))
        .fold(f64::INFINITY, f64::min)
}

/// Toffolis per query of the qubitized block encoding (theorem form).
pub fn theorem_query_cost(n: u32, eta: u64, lambda_zeta: f64, b: &BitParams) -> f64 {
    let n = n as i64;
    let eta = eta as i64;
    let (nm, nr, nt) = (b.n_m as i64, b.n_r as i64, b.n_t as i64);
    let (ne, nez, br) = (b.n_eta as i64, b.n_eta_zeta as i64, b.b_r as i64);
    let ints = 2 * (nt + 4 * nez + 2 * br - 12) + 14 * ne + 8 * br - 36 + 12 * eta * n + 4 * eta - 8
        + 5 * (n - 1)
        + 2
        + 3 * n * n
        + 15 * n
        + 4 * nm * (n + 1)
        - 7
        + 24 * n
        + 3 * (2 * n * nr - n * (n + 1) - 1);
    ints as f64 + lambda_zeta
}

/// Block-encoding ancillas (excluding reflection register).
pub fn be_ancilla_count(n: u32, b: &BitParams) -> u64 {
    (b.n_m + 6 * n + 2 * b.n_eta + b.n_eta_zeta + (5 * b.n_r - 4).max(5 * n + 1) + 18) as u64
}

/// n_ref = 3n² + 4n_M(n+1) + 6n + 5 + max(n_T, n_R + 1).
pub fn reflection_register(n: u32, b: &BitParams) -> u64 {
    (3 * n * n + 4 * b.n_m * (n + 1) + 6 * n + 5 + b.n_t.max(b.n_r + 1)) as u64
}

/// Workspace outside the block encoding: position-operator ancilla register,
/// its selector and flag; sum-of-squares register, bound counter and flag of
/// the continuum test; two QSP signal qubits. A budget, not a derivation.
pub fn arithmetic_workspace(eta: u64, n: u32) -> u64 {
    let position = n as u64 + ceil_log2_u64(3 * eta) as u64 + 1;
    let projector = 2 * n as u64 + 2 + ceil_log2_u64(eta) as u64 + 1;
    position + projector + 2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEncodingBudget {
    pub bits: BitParams,
    pub lambda_t_prime: f64,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub lambda_total: f64,
    pub p_nu: f64,
    pub c_ref: u64,
    pub c_prep: f64,
    pub c_sel: f64,
    pub toffoli_per_query: f64,
    pub ancilla_qubits: u64,
    pub reflection_qubits: u64,
    pub system_qubits: u64,
    pub total_qubits: u64,
}

pub fn block_encoding_budget(spec: &PlaneWaveSpec) -> Result<BlockEncodingBudget> {
    spec.validate()?;
    let lt = lambda_kinetic(spec);
    let (lu, lv) = lambda_potentials(spec);
    let lam = lambda_total(lt, lu, lv, spec.p_nu, spec.eta);
    let bits = BitParams::for_spec(spec, precision_bits(spec, lam));
    let n = spec.n_bits;
    let (c_prep, c_sel) = prep_select_costs(n, spec.eta, spec.lambda_zeta, &bits);
    let anc = be_ancilla_count(n, &bits);
    let nref = reflection_register(n, &bits);
    let system = 3 * spec.eta * n as u64;
    Ok(BlockEncodingBudget {
        bits,
        lambda_t_prime: lt,
        lambda_u: lu,
        lambda_v: lv,
        lambda_total: lam,
        p_nu: spec.p_nu,
        c_ref: reflection_count(n, &bits),
        c_prep,
        c_sel,
        toffoli_per_query: theorem_query_cost(n, spec.eta, spec.lambda_zeta, &bits),
        ancilla_qubits: anc,
        reflection_qubits: nref,
        system_qubits: system,
        total_qubits: system + anc + nref,
    })
}

/// 𝒞_X = n(n + 3η − 1) + ⌈log₂ 3η⌉ + ⌈2 log₂(1/ε)⌉.
pub fn dipole_block_encoding_cost(eta: u64, n: u32, epsilon: f64) -> u128 {
    let n = n as u128;
    let eta = eta as u128;
    n * (n + 3 * eta - 1) + ceil_log2_u64(3 * eta as u64) as u128 + uniform_eps_cost(epsilon)
}

/// ⌈2 log₂(1/ε)⌉, the ε-dependent part of uniform-state preparation.
pub fn uniform_eps_cost(epsilon: f64) -> u128 {
    if epsilon >= 1.0 {
        0
    } else {
        ceil_tol(2.0 * (1.0 / epsilon).log2()) as u128
    }
}

/// 𝒞_W for the Gaussian filter.
pub fn filter_cost(
    prefactor: FilterPrefactor,
    lambda: f64,
    delta: f64,
    epsilon: f64,
    c_sel: f64,
    c_prep: f64,
    c_ref: f64,
) -> f64 {
    let log = (1.0 / epsilon).log2().max(0.0);
    match prefactor {
        FilterPrefactor::Sigma => {
            2f64.sqrt() * PI * lambda * (c_sel + 2.0 * c_prep + c_ref) / delta * log
        }
        FilterPrefactor::Fwhm => {
            lambda * (c_sel + c_prep + c_ref) / (delta * 2.0 * (2.0 * 2f64.ln()).sqrt()) * log
        }
    }
}

/// QSP polynomial degree bound 2λt + 3 log₂(12/ε) for e^{−iHt}.
pub fn time_evolution_degree(lambda: f64, t: f64, epsilon: f64) -> f64 {
    2.0 * lambda * t + 3.0 * (12.0 / epsilon).log2()
}

/// 𝒞_te = degree × (sel + 2·prep + c_ref).
pub fn time_evolution_cost(lambda: f64, t: f64, epsilon: f64, c_sel: f64, c_prep: f64, c_ref: f64) -> f64 {
    time_evolution_degree(lambda, t, epsilon) * (c_sel + 2.0 * c_prep + c_ref)
}

/// 𝒞_bound = η(12n² − 8n + ⌈log₂ η⌉ + 1).
pub fn continuum_projector_cost(eta: u64, n: u32) -> u128 {
    let n = n as u128;
    eta as u128 * (12 * n * n - 8 * n + ceil_log2_u64(eta) as u128 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotoemissionCostBreakdown {
    pub budget: BlockEncodingBudget,
    pub c_sp: f64,
    pub c_x: u128,
    pub c_prep: f64,
    pub c_sel: f64,
    pub c_w: f64,
    pub c_te: f64,
    pub c_bound: u128,
    pub c_filter: f64,
    /// (1/√P_d, 1/√P_w, 1/√P_c)
    pub amplification_multipliers: (f64, f64, f64),
    pub filter_prefactor: FilterPrefactor,
    pub gates_per_circuit: f64,
    pub shots: u64,
    pub overall: f64,
    pub qubits: u64,
}

pub fn photoemission_breakdown(spec: &PlaneWaveSpec) -> Result<PhotoemissionCostBreakdown> {
    let budget = block_encoding_budget(spec)?;
    let n = spec.n_bits;
    let eps = spec.epsilon_poly;
    let lam = budget.lambda_total;
    let (sel, prep, cref) = (budget.c_sel, budget.c_prep, budget.c_ref as f64);
    let c_x = dipole_block_encoding_cost(spec.eta, n, eps);
    let c_w = filter_cost(spec.filter_prefactor, lam, spec.delta_filter, eps, sel, prep, cref);
    let c_te = time_evolution_cost(lam, spec.t_evolution, eps, sel, prep, cref);
    let c_bound = continuum_projector_cost(spec.eta, n);
    let md = 1.0 / spec.p_dipole.sqrt();
    let mw = 1.0 / spec.p_window.sqrt();
    let mc = 1.0 / spec.p_continuum.sqrt();
    let c_filter = mw * (c_w + md * (c_x as f64 + spec.c_sp));
    let gates = mc * (c_bound as f64 + c_te + c_filter);
    let shots = ceil_tol(1.0 / (spec.epsilon_shots * spec.epsilon_shots)) as u64;
    let qubits = budget.total_qubits + arithmetic_workspace(spec.eta, n);
    Ok(PhotoemissionCostBreakdown {
        c_sp: spec.c_sp,
        c_x,
        c_prep: prep,
        c_sel: sel,
        c_w,
        c_te,
        c_bound,
        c_filter,
        amplification_multipliers: (md, mw, mc),
        filter_prefactor: spec.filter_prefactor,
        gates_per_circuit: gates,
        shots,
        overall: gates * shots as f64,
        qubits,
        budget,
    })
}

pub fn photoemission_cost(spec: &PlaneWaveSpec) -> Result<CostReport> {
    let b = photoemission_breakdown(spec)?;
    let (md, mw, mc) = b.amplification_multipliers;
    let entries = vec![
        BreakdownEntry::new("state_preparation", GateCount::Approx(mc * mw * md * b.c_sp)),
        BreakdownEntry::new("dipole_block_encoding", GateCount::Approx(mc * mw * md * b.c_x as f64)),
        BreakdownEntry::new("gaussian_filter", GateCount::Approx(mc * mw * b.c_w)),
        BreakdownEntry::new("time_evolution", GateCount::Approx(mc * b.c_te)),
        BreakdownEntry::new("continuum_projector", GateCount::Approx(mc * b.c_bound as f64)),
    ];
    let notes = vec![
        format!("filter_prefactor={:?}", b.filter_prefactor),
        format!(
            "lambda={:.4e} n_M={} n_R={} n_T={}",
            b.budget.lambda_total, b.budget.bits.n_m, b.budget.bits.n_r, b.budget.bits.n_t
        ),
    ];
    CostReport::new(b.qubits, entries, b.shots, notes)
}
