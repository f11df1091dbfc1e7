//! Bit-exact emulation of comparator, sum-of-squares and block-encoding
//! primitives, with Toffoli bookkeeping.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fq_cost::{uniform_eps_cost, PlaneWaveSpec};
use crate::linalg::ceil_log2_u64;
use crate::report::{BreakdownEntry, GateCount};

/// Classical content of an n-qubit register. Signed registers use offset
/// binary: raw value v encodes v − 2^{n−1}, so the range is
/// [−2^{n−1}, 2^{n−1} − 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BitRegister {
    width: u32,
    value: u64,
    signed: bool,
}

impl BitRegister {
    pub fn new(width: u32, value: u64) -> Result<Self> {
        check_width(width)?;
        if value >> width != 0 {
            return Err(invalid(format!("value {value} does not fit in {width} bits")));
        }
        Ok(Self {
            width,
            value,
            signed: false,
        })
    }

    pub fn signed(width: u32, value: i64) -> Result<Self> {
        check_width(width)?;
        let half = 1i64 << (width - 1);
        if value < -half || value >= half {
            return Err(invalid(format!("{value} out of signed {width}-bit range")));
        }
        Ok(Self {
            width,
            value: (value + half) as u64,
            signed: true,
        })
    }

    pub fn signed_from_raw(width: u32, raw: u64) -> Result<Self> {
        let mut r = Self::new(width, raw)?;
        r.signed = true;
        Ok(r)
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn raw(&self) -> u64 {
        self.value
    }
    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// Integer the register encodes.
    pub fn to_int(&self) -> i64 {
        if self.signed {
            self.value as i64 - (1i64 << (self.width - 1))
        } else {
            self.value as i64
        }
    }
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > 62 {
        Err(invalid(format!("register width {width} outside 1..=62")))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum UncomputeMode {
    /// Uncomputation by measurement and Clifford fix-up: no Toffolis.
    #[default]
    MeasureFixup,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub label: String,
    pub count: u128,
    pub uncompute: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ToffoliLedger {
    entries: Vec<LedgerEntry>,
    mode: UncomputeMode,
}

impl ToffoliLedger {
    pub fn new(mode: UncomputeMode) -> Self {
        Self {
            entries: Vec::new(),
            mode,
        }
    }

    pub fn charge(&mut self, label: &str, count: u128) {
        self.entries.push(LedgerEntry {
            label: label.to_string(),
            count,
            uncompute: false,
        });
    }

    /// Records an uncompute block; only [`UncomputeMode::Full`] pays for it.
    pub fn charge_uncompute(&mut self, label: &str, count: u128) {
        self.entries.push(LedgerEntry {
            label: format!("{label} (uncompute)"),
            count,
            uncompute: true,
        });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn mode(&self) -> UncomputeMode {
        self.mode
    }

    fn charged(&self, e: &LedgerEntry, mode: UncomputeMode) -> u128 {
        if e.uncompute && mode == UncomputeMode::MeasureFixup {
            0
        } else {
            e.count
        }
    }

    pub fn total(&self) -> u128 {
        self.total_in(self.mode)
    }

    pub fn total_in(&self, mode: UncomputeMode) -> u128 {
        self.entries.iter().map(|e| self.charged(e, mode)).sum()
    }

    pub fn uncompute_total(&self) -> u128 {
        self.entries.iter().filter(|e| e.uncompute).map(|e| e.count).sum()
    }

    /// Charged entries as report lines.
    pub fn to_breakdown(&self) -> Vec<BreakdownEntry> {
        self.entries
            .iter()
            .map(|e| BreakdownEntry::new(e.label.clone(), GateCount::Exact(self.charged(e, self.mode))))
            .collect()
    }
}

/// b(β < α) for α = `a`, β = `b`; n Toffolis.
pub fn comp(a: &BitRegister, b: &BitRegister, ledger: &mut ToffoliLedger) -> Result<bool> {
    if a.width != b.width {
        return Err(Error::WidthMismatch(a.width, b.width));
    }
    ledger.charge("comp", a.width as u128);
    Ok(b.value < a.value)
}

/// Amplitudes of |α⟩|0ⁿ⟩|0⟩ and |α⟩|0ⁿ⟩|1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeAmplitudes {
    pub flag0: f64,
    pub flag1: f64,
}

/// Runs unif → comp → X(flag) → unif† on an explicit statevector over the
/// α register, an n-qubit β register and one flag, starting from |α⟩|0⟩|0⟩.
/// The flag is inverted after the comparator so that the encoded amplitude
/// α/2ⁿ sits on flag |0⟩. α may equal 2ⁿ, in which case the α register
/// carries one extra bit. Amplitudes are kept as integers under unnormalized
/// Hadamards and scaled by 2⁻ⁿ at the end, so the result is exact.
pub fn be_x_amplitude(alpha: u64, n: u32) -> Result<BeAmplitudes> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    if n > 6 {
        return Err(Error::RegisterTooLarge(n));
    }
    let full = 1u64 << n;
    if alpha > full {
        return Err(invalid(format!("alpha {alpha} exceeds 2^{n}")));
    }
    let a_bits = if alpha == full { n + 1 } else { n };
    let dim = 1usize << (a_bits + n + 1);
    let index = |a: u64, b: u64, f: u64| ((a << (n + 1)) | (b << 1) | f) as usize;
    let mut psi = vec![0i64; dim];
    psi[index(alpha, 0, 0)] = 1;

    hadamard_beta(&mut psi, n);
    // comparator then flag inversion: a permutation of basis states
    let mut next = vec![0i64; dim];
    for (k, amp) in psi.iter().enumerate() {
        if *amp == 0 {
            continue;
        }
        let k = k as u64;
        let f = k & 1;
        let b = (k >> 1) & (full - 1);
        let a = k >> (n + 1);
        let flag = f ^ (b < a) as u64 ^ 1;
        next[index(a, b, flag)] += amp;
    }
    psi = next;
    hadamard_beta(&mut psi, n);
    let norm = full as f64;
    Ok(BeAmplitudes {
        flag0: psi[index(alpha, 0, 0)] as f64 / norm,
        flag1: psi[index(alpha, 0, 1)] as f64 / norm,
    })
}

/// H^{⊗n} on the β register without the 2^{−n/2} factor.
fn hadamard_beta(psi: &mut [i64], n: u32) {
    for qubit in 0..n {
        let bit = 1usize << (qubit + 1);
        for k in 0..psi.len() {
            if k & bit == 0 {
                let (x, y) = (psi[k], psi[k | bit]);
                psi[k] = x + y;
                psi[k | bit] = x - y;
            }
        }
    }
}

/// Integer form of q_x² + q_y² + q_z² < c with c = (R_c 2ⁿ/Ω^{1/3})²:
/// bound iff Σq² < `threshold`, where `threshold` = ⌊c⌋ + 1 unless c is an
/// integer (then c itself).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RadiusThreshold {
    pub threshold: u128,
}

impl RadiusThreshold {
    pub fn new(r_cutoff: f64, box_length: f64, n: u32) -> Result<Self> {
        if !(r_cutoff > 0.0) || !(box_length > 0.0) {
            return Err(invalid("r_cutoff and box_length must be > 0"));
        }
        let c = (r_cutoff * 2f64.powi(n as i32) / box_length).powi(2);
        let fl = c.floor();
        let threshold = if fl == c { fl as u128 } else { fl as u128 + 1 };
        Ok(Self { threshold })
    }
}

/// Whether the grid point q lies strictly inside radius `r_cutoff`.
pub fn radius_test(
    q: &[BitRegister; 3],
    r_cutoff: f64,
    box_length: f64,
    include_qft: bool,
    ledger: &mut ToffoliLedger,
) -> Result<bool> {
    let n = q[0].width;
    if q.iter().any(|r| r.width != n) {
        let bad = q.iter().find(|r| r.width != n).unwrap().width;
        return Err(Error::WidthMismatch(n, bad));
    }
    let th = RadiusThreshold::new(r_cutoff, box_length, n)?;
    let n128 = n as u128;
    let qft = 3 * n128 * (3 * n128 - 3);
    let sos = 3 * n128 * n128 - n128 - 1;
    if include_qft {
        ledger.charge("qft", qft);
    }
    ledger.charge("sum_of_squares", sos);
    ledger.charge("comparator", 2 * n128 + 2);
    ledger.charge_uncompute("sum_of_squares", sos);
    if include_qft {
        ledger.charge_uncompute("qft", qft);
    }
    let s: u128 = q.iter().map(|r| (r.to_int() * r.to_int()) as u128).sum();
    Ok(s < th.threshold)
}

/// 1 iff every particle is inside the sphere.
pub fn all_bound(
    qs: &[[BitRegister; 3]],
    r_cutoff: f64,
    box_length: f64,
    ledger: &mut ToffoliLedger,
) -> Result<bool> {
    if qs.is_empty() {
        return Err(invalid("all_bound needs at least one particle"));
    }
    let inc = ceil_log2_u64(qs.len() as u64) as u128;
    let mut all = true;
    for q in qs {
        let b = radius_test(q, r_cutoff, box_length, true, ledger)?;
        ledger.charge("count_increment", inc);
        all &= b;
    }
    Ok(all)
}

/// Ledger of one all_bound pass over η particles (register contents do not
/// affect the count).
pub fn continuum_ledger(eta: u64, n: u32) -> Result<ToffoliLedger> {
    if eta == 0 {
        return Err(invalid("eta must be >= 1"));
    }
    let q = [BitRegister::signed(n, 0)?; 3];
    let mut l = ToffoliLedger::new(UncomputeMode::MeasureFixup);
    all_bound(&vec![q; eta as usize], 1.0, 1.0, &mut l)?;
    Ok(l)
}

/// Itemized Toffoli ledger of the position-operator block encoding.
pub fn position_be_ledger_for(eta: u64, n: u32, epsilon: f64, mode: UncomputeMode) -> ToffoliLedger {
    let (eta, n128) = (eta as u128, n as u128);
    let uniform = ceil_log2_u64(3 * eta as u64) as u128 + uniform_eps_cost(epsilon);
    let cswap = 3 * eta * n128;
    let qft = n128 * n128.saturating_sub(1);
    let mut l = ToffoliLedger::new(mode);
    l.charge("uniform", uniform);
    l.charge("cswap", cswap);
    l.charge("qft", qft);
    l.charge("inequality", n128);
    l.charge_uncompute("qft", qft);
    l.charge_uncompute("cswap", cswap);
    l.charge_uncompute("uniform", uniform);
    l
}

pub fn position_be_ledger(spec: &PlaneWaveSpec) -> ToffoliLedger {
    position_be_ledger_for(spec.eta, spec.n_bits, spec.epsilon_poly, UncomputeMode::MeasureFixup)
}

/// Outcome of one exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepResult {
    pub check: String,
    pub n: u32,
    pub cases: u64,
    pub mismatches: u64,
}

/// Exhaustive classical sweeps for every width 1..=`max_n`: comp over all
/// pairs, be_x_amplitude over all α ∈ [0, 2ⁿ], radius_test over the full
/// signed cube against the floating-point sphere at several radii, and
/// all_bound over all particle pairs while 2ⁿ ≤ 4.
pub fn brute_force_sweeps(max_n: u32) -> Result<Vec<SweepResult>> {
    if max_n == 0 || max_n > 6 {
        return Err(invalid(format!("max_n must be in 1..=6, got {max_n}")));
    }
    let box_length = 10.0;
    let radii = [0.7, 2.5, 3.1, 5.0, 8.66];
    let mut out = Vec::new();
    let mut ledger = ToffoliLedger::new(UncomputeMode::MeasureFixup);
    let mut push = |check: &str, n: u32, cases: u64, mismatches: u64| {
        out.push(SweepResult { check: check.into(), n, cases, mismatches });
    };
    for n in 1..=max_n {
        let top = 1u64 << n;
        let (mut cases, mut bad) = (0, 0);
        for a in 0..top {
            for b in 0..top {
                let hit = comp(&BitRegister::new(n, a)?, &BitRegister::new(n, b)?, &mut ledger)?;
                cases += 1;
                bad += (hit != (b < a)) as u64;
            }
        }
        push("comp", n, cases, bad);

        let (mut cases, mut bad) = (0, 0);
        for alpha in 0..=top {
            let amp = be_x_amplitude(alpha, n)?;
            cases += 1;
            bad += (amp.flag0 != alpha as f64 / top as f64 || amp.flag1 != 1.0 - alpha as f64 / top as f64) as u64;
        }
        push("be_x_amplitude", n, cases, bad);

        let half = 1i64 << (n - 1);
        let step = box_length / top as f64;
        let mut regs = Vec::new();
        for x in -half..half {
            for y in -half..half {
                for z in -half..half {
                    regs.push([BitRegister::signed(n, x)?, BitRegister::signed(n, y)?, BitRegister::signed(n, z)?]);
                }
            }
        }
        let (mut cases, mut bad) = (0, 0);
        let (mut pair_cases, mut pair_bad) = (0, 0);
        for &r in &radii {
            let mut inside = Vec::with_capacity(regs.len());
            for q in &regs {
                let hit = radius_test(q, r, box_length, false, &mut ledger)?;
                let r2: f64 = q.iter().map(|c| (c.to_int() as f64 * step).powi(2)).sum();
                cases += 1;
                bad += (hit != (r2 < r * r)) as u64;
                inside.push(r2 < r * r);
            }
            if top <= 4 {
                for (p, &ip) in regs.iter().zip(&inside) {
                    for (q, &iq) in regs.iter().zip(&inside) {
                        let both = all_bound(&[*p, *q], r, box_length, &mut ledger)?;
                        pair_cases += 1;
                        pair_bad += (both != (ip && iq)) as u64;
                    }
                }
            }
        }
        push("radius_test", n, cases, bad);
        if top <= 4 {
            push("all_bound", n, pair_cases, pair_bad);
        }
    }
    Ok(out)
}
