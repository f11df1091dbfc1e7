//! Cost reports shared by both estimators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A non-Clifford gate count. Closed-form integer counts stay exact; counts
/// that pass through real-valued factors (λt, 1/√P) are carried as floats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateCount {
    Exact(u128),
    Approx(f64),
}

impl GateCount {
    pub fn as_f64(self) -> f64 {
        match self {
            GateCount::Exact(n) => n as f64,
            GateCount::Approx(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, GateCount::Exact(_))
    }

    pub fn scale(self, shots: u64) -> GateCount {
        match self {
            GateCount::Exact(n) => GateCount::Exact(n * shots as u128),
            GateCount::Approx(x) => GateCount::Approx(x * shots as f64),
        }
    }

    fn add(self, other: GateCount) -> GateCount {
        match (self, other) {
            (GateCount::Exact(a), GateCount::Exact(b)) => GateCount::Exact(a + b),
            (a, b) => GateCount::Approx(a.as_f64() + b.as_f64()),
        }
    }

    /// Three significant figures, round half up, in the `3.94e9` style.
    pub fn to_sig3(self) -> String {
        match self {
            GateCount::Exact(n) => sig3_u128(n),
            GateCount::Approx(x) => sig3_f64(x),
        }
    }
}

impl std::fmt::Display for GateCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateCount::Exact(n) => write!(f, "{n}"),
            GateCount::Approx(x) => write!(f, "{x:.6e}"),
        }
    }
}

fn sig3_u128(n: u128) -> String {
    let digits = n.to_string();
    if digits.len() <= 3 {
        return sig3_f64(n as f64);
    }
    let bytes = digits.as_bytes();
    let mut lead: u32 = digits[..3].parse().unwrap();
    let mut exp = digits.len() as i32 - 1;
    if bytes[3] >= b'5' {
        lead += 1;
    }
    if lead == 1000 {
        lead = 100;
        exp += 1;
    }
    format!("{}.{:02}e{}", lead / 100, lead % 100, exp)
}

fn sig3_f64_mantissa(x: f64) -> (String, i32) {
    if x == 0.0 {
        return ("0.00".to_string(), 0);
    }
    let mut exp = x.abs().log10().floor() as i32;
    let mut lead = (x.abs() / 10f64.powi(exp - 2) + 0.5).floor() as i64;
    if lead >= 1000 {
        lead /= 10;
        exp += 1;
    }
    let sign = if x < 0.0 { "-" } else { "" };
    (format!("{sign}{}.{:02}", lead / 100, lead % 100), exp)
}

/// Three significant figures, round half up.
pub fn sig3_f64(x: f64) -> String {
    let (m, e) = sig3_f64_mantissa(x);
    format!("{m}e{e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownEntry {
    pub label: String,
    pub gates: GateCount,
}

impl BreakdownEntry {
    pub fn new(label: impl Into<String>, gates: GateCount) -> Self {
        Self {
            label: label.into(),
            gates,
        }
    }
}

/// Qubits, gates per circuit, shots and their product, with an itemized
/// breakdown whose entries sum to the per-circuit count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    logical_qubits: u64,
    gates_per_circuit: GateCount,
    shots: u64,
    overall_gates: GateCount,
    breakdown: Vec<BreakdownEntry>,
    notes: Vec<String>,
}

impl CostReport {
    pub fn new(
        logical_qubits: u64,
        breakdown: Vec<BreakdownEntry>,
        shots: u64,
        notes: Vec<String>,
    ) -> Result<Self> {
        for e in &breakdown {
            let v = e.gates.as_f64();
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("breakdown entry '{}' is {}", e.label, v)));
            }
        }
        let gates_per_circuit = breakdown
            .iter()
            .fold(GateCount::Exact(0), |acc, e| acc.add(e.gates));
        let overall_gates = gates_per_circuit.scale(shots);
        Ok(Self {
            logical_qubits,
            gates_per_circuit,
            shots,
            overall_gates,
            breakdown,
            notes,
        })
    }

    pub fn logical_qubits(&self) -> u64 {
        self.logical_qubits
    }
    pub fn gates_per_circuit(&self) -> GateCount {
        self.gates_per_circuit
    }
    pub fn shots(&self) -> u64 {
        self.shots
    }
    pub fn overall_gates(&self) -> GateCount {
        self.overall_gates
    }
    pub fn breakdown(&self) -> &[BreakdownEntry] {
        &self.breakdown
    }
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Re-derives the totals from the breakdown and compares.
    pub fn invariants_hold(&self) -> bool {
        let sum = self
            .breakdown
            .iter()
            .fold(GateCount::Exact(0), |acc, e| acc.add(e.gates));
        let nonneg = self.breakdown.iter().all(|e| e.gates.as_f64() >= 0.0);
        let same = |a: GateCount, b: GateCount| match (a, b) {
            (GateCount::Exact(x), GateCount::Exact(y)) => x == y,
            _ => {
                let (x, y) = (a.as_f64(), b.as_f64());
                (x - y).abs() <= 1e-12 * x.abs().max(y.abs())
            }
        };
        nonneg
            && same(sum, self.gates_per_circuit)
            && same(self.gates_per_circuit.scale(self.shots), self.overall_gates)
    }
}
