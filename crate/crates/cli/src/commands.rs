use std::fmt;
use std::path::{Path, PathBuf};

use euvq_core::absorption::{absorption_breakdown, absorption_cost, AbsorptionCostBreakdown, AbsorptionSpec};
use euvq_core::arith::{brute_force_sweeps, continuum_ledger, position_be_ledger_for, SweepResult, UncomputeMode};
use euvq_core::cdf::{double_factorize, givens_decompose, TensorFile, TwoElectronTensor};
use euvq_core::fq_cost::{continuum_projector_cost, dipole_block_encoding_cost, photoemission_breakdown, photoemission_cost, PlaneWaveSpec};
use euvq_core::photoemission::{pipeline, save_checkpoint, Checkpoint, GridModel, ModelConfig, PipelineSpec};
use euvq_core::report::sig3_f64;
use euvq_core::spectro::{absorption_spectrum, dipole_excited_norm, SceneFile, SpectralScene, SpectrumRow};
use euvq_core::units::au_to_fs;
use euvq_core::{CostReport, ErrorKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::render;
use crate::Format;

#[derive(Debug)]
pub enum CliError {
    Core(euvq_core::Error),
    Parse(PathBuf, serde_json::Error),
    Io(PathBuf, std::io::Error),
    Csv(csv::Error),
    MissingInput,
    /// A verification ran to completion and found mismatches.
    Check(String),
}

impl CliError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Check(_) => ErrorKind::Numerical,
            CliError::Io(..) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Parse(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Csv(e) => write!(f, "csv: {e}"),
            CliError::MissingInput => write!(f, "this command needs --input <FILE>"),
            CliError::Check(m) => write!(f, "{m}"),
        }
    }
}

impl From<euvq_core::Error> for CliError {
    fn from(e: euvq_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e)
    }
}

pub fn require(input: Option<&Path>) -> Result<&Path, CliError> {
    input.ok_or(CliError::MissingInput)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(path.to_path_buf(), e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    parse(path, &read_text(path)?)
}

/// A single object or an array of them; the first token decides.
fn read_one_or_many<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        parse(path, &text)
    } else {
        Ok(vec![parse(path, &text)?])
    }
}

/// Everything a command produced, ready for any output format.
pub struct Output {
    json: serde_json::Value,
    csv: String,
    table: String,
    pub failure: Option<String>,
}

impl Output {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).map_err(|e| CliError::Parse(PathBuf::from("<output>"), e))?;
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone(),
            Format::Table => self.table.clone(),
        })
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("output types serialize")
}

#[derive(Serialize)]
struct AbsorptionEstimate {
    spec: AbsorptionSpec,
    report: CostReport,
    details: AbsorptionCostBreakdown,
}


pub fn estimate_absorption(input: &Path) -> Result<Output, CliError> {
    let specs: Vec<AbsorptionSpec> = read_one_or_many(input)?;
    let mut results = Vec::new();
    for spec in specs {
        let report = absorption_cost(&spec)?;
        let details = absorption_breakdown(&spec)?;
        results.push(AbsorptionEstimate { spec, report, details });
    }

    #[derive(Serialize)]
    struct Row {
        n_orbitals: u64,
        logical_qubits: u64,
        gates_per_circuit: f64,
        shots: u64,
        overall_gates: f64,
    }
    let rows: Vec<Row> = results
        .iter()
        .map(|r| Row {
            n_orbitals: r.spec.n_orbitals,
            logical_qubits: r.report.logical_qubits(),
            gates_per_circuit: r.report.gates_per_circuit().as_f64(),
            shots: r.report.shots(),
            overall_gates: r.report.overall_gates().as_f64(),
        })
        .collect();
    let table_rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.spec.n_orbitals.to_string(),
                r.report.logical_qubits().to_string(),
                r.report.gates_per_circuit().to_sig3(),
                r.report.overall_gates().to_sig3(),
            ]
        })
        .collect();
    Ok(Output {
        json: to_json(&results),
        csv: render::csv(&rows)?,
        table: render::table(&["Number of Orbitals", "Qubits", "Gate Cost", "Overall Cost"], &table_rows),
        failure: None,
    })
}

pub fn estimate_photoemission(input: &Path) -> Result<Output, CliError> {
    let specs: Vec<PlaneWaveSpec> = read_one_or_many(input)?;

    #[derive(Serialize)]
    struct Estimate {
        spec: PlaneWaveSpec,
        report: CostReport,
        details: euvq_core::fq_cost::PhotoemissionCostBreakdown,
    }
    #[derive(Serialize)]
    struct Row {
        method: &'static str,
        n_bits: u32,
        time_fs: f64,
        logical_qubits: u64,
        gates_per_circuit: f64,
        shots: u64,
        overall_gates: f64,
    }
    let mut results = Vec::new();
    for spec in specs {
        let report = photoemission_cost(&spec)?;
        let details = photoemission_breakdown(&spec)?;
        results.push(Estimate { spec, report, details });
    }
    let rows: Vec<Row> = results
        .iter()
        .map(|r| Row {
            method: r.spec.method.short(),
            n_bits: r.spec.n_bits,
            time_fs: au_to_fs(r.spec.t_evolution),
            logical_qubits: r.report.logical_qubits(),
            gates_per_circuit: r.report.gates_per_circuit().as_f64(),
            shots: r.report.shots(),
            overall_gates: r.report.overall_gates().as_f64(),
        })
        .collect();
    let table_rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.spec.method.short().to_string(),
                format!("2^{}", 3 * r.spec.n_bits),
                format!("{:.3}", au_to_fs(r.spec.t_evolution)),
                r.report.logical_qubits().to_string(),
                r.report.gates_per_circuit().to_sig3(),
                r.report.overall_gates().to_sig3(),
            ]
        })
        .collect();
    Ok(Output {
        json: to_json(&results),
        csv: render::csv(&rows)?,
        table: render::table(&["Method", "Basis Size", "Time (fs)", "Qubits", "Gate Cost", "Overall Cost"], &table_rows),
        failure: None,
    })
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum SceneSource {
    TwoLevel {
        gap: f64,
        coupling: f64,
    },
    #[serde(rename = "lattice_1d")]
    Lattice1d {
        sites: usize,
        hopping: f64,
    },
    Random {
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Inline(SceneFile),
    /// Scene file path, relative to the config file.
    Path(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OmegaGrid {
    start: f64,
    stop: f64,
    points: usize,
}

impl OmegaGrid {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(euvq_core::Error::InvalidInput("omega grid needs points >= 1 and finite ends".into()).into());
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.start + step * i as f64).collect())
    }
}

fn default_emulation_shots() -> u64 {
    1000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbsorptionEmulation {
    scene: SceneSource,
    gamma: f64,
    tau: f64,
    j_max: u64,
    omega: OmegaGrid,
    #[serde(default = "default_emulation_shots")]
    shots: u64,
}

fn build_scene(source: SceneSource, config_path: &Path, seed: u64) -> Result<SpectralScene, CliError> {
    Ok(match source {
        SceneSource::TwoLevel { gap, coupling } => SpectralScene::two_level(gap, coupling)?,
        SceneSource::Lattice1d { sites, hopping } => SpectralScene::lattice_1d(sites, hopping)?,
        SceneSource::Random { dim, seed: s } => SpectralScene::random(dim, s.unwrap_or(seed))?,
        SceneSource::Inline(data) => SpectralScene::from_file_data(&data)?,
        SceneSource::Path(p) => {
            let full = config_path.parent().unwrap_or(Path::new(".")).join(p);
            let data: SceneFile = read_json(&full)?;
            SpectralScene::from_file_data(&data)?
        }
    })
}

pub fn emulate_absorption(input: &Path, seed: u64) -> Result<Output, CliError> {
    let cfg: AbsorptionEmulation = read_json(input)?;
    let omegas = cfg.omega.values()?;
    let scene = build_scene(cfg.scene, input, seed)?;
    let rows = absorption_spectrum(&scene, &omegas, cfg.gamma, cfg.tau, cfg.j_max, cfg.shots, seed)?;

    #[derive(Serialize)]
    struct Emulation<'a> {
        dim: usize,
        ground_energy: f64,
        dipole_norm: f64,
        gamma: f64,
        tau: f64,
        j_max: u64,
        shots: u64,
        seed: u64,
        rows: &'a [SpectrumRow],
    }
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "omega_Ha")]
        omega: f64,
        sigma_exact: f64,
        sigma_td: f64,
        sigma_sampled: f64,
        stderr: f64,
    }
    let csv_rows: Vec<Row> = rows
        .iter()
        .map(|r| Row {
            omega: r.omega_ha,
            sigma_exact: r.sigma_exact,
            sigma_td: r.sigma_td,
            sigma_sampled: r.sigma_sampled,
            stderr: r.stderr,
        })
        .collect();
    let head = render::summary(&[
        ("dimension", scene.dim().to_string()),
        ("ground energy (Ha)", format!("{:.6}", scene.ground_energy())),
        ("dipole norm", format!("{:.6}", dipole_excited_norm(&scene))),
        ("shots per frequency", cfg.shots.to_string()),
    ]);
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("{:.5}", r.omega_ha),
                sig3_f64(r.sigma_exact),
                sig3_f64(r.sigma_td),
                sig3_f64(r.sigma_sampled),
                sig3_f64(r.stderr),
            ]
        })
        .collect();
    let json = to_json(&Emulation {
        dim: scene.dim(),
        ground_energy: scene.ground_energy(),
        dipole_norm: dipole_excited_norm(&scene),
        gamma: cfg.gamma,
        tau: cfg.tau,
        j_max: cfg.j_max,
        shots: cfg.shots,
        seed,
        rows: &rows,
    });
    Ok(Output {
        json,
        csv: render::csv(&csv_rows)?,
        table: head + "\n" + &render::table(&["omega (Ha)", "sigma exact", "sigma td", "sigma sampled", "stderr"], &table_rows),
        failure: None,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhotoemissionEmulation {
    model: ModelConfig,
    pipeline: PipelineSpec,
    /// Where to write the final projected state, relative to the config file.
    #[serde(default)]
    checkpoint: Option<PathBuf>,
}

pub fn emulate_photoemission(input: &Path, seed: u64) -> Result<Output, CliError> {
    let cfg: PhotoemissionEmulation = read_json(input)?;
    let model = GridModel::new(cfg.model)?;
    let result = pipeline(&model, &cfg.pipeline, seed)?;
    if let Some(p) = &cfg.checkpoint {
        let full = input.parent().unwrap_or(Path::new(".")).join(p);
        save_checkpoint(&full, &Checkpoint::new(&model, cfg.pipeline.t, result.final_state.clone()))?;
    }

    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "bin_lo_Ha")]
        lo: f64,
        #[serde(rename = "bin_hi_Ha")]
        hi: f64,
        mass: f64,
        stderr: f64,
    }
    let h = &result.histogram;
    let rows: Vec<Row> = (0..h.sampled.len())
        .map(|k| Row {
            lo: h.bin_edges[k],
            hi: h.bin_edges[k + 1],
            mass: h.sampled[k],
            stderr: h.stderr[k],
        })
        .collect();
    let exact = h.conditional();
    let head = render::summary(&[
        ("ground energy (Ha)", format!("{:.6}", result.ground_energy)),
        ("dipole norm", format!("{:.6}", result.dipole_norm)),
        ("filter success", sig3_f64(result.filter_success)),
        ("continuum success", sig3_f64(result.continuum_success)),
        ("R_c (Bohr)", format!("{:.4}", result.r_cutoff)),
        ("edge density", sig3_f64(result.edge_density)),
        ("wrap warning", result.wrap_warning.to_string()),
        ("shots", h.shots_used.to_string()),
    ]);
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .zip(&exact)
        .map(|(r, e)| {
            vec![
                format!("{:.4}", r.lo),
                format!("{:.4}", r.hi),
                format!("{:.4}", r.mass),
                format!("{:.4}", r.stderr),
                format!("{e:.4}"),
            ]
        })
        .collect();
    Ok(Output {
        json: to_json(&result),
        csv: render::csv(&rows)?,
        table: head + "\n" + &render::table(&["lo (Ha)", "hi (Ha)", "sampled", "stderr", "exact"], &table_rows),
        failure: None,
    })
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum TensorSource {
    Inline(TensorFile),
    Random {
        n_orbitals: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Tensor file path, relative to the config file.
    Path(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CdfConfig {
    tensor: TensorSource,
    /// Fragment cap; defaults to N.
    #[serde(default)]
    l_max: Option<usize>,
}

pub fn cdf(input: &Path, seed: u64) -> Result<Output, CliError> {
    let cfg: CdfConfig = read_json(input)?;
    let tensor = match cfg.tensor {
        TensorSource::Inline(f) => TwoElectronTensor::from_file(f)?,
        TensorSource::Random { n_orbitals, seed: s } => TwoElectronTensor::random_symmetric(n_orbitals, s.unwrap_or(seed)),
        TensorSource::Path(p) => {
            let full = input.parent().unwrap_or(Path::new(".")).join(p);
            TwoElectronTensor::from_file(read_json(&full)?)?
        }
    };
    let n = tensor.n_orbitals();
    let l_max = cfg.l_max.unwrap_or(n);
    let f = double_factorize(&tensor, l_max)?;

    #[derive(Serialize)]
    struct FragmentOut {
        index: usize,
        eigenvalue: f64,
        givens_rotations: usize,
        u: Vec<f64>,
        z: Vec<f64>,
    }
    #[derive(Serialize)]
    struct CdfOut {
        n_orbitals: usize,
        l_max: usize,
        fragments: Vec<FragmentOut>,
        one_body_z: Vec<f64>,
        error: f64,
    }
    let row_major = |m: &nalgebra::DMatrix<f64>| -> Vec<f64> { (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect() };
    let mut fragments = Vec::new();
    for (k, (frag, ev)) in f.fragments.iter().zip(&f.retained_eigenvalues).enumerate() {
        fragments.push(FragmentOut {
            index: k,
            eigenvalue: *ev,
            givens_rotations: givens_decompose(&frag.u)?.rotations.len(),
            u: row_major(&frag.u),
            z: row_major(&frag.z),
        });
    }
    let out = CdfOut {
        n_orbitals: n,
        l_max,
        fragments,
        one_body_z: f.one_body.z0.clone(),
        error: f.error,
    };

    #[derive(Serialize)]
    struct Row {
        fragment: usize,
        eigenvalue: f64,
        givens_rotations: usize,
        z_frobenius: f64,
    }
    let rows: Vec<Row> = f
        .fragments
        .iter()
        .zip(&out.fragments)
        .map(|(frag, o)| Row {
            fragment: o.index,
            eigenvalue: o.eigenvalue,
            givens_rotations: o.givens_rotations,
            z_frobenius: frag.z.norm(),
        })
        .collect();
    let head = render::summary(&[
        ("orbitals", n.to_string()),
        ("fragments", out.fragments.len().to_string()),
        ("reconstruction error", sig3_f64(out.error)),
    ]);
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.fragment.to_string(), sig3_f64(r.eigenvalue), r.givens_rotations.to_string(), sig3_f64(r.z_frobenius)])
        .collect();
    Ok(Output {
        json: to_json(&out),
        csv: render::csv(&rows)?,
        table: head + "\n" + &render::table(&["Fragment", "Eigenvalue", "Givens", "|Z|_F"], &table_rows),
        failure: None,
    })
}

fn default_max_n() -> u32 {
    4
}
fn default_samples() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArithConfig {
    #[serde(default = "default_max_n")]
    max_n: u32,
    /// Random (η, n, ε) triples for the ledger comparison.
    #[serde(default = "default_samples")]
    samples: usize,
}

impl Default for ArithConfig {
    fn default() -> Self {
        Self {
            max_n: default_max_n(),
            samples: default_samples(),
        }
    }
}

#[derive(Serialize)]
struct LedgerCheck {
    eta: u64,
    n: u32,
    epsilon: f64,
    position_itemized: u128,
    position_closed_form: u128,
    projector_itemized: u128,
    projector_closed_form: u128,
}

pub fn arith_verify(input: Option<&Path>, seed: u64) -> Result<Output, CliError> {
    let cfg: ArithConfig = match input {
        Some(p) => read_json(p)?,
        None => ArithConfig::default(),
    };
    let sweeps = brute_force_sweeps(cfg.max_n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledgers = Vec::new();
    for _ in 0..cfg.samples {
        let eta = rng.gen_range(1u64..=128);
        let n = rng.gen_range(1u32..=12);
        let epsilon = 10f64.powf(rng.gen_range(-6.0..-0.5));
        ledgers.push(LedgerCheck {
            eta,
            n,
            epsilon,
            position_itemized: position_be_ledger_for(eta, n, epsilon, UncomputeMode::MeasureFixup).total(),
            position_closed_form: dipole_block_encoding_cost(eta, n, epsilon),
            projector_itemized: continuum_ledger(eta, n)?.total(),
            projector_closed_form: continuum_projector_cost(eta, n),
        });
    }
    let sweep_bad: u64 = sweeps.iter().map(|s| s.mismatches).sum();
    let projector_bad = ledgers.iter().filter(|l| l.projector_itemized != l.projector_closed_form).count();
    let position_off = ledgers.iter().filter(|l| l.position_itemized != l.position_closed_form).count();

    #[derive(Serialize)]
    struct ArithOut<'a> {
        sweeps: &'a [SweepResult],
        ledgers: &'a [LedgerCheck],
        position_ledger_differs_from_closed_form: usize,
    }
    let table_rows: Vec<Vec<String>> = sweeps
        .iter()
        .map(|s| vec![s.check.clone(), s.n.to_string(), s.cases.to_string(), s.mismatches.to_string()])
        .collect();
    let head = render::summary(&[
        ("ledger samples", ledgers.len().to_string()),
        ("projector ledger != closed form", projector_bad.to_string()),
        ("position ledger != closed form", position_off.to_string()),
    ]);
    let failure = (sweep_bad > 0 || projector_bad > 0)
        .then(|| format!("arithmetic verification failed: {sweep_bad} sweep mismatches, {projector_bad} projector ledger mismatches"));
    Ok(Output {
        json: to_json(&ArithOut {
            sweeps: &sweeps,
            ledgers: &ledgers,
            position_ledger_differs_from_closed_form: position_off,
        }),
        csv: render::csv(&ledgers)?,
        table: render::table(&["Check", "n", "Cases", "Mismatches"], &table_rows) + "\n" + &head,
        failure,
    })
}
