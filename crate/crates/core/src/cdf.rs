//! Double factorization of two-electron integral tensors and Givens
//! decomposition of the resulting orbital rotations.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::absorption::AbsorptionSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::eigh_real;

const SYMMETRY_TOL: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-10;

/// Chemist-notation (pq|rs), stored row-major over (p, q, r, s).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoElectronTensor {
    n: usize,
    values: Vec<f64>,
}

/// On-disk layout of a tensor file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub n_orbitals: usize,
    pub values: Vec<f64>,
}

impl TwoElectronTensor {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n.pow(4) {
            return Err(invalid(format!(
                "tensor with n_orbitals={n} needs {} values, got {}",
                n.pow(4),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tensor contains non-finite values"));
        }
        let dev = symmetry_deviation(n, &values);
        if dev > SYMMETRY_TOL {
            return Err(Error::SymmetryViolation { max_deviation: dev });
        }
        Ok(Self { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n.pow(4)],
        }
    }

    pub fn from_file(file: TensorFile) -> Result<Self> {
        Self::new(file.n_orbitals, file.values)
    }

    pub fn to_file(&self) -> TensorFile {
        TensorFile {
            n_orbitals: self.n,
            values: self.values.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    /// Random tensor with the full 8-fold symmetry.
    pub fn random_symmetric(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..n.pow(4)).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut values = vec![0.0; n.pow(4)];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let mut acc = 0.0;
                        for &(a, b, c, d) in &permutations(p, q, r, s) {
                            acc += raw[idx(n, a, b, c, d)];
                        }
                        values[idx(n, p, q, r, s)] = acc / 8.0;
                    }
                }
            }
        }
        Self { n, values }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.values[idx(self.n, p, q, r, s)]
    }

    /// Frobenius norm of the difference.
    pub fn distance(&self, other: &TwoElectronTensor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn matricize(&self) -> DMatrix<f64> {
        let m = self.n * self.n;
        DMatrix::from_row_slice(m, m, &self.values)
    }
}

fn idx(n: usize, p: usize, q: usize, r: usize, s: usize) -> usize {
    ((p * n + q) * n + r) * n + s
}

fn permutations(p: usize, q: usize, r: usize, s: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
}

/// Largest violation of (pq|rs) = (qp|rs) = (pq|sr) = (rs|pq).
pub fn symmetry_deviation(n: usize, values: &[f64]) -> f64 {
    let mut dev = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = values[idx(n, p, q, r, s)];
                    for &(a, b, c, d) in &permutations(p, q, r, s)[1..] {
                        dev = dev.max((v - values[idx(n, a, b, c, d)]).abs());
                    }
                }
            }
        }
    }
    dev
}

/// One fragment: orbital rotation U and coefficient matrix Z, contributing
/// Σ_kl U_pk U_qk Z_kl U_rl U_sl.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub u: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

/// h = U0 diag(z0) U0ᵀ.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyFactor {
    pub u0: DMatrix<f64>,
    pub z0: Vec<f64>,
}

impl OneBodyFactor {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.z0.clone()));
        &self.u0 * d * self.u0.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct CdfFactorization {
    pub fragments: Vec<Fragment>,
    /// Factorization of the one-body correction −½ Σ_r (pr|rq) that arises
    /// when the two-body operator is written as a sum of squares.
    pub one_body: OneBodyFactor,
    /// Matricized-tensor eigenvalues that were kept, by decreasing magnitude.
    pub retained_eigenvalues: Vec<f64>,
    /// Frobenius reconstruction error.
    pub error: f64,
}

/// Sums the fragment contributions back into a four-index tensor.
pub fn reconstruct(n: usize, fragments: &[Fragment]) -> TwoElectronTensor {
    let m = n * n;
    let mut total = DMatrix::<f64>::zeros(m, m);
    for f in fragments {
        let mut a = DMatrix::<f64>::zeros(m, n);
        for p in 0..n {
            for q in 0..n {
                for k in 0..n {
                    a[(p * n + q, k)] = f.u[(p, k)] * f.u[(q, k)];
                }
            }
        }
        total += &a * &f.z * a.transpose();
    }
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            values[i * m + j] = total[(i, j)];
        }
    }
    TwoElectronTensor { n, values }
}

/// Keeps the `l_max` largest-magnitude eigenpairs of the N²×N² matricization;
/// each eigenvector, reshaped to N×N, is diagonalized into (U, Z).
pub fn double_factorize(t: &TwoElectronTensor, l_max: usize) -> Result<CdfFactorization> {
    if l_max == 0 {
        return Err(invalid("l_max must be >= 1"));
    }
    let n = t.n;
    let m = n * n;
    let l_max = if l_max > m {
        log::warn!("l_max={l_max} exceeds N^2={m}; clamping");
        m
    } else {
        l_max
    };
    let (vals, vecs) = eigh_real(&t.matricize());
    let mut order: Vec<usize> = (0..m).collect();
    // stable sort: ties keep index order
    order.sort_by(|&i, &j| vals[j].abs().total_cmp(&vals[i].abs()).then(i.cmp(&j)));
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cutoff = 1e-12 * scale.max(1.0);

    let mut fragments = Vec::new();
    let mut retained = Vec::new();
    for &k in order.iter().take(l_max) {
        let lam = vals[k];
        if lam.abs() <= cutoff {
            break;
        }
        let w = DMatrix::from_fn(n, n, |p, q| {
            0.5 * (vecs[(p * n + q, k)] + vecs[(q * n + p, k)])
        });
        let (wv, u) = eigh_real(&w);
        let z = DMatrix::from_fn(n, n, |a, b| lam * wv[a] * wv[b]);
        fragments.push(Fragment { u, z });
        retained.push(lam);
    }
    let rebuilt = reconstruct(n, &fragments);
    let error = rebuilt.distance(t);

    let mut h1 = DMatrix::<f64>::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            h1[(p, q)] = -0.5 * (0..n).map(|r| t.get(p, r, r, q)).sum::<f64>();
        }
    }
    let one_body = factorize_one_body(&h1)?;
    Ok(CdfFactorization {
        fragments,
        one_body,
        retained_eigenvalues: retained,
        error,
    })
}

/// Diagonalizes a symmetric one-body matrix.
pub fn factorize_one_body(h: &DMatrix<f64>) -> Result<OneBodyFactor> {
    if !h.is_square() {
        return Err(invalid("one-body matrix must be square"));
    }
    let dev = (h - h.transpose()).amax();
    if dev > SYMMETRY_TOL {
        return Err(Error::SymmetryViolation { max_deviation: dev });
    }
    let (z0, u0) = eigh_real(h);
    Ok(OneBodyFactor { u0, z0 })
}

/// Rotation by `theta` in the (i, j) plane: rows/cols i, j carry
/// [[cos, −sin], [sin, cos]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Givens {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

impl Givens {
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut g = DMatrix::identity(n, n);
        let (s, c) = self.theta.sin_cos();
        g[(self.i, self.i)] = c;
        g[(self.j, self.j)] = c;
        g[(self.i, self.j)] = -s;
        g[(self.j, self.i)] = s;
        g
    }
}

/// u = G_1 G_2 ⋯ G_m · diag(signs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GivensDecomposition {
    pub rotations: Vec<Givens>,
    pub signs: Vec<f64>,
}

impl GivensDecomposition {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.signs.len();
        let mut m = DMatrix::identity(n, n);
        for g in &self.rotations {
            m *= g.matrix(n);
        }
        for (c, s) in self.signs.iter().enumerate() {
            m.column_mut(c).scale_mut(*s);
        }
        m
    }
}

pub fn orthogonality_deviation(u: &DMatrix<f64>) -> f64 {
    let n = u.nrows();
    (u.transpose() * u - DMatrix::<f64>::identity(n, n)).amax()
}

/// Nearest-neighbour Givens sweep that zeroes the strictly lower triangle
/// column by column; at most N(N−1)/2 rotations.
pub fn givens_decompose(u: &DMatrix<f64>) -> Result<GivensDecomposition> {
    if !u.is_square() {
        return Err(invalid("matrix must be square"));
    }
    let dev = orthogonality_deviation(u);
    if dev > ORTHO_TOL {
        return Err(Error::NotOrthogonal { deviation: dev });
    }
    let n = u.nrows();
    let mut a = u.clone();
    let mut rotations = Vec::new();
    for c in 0..n.saturating_sub(1) {
        for r in (c + 1..n).rev() {
            let x = a[(r, c)];
            if x.abs() <= 1e-14 {
                continue;
            }
            let theta = x.atan2(a[(r - 1, c)]);
            let (s, co) = theta.sin_cos();
            for k in 0..n {
                let top = a[(r - 1, k)];
                let bot = a[(r, k)];
                a[(r - 1, k)] = co * top + s * bot;
                a[(r, k)] = -s * top + co * bot;
            }
            rotations.push(Givens {
                i: r - 1,
                j: r,
                theta,
            });
        }
    }
    let signs = (0..n).map(|k| a[(k, k)].signum()).collect();
    Ok(GivensDecomposition { rotations, signs })
}

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Number of fragments used for a given system: N by default.
pub fn fragment_count_policy(spec: &AbsorptionSpec, override_l: Option<u64>) -> u64 {
    override_l.unwrap_or(spec.n_orbitals)
}
