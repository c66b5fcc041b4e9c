//! Small dense complex linear algebra and the single tolerance policy used for
//! every rank and zero decision in the crate.
//!
//! Matrices are stored as `nalgebra` matrices; decompositions (SVD, Hermitian
//! eigenproblems, QR, determinants) are delegated to `faer`. This module adds
//! the rank thresholds. Random draws come from ChaCha20 keyed by
//! `(seed, stream)`, which is reproducible across runs and platforms.

use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::StateTensor;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Largest matrix side handled by the numerics module.
pub const MAX_MATRIX_DIM: usize = 16;

/// Floor for eigenvalue-based rank decisions, in units of the largest eigenvalue.
const PSD_ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Tolerances deciding when a singular value or a hyperdeterminant counts as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Singular values below `rank_rel_eps * s_max * max_dim` are treated as zero.
    pub rank_rel_eps: f64,
    /// `|Det|` below `det_rel_eps * |psi|^d` is treated as zero (d = degree).
    pub det_rel_eps: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_rel_eps: 1e-9,
            det_rel_eps: 1e-10,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_rel_eps: f64, det_rel_eps: f64) -> Result<Self> {
        for (name, v) in [("rank_rel_eps", rank_rel_eps), ("det_rel_eps", det_rel_eps)] {
            if !(v.is_finite() && v > 0.0 && v < 1e-3) {
                return Err(Error::InvalidPolicy(format!(
                    "{name} = {v} must lie in (0, 1e-3)"
                )));
            }
        }
        Ok(Self {
            rank_rel_eps,
            det_rel_eps,
        })
    }

    pub fn rank_threshold(&self, s_max: f64, max_dim: usize) -> f64 {
        self.rank_rel_eps * s_max * max_dim as f64
    }

    /// Threshold on eigenvalues of a PSD matrix whose square roots play the
    /// role of singular values (e.g. a reduced density matrix). The threshold
    /// is the square of the singular-value threshold, floored at roundoff.
    pub fn psd_threshold(&self, lambda_max: f64, dim: usize) -> f64 {
        let rel = self.rank_rel_eps * dim as f64;
        (rel * rel).max(PSD_ROUNDOFF_FLOOR) * lambda_max
    }

    pub fn det_threshold(&self, norm: f64, degree: i32) -> f64 {
        self.det_rel_eps * norm.powi(degree)
    }
}

/// Outcome of thresholding a spectrum, kept for margin reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankDecision {
    pub rank: usize,
    pub threshold: f64,
    /// Smallest value counted as nonzero.
    pub smallest_kept: Option<f64>,
    /// Largest value counted as zero.
    pub largest_dropped: Option<f64>,
}

impl RankDecision {
    /// Count `values` strictly above `threshold`.
    pub fn from_values(values: &[f64], threshold: f64) -> Self {
        let mut kept: Option<f64> = None;
        let mut dropped: Option<f64> = None;
        let mut rank = 0;
        for &v in values {
            if v > threshold {
                rank += 1;
                kept = Some(kept.map_or(v, |k| k.min(v)));
            } else {
                dropped = Some(dropped.map_or(v, |d| d.max(v)));
            }
        }
        Self {
            rank,
            threshold,
            smallest_kept: kept,
            largest_dropped: dropped,
        }
    }
}

/// Seeded random source: ChaCha20 keyed by `seed` (expanded with
/// `SeedableRng::seed_from_u64`) running on the ChaCha stream `stream`.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RandomSource {
    /// Identifier of the generator, recorded in reports.
    pub const ALGORITHM: &'static str = "chacha20-seed_from_u64-v1";

    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Independent source on another stream of the same seed.
    pub fn substream(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Complex standard normal: `E|z|^2 = 1`, real and imaginary parts independent.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        // Row-major fill so the draw order does not depend on nalgebra's layout.
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.complex_gaussian();
            }
        }
        m
    }
}

/// Full singular value decomposition `M = U diag(s) V^dagger`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `p x p` unitary.
    pub u: CMatrix,
    /// `min(p, q)` singular values, descending.
    pub singular_values: Vec<f64>,
    /// `q x q` unitary.
    pub v: CMatrix,
}

impl Svd {
    pub fn s_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Rebuild `U diag(s) V^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        let (p, q) = (self.u.nrows(), self.v.nrows());
        let mut d = CMatrix::zeros(p, q);
        for (i, &s) in self.singular_values.iter().enumerate() {
            d[(i, i)] = Complex64::new(s, 0.0);
        }
        &self.u * d * self.v.adjoint()
    }
}

fn check_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn to_faer(m: &CMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.is_square() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{what} of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    check_finite(m, "svd input")?;
    let (p, q) = m.shape();
    if p == 0 || q == 0 {
        return Err(Error::ShapeMismatch(format!("empty {p}x{q} matrix")));
    }
    let dec = to_faer(m)
        .svd()
        .map_err(|e| Error::NumericalInstability(format!("SVD did not converge: {e:?}")))?;
    let s = dec.S().column_vector();
    Ok(Svd {
        u: from_faer(dec.U()),
        singular_values: (0..s.nrows()).map(|i| s[i].re).collect(),
        v: from_faer(dec.V()),
    })
}

/// Eigen-decomposition `H = Q diag(lambda) Q^dagger` of a Hermitian matrix;
/// eigenvalues ascending. Only the lower triangle of `h` is read.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_finite(h, "eigen input")?;
    require_square(h, "eigen-decomposition")?;
    let dec = to_faer(h)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalInstability(format!("eigensolver did not converge: {e:?}")))?;
    let s = dec.S().column_vector();
    Ok((
        (0..s.nrows()).map(|i| s[i].re).collect(),
        from_faer(dec.U()),
    ))
}

/// Householder QR `M = Q R` of a square matrix.
pub fn qr(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    check_finite(m, "qr input")?;
    require_square(m, "QR")?;
    let dec = to_faer(m).qr();
    Ok((from_faer(dec.compute_Q().as_ref()), from_faer(dec.R())))
}

/// Rank decision for an arbitrary matrix under `policy`.
pub fn rank_decision(m: &CMatrix, policy: &TolerancePolicy) -> Result<RankDecision> {
    let dec = svd(m)?;
    let max_dim = m.nrows().max(m.ncols());
    let thr = policy.rank_threshold(dec.s_max(), max_dim);
    Ok(RankDecision::from_values(&dec.singular_values, thr))
}

/// Number of singular values above `rank_rel_eps * s_max * max_dim`.
pub fn numerical_rank(m: &CMatrix, policy: &TolerancePolicy) -> Result<usize> {
    Ok(rank_decision(m, policy)?.rank)
}

/// Rank of a Hermitian positive semidefinite matrix from its eigenvalues,
/// thresholded on the square-root (amplitude) scale. See
/// [`TolerancePolicy::psd_threshold`].
pub fn psd_rank_decision(
    eigenvalues: &[f64],
    dim: usize,
    policy: &TolerancePolicy,
) -> RankDecision {
    let lmax = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    RankDecision::from_values(eigenvalues, policy.psd_threshold(lmax, dim))
}

pub fn determinant(m: &CMatrix) -> Result<Complex64> {
    check_finite(m, "determinant input")?;
    require_square(m, "determinant")?;
    Ok(to_faer(m).determinant())
}

/// Max-abs deviation of `M^dagger M` from the identity.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let id = CMatrix::identity(m.ncols(), m.ncols());
    (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random element of `SL(k, C)`: complex Gaussian entries rescaled by the
/// principal branch of `det^(-1/k)`.
pub fn random_sl(k: usize, rng: &mut RandomSource) -> Result<CMatrix> {
    const MAX_ATTEMPTS: usize = 100;
    if !(2..=MAX_MATRIX_DIM).contains(&k) {
        return Err(Error::InvalidDims {
            dims: vec![k],
            reason: "random_sl needs 2 <= k <= 16".into(),
        });
    }
    for _ in 0..MAX_ATTEMPTS {
        let g = rng.gaussian_matrix(k, k);
        let d = determinant(&g)?;
        if d.norm() < 1e-12 {
            continue;
        }
        let scale = (-d.ln() / k as f64).exp();
        return Ok(g * scale);
    }
    Err(Error::SingularDraw(MAX_ATTEMPTS))
}

/// Haar-random `k x k` unitary (Gaussian matrix, QR, phase fix on the diagonal of R).
pub fn random_unitary(k: usize, rng: &mut RandomSource) -> CMatrix {
    assert!(
        (1..=MAX_MATRIX_DIM).contains(&k),
        "random_unitary needs 1 <= k <= 16"
    );
    let g = rng.gaussian_matrix(k, k);
    let (mut q, r) = qr(&g).expect("Gaussian draws are finite and square");
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `rows x cols` complex matrix of exact rank `rank` (almost surely).
pub fn random_matrix_of_rank(
    rows: usize,
    cols: usize,
    rank: usize,
    rng: &mut RandomSource,
) -> CMatrix {
    if rank == 0 {
        return CMatrix::zeros(rows, cols);
    }
    let a = rng.gaussian_matrix(rows, rank);
    let b = rng.gaussian_matrix(rank, cols);
    a * b
}

/// Normalized state with i.i.d. complex Gaussian amplitudes.
pub fn random_state(dims: &[usize], rng: &mut RandomSource) -> Result<StateTensor> {
    let len = StateTensor::validate_dims(dims)?;
    let amps: Vec<Complex64> = (0..len).map(|_| rng.complex_gaussian()).collect();
    StateTensor::from_amplitudes(dims.to_vec(), amps)?.normalized()
}
