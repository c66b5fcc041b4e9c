//! Multipartite pure states, local operations and reduced density matrices.
//!
//! Amplitudes are stored dense and row-major: the last party's index runs
//! fastest. Parties are 0-based here; reports use 1-based party numbers.

use std::collections::HashSet;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::classify::ClassLabel;
use crate::error::{Error, Result};
use crate::numerics::{self, CMatrix, TolerancePolicy, MAX_MATRIX_DIM};
use crate::serde_util::MatrixRef;

/// Maximum number of amplitudes in a tensor.
pub const MAX_AMPLITUDES: usize = 1 << 16;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;

/// One nonzero amplitude with its multi-index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseAmplitude {
    pub index: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// Pure state `sum psi_{i1..il} |i1 .. il>` on `C^k1 x .. x C^kl`, not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTensor {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl StateTensor {
    /// Check a dimension list and return the amplitude count.
    pub fn validate_dims(dims: &[usize]) -> Result<usize> {
        let bad = |reason: &str| Error::InvalidDims {
            dims: dims.to_vec(),
            reason: reason.into(),
        };
        if dims.is_empty() {
            return Err(bad("at least one party is required"));
        }
        if dims.iter().any(|&k| k == 0 || k > MAX_MATRIX_DIM) {
            return Err(bad("each local dimension must lie in 1..=16"));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .filter(|&l| l <= MAX_AMPLITUDES)
            .ok_or_else(|| bad("too many amplitudes"))?;
        Ok(len)
    }

    pub fn from_amplitudes(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        let len = Self::validate_dims(&dims)?;
        if amps.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for dims {:?} (expected {len})",
                amps.len(),
                dims
            )));
        }
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("amplitudes"));
        }
        if amps.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(Error::ZeroState);
        }
        Ok(Self { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len() || index.iter().zip(&self.dims).any(|(&i, &k)| i >= k) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                dims: self.dims.clone(),
            });
        }
        Ok(index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &k)| acc * k + i))
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &k) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % k;
            flat /= k;
        }
        idx
    }

    pub fn get(&self, index: &[usize]) -> Result<Complex64> {
        Ok(self.amps[self.flat_index(index)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// Nonzero amplitudes in flat-index order.
    pub fn sparse_amplitudes(&self) -> Vec<SparseAmplitude> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
            .map(|(flat, z)| SparseAmplitude {
                index: self.multi_index(flat),
                re: z.re,
                im: z.im,
            })
            .collect()
    }

    /// Build from sparse amplitudes; see [`make_state`].
    pub fn from_sparse(dims: &[usize], entries: &[SparseAmplitude]) -> Result<Self> {
        let entries: Vec<(Vec<usize>, Complex64)> = entries
            .iter()
            .map(|a| (a.index.clone(), Complex64::new(a.re, a.im)))
            .collect();
        make_state(dims, &entries)
    }

    /// Multiply every amplitude by `c` (panics on `c == 0`).
    pub fn scaled(&self, c: Complex64) -> Self {
        assert!(c.norm() > 0.0, "scaling by zero");
        Self {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|z| z * c).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "inner product of dims {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Reorder parties: new party `j` is old party `perm[j]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self> {
        let l = self.parties();
        let mut seen = vec![false; l];
        if perm.len() != l
            || perm
                .iter()
                .any(|&p| p >= l || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::ShapeMismatch(format!(
                "{perm:?} is not a permutation of {l} parties"
            )));
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let target = Self {
            dims: new_dims.clone(),
            amps: Vec::new(),
        };
        for (flat, &z) in self.amps.iter().enumerate() {
            let old = self.multi_index(flat);
            let new: Vec<usize> = perm.iter().map(|&p| old[p]).collect();
            out[target.flat_index(&new)?] = z;
        }
        Self::from_amplitudes(new_dims, out)
    }

    /// `k_party x (product of the other dims)` matrix; columns follow the
    /// remaining parties in order.
    pub fn unfolding(&self, party: usize) -> Result<CMatrix> {
        let k = *self.dims.get(party).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "party {party} out of range for {} parties",
                self.parties()
            ))
        })?;
        let left: usize = self.dims[..party].iter().product();
        let right: usize = self.dims[party + 1..].iter().product();
        let mut m = CMatrix::zeros(k, left * right);
        for l in 0..left {
            for a in 0..k {
                for r in 0..right {
                    m[(a, l * right + r)] = self.amps[(l * k + a) * right + r];
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`StateTensor::unfolding`]: rebuild a tensor whose party
    /// `party` has dimension `m.nrows()` and whose other dims are taken from `self`.
    pub fn folded(&self, party: usize, m: &CMatrix) -> Result<Self> {
        let mut dims = self.dims.clone();
        let slot = dims.get_mut(party).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "party {party} out of range for {} parties",
                self.parties()
            ))
        })?;
        *slot = m.nrows();
        let left: usize = dims[..party].iter().product();
        let right: usize = dims[party + 1..].iter().product();
        if m.ncols() != left * right {
            return Err(Error::ShapeMismatch(format!(
                "{} columns do not match the other parties' dims",
                m.ncols()
            )));
        }
        let k = m.nrows();
        let mut amps = vec![Complex64::new(0.0, 0.0); left * k * right];
        for l in 0..left {
            for a in 0..k {
                for r in 0..right {
                    amps[(l * k + a) * right + r] = m[(a, l * right + r)];
                }
            }
        }
        Self::from_amplitudes(dims, amps)
    }
}

/// Build a tensor from sparse `(index, amplitude)` entries; not normalized.
pub fn make_state(dims: &[usize], entries: &[(Vec<usize>, Complex64)]) -> Result<StateTensor> {
    let len = StateTensor::validate_dims(dims)?;
    let shape = StateTensor {
        dims: dims.to_vec(),
        amps: Vec::new(),
    };
    let mut amps = vec![Complex64::new(0.0, 0.0); len];
    let mut seen = HashSet::new();
    for (index, z) in entries {
        let flat = shape.flat_index(index)?;
        if !seen.insert(flat) {
            return Err(Error::DuplicateIndex(index.clone()));
        }
        amps[flat] = *z;
    }
    StateTensor::from_amplitudes(dims.to_vec(), amps)
}

/// Per-party matrices `M_1 x .. x M_l`; factor `i` maps `C^{k_i}` to `C^{k_i'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperation {
    factors: Vec<CMatrix>,
    invertible: Vec<bool>,
}

impl LocalOperation {
    pub fn new(factors: Vec<CMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ShapeMismatch(
                "local operation without factors".into(),
            ));
        }
        let policy = TolerancePolicy::default();
        let mut invertible = Vec::with_capacity(factors.len());
        for m in &factors {
            if m.nrows() == 0 || m.ncols() == 0 {
                return Err(Error::ShapeMismatch("empty factor".into()));
            }
            let inv = m.is_square() && numerics::numerical_rank(m, &policy)? == m.nrows();
            invertible.push(inv);
        }
        Ok(Self {
            factors,
            invertible,
        })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&k| CMatrix::identity(k, k)).collect(),
            invertible: vec![true; dims.len()],
        }
    }

    /// `m` on `party`, identity on every other party of `dims`.
    pub fn on_party(dims: &[usize], party: usize, m: CMatrix) -> Result<Self> {
        if party >= dims.len() {
            return Err(Error::ShapeMismatch(format!("party {party} out of range")));
        }
        let mut factors: Vec<CMatrix> = dims.iter().map(|&k| CMatrix::identity(k, k)).collect();
        factors[party] = m;
        Self::new(factors)
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn factor(&self, party: usize) -> &CMatrix {
        &self.factors[party]
    }

    pub fn is_factor_invertible(&self, party: usize) -> bool {
        self.invertible[party]
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible.iter().all(|&b| b)
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|m| m.ncols()).collect()
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|m| m.nrows()).collect()
    }

    /// `next` applied after `self`.
    pub fn then(&self, next: &LocalOperation) -> Result<Self> {
        if self.factors.len() != next.factors.len() || next.input_dims() != self.output_dims() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose output dims {:?} with input dims {:?}",
                self.output_dims(),
                next.input_dims()
            )));
        }
        Self::new(
            self.factors
                .iter()
                .zip(&next.factors)
                .map(|(a, b)| b * a)
                .collect(),
        )
    }
}

impl Serialize for StateTensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("StateTensor", 2)?;
        st.serialize_field("dims", &self.dims)?;
        st.serialize_field("amplitudes", &self.sparse_amplitudes())?;
        st.end()
    }
}

impl Serialize for LocalOperation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LocalOperation", 2)?;
        let mats: Vec<MatrixRef<'_>> = self.factors.iter().map(MatrixRef).collect();
        st.serialize_field("factors", &mats)?;
        st.serialize_field("invertible", &self.invertible)?;
        st.end()
    }
}

fn mode_product(dims: &[usize], amps: &[Complex64], party: usize, m: &CMatrix) -> Vec<Complex64> {
    let k = dims[party];
    let k_out = m.nrows();
    let left: usize = dims[..party].iter().product();
    let right: usize = dims[party + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); left * k_out * right];
    for l in 0..left {
        for a in 0..k_out {
            for b in 0..k {
                let mab = m[(a, b)];
                if mab == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = (l * k + b) * right;
                let dst = (l * k_out + a) * right;
                for r in 0..right {
                    out[dst + r] += mab * amps[src + r];
                }
            }
        }
    }
    out
}

/// `(M_1 x .. x M_l) psi`, unnormalized.
pub fn apply_local(op: &LocalOperation, psi: &StateTensor) -> Result<StateTensor> {
    if op.factors.len() != psi.parties() || op.input_dims() != psi.dims {
        return Err(Error::ShapeMismatch(format!(
            "operation input dims {:?} do not match state dims {:?}",
            op.input_dims(),
            psi.dims
        )));
    }
    let mut dims = psi.dims.clone();
    let mut amps = psi.amps.clone();
    let mut scale = psi.norm();
    for (party, m) in op.factors.iter().enumerate() {
        amps = mode_product(&dims, &amps, party, m);
        dims[party] = m.nrows();
        scale *= m.norm();
    }
    let out_norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if out_norm <= 1e-14 * scale {
        return Err(Error::Annihilated);
    }
    StateTensor::from_amplitudes(dims, amps)
}

fn require_22n(psi: &StateTensor) -> Result<usize> {
    match psi.dims.as_slice() {
        [2, 2, n] => Ok(*n),
        _ => Err(Error::WrongFormat {
            expected: "2 x 2 x n",
            dims: psi.dims.clone(),
        }),
    }
}

/// The `4 x n` matrix with row `2 i1 + i2` and column `i3`.
pub fn flatten(psi: &StateTensor) -> Result<CMatrix> {
    let n = require_22n(psi)?;
    Ok(CMatrix::from_row_slice(4, n, &psi.amps))
}

pub fn unflatten(m: &CMatrix) -> Result<StateTensor> {
    if m.nrows() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "expected 4 rows, got {}",
            m.nrows()
        )));
    }
    let n = m.ncols();
    let mut amps = Vec::with_capacity(4 * n);
    for i in 0..4 {
        for j in 0..n {
            amps.push(m[(i, j)]);
        }
    }
    StateTensor::from_amplitudes(vec![2, 2, n], amps)
}

/// Mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NotDensityMatrix("not square".into()));
        }
        if entries
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("density matrix"));
        }
        let herm_err = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_err > HERMITIAN_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "not Hermitian (defect {herm_err:e})"
            )));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr} is not 1")));
        }
        let rho = Self { entries };
        let min_eig = rho.eigenvalues().first().copied().unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(rho)
    }

    /// Projector onto a normalized pure state.
    pub fn pure(psi: &StateTensor) -> Result<Self> {
        if !psi.is_normalized() {
            return Err(Error::Unnormalized {
                norm_sqr: psi.norm_sqr(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    fn eigen(&self) -> (Vec<f64>, CMatrix) {
        numerics::hermitian_eigen(&self.entries).expect("density matrices are finite and square")
    }

    /// Principal square root (negative roundoff eigenvalues clamped to zero).
    pub fn sqrt(&self) -> CMatrix {
        let (values, q) = self.eigen();
        let mut d = CMatrix::zeros(self.dim(), self.dim());
        for (i, &l) in values.iter().enumerate() {
            d[(i, i)] = Complex64::new(l.max(0.0).sqrt(), 0.0);
        }
        &q * d * q.adjoint()
    }
}

/// Reduced density matrix on the parties in `keep` (in that order).
pub fn partial_trace_keep(psi: &StateTensor, keep: &[usize]) -> Result<DensityMatrix> {
    let tr_dev = (psi.norm_sqr() - 1.0).abs();
    if tr_dev > TRACE_TOL {
        return Err(Error::Unnormalized {
            norm_sqr: psi.norm_sqr(),
        });
    }
    let l = psi.parties();
    let mut seen = vec![false; l];
    if keep.is_empty()
        || keep
            .iter()
            .any(|&p| p >= l || std::mem::replace(&mut seen[p], true))
    {
        return Err(Error::ShapeMismatch(format!(
            "invalid party subset {keep:?}"
        )));
    }
    // Move kept parties to the front, then rho = A A^dagger with A the
    // (kept x traced) matrix.
    let mut perm: Vec<usize> = keep.to_vec();
    perm.extend((0..l).filter(|p| !keep.contains(p)));
    let moved = psi.permute_parties(&perm)?;
    let dk: usize = keep.iter().map(|&p| psi.dims[p]).product();
    let rest = moved.amps.len() / dk;
    let a = CMatrix::from_row_slice(dk, rest, &moved.amps);
    let rho = &a * a.adjoint();
    // Symmetrize away roundoff before validation.
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(rho)
}

/// `rho_i = tr_{j != i} |psi><psi|`.
pub fn reduced_density(psi: &StateTensor, party: usize) -> Result<DensityMatrix> {
    partial_trace_keep(psi, &[party])
}

/// Normalized representative of `label` embedded in dims `(2, 2, n)`.
pub fn representative(label: ClassLabel, n: usize) -> Result<StateTensor> {
    if n < label.signature()[2] || n > MAX_MATRIX_DIM {
        return Err(Error::IncompatibleLabel {
            label: label.name(),
            n,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let e = |i: usize, j: usize, k: usize, z: Complex64| (vec![i, j, k], z);
    let entries = match label {
        ClassLabel::Gen224 => vec![
            e(0, 0, 0, one),
            e(0, 1, 1, one),
            e(1, 0, 2, one),
            e(1, 1, 3, one),
        ],
        ClassLabel::C223Gen => vec![
            e(0, 0, 0, one),
            e(0, 1, 1, h),
            e(1, 0, 1, h),
            e(1, 1, 2, one),
        ],
        ClassLabel::C223Deg => vec![e(0, 0, 0, one), e(0, 1, 1, one), e(1, 1, 2, one)],
        ClassLabel::Ghz => vec![e(0, 0, 0, one), e(1, 1, 1, one)],
        ClassLabel::W => vec![e(0, 0, 1, one), e(0, 1, 0, one), e(1, 0, 0, one)],
        ClassLabel::B3 => vec![e(0, 1, 0, one), e(1, 0, 0, one)],
        ClassLabel::B2 => vec![e(0, 0, 1, one), e(1, 0, 0, one)],
        ClassLabel::B1 => vec![e(0, 0, 1, one), e(0, 1, 0, one)],
        ClassLabel::Sep => vec![e(0, 0, 0, one)],
    };
    make_state(&[2, 2, n], &entries)?.normalized()
}
