//! SLOCC invariants of `2 x 2 x n` pure states: local ranks, the magic-basis
//! matrix `R` and `rank(R^T R)`, the hyperdeterminants of formats `2x2x2` and
//! `2x2x3`, concurrence, the 3-tangle, the CKW sharing identity and the count
//! of nonlocal parameters.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, CMatrix, RankDecision, TolerancePolicy};
use crate::tensor::{
    apply_local, flatten, partial_trace_keep, reduced_density, unflatten, DensityMatrix,
    LocalOperation, StateTensor,
};

/// Homogeneity degree of the `2x2x2` hyperdeterminant.
pub const DET222_DEGREE: i32 = 4;
/// Homogeneity degree of the `2x2x3` hyperdeterminant.
pub const DET223_DEGREE: i32 = 6;

const RTR_ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

const ROUTE_TOL: f64 = 1e-10;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The fixed unitary `T` taking the flattened `(AB) x C` matrix to `R = T psi~`.
/// Under `T`, `SL2 x SL2` acts on the rows of `R` as `SO4(C)`.
pub fn magic_basis() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = cx(0.0, 0.0);
    let one = cx(h, 0.0);
    let i = cx(0.0, h);
    CMatrix::from_row_slice(
        4,
        4,
        &[
            one, z, z, one, //
            z, i, i, z, //
            z, -one, one, z, //
            i, z, z, -i,
        ],
    )
}

/// `i sigma_y (x) i sigma_y` in the basis `|00>, |01>, |10>, |11>`.
pub fn sigma_yy() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 3)] = cx(1.0, 0.0);
    m[(1, 2)] = cx(-1.0, 0.0);
    m[(2, 1)] = cx(-1.0, 0.0);
    m[(3, 0)] = cx(1.0, 0.0);
    m
}

/// Sign `s` with `T^T T = s (i sigma_y (x) i sigma_y)`, determined once from the
/// constant `T`. Panics if neither sign fits, which would mean `T` is wrong.
pub fn magic_relation_sign() -> f64 {
    static SIGN: OnceLock<f64> = OnceLock::new();
    *SIGN.get_or_init(|| {
        let t = magic_basis();
        let ttt = t.transpose() * &t;
        let s = sigma_yy();
        for sign in [1.0, -1.0] {
            if (&ttt - &s * cx(sign, 0.0)).norm() < 1e-14 {
                return sign;
            }
        }
        panic!("magic basis self-test failed: T^T T is not +-(i sy x i sy)");
    })
}

/// Local ranks `(r_1, .., r_l)` with the per-party rank decisions of the
/// unfolding route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRanks {
    pub ranks: Vec<usize>,
    pub decisions: Vec<RankDecision>,
}

/// `r_i = rank(rho_i)`, computed from the party-`i` unfolding and, separately,
/// from the spectrum of the reduced density matrix. The two must agree.
pub fn local_ranks(psi: &StateTensor, policy: &TolerancePolicy) -> Result<LocalRanks> {
    let mut ranks = Vec::with_capacity(psi.parties());
    let mut decisions = Vec::with_capacity(psi.parties());
    for party in 0..psi.parties() {
        let unfold = numerics::rank_decision(&psi.unfolding(party)?, policy)?;
        let rho = reduced_density(psi, party)?;
        let via_rho = numerics::psd_rank_decision(&rho.eigenvalues(), rho.dim(), policy);
        if unfold.rank != via_rho.rank {
            return Err(Error::NumericalInstability(format!(
                "party {} local rank: unfolding gives {}, reduced density gives {}",
                party + 1,
                unfold.rank,
                via_rho.rank
            )));
        }
        ranks.push(unfold.rank);
        decisions.push(unfold);
    }
    Ok(LocalRanks { ranks, decisions })
}

/// `R = T psi~` (`4 x n`).
pub fn r_matrix(psi: &StateTensor) -> Result<CMatrix> {
    Ok(magic_basis() * flatten(psi)?)
}

/// `R^T R`, evaluated through `T` and through the `i sigma_y (x) i sigma_y`
/// bilinear form; errors if the two disagree.
pub fn rtr_matrix(psi: &StateTensor) -> Result<CMatrix> {
    let f = flatten(psi)?;
    let r = magic_basis() * &f;
    let via_t = r.transpose() * &r;
    let via_sigma = f.transpose() * sigma_yy() * &f * cx(magic_relation_sign(), 0.0);
    let scale = f.norm_squared().max(1.0);
    let diff = (&via_t - &via_sigma)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if diff > ROUTE_TOL * scale {
        return Err(Error::NumericalInstability(format!(
            "R^T R routes disagree by {diff:e}"
        )));
    }
    Ok(via_t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RtrSpectrum {
    pub rank: usize,
    /// Singular values of `R^T R`, descending.
    pub singular_values: Vec<f64>,
    pub decision: RankDecision,
}

pub fn rank_rtr(psi: &StateTensor, policy: &TolerancePolicy) -> Result<RtrSpectrum> {
    let m = rtr_matrix(psi)?;
    let dec = numerics::svd(&m)?;
    // R^T R is quadratic in the amplitudes: roundoff in its entries is of
    // order eps * |psi~|^2 even when every entry should vanish.
    let amp_scale = numerics::svd(&flatten(psi)?)?.s_max();
    let floor = RTR_ROUNDOFF_FLOOR * m.nrows() as f64 * amp_scale * amp_scale;
    let thr = policy.rank_threshold(dec.s_max(), m.nrows()).max(floor);
    let decision = RankDecision::from_values(&dec.singular_values, thr);
    Ok(RtrSpectrum {
        rank: decision.rank,
        singular_values: dec.singular_values,
        decision,
    })
}

fn amp3(psi: &StateTensor, i: usize, j: usize, k: usize) -> Complex64 {
    psi.amplitudes()[(i * 2 + j) * psi.dims()[2] + k]
}

/// Hyperdeterminant of format `2x2x2`, as the literal degree-4 polynomial.
pub fn det222(psi: &StateTensor) -> Result<Complex64> {
    if psi.dims() != [2, 2, 2] {
        return Err(Error::WrongFormat {
            expected: "2 x 2 x 2",
            dims: psi.dims().to_vec(),
        });
    }
    let p = |i, j, k| amp3(psi, i, j, k);
    let (p000, p001, p010, p011) = (p(0, 0, 0), p(0, 0, 1), p(0, 1, 0), p(0, 1, 1));
    let (p100, p101, p110, p111) = (p(1, 0, 0), p(1, 0, 1), p(1, 1, 0), p(1, 1, 1));

    let squares = p000 * p000 * p111 * p111
        + p001 * p001 * p110 * p110
        + p010 * p010 * p101 * p101
        + p100 * p100 * p011 * p011;
    let cross = p000 * p001 * p110 * p111
        + p000 * p010 * p101 * p111
        + p000 * p100 * p011 * p111
        + p001 * p010 * p101 * p110
        + p001 * p100 * p011 * p110
        + p010 * p100 * p011 * p101;
    let quartic = p000 * p011 * p101 * p110 + p001 * p010 * p100 * p111;
    Ok(squares - cross * 2.0 + quartic * 4.0)
}

fn det3(rows: [[Complex64; 3]; 3]) -> Complex64 {
    let [a, b, c] = rows;
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Hyperdeterminant of format `2x2x3`: a difference of two products of
/// `3x3` determinants built from the rows `psi_{ij.}`.
pub fn det223(psi: &StateTensor) -> Result<Complex64> {
    if psi.dims() != [2, 2, 3] {
        return Err(Error::WrongFormat {
            expected: "2 x 2 x 3",
            dims: psi.dims().to_vec(),
        });
    }
    let row = |i, j| [amp3(psi, i, j, 0), amp3(psi, i, j, 1), amp3(psi, i, j, 2)];
    let (r00, r01, r10, r11) = (row(0, 0), row(0, 1), row(1, 0), row(1, 1));
    Ok(det3([r00, r01, r10]) * det3([r01, r10, r11])
        - det3([r00, r01, r11]) * det3([r00, r10, r11]))
}

/// Scale-free zero test `|det| <= det_rel_eps * |psi|^degree`.
pub fn det_is_zero(det: Complex64, norm: f64, degree: i32, policy: &TolerancePolicy) -> bool {
    det.norm() <= policy.det_threshold(norm, degree)
}

/// Rotate Clare's space so the state is supported on her first `r_3` levels,
/// then truncate (or zero-pad) to `target` levels.
///
/// Returns the reformatted state and the invertible Clare rotation that was
/// applied before truncation. If the state already lives on the first
/// `target` levels the rotation is the identity.
pub fn adjust_format(
    psi: &StateTensor,
    target: usize,
    policy: &TolerancePolicy,
) -> Result<(StateTensor, LocalOperation)> {
    let f = flatten(psi)?;
    let n = f.ncols();
    let rank = numerics::numerical_rank(&f, policy)?;
    if target < rank {
        return Err(Error::RankTooLarge { target, rank });
    }
    if target == 0 || target > numerics::MAX_MATRIX_DIM {
        return Err(Error::InvalidDims {
            dims: vec![2, 2, target],
            reason: "target must lie in 1..=16".into(),
        });
    }
    let tail_is_zero = (target.min(n)..n).all(|j| f.column(j).iter().all(|z| z.norm() == 0.0));
    let (rotated, op) = if tail_is_zero {
        (f, LocalOperation::identity(psi.dims()))
    } else {
        // psi~ -> psi~ M3^T with M3^T = V puts psi~ V = U S on the leading columns.
        let v = numerics::svd(&f)?.v;
        let op = LocalOperation::on_party(psi.dims(), 2, v.transpose())?;
        (flatten(&apply_local(&op, psi)?)?, op)
    };
    let mut out = CMatrix::zeros(4, target);
    for j in 0..target.min(n) {
        out.set_column(j, &rotated.column(j));
    }
    Ok((unflatten(&out)?, op))
}

/// Concurrence spectrum: square roots of the eigenvalues of
/// `rho (sy x sy) rho* (sy x sy)`, descending. Evaluated as the singular
/// values of `sqrt(rho) (sy x sy) sqrt(rho)*`, which has the same spectrum.
pub fn concurrence_spectrum(rho: &DensityMatrix) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::NotDensityMatrix(format!(
            "concurrence needs a two-qubit (4x4) density matrix, got {}x{}",
            rho.dim(),
            rho.dim()
        )));
    }
    let sq = rho.sqrt();
    let x = &sq * sigma_yy() * sq.map(|z| z.conj());
    let s = numerics::svd(&x)?.singular_values;
    Ok([s[0], s[1], s[2], s[3]])
}

/// Two-qubit concurrence `max(s0 - s1 - s2 - s3, 0)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let s = concurrence_spectrum(rho)?;
    Ok((s[0] - s[1] - s[2] - s[3]).max(0.0))
}

/// Concurrence of the reduced state of qubit parties `a` and `b`.
pub fn pair_concurrence(psi: &StateTensor, a: usize, b: usize) -> Result<f64> {
    for p in [a, b] {
        if psi.dims().get(p) != Some(&2) {
            return Err(Error::WrongFormat {
                expected: "qubit parties",
                dims: psi.dims().to_vec(),
            });
        }
    }
    concurrence(&partial_trace_keep(psi, &[a, b])?)
}

/// `tau = 4 |Det222|` of a normalized three-qubit state.
pub fn three_tangle(psi: &StateTensor) -> Result<f64> {
    if !psi.is_normalized() {
        return Err(Error::Unnormalized {
            norm_sqr: psi.norm_sqr(),
        });
    }
    Ok(4.0 * det222(psi)?.norm())
}

/// Terms of the sharing identity `C_(12)3^2 = C_13^2 + C_23^2 + tau`.
///
/// The left side is the tangle between Clare and the pair (12), computed for
/// a pure state as `4 det(rho_3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CkwReport {
    pub lhs: f64,
    pub c13_sq: f64,
    pub c23_sq: f64,
    pub tau: f64,
    pub residual: f64,
}

pub fn ckw_residual(psi: &StateTensor) -> Result<CkwReport> {
    if psi.dims() != [2, 2, 2] {
        return Err(Error::WrongFormat {
            expected: "2 x 2 x 2",
            dims: psi.dims().to_vec(),
        });
    }
    let rho3 = reduced_density(psi, 2)?;
    let lhs = 4.0 * numerics::determinant(rho3.matrix())?.re;
    let c13 = pair_concurrence(psi, 0, 2)?;
    let c23 = pair_concurrence(psi, 1, 2)?;
    let tau = three_tangle(psi)?;
    let (c13_sq, c23_sq) = (c13 * c13, c23 * c23);
    Ok(CkwReport {
        lhs,
        c13_sq,
        c23_sq,
        tau,
        residual: lhs - c13_sq - c23_sq - tau,
    })
}

/// Number of nonlocal complex parameters of the generic orbit,
/// `(prod k_i - 1) - sum (k_i^2 - 1) + delta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionCount {
    pub dims: Vec<usize>,
    /// Dimension of the stabilizer of the generic point (caller supplied).
    pub delta: usize,
    pub raw: i64,
    /// `max(raw, 0)`.
    pub result: usize,
}

pub fn nonlocal_dimension(dims: &[usize], delta: usize) -> DimensionCount {
    let prod: i64 = dims.iter().map(|&k| k as i64).product();
    let group: i64 = dims.iter().map(|&k| (k * k) as i64 - 1).sum();
    let raw = (prod - 1) - group + delta as i64;
    DimensionCount {
        dims: dims.to_vec(),
        delta,
        raw,
        result: raw.max(0) as usize,
    }
}

/// Stabilizer dimensions known for the formats discussed here.
pub fn known_stabilizer_dim(dims: &[usize]) -> Option<usize> {
    match dims {
        [2, 2, 2, 2] => Some(0),
        [2, 2, 4] => Some(6),
        [k, l] if k == l => Some(k * k - 1),
        _ => None,
    }
}

/// All invariants of a `(2, 2, n)` state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub dims: Vec<usize>,
    /// Norm of the input before normalization.
    pub norm: f64,
    pub local_ranks: [usize; 3],
    pub local_rank_decisions: Vec<RankDecision>,
    pub rank_rtr: usize,
    pub rtr_singular_values: Vec<f64>,
    pub rtr_decision: RankDecision,
    /// Present when `r_3 <= 3` (evaluated on the normalized state adjusted to `2x2x3`).
    #[serde(serialize_with = "crate::serde_util::option_complex")]
    pub det223: Option<Complex64>,
    /// Present when `r_3 <= 2` (evaluated on the normalized state adjusted to `2x2x2`).
    #[serde(serialize_with = "crate::serde_util::option_complex")]
    pub det222: Option<Complex64>,
    pub det223_threshold: f64,
    pub det222_threshold: f64,
    pub tolerances: TolerancePolicy,
}

impl InvariantReport {
    pub fn det223_is_zero(&self) -> Option<bool> {
        self.det223.map(|d| d.norm() <= self.det223_threshold)
    }

    pub fn det222_is_zero(&self) -> Option<bool> {
        self.det222.map(|d| d.norm() <= self.det222_threshold)
    }
}

pub fn invariant_report(psi: &StateTensor, policy: &TolerancePolicy) -> Result<InvariantReport> {
    flatten(psi)?;
    let norm = psi.norm();
    let unit = psi.normalized()?;
    let lr = local_ranks(&unit, policy)?;
    let ranks = [lr.ranks[0], lr.ranks[1], lr.ranks[2]];
    let rtr = rank_rtr(&unit, policy)?;
    let r3 = ranks[2];
    let det223 = if r3 <= 3 {
        Some(det223(&adjust_format(&unit, 3, policy)?.0)?)
    } else {
        None
    };
    let det222 = if r3 <= 2 {
        Some(det222(&adjust_format(&unit, 2, policy)?.0)?)
    } else {
        None
    };
    Ok(InvariantReport {
        dims: psi.dims().to_vec(),
        norm,
        local_ranks: ranks,
        local_rank_decisions: lr.decisions,
        rank_rtr: rtr.rank,
        rtr_singular_values: rtr.singular_values,
        rtr_decision: rtr.decision,
        det223,
        det222,
        det223_threshold: policy.det_threshold(1.0, DET223_DEGREE),
        det222_threshold: policy.det_threshold(1.0, DET222_DEGREE),
        tolerances: *policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ClassLabel;
    use crate::numerics::{random_sl, random_state, RandomSource};
    use crate::tensor::{make_state, representative};

    fn c(re: f64) -> Complex64 {
        cx(re, 0.0)
    }

    fn state(dims: &[usize], idx: &[[usize; 3]]) -> StateTensor {
        let entries: Vec<_> = idx.iter().map(|i| (i.to_vec(), c(1.0))).collect();
        make_state(dims, &entries).unwrap()
    }

    fn p() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn magic_basis_properties() {
        let t = magic_basis();
        assert!(numerics::unitarity_defect(&t) < 1e-15);
        assert_eq!(magic_relation_sign(), 1.0);
        // Bell states map to real vectors.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bells = [
            [h, 0.0, 0.0, h],
            [h, 0.0, 0.0, -h],
            [0.0, h, h, 0.0],
            [0.0, h, -h, 0.0],
        ];
        for b in bells {
            let v = nalgebra::DVector::from_iterator(4, b.iter().map(|&x| c(x)));
            let w = &t * v;
            // Real up to one global phase.
            let k = w
                .iter()
                .map(|z| z.norm())
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            let phase = w[k] / w[k].norm();
            assert!(w.iter().all(|z| (z / phase).im.abs() < 1e-15));
        }
    }

    #[test]
    fn local_rank_examples() {
        let ghz = representative(ClassLabel::Ghz, 2).unwrap();
        assert_eq!(local_ranks(&ghz, &p()).unwrap().ranks, vec![2, 2, 2]);
        let b1 = state(&[2, 2, 2], &[[0, 0, 1], [0, 1, 0]])
            .normalized()
            .unwrap();
        assert_eq!(local_ranks(&b1, &p()).unwrap().ranks, vec![1, 2, 2]);
        let gen = representative(ClassLabel::Gen224, 4).unwrap();
        assert_eq!(local_ranks(&gen, &p()).unwrap().ranks, vec![2, 2, 4]);
    }

    #[test]
    fn r_matrix_examples() {
        let two_bell = representative(ClassLabel::Gen224, 4)
            .unwrap()
            .scaled(c(2.0));
        assert!((r_matrix(&two_bell).unwrap() - magic_basis()).norm() < 1e-15);

        let ghz = representative(ClassLabel::Ghz, 2).unwrap();
        let r = r_matrix(&ghz).unwrap();
        let t = magic_basis();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.column(0) - t.column(0) * c(h)).norm() < 1e-15);
        assert!((r.column(1) - t.column(3) * c(h)).norm() < 1e-15);

        let mut rng = RandomSource::new(1, 0);
        for n in 1..6 {
            let psi = random_state(&[2, 2, n], &mut rng).unwrap().scaled(c(1.7));
            let f = flatten(&psi).unwrap();
            assert!((r_matrix(&psi).unwrap().norm() - f.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_rtr_examples() {
        let gen = representative(ClassLabel::Gen224, 4).unwrap();
        assert_eq!(rank_rtr(&gen, &p()).unwrap().rank, 4);
        let w = representative(ClassLabel::W, 2).unwrap();
        assert_eq!(rank_rtr(&w, &p()).unwrap().rank, 1);
        let b2 = state(&[2, 2, 2], &[[0, 0, 1], [1, 0, 0]])
            .normalized()
            .unwrap();
        assert_eq!(rank_rtr(&b2, &p()).unwrap().rank, 0);
    }

    #[test]
    fn det222_examples() {
        let ghz = representative(ClassLabel::Ghz, 2).unwrap();
        assert!((det222(&ghz).unwrap() - c(0.25)).norm() < 1e-15);
        let w = representative(ClassLabel::W, 2).unwrap();
        assert_eq!(det222(&w).unwrap(), c(0.0));
        let psi = state(&[2, 2, 2], &[[0, 0, 0], [0, 1, 1], [1, 1, 1]]);
        assert_eq!(det222(&psi).unwrap(), c(1.0));
        assert!(det222(&representative(ClassLabel::Ghz, 3).unwrap()).is_err());
    }

    #[test]
    fn det223_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let gen = make_state(
            &[2, 2, 3],
            &[
                (vec![0, 0, 0], c(1.0)),
                (vec![0, 1, 1], c(h)),
                (vec![1, 0, 1], c(h)),
                (vec![1, 1, 2], c(1.0)),
            ],
        )
        .unwrap();
        assert!((det223(&gen).unwrap() - c(-0.5)).norm() < 1e-15);
        let deg = representative(ClassLabel::C223Deg, 3).unwrap();
        assert_eq!(det223(&deg).unwrap(), c(0.0));
        let ghz3 = representative(ClassLabel::Ghz, 3).unwrap();
        assert_eq!(det223(&ghz3).unwrap(), c(0.0));
    }

    #[test]
    fn adjust_format_examples() {
        let ghz4 = representative(ClassLabel::Ghz, 4).unwrap();
        let (ghz2, op) = adjust_format(&ghz4, 2, &p()).unwrap();
        assert!(op.is_invertible());
        assert_eq!(ghz2, representative(ClassLabel::Ghz, 2).unwrap());
        assert!((det222(&ghz2).unwrap().norm() - 0.25).abs() < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let gen4 = make_state(
            &[2, 2, 4],
            &[
                (vec![0, 0, 0], c(1.0)),
                (vec![0, 1, 1], c(h)),
                (vec![1, 0, 1], c(h)),
                (vec![1, 1, 2], c(1.0)),
            ],
        )
        .unwrap();
        // Rotate Clare so the support is spread across all four levels.
        let mut rng = RandomSource::new(8, 0);
        let u = numerics::random_unitary(4, &mut rng);
        let spread =
            apply_local(&LocalOperation::on_party(&[2, 2, 4], 2, u).unwrap(), &gen4).unwrap();
        let (adj, op) = adjust_format(&spread, 3, &p()).unwrap();
        assert!(op.is_invertible());
        assert!((det223(&adj).unwrap().norm() - 0.5).abs() < 1e-12);

        let generic = random_state(&[2, 2, 4], &mut rng).unwrap();
        assert!(matches!(
            adjust_format(&generic, 3, &p()),
            Err(Error::RankTooLarge { target: 3, rank: 4 })
        ));

        // Padding to a larger format.
        let b3 = representative(ClassLabel::B3, 1).unwrap();
        let (padded, _) = adjust_format(&b3, 3, &p()).unwrap();
        assert_eq!(padded.dims(), &[2, 2, 3]);
    }

    fn bell_phi_plus() -> DensityMatrix {
        let psi = make_state(&[2, 2], &[(vec![0, 0], c(1.0)), (vec![1, 1], c(1.0))])
            .unwrap()
            .normalized()
            .unwrap();
        DensityMatrix::pure(&psi).unwrap()
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&bell_phi_plus()).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::new(CMatrix::identity(4, 4) * c(0.25)).unwrap();
        let s = concurrence_spectrum(&mixed).unwrap();
        assert!(s.iter().all(|x| (x - 0.25).abs() < 1e-12));
        assert_eq!(concurrence(&mixed).unwrap(), 0.0);
        let prod =
            DensityMatrix::pure(&make_state(&[2, 2], &[(vec![0, 0], c(1.0))]).unwrap()).unwrap();
        assert!(concurrence(&prod).unwrap().abs() < 1e-12);
        let qutrit = DensityMatrix::new(CMatrix::identity(3, 3) * c(1.0 / 3.0)).unwrap();
        assert!(concurrence(&qutrit).is_err());
    }

    /// Oracle for a pure two-qubit state: `|<psi| sy x sy |psi*>|`.
    fn pure_state_concurrence(psi: &StateTensor) -> f64 {
        let v = flatten(psi).unwrap();
        let col = v.column(0);
        (col.transpose() * sigma_yy() * col)[(0, 0)].norm()
    }

    /// Oracle for a mixed two-qubit state: square roots of the eigenvalues of
    /// the Hermitian matrix `sqrt(rho) sy rho* sy sqrt(rho)` computed by
    /// `nalgebra`'s own eigensolver from the defining product.
    fn mixed_state_concurrence(rho: &DensityMatrix) -> f64 {
        let s = sigma_yy();
        let e = rho.matrix().clone().symmetric_eigen();
        let q = &e.eigenvectors;
        let d = CMatrix::from_diagonal(&e.eigenvalues.map(|l| cx(l.max(0.0).sqrt(), 0.0)));
        let sq = q * d * q.adjoint();
        let h = &sq * &s * rho.matrix().map(|z| z.conj()) * &s * &sq;
        let h = (&h + h.adjoint()) * cx(0.5, 0.0);
        let mut roots: Vec<f64> = h
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        roots.sort_by(|a, b| b.total_cmp(a));
        (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
    }

    #[test]
    fn concurrence_matches_closed_forms_and_purification() {
        let mut rng = RandomSource::new(21, 0);
        for trial in 0..300 {
            let n = 1 + trial % 4;
            let psi = random_state(&[2, 2, n], &mut rng).unwrap();
            let rho = partial_trace_keep(&psi, &[0, 1]).unwrap();
            let spectrum = concurrence_spectrum(&rho).unwrap();
            let c_val = concurrence(&rho).unwrap();
            if n == 1 {
                assert!(
                    (c_val - pure_state_concurrence(&psi)).abs() < 1e-12,
                    "trial {trial}"
                );
            }
            if n == 4 {
                // Full-rank rho: the eigenvalue route is well conditioned.
                assert!(
                    (c_val - mixed_state_concurrence(&rho)).abs() < 1e-7,
                    "trial {trial}"
                );
            }
            // Purification: the same spectrum is the singular values of R^T R.
            let rtr = rank_rtr(&psi, &p()).unwrap().singular_values;
            for (i, s) in spectrum.iter().enumerate() {
                let expected = rtr.get(i).copied().unwrap_or(0.0);
                assert!(
                    (s - expected).abs() < 1e-9,
                    "trial {trial}: {spectrum:?} vs {rtr:?}"
                );
            }
        }
    }

    #[test]
    fn three_tangle_examples() {
        assert!(
            (three_tangle(&representative(ClassLabel::Ghz, 2).unwrap()).unwrap() - 1.0).abs()
                < 1e-14
        );
        assert_eq!(
            three_tangle(&representative(ClassLabel::W, 2).unwrap()).unwrap(),
            0.0
        );
        let b3 = representative(ClassLabel::B3, 2).unwrap();
        assert_eq!(three_tangle(&b3).unwrap(), 0.0);
    }

    #[test]
    fn ckw_examples() {
        let g = ckw_residual(&representative(ClassLabel::Ghz, 2).unwrap()).unwrap();
        assert!((g.lhs - 1.0).abs() < 1e-12 && g.c13_sq.abs() < 1e-12 && g.c23_sq.abs() < 1e-12);
        assert!((g.tau - 1.0).abs() < 1e-12 && g.residual.abs() < 1e-12);

        let w = ckw_residual(&representative(ClassLabel::W, 2).unwrap()).unwrap();
        assert!((w.lhs - 8.0 / 9.0).abs() < 1e-12);
        assert!((w.c13_sq - 4.0 / 9.0).abs() < 1e-12);
        assert!((w.c23_sq - 4.0 / 9.0).abs() < 1e-12);
        assert!(w.tau.abs() < 1e-12 && w.residual.abs() < 1e-12);

        let s = ckw_residual(&representative(ClassLabel::Sep, 2).unwrap()).unwrap();
        for v in [s.lhs, s.c13_sq, s.c23_sq, s.tau, s.residual] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_count_examples() {
        assert_eq!(nonlocal_dimension(&[2, 2, 2, 2], 0).raw, 3);
        let d = nonlocal_dimension(&[2, 2, 4], 6);
        assert_eq!((d.raw, d.result), (0, 0));
        for k in 2..6 {
            assert_eq!(nonlocal_dimension(&[k, k], k * k - 1).raw, 0);
        }
        let neg = nonlocal_dimension(&[2, 2, 4], 0);
        assert_eq!((neg.raw, neg.result), (-6, 0));
        assert_eq!(known_stabilizer_dim(&[2, 2, 4]), Some(6));
        assert_eq!(known_stabilizer_dim(&[2, 2, 3]), None);
    }

    #[test]
    fn hyperdeterminants_are_sl_invariant() {
        let mut rng = RandomSource::new(31, 0);
        for (label, n) in [(ClassLabel::Ghz, 2), (ClassLabel::C223Gen, 3)] {
            let psi = representative(label, n).unwrap();
            let before = if n == 2 { det222(&psi) } else { det223(&psi) }
                .unwrap()
                .norm();
            for _ in 0..1000 {
                let op = LocalOperation::new(vec![
                    random_sl(2, &mut rng).unwrap(),
                    random_sl(2, &mut rng).unwrap(),
                    random_sl(n, &mut rng).unwrap(),
                ])
                .unwrap();
                let out = apply_local(&op, &psi).unwrap();
                let after = if n == 2 { det222(&out) } else { det223(&out) }
                    .unwrap()
                    .norm();
                assert!(
                    (after - before).abs() <= 1e-9 * before,
                    "{label:?}: {before} -> {after}"
                );
            }
        }
    }

    #[test]
    fn ranks_invariant_under_invertible_operations() {
        let mut rng = RandomSource::new(32, 0);
        for label in ClassLabel::ALL {
            let psi = representative(label, 4).unwrap();
            let r0 = local_ranks(&psi, &p()).unwrap().ranks;
            let t0 = rank_rtr(&psi, &p()).unwrap().rank;
            for _ in 0..1000 {
                let op = LocalOperation::new(vec![
                    random_sl(2, &mut rng).unwrap(),
                    random_sl(2, &mut rng).unwrap(),
                    random_sl(4, &mut rng).unwrap(),
                ])
                .unwrap();
                let out = apply_local(&op, &psi).unwrap().normalized().unwrap();
                assert_eq!(local_ranks(&out, &p()).unwrap().ranks, r0, "{label:?}");
                assert_eq!(rank_rtr(&out, &p()).unwrap().rank, t0, "{label:?}");
            }
        }
    }

    #[test]
    fn rtr_routes_agree_on_representatives() {
        let s = sigma_yy();
        for label in ClassLabel::ALL {
            let psi = representative(label, 4).unwrap();
            let f = flatten(&psi).unwrap();
            let via_sigma = f.transpose() * &s * &f;
            let a = numerics::numerical_rank(&via_sigma, &p()).unwrap();
            assert_eq!(a, rank_rtr(&psi, &p()).unwrap().rank, "{label:?}");
        }
    }

    #[test]
    fn ckw_identity_on_random_states() {
        let mut rng = RandomSource::new(33, 0);
        for _ in 0..2000 {
            let psi = random_state(&[2, 2, 2], &mut rng).unwrap();
            let r = ckw_residual(&psi).unwrap();
            assert!(r.residual.abs() < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn w_state_bounds_pairwise_sum() {
        let mut rng = RandomSource::new(34, 0);
        for _ in 0..2000 {
            let psi = random_state(&[2, 2, 2], &mut rng).unwrap();
            let sum: f64 = [(0, 1), (1, 2), (0, 2)]
                .iter()
                .map(|&(a, b)| pair_concurrence(&psi, a, b).unwrap().powi(2))
                .sum();
            assert!(sum <= 4.0 / 3.0 + 1e-6);
        }
        let w = representative(ClassLabel::W, 2).unwrap();
        let sum: f64 = [(0, 1), (1, 2), (0, 2)]
            .iter()
            .map(|&(a, b)| pair_concurrence(&w, a, b).unwrap().powi(2))
            .sum();
        assert!((sum - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn scale_covariance() {
        let mut rng = RandomSource::new(35, 0);
        let z = cx(0.7, -1.3);
        let psi2 = random_state(&[2, 2, 2], &mut rng).unwrap();
        let psi3 = random_state(&[2, 2, 3], &mut rng).unwrap();
        let d2 = det222(&psi2.scaled(z)).unwrap() - det222(&psi2).unwrap() * z.powi(4);
        let d3 = det223(&psi3.scaled(z)).unwrap() - det223(&psi3).unwrap() * z.powi(6);
        assert!(d2.norm() < 1e-13 && d3.norm() < 1e-13);
    }

    #[test]
    fn invariant_report_columns() {
        let r = invariant_report(&representative(ClassLabel::Gen224, 4).unwrap(), &p()).unwrap();
        assert_eq!(r.local_ranks, [2, 2, 4]);
        assert!(r.det222.is_none() && r.det223.is_none());
        let r = invariant_report(&representative(ClassLabel::C223Gen, 5).unwrap(), &p()).unwrap();
        assert_eq!(r.det223_is_zero(), Some(false));
        assert!(r.det222.is_none());
        let r = invariant_report(&representative(ClassLabel::B3, 1).unwrap(), &p()).unwrap();
        assert_eq!(r.det223_is_zero(), Some(true));
        assert_eq!(r.det222_is_zero(), Some(true));
    }
}
