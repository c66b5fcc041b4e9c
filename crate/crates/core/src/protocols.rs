//! Local protocols starting from two Bell pairs shared as Alice-Clare and
//! Bob-Clare: entanglement swapping by a Bell measurement on Clare's two
//! qubits, and distillation of GHZ, W and Alice-Bob Bell states.
//!
//! Clare's four levels encode her two qubits as `2 c1 + c2`, where `c1` is
//! paired with Alice and `c2` with Bob.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::classify::{classify, reachable, ClassLabel};
use crate::error::{Error, Result};
use crate::invariants::{pair_concurrence, three_tangle};
use crate::numerics::{CMatrix, TolerancePolicy};
use crate::tensor::{apply_local, partial_trace_keep, representative, LocalOperation, StateTensor};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(|000> + |011> + |102> + |113>) / 2` in dims `(2, 2, 4)`.
pub fn two_bell() -> StateTensor {
    representative(ClassLabel::Gen224, 4).expect("the generic representative exists for n = 4")
}

/// Bell vectors on Clare's two qubits, in the order
/// `(|00>+|11>)`, `(|00>-|11>)`, `(|01>+|10>)`, `(|01>-|10>)`, each over sqrt 2.
pub fn bell_basis() -> [[Complex64; 4]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = re(0.0);
    [
        [re(h), z, z, re(h)],
        [re(h), z, z, re(-h)],
        [z, re(h), re(h), z],
        [z, re(h), re(-h), z],
    ]
}

pub const BELL_BRANCHES: [&str; 4] = ["phi+", "phi-", "psi+", "psi-"];

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
}

fn id(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolOutcome {
    pub branch: String,
    pub probability: f64,
    /// Normalized state after the branch operator (before recovery).
    pub post_state: StateTensor,
    pub post_class: ClassLabel,
    /// Local unitaries applied after the branch.
    pub recovery: Option<LocalOperation>,
    pub recovery_description: String,
    /// Alice-Bob concurrence of the post state.
    pub ab_concurrence: f64,
    /// Three-tangle of the recovered state when it is a three-qubit state.
    pub three_tangle: Option<f64>,
    /// Overlap `|<target|recovered>|^2` with the branch's target state.
    pub target_fidelity: f64,
}

fn fidelity(a: &StateTensor, b: &StateTensor) -> Result<f64> {
    let ov = a.inner(b)?.norm();
    Ok(ov * ov / (a.norm_sqr() * b.norm_sqr()))
}

/// Apply `branch_op` to the two-Bell state and record the normalized result.
fn run_branch(
    branch: &str,
    branch_op: &LocalOperation,
    recovery: Option<(LocalOperation, &str)>,
    target: &StateTensor,
) -> Result<ProtocolOutcome> {
    let initial = two_bell();
    let raw = apply_local(branch_op, &initial)?;
    let probability = raw.norm_sqr();
    let post_state = raw.normalized()?;
    let policy = TolerancePolicy::default();
    let post_class = classify(&post_state, &policy)?.label;
    debug_assert!(reachable(ClassLabel::Gen224, post_class));
    let (recovered, recovery, recovery_description) = match recovery {
        Some((op, text)) => (apply_local(&op, &post_state)?, Some(op), text.to_string()),
        None => (post_state.clone(), None, "none".to_string()),
    };
    let three_tangle = if recovered.dims() == [2, 2, 2] {
        Some(three_tangle(&recovered.normalized()?)?)
    } else {
        None
    };
    Ok(ProtocolOutcome {
        branch: branch.to_string(),
        probability,
        ab_concurrence: pair_concurrence(&post_state, 0, 1)?,
        post_class,
        post_state,
        recovery,
        recovery_description,
        three_tangle,
        target_fidelity: fidelity(target, &recovered)?,
    })
}

/// Alice-Bob `(|00> + |11>) / sqrt 2` with Clare in `clare`.
fn phi_plus_ab_with(clare: &[Complex64; 4]) -> StateTensor {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![re(0.0); 16];
    for (ab, coeff) in [(0usize, h), (3, h)] {
        for (c, z) in clare.iter().enumerate() {
            amps[ab * 4 + c] = z * coeff;
        }
    }
    StateTensor::from_amplitudes(vec![2, 2, 4], amps).expect("nonzero state")
}

/// Clare's Bell measurement: four branches, each followed by the Pauli
/// correction that turns the Alice-Bob pair into `(|00> + |11>) / sqrt 2`.
pub fn entanglement_swap() -> Result<Vec<ProtocolOutcome>> {
    let corrections: [(CMatrix, CMatrix, &str); 4] = [
        (id(2), id(2), "identity"),
        (pauli_z(), id(2), "Z on Alice"),
        (id(2), pauli_x(), "X on Bob"),
        (pauli_z(), pauli_x(), "X on Bob, then Z on Alice"),
    ];
    bell_basis()
        .iter()
        .zip(BELL_BRANCHES)
        .zip(corrections)
        .map(|((phi, name), (ra, rb, text))| {
            let v = CMatrix::from_column_slice(4, 1, phi);
            let projector = &v * v.adjoint();
            let op = LocalOperation::new(vec![id(2), id(2), projector])?;
            let recovery = LocalOperation::new(vec![ra, rb, id(4)])?;
            run_branch(name, &op, Some((recovery, text)), &phi_plus_ab_with(phi))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistillTarget {
    #[serde(rename = "GHZ")]
    Ghz,
    W,
    #[serde(rename = "BELL_AB")]
    BellAb,
}

impl DistillTarget {
    pub const ALL: [DistillTarget; 3] =
        [DistillTarget::Ghz, DistillTarget::W, DistillTarget::BellAb];

    pub fn name(self) -> &'static str {
        match self {
            DistillTarget::Ghz => "GHZ",
            DistillTarget::W => "W",
            DistillTarget::BellAb => "BELL_AB",
        }
    }

    /// Class the protocol output must land in.
    pub fn class(self) -> ClassLabel {
        match self {
            DistillTarget::Ghz => ClassLabel::Ghz,
            DistillTarget::W => ClassLabel::W,
            DistillTarget::BellAb => ClassLabel::B3,
        }
    }
}

impl fmt::Display for DistillTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistillTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "GHZ" => Ok(DistillTarget::Ghz),
            "W" => Ok(DistillTarget::W),
            "BELL_AB" | "BELL" => Ok(DistillTarget::BellAb),
            _ => Err(Error::UnknownTarget(s.to_string())),
        }
    }
}

/// `2 x 4` Clare map from `(row, col, value)` entries.
fn clare_map(entries: &[(usize, usize, f64)]) -> CMatrix {
    let mut m = CMatrix::zeros(2, 4);
    for &(r, c, v) in entries {
        m[(r, c)] = re(v);
    }
    m
}

/// `|0><00| + |1><11|` on Clare.
fn ghz_branch_map() -> CMatrix {
    clare_map(&[(0, 0, 1.0), (1, 3, 1.0)])
}

/// `|0><01| + |1><10|` on Clare; completes [`ghz_branch_map`] to a POVM.
fn ghz_complement_map() -> CMatrix {
    clare_map(&[(0, 1, 1.0), (1, 2, 1.0)])
}

/// `(|1><00| + |0><01| + |0><10|) / sqrt 2` on Clare; a contraction.
fn w_branch_map() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    clare_map(&[(1, 0, h), (0, 1, h), (0, 2, h)])
}

/// One successful branch of a Clare-side operation taking the two-Bell
/// state into `target`'s class.
///
/// GHZ: probability 1/2. W: probability 3/8, output exactly the W
/// representative. BELL_AB: the `phi+` branch of the Bell measurement,
/// probability 1/4.
pub fn distill_from_generic(target: DistillTarget) -> Result<ProtocolOutcome> {
    match target {
        DistillTarget::Ghz => {
            let op = LocalOperation::new(vec![id(2), id(2), ghz_branch_map()])?;
            run_branch("ghz", &op, None, &representative(ClassLabel::Ghz, 2)?)
        }
        DistillTarget::W => {
            let op = LocalOperation::new(vec![id(2), id(2), w_branch_map()])?;
            run_branch("w", &op, None, &representative(ClassLabel::W, 2)?)
        }
        DistillTarget::BellAb => Ok(entanglement_swap()?.remove(0)),
    }
}

/// Both branches of a complete two-outcome Clare POVM that yields the GHZ
/// representative with certainty after a Pauli correction.
pub fn distill_ghz_deterministic() -> Result<Vec<ProtocolOutcome>> {
    let ghz = representative(ClassLabel::Ghz, 2)?;
    let first = LocalOperation::new(vec![id(2), id(2), ghz_branch_map()])?;
    let second = LocalOperation::new(vec![id(2), id(2), ghz_complement_map()])?;
    let fix = LocalOperation::new(vec![id(2), pauli_x(), id(2)])?;
    Ok(vec![
        run_branch("00/11", &first, None, &ghz)?,
        run_branch("01/10", &second, Some((fix, "X on Bob")), &ghz)?,
    ])
}

/// `M1^dag M1 + M2^dag M2 - I` for Clare's GHZ POVM, as the largest entry modulus.
pub fn ghz_povm_completeness_residual() -> f64 {
    let (a, b) = (ghz_branch_map(), ghz_complement_map());
    let s = a.adjoint() * a + b.adjoint() * b;
    (s - id(4)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Alice-Bob reduced state fidelity with `(|00> + |11>) / sqrt 2` after recovery.
pub fn ab_bell_fidelity(outcome: &ProtocolOutcome) -> Result<f64> {
    let recovered = match &outcome.recovery {
        Some(op) => apply_local(op, &outcome.post_state)?.normalized()?,
        None => outcome.post_state.clone(),
    };
    let rho = partial_trace_keep(&recovered, &[0, 1])?;
    let m = rho.matrix();
    let h = 0.5;
    Ok((h * (m[(0, 0)] + m[(0, 3)] + m[(3, 0)] + m[(3, 3)])).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::local_ranks;
    use crate::monotone::{apply_povm, PovmPair};
    use crate::tensor::reduced_density;

    #[test]
    fn two_bell_is_generic() {
        let psi = two_bell();
        let p = TolerancePolicy::default();
        assert_eq!(classify(&psi, &p).unwrap().label, ClassLabel::Gen224);
        assert_eq!(local_ranks(&psi, &p).unwrap().ranks, vec![2, 2, 4]);
        let rho = reduced_density(&psi, 2).unwrap();
        let quarter = id(4) * re(0.25);
        assert!((rho.matrix() - quarter).norm() < 1e-15);
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        let b = bell_basis();
        for (i, u) in b.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                let ip: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - re(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn swapping_branches() {
        let out = entanglement_swap().unwrap();
        assert_eq!(out.len(), 4);
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for o in &out {
            assert!((o.probability - 0.25).abs() < 1e-12, "{}", o.branch);
            assert_eq!(o.post_class, ClassLabel::B3);
            assert!((o.ab_concurrence - 1.0).abs() < 1e-10);
            assert!((o.target_fidelity - 1.0).abs() < 1e-12, "{}", o.branch);
            assert!((ab_bell_fidelity(o).unwrap() - 1.0).abs() < 1e-12);
            assert!(reachable(ClassLabel::Gen224, o.post_class));
        }
    }

    #[test]
    fn distillation_targets() {
        for t in DistillTarget::ALL {
            let o = distill_from_generic(t).unwrap();
            assert_eq!(o.post_class, t.class(), "{t}");
            assert!((o.target_fidelity - 1.0).abs() < 1e-12, "{t}");
            assert!(o.post_class.grade() <= ClassLabel::Gen224.grade());
        }
        let ghz = distill_from_generic(DistillTarget::Ghz).unwrap();
        assert!((ghz.probability - 0.5).abs() < 1e-12);
        assert!((ghz.three_tangle.unwrap() - 1.0).abs() < 1e-12);
        let w = distill_from_generic(DistillTarget::W).unwrap();
        assert!((w.probability - 0.375).abs() < 1e-12);
        assert!(w.three_tangle.unwrap() < 1e-12);
        let bell = distill_from_generic(DistillTarget::BellAb).unwrap();
        assert!((bell.probability - 0.25).abs() < 1e-12);
    }

    #[test]
    fn w_map_is_a_contraction() {
        let m = w_branch_map();
        let (eig, _) = crate::numerics::hermitian_eigen(&(m.adjoint() * m)).unwrap();
        assert!(eig.iter().all(|&e| e <= 1.0 + 1e-12));
    }

    #[test]
    fn deterministic_ghz() {
        assert!(ghz_povm_completeness_residual() < 1e-15);
        let out = distill_ghz_deterministic().unwrap();
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for o in &out {
            assert_eq!(o.post_class, ClassLabel::Ghz);
            assert!((o.target_fidelity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_match_two_outcome_coarse_graining() {
        let i4 = id(4);
        let pair = PovmPair::new(2, i4.clone(), i4.clone(), i4, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let ens = apply_povm(&two_bell(), &pair).unwrap();
        let ghz = distill_ghz_deterministic().unwrap();
        assert!((ens.outcomes[0].probability - ghz[0].probability).abs() < 1e-12);
        assert!((ens.outcomes[1].probability - ghz[1].probability).abs() < 1e-12);
        let swap = entanglement_swap().unwrap();
        assert!(
            (ens.outcomes[0].probability - swap[0].probability - swap[1].probability).abs() < 1e-12
        );
    }

    #[test]
    fn target_names() {
        assert_eq!(
            "bell_ab".parse::<DistillTarget>().unwrap(),
            DistillTarget::BellAb
        );
        assert!("GHZ3".parse::<DistillTarget>().is_err());
    }
}
