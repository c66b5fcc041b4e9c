//! The nine SLOCC classes of `2 x 2 x n` pure states and the decision
//! procedure that assigns one of them to any nonzero state.
//!
//! Local ranks split the classes except for the signatures `(2,2,3)` and
//! `(2,2,2)`. Those are split by the hyperdeterminant of the adjusted format
//! (`Det223` resp. `Det222`), with `rank(R^T R)` as an independent cross-check.
//!
//! The biseparable labels name the party that is unentangled: `B3` has
//! signature `(2,2,1)` (a Bell pair between Alice and Bob), `B2` is
//! `(2,1,2)` and `B1` is `(1,2,2)`.

mod order;

pub use order::{
    hasse_edges, longest_chain, path, reachable, witness_map, ClassNode, PartialOrder,
    HASSE_EDGE_COUNT,
};

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::invariants::{invariant_report, InvariantReport};
use crate::numerics::{RankDecision, TolerancePolicy};
use crate::tensor::StateTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Sep,
    B1,
    B2,
    B3,
    W,
    Ghz,
    C223Deg,
    C223Gen,
    Gen224,
}

/// Expected invariant columns for a class: `rank(R^T R)` and, when the
/// hyperdeterminant is defined for the class, whether it is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedInvariants {
    pub local_ranks: [usize; 3],
    pub rank_rtr: usize,
    pub det223_nonzero: Option<bool>,
    pub det222_nonzero: Option<bool>,
}

impl ClassLabel {
    /// Top of the order first.
    pub const ALL: [ClassLabel; 9] = [
        ClassLabel::Gen224,
        ClassLabel::C223Gen,
        ClassLabel::C223Deg,
        ClassLabel::Ghz,
        ClassLabel::W,
        ClassLabel::B3,
        ClassLabel::B2,
        ClassLabel::B1,
        ClassLabel::Sep,
    ];

    /// Stable serialized name.
    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Sep => "separable",
            ClassLabel::B1 => "B1",
            ClassLabel::B2 => "B2",
            ClassLabel::B3 => "B3",
            ClassLabel::W => "W",
            ClassLabel::Ghz => "GHZ",
            ClassLabel::C223Deg => "223-degenerate",
            ClassLabel::C223Gen => "223-generic",
            ClassLabel::Gen224 => "224-generic",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ClassLabel::Sep => "fully separable |000>",
            ClassLabel::B1 => "party 1 separable, Bell pair between parties 2 and 3",
            ClassLabel::B2 => "party 2 separable, Bell pair between parties 1 and 3",
            ClassLabel::B3 => "party 3 separable, Bell pair between parties 1 and 2",
            ClassLabel::W => "W class |001>+|010>+|100>",
            ClassLabel::Ghz => "GHZ class |000>+|111>",
            ClassLabel::C223Deg => "2x2x3 degenerate |000>+|011>+|112>",
            ClassLabel::C223Gen => "2x2x3 generic |000>+(|011>+|101>)/sqrt2+|112>",
            ClassLabel::Gen224 => "2x2x4 generic, two Bell pairs |000>+|011>+|102>+|113>",
        }
    }

    /// Local-rank signature `(r1, r2, r3)`.
    pub fn signature(self) -> [usize; 3] {
        match self {
            ClassLabel::Sep => [1, 1, 1],
            ClassLabel::B1 => [1, 2, 2],
            ClassLabel::B2 => [2, 1, 2],
            ClassLabel::B3 => [2, 2, 1],
            ClassLabel::W | ClassLabel::Ghz => [2, 2, 2],
            ClassLabel::C223Deg | ClassLabel::C223Gen => [2, 2, 3],
            ClassLabel::Gen224 => [2, 2, 4],
        }
    }

    /// Position in the order under noninvertible local operations (1 = bottom).
    pub fn grade(self) -> u8 {
        match self {
            ClassLabel::Sep => 1,
            ClassLabel::B1 | ClassLabel::B2 | ClassLabel::B3 => 2,
            ClassLabel::W | ClassLabel::Ghz => 3,
            ClassLabel::C223Deg | ClassLabel::C223Gen => 4,
            ClassLabel::Gen224 => 5,
        }
    }

    /// Smallest Clare dimension in which the class occurs.
    pub fn min_clare_dim(self) -> usize {
        self.signature()[2]
    }

    /// Classes that occur for Clare dimension `n`.
    pub fn admissible(n: usize) -> Vec<ClassLabel> {
        Self::ALL
            .into_iter()
            .filter(|l| l.min_clare_dim() <= n)
            .collect()
    }

    pub fn expected_invariants(self) -> ExpectedInvariants {
        let (rank_rtr, det223_nonzero, det222_nonzero) = match self {
            ClassLabel::Gen224 => (4, None, None),
            ClassLabel::C223Gen => (3, Some(true), None),
            ClassLabel::C223Deg => (2, Some(false), None),
            ClassLabel::Ghz => (2, Some(false), Some(true)),
            ClassLabel::W => (1, Some(false), Some(false)),
            ClassLabel::B3 => (1, Some(false), Some(false)),
            ClassLabel::B2 | ClassLabel::B1 | ClassLabel::Sep => (0, Some(false), Some(false)),
        };
        ExpectedInvariants {
            local_ranks: self.signature(),
            rank_rtr,
            det223_nonzero,
            det222_nonzero,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    /// Accepts the stable names and the enum-style aliases
    /// (`SEP`, `GHZ`, `C223_DEG`, `C223_GEN`, `GEN224`), case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let label = match key.as_str() {
            "separable" | "sep" => ClassLabel::Sep,
            "b1" => ClassLabel::B1,
            "b2" => ClassLabel::B2,
            "b3" => ClassLabel::B3,
            "w" => ClassLabel::W,
            "ghz" => ClassLabel::Ghz,
            "223-degenerate" | "c223-deg" => ClassLabel::C223Deg,
            "223-generic" | "c223-gen" => ClassLabel::C223Gen,
            "224-generic" | "gen224" => ClassLabel::Gen224,
            _ => return Err(Error::UnknownLabel(s.to_string())),
        };
        Ok(label)
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Distance of one thresholded quantity from its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub quantity: String,
    pub value: f64,
    pub threshold: f64,
    /// `log10(value / threshold)`; positive means "counted as nonzero".
    pub log10_ratio: f64,
}

impl Margin {
    fn new(quantity: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            threshold,
            log10_ratio: (value / threshold).log10(),
        }
    }

    fn from_rank(prefix: &str, d: &RankDecision) -> Vec<Margin> {
        let mut out = Vec::new();
        if let Some(v) = d.smallest_kept {
            out.push(Margin::new(
                format!("{prefix}.smallest_kept"),
                v,
                d.threshold,
            ));
        }
        if let Some(v) = d.largest_dropped {
            out.push(Margin::new(
                format!("{prefix}.largest_dropped"),
                v,
                d.threshold,
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: ClassLabel,
    pub report: InvariantReport,
    pub margins: Vec<Margin>,
}

impl Classification {
    /// Smallest `|log10(value / threshold)|` over all margins: how close the
    /// most fragile decision came to flipping.
    pub fn weakest_margin(&self) -> Option<&Margin> {
        self.margins
            .iter()
            .filter(|m| m.log10_ratio.is_finite())
            .min_by(|a, b| a.log10_ratio.abs().total_cmp(&b.log10_ratio.abs()))
    }
}

/// Assign one of the nine classes to a nonzero `(2, 2, n)` state.
pub fn classify(psi: &StateTensor, policy: &TolerancePolicy) -> Result<Classification> {
    let report = invariant_report(psi, policy)?;
    let mut margins = Vec::new();
    for (i, d) in report.local_rank_decisions.iter().enumerate() {
        margins.extend(Margin::from_rank(&format!("r{}", i + 1), d));
    }
    margins.extend(Margin::from_rank("rank_rtr", &report.rtr_decision));

    let label = match report.local_ranks {
        [1, 1, 1] => ClassLabel::Sep,
        [1, 2, 2] => ClassLabel::B1,
        [2, 1, 2] => ClassLabel::B2,
        [2, 2, 1] => ClassLabel::B3,
        [2, 2, 4] => ClassLabel::Gen224,
        [2, 2, 3] => {
            let det = report.det223.expect("det223 is defined for r3 = 3");
            margins.push(Margin::new("det223", det.norm(), report.det223_threshold));
            let by_det = if det.norm() > report.det223_threshold {
                ClassLabel::C223Gen
            } else {
                ClassLabel::C223Deg
            };
            let by_rank = match report.rank_rtr {
                3 => Some(ClassLabel::C223Gen),
                2 => Some(ClassLabel::C223Deg),
                _ => None,
            };
            cross_check(by_det, by_rank, report.rank_rtr)?
        }
        [2, 2, 2] => {
            let det = report.det222.expect("det222 is defined for r3 = 2");
            margins.push(Margin::new("det222", det.norm(), report.det222_threshold));
            let by_det = if det.norm() > report.det222_threshold {
                ClassLabel::Ghz
            } else {
                ClassLabel::W
            };
            let by_rank = match report.rank_rtr {
                2 => Some(ClassLabel::Ghz),
                1 => Some(ClassLabel::W),
                _ => None,
            };
            cross_check(by_det, by_rank, report.rank_rtr)?
        }
        other => return Err(Error::InconsistentRanks(other)),
    };
    Ok(Classification {
        label,
        report,
        margins,
    })
}

fn cross_check(
    by_det: ClassLabel,
    by_rank: Option<ClassLabel>,
    rtr_rank: usize,
) -> Result<ClassLabel> {
    if by_rank == Some(by_det) {
        Ok(by_det)
    } else {
        Err(Error::Ambiguous {
            det_vote: by_det.name(),
            rank_vote: by_rank.map_or("none", ClassLabel::name),
            rtr_rank,
        })
    }
}

pub fn grade(label: ClassLabel) -> u8 {
    label.grade()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_sl, RandomSource};
    use crate::tensor::{apply_local, make_state, representative, LocalOperation};
    use num_complex::Complex64;

    #[test]
    fn names_round_trip() {
        for l in ClassLabel::ALL {
            assert_eq!(l.name().parse::<ClassLabel>().unwrap(), l);
        }
        assert_eq!(
            "C223_GEN".parse::<ClassLabel>().unwrap(),
            ClassLabel::C223Gen
        );
        assert_eq!("gen224".parse::<ClassLabel>().unwrap(), ClassLabel::Gen224);
        assert!("GHZ4".parse::<ClassLabel>().is_err());
    }

    #[test]
    fn grades() {
        assert_eq!(grade(ClassLabel::Gen224), 5);
        assert_eq!(grade(ClassLabel::W), 3);
        assert_eq!(grade(ClassLabel::Sep), 1);
    }

    #[test]
    fn representatives_classify_to_themselves() {
        let p = TolerancePolicy::default();
        for l in ClassLabel::ALL {
            for n in l.min_clare_dim().max(1)..=5 {
                let c = classify(&representative(l, n).unwrap(), &p).unwrap();
                assert_eq!(c.label, l, "n = {n}");
                let e = l.expected_invariants();
                assert_eq!(c.report.local_ranks, e.local_ranks);
                assert_eq!(c.report.rank_rtr, e.rank_rtr);
                assert_eq!(c.report.det223_is_zero().map(|z| !z), e.det223_nonzero);
                assert_eq!(c.report.det222_is_zero().map(|z| !z), e.det222_nonzero);
            }
        }
    }

    #[test]
    fn ghz_variant_is_ghz() {
        let one = Complex64::new(1.0, 0.0);
        let psi = make_state(
            &[2, 2, 2],
            &[
                (vec![0, 0, 0], one),
                (vec![0, 1, 1], one),
                (vec![1, 1, 1], one),
            ],
        )
        .unwrap();
        assert_eq!(
            classify(&psi, &TolerancePolicy::default()).unwrap().label,
            ClassLabel::Ghz
        );
    }

    #[test]
    fn ghz_stays_ghz_under_sl() {
        let p = TolerancePolicy::default();
        let ghz = representative(ClassLabel::Ghz, 2).unwrap();
        for seed in 0..1000 {
            let mut rng = RandomSource::new(seed, 0);
            let op = LocalOperation::new((0..3).map(|_| random_sl(2, &mut rng).unwrap()).collect())
                .unwrap();
            let out = apply_local(&op, &ghz).unwrap();
            assert_eq!(
                classify(&out, &p).unwrap().label,
                ClassLabel::Ghz,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn ambiguity_is_reported() {
        // A loose det threshold declares a GHZ-class state W, while rank(R^T R) still says GHZ.
        let p = TolerancePolicy::new(1e-9, 9e-4).unwrap();
        let eps = 1e-3;
        let psi = make_state(
            &[2, 2, 2],
            &[
                (vec![0, 0, 1], Complex64::new(1.0, 0.0)),
                (vec![0, 1, 0], Complex64::new(1.0, 0.0)),
                (vec![1, 0, 0], Complex64::new(1.0, 0.0)),
                (vec![1, 1, 1], Complex64::new(eps, 0.0)),
            ],
        )
        .unwrap();
        match classify(&psi, &p) {
            Err(Error::Ambiguous {
                det_vote,
                rank_vote,
                ..
            }) => {
                assert_eq!(det_vote, "W");
                assert_eq!(rank_vote, "GHZ");
            }
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn margins_are_reported() {
        let c = classify(
            &representative(ClassLabel::Ghz, 2).unwrap(),
            &TolerancePolicy::default(),
        )
        .unwrap();
        let det = c.margins.iter().find(|m| m.quantity == "det222").unwrap();
        assert!(det.log10_ratio > 8.0);
        assert!(c.weakest_margin().is_some());
    }

    #[test]
    fn admissible_counts() {
        assert_eq!(ClassLabel::admissible(2).len(), 6);
        assert_eq!(ClassLabel::admissible(3).len(), 8);
        assert_eq!(ClassLabel::admissible(4).len(), 9);
        assert_eq!(ClassLabel::admissible(7).len(), 9);
    }
}
