//! Randomized checks of the entanglement-monotone inequality for the moduli
//! of the `2x2x2` and `2x2x3` hyperdeterminants.
//!
//! A two-outcome local POVM on one party is stored in its singular value
//! frame: `M1 = U1 diag(alpha) V`, `M2 = U2 diag(beta) V` with
//! `alpha_i^2 + beta_i^2 = 1`. For a normalized state the check compares
//! `|Det psi|` with the outcome average `p1 |Det psi1| + p2 |Det psi2|`.
//!
//! [`amgm_bound_report`] evaluates the intermediate quantities of the
//! classical proof: the reduced ratio `after_avg / before` written in terms of
//! `alpha`, `beta` and the block norms `|z_i|` of `V psi`, and the
//! arithmetic-geometric mean majorant of that ratio. The exponent `d / k`
//! uses the dimension `k` of the measured party.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{det222, det223, DET222_DEGREE, DET223_DEGREE};
use crate::numerics::{random_state, random_unitary, unitarity_defect, CMatrix, RandomSource};
use crate::tensor::StateTensor;

/// Outcomes with a smaller probability are treated as never occurring.
pub const NULL_OUTCOME_PROBABILITY: f64 = 1e-14;
/// A pair is degenerate when every `alpha_i` (or every `beta_i`) is below this.
pub const DEGENERATE_POVM_EPS: f64 = 1e-7;
/// Relative slack tolerance of the monotone inequality.
pub const MONOTONE_REL_TOL: f64 = 1e-9;
/// Absolute tolerance of the proof-chain comparisons.
pub const CHAIN_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Det222,
    Det223,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::Det222, Measure::Det223];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Det222 => "det222",
            Measure::Det223 => "det223",
        }
    }

    /// Degree of homogeneity.
    pub fn degree(self) -> i32 {
        match self {
            Measure::Det222 => DET222_DEGREE,
            Measure::Det223 => DET223_DEGREE,
        }
    }

    /// State format the measure is defined on.
    pub fn dims(self) -> [usize; 3] {
        match self {
            Measure::Det222 => [2, 2, 2],
            Measure::Det223 => [2, 2, 3],
        }
    }

    pub fn eval(self, psi: &StateTensor) -> Result<Complex64> {
        match self {
            Measure::Det222 => det222(psi),
            Measure::Det223 => det223(psi),
        }
    }

    fn require_format(self, psi: &StateTensor) -> Result<()> {
        if psi.dims() == self.dims() {
            Ok(())
        } else {
            Err(Error::WrongFormat {
                expected: match self {
                    Measure::Det222 => "2 x 2 x 2",
                    Measure::Det223 => "2 x 2 x 3",
                },
                dims: psi.dims().to_vec(),
            })
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "det222" => Ok(Measure::Det222),
            "det223" => Ok(Measure::Det223),
            _ => Err(Error::UnknownTarget(s.to_string())),
        }
    }
}

/// Two-outcome POVM on one party, in its singular value frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmPair {
    party: usize,
    u1: CMatrix,
    u2: CMatrix,
    v: CMatrix,
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl PovmPair {
    pub fn new(
        party: usize,
        u1: CMatrix,
        u2: CMatrix,
        v: CMatrix,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        let k = alphas.len();
        if k < 2 {
            return Err(Error::InvalidDims {
                dims: vec![k],
                reason: "a POVM pair needs k >= 2".into(),
            });
        }
        for (name, m) in [("U1", &u1), ("U2", &u2), ("V", &v)] {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::ShapeMismatch(format!("{name} is not {k} x {k}")));
            }
            if unitarity_defect(m) > UNITARY_TOL {
                return Err(Error::ShapeMismatch(format!("{name} is not unitary")));
            }
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::DegeneratePovm(format!(
                "alphas {alphas:?} outside [0, 1]"
            )));
        }
        let betas: Vec<f64> = alphas
            .iter()
            .map(|a| (1.0 - a * a).max(0.0).sqrt())
            .collect();
        let max_a = alphas.iter().copied().fold(0.0, f64::max);
        let max_b = betas.iter().copied().fold(0.0, f64::max);
        if max_a < DEGENERATE_POVM_EPS || max_b < DEGENERATE_POVM_EPS {
            return Err(Error::DegeneratePovm(format!(
                "one element vanishes (max alpha {max_a:e}, max beta {max_b:e})"
            )));
        }
        Ok(Self {
            party,
            u1,
            u2,
            v,
            alphas,
            betas,
        })
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// The same pair acting on another party.
    pub fn on_party(&self, party: usize) -> Self {
        Self {
            party,
            ..self.clone()
        }
    }

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn m1(&self) -> CMatrix {
        &self.u1 * Self::diag(&self.alphas) * &self.v
    }

    pub fn m2(&self) -> CMatrix {
        &self.u2 * Self::diag(&self.betas) * &self.v
    }

    /// Largest entry of `|M1^dag M1 + M2^dag M2 - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let (m1, m2) = (self.m1(), self.m2());
        let s = m1.adjoint() * m1 + m2.adjoint() * m2;
        let id = CMatrix::identity(self.dim(), self.dim());
        (s - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Random pair on `party` with dimension `k`: `alpha_i` uniform on `[0, 1]`,
/// Haar `U1`, `U2`, `V`. Degenerate draws are redrawn.
pub fn random_povm_pair(party: usize, k: usize, rng: &mut RandomSource) -> Result<PovmPair> {
    loop {
        let alphas: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
        let u1 = random_unitary(k, rng);
        let u2 = random_unitary(k, rng);
        let v = random_unitary(k, rng);
        match PovmPair::new(party, u1, u2, v, alphas) {
            Err(Error::DegeneratePovm(_)) => continue,
            other => return other,
        }
    }
}

/// Proportional pair `M1 = alpha I`, `M2 = sqrt(1 - alpha^2) I`.
pub fn equality_case_povm(party: usize, k: usize, alpha: f64) -> Result<PovmPair> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DegeneratePovm(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let id = CMatrix::identity(k, k);
    PovmPair::new(party, id.clone(), id.clone(), id, vec![alpha; k])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub probability: f64,
    /// `None` for a probability-zero branch.
    #[serde(skip)]
    pub state: Option<StateTensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeEnsemble {
    #[serde(serialize_with = "crate::serde_util::party")]
    pub party: usize,
    pub outcomes: [Outcome; 2],
}

impl OutcomeEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.outcomes[0].probability + self.outcomes[1].probability
    }
}

fn require_pair_fits(psi: &StateTensor, pair: &PovmPair) -> Result<()> {
    match psi.dims().get(pair.party) {
        Some(&k) if k == pair.dim() => Ok(()),
        _ => Err(Error::ShapeMismatch(format!(
            "pair of dimension {} on party {} does not fit dims {:?}",
            pair.dim(),
            pair.party,
            psi.dims()
        ))),
    }
}

fn require_normalized(psi: &StateTensor) -> Result<()> {
    if psi.is_normalized() {
        Ok(())
    } else {
        Err(Error::Unnormalized {
            norm_sqr: psi.norm_sqr(),
        })
    }
}

/// Outcome probabilities and normalized outcome states of `pair` on `psi`.
pub fn apply_povm(psi: &StateTensor, pair: &PovmPair) -> Result<OutcomeEnsemble> {
    require_normalized(psi)?;
    require_pair_fits(psi, pair)?;
    let unfolded = psi.unfolding(pair.party)?;
    let branch = |m: CMatrix| -> Result<Outcome> {
        let out = m * &unfolded;
        let p = out.norm_squared();
        if p < NULL_OUTCOME_PROBABILITY {
            return Ok(Outcome {
                probability: p,
                state: None,
            });
        }
        let state = psi.folded(pair.party, &(out / Complex64::new(p.sqrt(), 0.0)))?;
        Ok(Outcome {
            probability: p,
            state: Some(state),
        })
    };
    Ok(OutcomeEnsemble {
        party: pair.party,
        outcomes: [branch(pair.m1())?, branch(pair.m2())?],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub measure: Measure,
    #[serde(serialize_with = "crate::serde_util::party")]
    pub party: usize,
    pub degree: i32,
    pub before: f64,
    pub probabilities: [f64; 2],
    /// `|Det|` of each normalized outcome (0 for a null branch).
    pub after: [f64; 2],
    pub after_avg: f64,
    pub slack: f64,
    pub pass: bool,
}

impl MonotoneCheck {
    /// `slack / before`, or the raw slack when `before` vanishes.
    pub fn rel_slack(&self) -> f64 {
        if self.before > 0.0 {
            self.slack / self.before
        } else {
            self.slack
        }
    }
}

/// Evaluate `|Det psi| >= p1 |Det psi1| + p2 |Det psi2|` for `pair` on the
/// normalized `psi`.
pub fn check_monotone(
    psi: &StateTensor,
    pair: &PovmPair,
    measure: Measure,
) -> Result<MonotoneCheck> {
    measure.require_format(psi)?;
    let ens = apply_povm(psi, pair)?;
    let before = measure.eval(psi)?.norm();
    let mut after = [0.0; 2];
    for (slot, o) in after.iter_mut().zip(&ens.outcomes) {
        if let Some(s) = &o.state {
            *slot = measure.eval(s)?.norm();
        }
    }
    let probabilities = [ens.outcomes[0].probability, ens.outcomes[1].probability];
    let after_avg = probabilities[0] * after[0] + probabilities[1] * after[1];
    let slack = before - after_avg;
    Ok(MonotoneCheck {
        measure,
        party: pair.party,
        degree: measure.degree(),
        before,
        probabilities,
        after,
        after_avg,
        slack,
        pass: slack >= -MONOTONE_REL_TOL * before,
    })
}

/// Intermediate quantities of the arithmetic-geometric mean argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmgmReport {
    pub measure: Measure,
    #[serde(serialize_with = "crate::serde_util::party")]
    pub party: usize,
    /// `d / k` for the measured party.
    pub exponent: f64,
    /// `|z_i|`: norms of the party-index blocks of `V psi`.
    pub block_norms: Vec<f64>,
    pub p1: f64,
    pub p2: f64,
    /// `prod alpha^(d/k) / p1^((d-2)/2) + prod beta^(d/k) / p2^((d-2)/2)`;
    /// equals `after_avg / before` whenever `before > 0`.
    pub lhs: f64,
    /// `((prod alpha)^(2/k) + (prod beta)^(2/k)) / (k^((d-2)/2) (prod |z_i|)^((d-2)/k))`.
    pub bound: f64,
    pub lhs_le_bound: bool,
    pub bound_le_one: bool,
    pub lhs_le_one: bool,
}

impl AmgmReport {
    pub fn chain_holds(&self) -> bool {
        self.lhs_le_bound && self.bound_le_one
    }
}

fn weighted_term(weights: &[f64], exponent: f64, p: f64, d: f64) -> f64 {
    let num: f64 = weights.iter().map(|w| w.powf(exponent)).product();
    if num == 0.0 {
        0.0
    } else {
        num / p.powf((d - 2.0) / 2.0)
    }
}

pub fn amgm_bound_report(
    psi: &StateTensor,
    pair: &PovmPair,
    measure: Measure,
) -> Result<AmgmReport> {
    measure.require_format(psi)?;
    require_normalized(psi)?;
    require_pair_fits(psi, pair)?;
    let k = pair.dim();
    let kf = k as f64;
    let d = measure.degree() as f64;
    let exponent = d / kf;
    let rotated = &pair.v * psi.unfolding(pair.party)?;
    let block_norms: Vec<f64> = (0..k).map(|i| rotated.row(i).norm()).collect();
    let p1: f64 = pair
        .alphas
        .iter()
        .zip(&block_norms)
        .map(|(a, z)| a * a * z * z)
        .sum();
    let p2: f64 = pair
        .betas
        .iter()
        .zip(&block_norms)
        .map(|(b, z)| b * b * z * z)
        .sum();
    let lhs =
        weighted_term(&pair.alphas, exponent, p1, d) + weighted_term(&pair.betas, exponent, p2, d);
    let prod_a: f64 = pair.alphas.iter().product();
    let prod_b: f64 = pair.betas.iter().product();
    let prod_z: f64 = block_norms.iter().product();
    let bound = if prod_z == 0.0 {
        f64::INFINITY
    } else {
        (prod_a.powf(2.0 / kf) + prod_b.powf(2.0 / kf))
            / (kf.powf((d - 2.0) / 2.0) * prod_z.powf((d - 2.0) / kf))
    };
    Ok(AmgmReport {
        measure,
        party: pair.party,
        exponent,
        block_norms,
        p1,
        p2,
        lhs,
        bound,
        lhs_le_bound: lhs <= bound + CHAIN_TOL,
        bound_le_one: bound <= 1.0 + CHAIN_TOL,
        lhs_le_one: lhs <= 1.0 + CHAIN_TOL,
    })
}

/// One Monte-Carlo trial: a Gaussian state of the measure's format and a
/// random pair on `party`, both drawn from stream `trial` of `seed`.
pub fn monotone_trial(
    measure: Measure,
    seed: u64,
    trial: u64,
    party: usize,
) -> Result<(MonotoneCheck, AmgmReport)> {
    let dims = measure.dims();
    if party >= dims.len() {
        return Err(Error::ShapeMismatch(format!("party {party} out of range")));
    }
    let mut rng = RandomSource::new(seed, trial);
    let psi = random_state(&dims, &mut rng)?;
    let pair = random_povm_pair(party, dims[party], &mut rng)?;
    Ok((
        check_monotone(&psi, &pair, measure)?,
        amgm_bound_report(&psi, &pair, measure)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub measure: Measure,
    pub seed: u64,
    pub rng: &'static str,
    /// `None` cycles through the parties by trial index.
    #[serde(serialize_with = "crate::serde_util::option_party")]
    pub party: Option<usize>,
    pub trials: u64,
    pub passes: u64,
    pub violations: u64,
    pub violations_by_party: [u64; 3],
    pub min_rel_slack: f64,
    pub argmin_trial: u64,
    #[serde(serialize_with = "crate::serde_util::party")]
    pub argmin_party: usize,
    /// Trials whose reduced ratio exceeds its majorant.
    pub lhs_above_bound: u64,
    /// Trials whose majorant exceeds 1.
    pub bound_above_one: u64,
    pub max_bound: f64,
}

impl MonteCarloSummary {
    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }
}

struct TrialOutcome {
    party: usize,
    pass: bool,
    rel_slack: f64,
    lhs_le_bound: bool,
    bound_le_one: bool,
    bound: f64,
}

fn run_one(measure: Measure, seed: u64, trial: u64, party: Option<usize>) -> Result<TrialOutcome> {
    let party = party.unwrap_or((trial % 3) as usize);
    let (check, amgm) = monotone_trial(measure, seed, trial, party)?;
    Ok(TrialOutcome {
        party,
        pass: check.pass,
        rel_slack: check.rel_slack(),
        lhs_le_bound: amgm.lhs_le_bound,
        bound_le_one: amgm.bound_le_one,
        bound: amgm.bound,
    })
}

/// Run `trials` independent trials and reduce them in trial order, so the
/// summary does not depend on scheduling.
pub fn run_monotone_trials(
    measure: Measure,
    trials: u64,
    seed: u64,
    party: Option<usize>,
) -> Result<MonteCarloSummary> {
    if let Some(p) = party {
        if p >= 3 {
            return Err(Error::ShapeMismatch(format!("party {p} out of range")));
        }
    }
    #[cfg(feature = "parallel")]
    let results: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| run_one(measure, seed, t, party))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<TrialOutcome>> = (0..trials)
        .map(|t| run_one(measure, seed, t, party))
        .collect();

    let mut s = MonteCarloSummary {
        measure,
        seed,
        rng: RandomSource::ALGORITHM,
        party,
        trials,
        passes: 0,
        violations: 0,
        violations_by_party: [0; 3],
        min_rel_slack: f64::INFINITY,
        argmin_trial: 0,
        argmin_party: 0,
        lhs_above_bound: 0,
        bound_above_one: 0,
        max_bound: 0.0,
    };
    for (t, r) in (0u64..).zip(results) {
        let r = r?;
        if r.pass {
            s.passes += 1;
        } else {
            s.violations += 1;
            s.violations_by_party[r.party] += 1;
        }
        if r.rel_slack < s.min_rel_slack {
            s.min_rel_slack = r.rel_slack;
            s.argmin_trial = t;
            s.argmin_party = r.party;
        }
        s.lhs_above_bound += u64::from(!r.lhs_le_bound);
        s.bound_above_one += u64::from(!r.bound_le_one);
        s.max_bound = s.max_bound.max(r.bound);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ClassLabel;
    use crate::tensor::{apply_local, make_state, representative, LocalOperation};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ghz() -> StateTensor {
        representative(ClassLabel::Ghz, 2).unwrap()
    }

    #[test]
    fn random_pairs_are_complete() {
        for seed in 0..200 {
            let mut rng = RandomSource::new(seed, 0);
            for k in 2..=4 {
                let pair = random_povm_pair(0, k, &mut rng).unwrap();
                assert!(pair.completeness_residual() < 1e-10);
                for (a, b) in pair.alphas().iter().zip(pair.betas()) {
                    assert!((0.0..=1.0).contains(a) && (0.0..=1.0).contains(b));
                    assert!((a * a + b * b - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn degenerate_pairs_are_rejected() {
        let id = CMatrix::identity(2, 2);
        assert!(matches!(
            PovmPair::new(0, id.clone(), id.clone(), id.clone(), vec![1.0, 1.0]),
            Err(Error::DegeneratePovm(_))
        ));
        assert!(matches!(
            PovmPair::new(0, id.clone(), id.clone(), id.clone(), vec![0.0, 0.0]),
            Err(Error::DegeneratePovm(_))
        ));
        assert!(PovmPair::new(0, id.clone(), id.clone(), id, vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn seeded_pairs_reproduce() {
        let a = random_povm_pair(1, 3, &mut RandomSource::new(9, 4)).unwrap();
        let b = random_povm_pair(1, 3, &mut RandomSource::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn balanced_pair_is_half_identity() {
        let pair = equality_case_povm(0, 2, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let half = CMatrix::identity(2, 2) * c(std::f64::consts::FRAC_1_SQRT_2);
        assert!((pair.m1() - &half).norm() < 1e-15);
        assert!((pair.m2() - &half).norm() < 1e-15);
    }

    #[test]
    fn proportional_pair_leaves_state_unchanged() {
        let mut rng = RandomSource::new(3, 0);
        let psi = random_state(&[2, 2, 3], &mut rng).unwrap();
        for party in 0..3 {
            let k = psi.dims()[party];
            let pair = equality_case_povm(party, k, std::f64::consts::FRAC_1_SQRT_2).unwrap();
            let ens = apply_povm(&psi, &pair).unwrap();
            for o in &ens.outcomes {
                assert!((o.probability - 0.5).abs() < 1e-12);
                let s = o.state.as_ref().unwrap();
                assert!(s.inner(&psi).unwrap().norm() > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn projective_pair_on_ghz() {
        let id = CMatrix::identity(2, 2);
        let pair = PovmPair::new(2, id.clone(), id.clone(), id, vec![1.0, 0.0]).unwrap();
        let ens = apply_povm(&ghz(), &pair).unwrap();
        let s0 = make_state(&[2, 2, 2], &[(vec![0, 0, 0], c(1.0))]).unwrap();
        let s1 = make_state(&[2, 2, 2], &[(vec![1, 1, 1], c(1.0))]).unwrap();
        assert!((ens.outcomes[0].probability - 0.5).abs() < 1e-12);
        assert!((ens.outcomes[1].probability - 0.5).abs() < 1e-12);
        assert!(
            ens.outcomes[0]
                .state
                .as_ref()
                .unwrap()
                .inner(&s0)
                .unwrap()
                .norm()
                > 1.0 - 1e-12
        );
        assert!(
            ens.outcomes[1]
                .state
                .as_ref()
                .unwrap()
                .inner(&s1)
                .unwrap()
                .norm()
                > 1.0 - 1e-12
        );
    }

    #[test]
    fn outcome_probabilities_match_operator_norms() {
        let w = representative(ClassLabel::W, 2).unwrap();
        for seed in 0..100 {
            let mut rng = RandomSource::new(seed, 1);
            let party = (seed % 3) as usize;
            let pair = random_povm_pair(party, 2, &mut rng).unwrap();
            let ens = apply_povm(&w, &pair).unwrap();
            assert!((ens.total_probability() - 1.0).abs() < 1e-10);
            for (o, m) in ens.outcomes.iter().zip([pair.m1(), pair.m2()]) {
                let op = LocalOperation::on_party(&[2, 2, 2], party, m).unwrap();
                let direct = apply_local(&op, &w).unwrap().norm_sqr();
                assert!((o.probability - direct).abs() < 1e-10);
                if let Some(s) = &o.state {
                    assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ghz_det222_is_monotone_on_every_party() {
        for party in 0..3 {
            for seed in 0..2000 {
                let mut rng = RandomSource::new(seed, party as u64);
                let pair = random_povm_pair(party, 2, &mut rng).unwrap();
                let chk = check_monotone(&ghz(), &pair, Measure::Det222).unwrap();
                assert!(chk.pass, "party {party} seed {seed}: {chk:?}");
            }
        }
    }

    #[test]
    fn w_stays_at_zero() {
        let w = representative(ClassLabel::W, 2).unwrap();
        let thr = crate::numerics::TolerancePolicy::default().det_threshold(1.0, DET222_DEGREE);
        for seed in 0..200 {
            let pair =
                random_povm_pair((seed % 3) as usize, 2, &mut RandomSource::new(seed, 2)).unwrap();
            let chk = check_monotone(&w, &pair, Measure::Det222).unwrap();
            assert!(chk.before <= thr && chk.after_avg <= thr);
            assert!(chk.pass);
        }
    }

    #[test]
    fn equality_case_has_zero_slack_on_ghz() {
        for alpha in [0.1, 0.5, std::f64::consts::FRAC_1_SQRT_2, 0.95] {
            for party in 0..3 {
                let pair = equality_case_povm(party, 2, alpha).unwrap();
                let chk = check_monotone(&ghz(), &pair, Measure::Det222).unwrap();
                assert!(chk.slack.abs() <= 1e-9);
                let r = amgm_bound_report(&ghz(), &pair, Measure::Det222).unwrap();
                assert!((r.lhs - 1.0).abs() < 1e-9);
                assert!((r.bound - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unbalanced_pair_on_balanced_blocks() {
        let id = CMatrix::identity(2, 2);
        let pair = PovmPair::new(0, id.clone(), id.clone(), id, vec![0.9, 0.1]).unwrap();
        let r = amgm_bound_report(&ghz(), &pair, Measure::Det222).unwrap();
        assert!((r.block_norms[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let beta0 = (1.0f64 - 0.81).sqrt();
        let beta1 = (1.0f64 - 0.01).sqrt();
        // d / k = 2: squared products over p^1.
        let expected = 0.0081 / 0.41 + (beta0 * beta1).powi(2) / 0.59;
        assert!((r.lhs - expected).abs() < 1e-12);
        assert!(r.lhs < 1.0);
        assert!(r.chain_holds());
    }

    #[test]
    fn reduced_ratio_matches_black_box_average() {
        for m in Measure::ALL {
            for trial in 0..300 {
                let (chk, r) = monotone_trial(m, 11, trial, (trial % 3) as usize).unwrap();
                assert!(
                    (r.lhs * chk.before - chk.after_avg).abs() <= 1e-9 * chk.before.max(1e-300)
                );
                assert!((r.p1 - chk.probabilities[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn null_branch_is_safe() {
        let id = CMatrix::identity(2, 2);
        let pair = PovmPair::new(0, id.clone(), id.clone(), id, vec![1.0, 0.0]).unwrap();
        let psi = make_state(
            &[2, 2, 2],
            &[(vec![0, 0, 0], c(1.0)), (vec![0, 1, 1], c(1.0))],
        )
        .unwrap()
        .normalized()
        .unwrap();
        let ens = apply_povm(&psi, &pair).unwrap();
        assert!(ens.outcomes[1].state.is_none());
        let chk = check_monotone(&psi, &pair, Measure::Det222).unwrap();
        assert!(chk.pass);
        assert_eq!(chk.after[1], 0.0);
    }

    #[test]
    fn party_swap_consistency() {
        for m in Measure::ALL {
            for seed in 0..100 {
                let mut rng = RandomSource::new(seed, 5);
                let psi = random_state(&m.dims(), &mut rng).unwrap();
                let pair = random_povm_pair(0, 2, &mut rng).unwrap();
                let a = check_monotone(&psi, &pair, m).unwrap();
                let swapped = psi.permute_parties(&[1, 0, 2]).unwrap();
                let b = check_monotone(&swapped, &pair.on_party(1), m).unwrap();
                assert!((a.before - b.before).abs() < 1e-12);
                assert!((a.after_avg - b.after_avg).abs() < 1e-12);
                assert!((a.probabilities[0] - b.probabilities[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn det223_modulus_fails_for_concentrated_blocks() {
        // A pair that keeps block 0 intact and shrinks block 1, on a state
        // whose weight sits almost entirely in block 1.
        let eps = 0.05;
        let psi = make_state(
            &[2, 2, 3],
            &[
                (vec![0, 0, 0], c(eps)),
                (vec![0, 1, 1], c(eps)),
                (vec![1, 0, 1], c(1.0)),
                (vec![1, 1, 2], c(1.0)),
            ],
        )
        .unwrap()
        .normalized()
        .unwrap();
        let id = CMatrix::identity(2, 2);
        let pair = PovmPair::new(0, id.clone(), id.clone(), id, vec![1.0, 0.5]).unwrap();
        let chk = check_monotone(&psi, &pair, Measure::Det223).unwrap();
        assert!(chk.before > 0.0);
        assert!(!chk.pass, "{chk:?}");
        let cube_root = |x: f64| x.cbrt();
        let avg_root = chk.probabilities[0] * cube_root(chk.after[0])
            + chk.probabilities[1] * cube_root(chk.after[1]);
        assert!(cube_root(chk.before) >= avg_root);
    }

    #[test]
    fn summary_is_deterministic() {
        let a = run_monotone_trials(Measure::Det222, 500, 7, None).unwrap();
        let b = run_monotone_trials(Measure::Det222, 500, 7, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert!(a.min_rel_slack >= -MONOTONE_REL_TOL);
        assert_eq!(a.lhs_above_bound, 0);
    }

    #[test]
    fn format_mismatch_is_rejected() {
        let pair = equality_case_povm(0, 2, 0.5).unwrap();
        assert!(matches!(
            check_monotone(&ghz(), &pair, Measure::Det223),
            Err(Error::WrongFormat { .. })
        ));
        let unnormalized = ghz().scaled(c(2.0));
        assert!(matches!(
            apply_povm(&unnormalized, &pair),
            Err(Error::Unnormalized { .. })
        ));
    }
}
