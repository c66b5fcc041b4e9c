//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes and returns JSON strings. The `*_json` functions hold
//! the logic and are plain Rust, so they can be tested natively.

use entclass::classify::{path, witness_map, PartialOrder};
use entclass::monotone::monotone_trial;
use entclass::tensor::SparseAmplitude;
use entclass::{
    apply_local, classify, representative, ClassLabel, Measure, StateTensor, TolerancePolicy,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Upper bound on trials per call, to keep the page responsive.
pub const MAX_TRIALS: u32 = 20_000;
/// Histogram bins span `log10(slack / |Det|)` over this range.
pub const HISTOGRAM_RANGE: (f64, f64) = (-12.0, 0.0);
pub const HISTOGRAM_BINS: usize = 24;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateInput {
    dims: Vec<usize>,
    amplitudes: Vec<SparseAmplitude>,
}

#[derive(Serialize)]
struct ClassifyOutput {
    label: ClassLabel,
    description: &'static str,
    grade: u8,
    local_ranks: [usize; 3],
    rank_rtr: usize,
    det223_abs: Option<f64>,
    det222_abs: Option<f64>,
    weakest_margin: Option<String>,
}

pub fn classify_json(input: &str) -> Result<String, String> {
    let s: StateInput = serde_json::from_str(input).map_err(|e| format!("bad state: {e}"))?;
    let psi = StateTensor::from_sparse(&s.dims, &s.amplitudes).map_err(|e| e.to_string())?;
    let c = classify(&psi, &TolerancePolicy::default()).map_err(|e| e.to_string())?;
    let out = ClassifyOutput {
        label: c.label,
        description: c.label.description(),
        grade: c.label.grade(),
        local_ranks: c.report.local_ranks,
        rank_rtr: c.report.rank_rtr,
        det223_abs: c.report.det223.map(|d| d.norm()),
        det222_abs: c.report.det222.map(|d| d.norm()),
        weakest_margin: c.weakest_margin().map(|m| {
            format!(
                "{} ({:.1} decades from threshold)",
                m.quantity, m.log10_ratio
            )
        }),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Bin {
    lo: f64,
    hi: f64,
    count: u32,
}

#[derive(Serialize)]
struct MonotoneOutput {
    measure: Measure,
    seed: u32,
    trials: u32,
    violations: u32,
    min_rel_slack: f64,
    /// Passing trials with slack below the histogram range.
    below_range: u32,
    bins: Vec<Bin>,
}

pub fn monotone_json(measure: &str, trials: u32, seed: u32) -> Result<String, String> {
    let measure: Measure = measure
        .parse()
        .map_err(|e: entclass::Error| e.to_string())?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must lie in 1..={MAX_TRIALS}"));
    }
    let (lo, hi) = HISTOGRAM_RANGE;
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut bins: Vec<Bin> = (0..HISTOGRAM_BINS)
        .map(|i| Bin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    let mut out = MonotoneOutput {
        measure,
        seed,
        trials,
        violations: 0,
        min_rel_slack: f64::INFINITY,
        below_range: 0,
        bins: Vec::new(),
    };
    for t in 0..trials {
        let party = (t % 3) as usize;
        let (check, _) = monotone_trial(measure, u64::from(seed), u64::from(t), party)
            .map_err(|e| e.to_string())?;
        let r = check.rel_slack();
        out.min_rel_slack = out.min_rel_slack.min(r);
        if !check.pass {
            out.violations += 1;
            continue;
        }
        let x = r.max(f64::MIN_POSITIVE).log10();
        if x < lo {
            out.below_range += 1;
        } else {
            let i = (((x - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
            bins[i].count += 1;
        }
    }
    out.bins = bins;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct OrderOutput {
    order: PartialOrder,
    from: ClassLabel,
    to: ClassLabel,
    reachable: bool,
    path: Option<Vec<ClassLabel>>,
    /// Class of the composed witness applied to the source representative.
    witness_result: Option<ClassLabel>,
}

pub fn order_json(from: &str, to: &str) -> Result<String, String> {
    let from: ClassLabel = from.parse().map_err(|e: entclass::Error| e.to_string())?;
    let to: ClassLabel = to.parse().map_err(|e: entclass::Error| e.to_string())?;
    let n = from.min_clare_dim().max(2);
    let witness_result = match witness_map(from, to, n).map_err(|e| e.to_string())? {
        Some(w) => {
            let rep = representative(from, n).map_err(|e| e.to_string())?;
            let image = apply_local(&w, &rep).map_err(|e| e.to_string())?;
            Some(
                classify(&image, &TolerancePolicy::default())
                    .map_err(|e| e.to_string())?
                    .label,
            )
        }
        None => None,
    };
    let path = path(from, to);
    let out = OrderOutput {
        order: PartialOrder::standard(),
        from,
        to,
        reachable: path.is_some(),
        path,
        witness_result,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Classify a state given as `{"dims": [2,2,n], "amplitudes": [{index, re, im}, ..]}`.
#[wasm_bindgen]
pub fn classify_state(input: &str) -> Result<String, JsError> {
    classify_json(input).map_err(|e| JsError::new(&e))
}

/// Run seeded monotone trials and bin the relative slack.
#[wasm_bindgen]
pub fn monotone_histogram(measure: &str, trials: u32, seed: u32) -> Result<String, JsError> {
    monotone_json(measure, trials, seed).map_err(|e| JsError::new(&e))
}

/// The class diagram plus reachability and a checked witness for one query.
#[wasm_bindgen]
pub fn order_query(from: &str, to: &str) -> Result<String, JsError> {
    order_json(from, to).map_err(|e| JsError::new(&e))
}
