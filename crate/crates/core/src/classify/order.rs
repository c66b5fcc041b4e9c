//! Partial order of the classes under noninvertible local operations.
//!
//! Each covering edge carries an explicit witness: a local operation that
//! maps the representative of the upper class onto a multiple of the
//! representative of the lower class. Witnesses along a path compose by
//! matrix product, so every comparable pair gets a witness.

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use serde::Serialize;

use super::ClassLabel;
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, MAX_MATRIX_DIM};
use crate::tensor::LocalOperation;

pub const HASSE_EDGE_COUNT: usize = 15;

use ClassLabel::*;

const EDGES: [(ClassLabel, ClassLabel); HASSE_EDGE_COUNT] = [
    (Gen224, C223Gen),
    (Gen224, C223Deg),
    (C223Gen, Ghz),
    (C223Gen, W),
    (C223Deg, Ghz),
    (C223Deg, W),
    (Ghz, B1),
    (Ghz, B2),
    (Ghz, B3),
    (W, B1),
    (W, B2),
    (W, B3),
    (B1, Sep),
    (B2, Sep),
    (B3, Sep),
];

/// Covering relations `(upper, lower)`.
pub fn hasse_edges() -> Vec<(ClassLabel, ClassLabel)> {
    EDGES.to_vec()
}

fn successors(label: ClassLabel) -> impl Iterator<Item = ClassLabel> {
    EDGES
        .iter()
        .filter(move |(u, _)| *u == label)
        .map(|(_, l)| *l)
}

/// Shortest downward path `from -> .. -> to` in the Hasse diagram; the
/// first successor in edge order wins ties.
pub fn path(from: ClassLabel, to: ClassLabel) -> Option<Vec<ClassLabel>> {
    let mut parent: BTreeMap<ClassLabel, ClassLabel> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(cur) = queue.pop_front() {
        if cur == to {
            let mut out = vec![to];
            let mut at = to;
            while at != from {
                at = parent[&at];
                out.push(at);
            }
            out.reverse();
            return Some(out);
        }
        for next in successors(cur) {
            if next != from && !parent.contains_key(&next) {
                parent.insert(next, cur);
                queue.push_back(next);
            }
        }
    }
    None
}

/// Whether `from` can be converted into `to` by a local operation
/// (reflexive).
pub fn reachable(from: ClassLabel, to: ClassLabel) -> bool {
    path(from, to).is_some()
}

/// A maximal chain of the order, top first.
pub fn longest_chain() -> Vec<ClassLabel> {
    fn longest_from(l: ClassLabel) -> Vec<ClassLabel> {
        let mut best: Vec<ClassLabel> = Vec::new();
        for s in successors(l) {
            let c = longest_from(s);
            if c.len() > best.len() {
                best = c;
            }
        }
        let mut out = vec![l];
        out.extend(best);
        out
    }
    ClassLabel::ALL
        .iter()
        .map(|&l| longest_from(l))
        .max_by_key(Vec::len)
        .unwrap_or_default()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `n x n` matrix with the listed `(row, col, value)` entries.
fn sparse(n: usize, entries: &[(usize, usize, f64)]) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for &(r, c, v) in entries {
        m[(r, c)] = re(v);
    }
    m
}

fn id(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Exchange of levels 0 and 1, identity elsewhere.
fn swap01(n: usize) -> CMatrix {
    let mut m = id(n);
    m[(0, 0)] = re(0.0);
    m[(1, 1)] = re(0.0);
    m[(0, 1)] = re(1.0);
    m[(1, 0)] = re(1.0);
    m
}

/// `|0><0| + |0><1|`.
fn merge01(n: usize) -> CMatrix {
    sparse(n, &[(0, 0, 1.0), (0, 1, 1.0)])
}

fn proj0(n: usize) -> CMatrix {
    sparse(n, &[(0, 0, 1.0)])
}

fn edge_witness(from: ClassLabel, to: ClassLabel, n: usize) -> Option<LocalOperation> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let (alice, bob, clare) = match (from, to) {
        (Gen224, C223Gen) => (
            id(2),
            id(2),
            sparse(n, &[(0, 0, 1.0), (1, 1, a), (1, 2, a), (2, 3, 1.0)]),
        ),
        (Gen224, C223Deg) => (
            id(2),
            id(2),
            sparse(n, &[(0, 0, 1.0), (1, 1, 1.0), (2, 3, 1.0)]),
        ),
        (C223Gen, Ghz) | (C223Deg, Ghz) => (id(2), id(2), sparse(n, &[(0, 0, 1.0), (1, 2, 1.0)])),
        (C223Gen, W) => (id(2), id(2), sparse(n, &[(1, 0, 1.0), (0, 1, 1.0 / a)])),
        (C223Deg, W) => (
            id(2),
            swap01(2),
            sparse(n, &[(0, 0, 1.0), (1, 1, 1.0), (0, 2, 1.0)]),
        ),
        (Ghz, B1) => (merge01(2), swap01(2), id(n)),
        (Ghz, B2) => (id(2), merge01(2), swap01(n)),
        (Ghz, B3) => (id(2), swap01(2), merge01(n)),
        (W, B1) => (proj0(2), id(2), id(n)),
        (W, B2) => (id(2), proj0(2), id(n)),
        (W, B3) => (id(2), id(2), proj0(n)),
        (B1, Sep) => (id(2), proj0(2), swap01(n)),
        (B2, Sep) => (proj0(2), id(2), swap01(n)),
        (B3, Sep) => (proj0(2), swap01(2), id(n)),
        _ => return None,
    };
    Some(LocalOperation::new(vec![alice, bob, clare]).expect("witness factors are well formed"))
}

/// A local operation taking the representative of `from` (in dims `(2,2,n)`)
/// onto a nonzero multiple of the representative of `to`, or `None` when
/// `to` is not below `from`. For `from == to` this is the identity.
pub fn witness_map(from: ClassLabel, to: ClassLabel, n: usize) -> Result<Option<LocalOperation>> {
    if n < from.min_clare_dim() || n > MAX_MATRIX_DIM {
        return Err(Error::IncompatibleLabel {
            label: from.name(),
            n,
        });
    }
    let Some(p) = path(from, to) else {
        return Ok(None);
    };
    let mut op = LocalOperation::identity(&[2, 2, n]);
    for w in p.windows(2) {
        let step = edge_witness(w[0], w[1], n).expect("every Hasse edge has a witness");
        op = op.then(&step)?;
    }
    Ok(Some(op))
}

/// The order as plain data, for display and serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialOrder {
    pub nodes: Vec<ClassNode>,
    pub edges: Vec<(ClassLabel, ClassLabel)>,
    pub longest_chain: Vec<ClassLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassNode {
    pub label: ClassLabel,
    pub grade: u8,
    pub signature: [usize; 3],
    pub description: &'static str,
}

impl PartialOrder {
    pub fn standard() -> Self {
        Self {
            nodes: ClassLabel::ALL
                .iter()
                .map(|&label| ClassNode {
                    label,
                    grade: label.grade(),
                    signature: label.signature(),
                    description: label.description(),
                })
                .collect(),
            edges: hasse_edges(),
            longest_chain: longest_chain(),
        }
    }

    /// Restriction to the classes that occur for Clare dimension `n`.
    pub fn for_clare_dim(n: usize) -> Self {
        let keep = ClassLabel::admissible(n);
        let mut o = Self::standard();
        o.nodes.retain(|node| keep.contains(&node.label));
        o.edges
            .retain(|(u, l)| keep.contains(u) && keep.contains(l));
        o
    }

    pub fn le(&self, lower: ClassLabel, upper: ClassLabel) -> bool {
        reachable(upper, lower)
    }
}
