//! Noncontextual 0/1 colorability of element/context hypergraphs.
//!
//! An assignment is valid when every context holds exactly one element with
//! value 1. Two independent routes decide colorability: exhaustive
//! enumeration and the parity (double counting) obstruction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::povm::PovmFamily;

/// Largest element count the exhaustive search accepts.
pub const MAX_ELEMENTS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextHypergraph {
    elements: Vec<String>,
    contexts: Vec<Vec<String>>,
}

impl ContextHypergraph {
    pub fn new(elements: Vec<String>, contexts: Vec<Vec<String>>) -> Result<Self> {
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].contains(e) {
                return Err(Error::InvalidContext(format!(
                    "element `{e}` declared twice"
                )));
            }
        }
        for ctx in &contexts {
            for (i, l) in ctx.iter().enumerate() {
                if !elements.contains(l) {
                    return Err(Error::MissingElement(l.clone()));
                }
                if ctx[..i].contains(l) {
                    return Err(Error::InvalidContext(format!(
                        "`{l}` repeated in a context"
                    )));
                }
            }
        }
        Ok(Self { elements, contexts })
    }

    /// Elements are taken from the contexts in first-appearance order.
    pub fn from_contexts(contexts: Vec<Vec<String>>) -> Result<Self> {
        let mut elements: Vec<String> = Vec::new();
        for l in contexts.iter().flatten() {
            if !elements.contains(l) {
                elements.push(l.clone());
            }
        }
        Self::new(elements, contexts)
    }

    pub fn from_family(f: &PovmFamily) -> Self {
        Self {
            elements: f.elements().iter().map(|e| e.label().to_string()).collect(),
            contexts: f.contexts().iter().map(|c| c.labels().to_vec()).collect(),
        }
    }

    /// Parses one context per line, labels separated by commas. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut contexts = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let labels: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if labels.iter().any(|l| l.is_empty()) {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "empty label".into(),
                });
            }
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(Error::Parse {
                        line: n + 1,
                        message: format!("`{l}` repeated in a context"),
                    });
                }
            }
            contexts.push(labels);
        }
        if contexts.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "no contexts".into(),
            });
        }
        Self::from_contexts(contexts)
    }

    pub fn to_text(&self) -> String {
        self.contexts
            .iter()
            .map(|c| c.join(","))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn contexts(&self) -> &[Vec<String>] {
        &self.contexts
    }

    pub fn multiplicity(&self, label: &str) -> usize {
        self.contexts
            .iter()
            .filter(|c| c.iter().any(|l| l == label))
            .count()
    }
}

/// A 0/1 value per element, keyed by label.
pub type Assignment = BTreeMap<String, u8>;

/// Double-counting certificate: every element lies in exactly `multiplicity`
/// contexts and the context count is not a multiple of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityCertificate {
    pub context_count: usize,
    pub multiplicity: usize,
    pub argument: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorabilityVerdict {
    pub colorable: bool,
    pub valid_count: u64,
    pub total_assignments: u64,
    pub witness: Option<Assignment>,
    pub obstruction: Option<ParityCertificate>,
}

/// Returns a certificate when every element sits in exactly two contexts and
/// the number of contexts is odd.
///
/// Summing "ones per context" over contexts gives the context count, while
/// summing over 1-valued elements gives twice their number: an odd count
/// cannot be even.
pub fn parity_obstruction(h: &ContextHypergraph) -> Option<ParityCertificate> {
    let k = h.contexts.len();
    let all_twice = h.elements.iter().all(|e| h.multiplicity(e) == 2);
    (all_twice && k % 2 == 1).then(|| ParityCertificate {
        context_count: k,
        multiplicity: 2,
        argument: format!(
            "a valid assignment puts exactly one 1 in each of the {k} contexts, \
             so incidences of 1-valued elements total {k}; each element lies in \
             exactly 2 contexts, so the same total is even; {k} is odd"
        ),
    })
}

/// Context masks over the label-sorted element order, most significant bit
/// first, so increasing integers walk assignments lexicographically.
fn masks(h: &ContextHypergraph) -> (Vec<&String>, Vec<u32>) {
    let mut sorted: Vec<&String> = h.elements.iter().collect();
    sorted.sort();
    let n = sorted.len();
    let bit = |label: &str| {
        let i = sorted
            .iter()
            .position(|s| s.as_str() == label)
            .expect("declared");
        1u32 << (n - 1 - i)
    };
    let ctx = h
        .contexts
        .iter()
        .map(|c| c.iter().map(|l| bit(l)).fold(0, |a, b| a | b))
        .collect();
    (sorted, ctx)
}

const SHARD_BITS: u32 = 16;

fn scan(range: std::ops::Range<u64>, ctx: &[u32]) -> (u64, Option<u64>) {
    let mut count = 0;
    let mut first = None;
    for a in range {
        let a32 = a as u32;
        if ctx.iter().all(|&m| (a32 & m).count_ones() == 1) {
            count += 1;
            first.get_or_insert(a);
        }
    }
    (count, first)
}

/// Exhaustive search over all `2^n` assignments on the global rayon pool.
pub fn enumerate_assignments(h: &ContextHypergraph) -> Result<ColorabilityVerdict> {
    let n = h.elements.len();
    if n > MAX_ELEMENTS {
        return Err(Error::SizeLimit {
            elements: n,
            limit: MAX_ELEMENTS,
        });
    }
    let (sorted, ctx) = masks(h);
    let total = 1u64 << n;
    let shard = 1u64 << SHARD_BITS;
    let shards = total.div_ceil(shard);

    let (valid_count, first) = (0..shards)
        .into_par_iter()
        .map(|s| scan(s * shard..((s + 1) * shard).min(total), &ctx))
        .reduce(
            || (0, None),
            |(c1, w1), (c2, w2)| {
                let w = match (w1, w2) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                (c1 + c2, w)
            },
        );

    let witness = first.map(|a| {
        sorted
            .iter()
            .enumerate()
            .map(|(i, l)| ((*l).clone(), ((a >> (n - 1 - i)) & 1) as u8))
            .collect()
    });
    Ok(ColorabilityVerdict {
        colorable: valid_count > 0,
        valid_count,
        total_assignments: total,
        witness,
        obstruction: parity_obstruction(h),
    })
}

/// [`enumerate_assignments`] on a dedicated pool of `workers` threads. The
/// verdict does not depend on the worker count.
pub fn enumerate_assignments_with_workers(
    h: &ContextHypergraph,
    workers: usize,
) -> Result<ColorabilityVerdict> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Range(e.to_string()))?;
    pool.install(|| enumerate_assignments(h))
}

/// True when `a` gives every context exactly one element valued 1.
pub fn is_valid_assignment(h: &ContextHypergraph, a: &Assignment) -> bool {
    h.contexts.iter().all(|c| {
        c.iter()
            .filter(|l| a.get(l.as_str()).copied() == Some(1))
            .count()
            == 1
    })
}
