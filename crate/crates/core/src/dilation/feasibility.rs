//! Symbolic check of the one-to-one extension hypothesis.
//!
//! Under the hypothesis each POVM element `X` has a single extended projector
//! `P_X` used in every context, and each context `k` gets one filler `P_k`
//! that completes the identity with zero POVM contribution. Three rules are
//! saturated in a fixed order:
//!
//! * **R1** orthogonality from a shared context: atoms listed in one context
//!   are mutually orthogonal.
//! * **R2** confinement from completeness: if `P_a` is orthogonal to some atoms
//!   of a context it is not listed in, the context's resolution of identity
//!   confines `P_a` to the span of the remaining atoms.
//! * **R3** zero-trace propagation: if `P_a` is confined to a set of sums
//!   whose non-filler summands can each be excluded (the summand is missing
//!   from one of the sums and orthogonal to every non-filler atom of that
//!   sum), `P_a` lies under the fillers of those sums. The partial trace
//!   against `ρ_A ⊗ I` is a positive map, so `P_a ≤ Σ P_k` with every
//!   `Tr_A[(ρ_A⊗I)P_k] = 0` forces `Tr_A[(ρ_A⊗I)P_a] = 0`, contradicting
//!   a nonzero `ε_a`.
//!
//! Confinement is tracked as atom sets, never as numeric subspaces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::ks::ContextHypergraph;
use crate::povm::PovmFamily;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Extended projector of a POVM element.
    Element(String),
    /// Filler of a context (0-based index).
    Filler(usize),
}

impl Atom {
    pub fn is_filler(&self) -> bool {
        matches!(self, Atom::Filler(_))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Element(l) => write!(f, "P_{l}"),
            Atom::Filler(k) => write!(f, "P{}", k + 1),
        }
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    OrthogonalityFromSharedContext,
    ConfinementFromCompleteness,
    ZeroTracePropagation,
}

/// Where a step's justification comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    /// An earlier step (1-based).
    Step(usize),
    /// Membership and resolution of identity of a context (0-based).
    Context(usize),
    /// The filler of a context has zero POVM contribution (0-based).
    ZeroTrace(usize),
    /// The element's POVM operator is nonzero.
    NonzeroElement(String),
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Premise::Step(i) => write!(f, "step {i}"),
            Premise::Context(k) => write!(f, "context {}", k + 1),
            Premise::ZeroTrace(k) => write!(f, "zero-trace P{}", k + 1),
            Premise::NonzeroElement(l) => write!(f, "nonzero {l}"),
        }
    }
}

impl Serialize for Premise {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fact {
    Orthogonal { atoms: [Atom; 2] },
    Confined { atom: Atom, within: Vec<Atom> },
    ZeroContribution { atom: Atom, within: Vec<Atom> },
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sum = |v: &[Atom]| {
            if v.is_empty() {
                "0".to_string()
            } else {
                v.iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(" + ")
            }
        };
        match self {
            Fact::Orthogonal { atoms: [a, b] } => write!(f, "{a} ⊥ {b}"),
            Fact::Confined { atom, within } => write!(f, "{atom} confined in {}", sum(within)),
            Fact::ZeroContribution { atom, within } => write!(
                f,
                "{atom} confined in {} has zero POVM contribution, contradicting nonzero ε",
                sum(within)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    /// 1-based position in the certificate.
    pub index: usize,
    pub rule: Rule,
    pub premises: Vec<Premise>,
    pub conclusion: Fact,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContradictionCertificate {
    pub family: String,
    /// Element whose POVM contribution is forced to zero.
    pub element: String,
    pub steps: Vec<Step>,
}

impl ContradictionCertificate {
    pub fn final_step(&self) -> &Step {
        self.steps.last().expect("certificates are nonempty")
    }

    /// Fillers named by the final zero-trace step, as 1-based context numbers.
    pub fn confining_fillers(&self) -> Vec<usize> {
        match &self.final_step().conclusion {
            Fact::ZeroContribution { within, .. } => within
                .iter()
                .filter_map(|a| match a {
                    Atom::Filler(k) => Some(k + 1),
                    Atom::Element(_) => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Premises refer only to earlier steps, indices are consecutive, and the
    /// last step is a zero-trace propagation on the named element.
    pub fn check_well_formed(&self) -> Result<(), String> {
        for (i, s) in self.steps.iter().enumerate() {
            if s.index != i + 1 {
                return Err(format!("step {} has index {}", i + 1, s.index));
            }
            for p in &s.premises {
                if let Premise::Step(j) = p {
                    if *j == 0 || *j >= s.index {
                        return Err(format!("step {} cites step {j}", s.index));
                    }
                }
            }
        }
        match self.steps.last().map(|s| (&s.rule, &s.conclusion)) {
            Some((
                Rule::ZeroTracePropagation,
                Fact::ZeroContribution {
                    atom: Atom::Element(l),
                    ..
                },
            )) if *l == self.element => Ok(()),
            _ => Err("last step is not a zero-trace propagation on the element".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Feasibility {
    Contradiction(ContradictionCertificate),
    Feasible {
        family: String,
        orthogonal_facts: usize,
        confinement_facts: usize,
    },
}

impl Feasibility {
    pub fn certificate(&self) -> Option<&ContradictionCertificate> {
        match self {
            Feasibility::Contradiction(c) => Some(c),
            Feasibility::Feasible { .. } => None,
        }
    }

    pub fn is_contradiction(&self) -> bool {
        self.certificate().is_some()
    }
}

#[derive(Debug, Clone)]
struct Confinement {
    context: usize,
    within: BTreeSet<usize>,
    step: usize,
}

/// Atoms, completeness groups, zero-trace set and the facts derived so far.
#[derive(Debug, Clone)]
pub struct ConstraintGraph {
    family: String,
    atoms: Vec<Atom>,
    /// Atom indices per context, filler last.
    groups: Vec<Vec<usize>>,
    nonzero: Vec<bool>,
    orthogonal: BTreeMap<(usize, usize), usize>,
    confined: BTreeMap<usize, Vec<Confinement>>,
    /// Derivation log; entry `i` is step `i + 1` before pruning.
    log: Vec<(Rule, Vec<Premise>, Fact)>,
}

impl ConstraintGraph {
    /// One atom per element label (the one-to-one hypothesis) and one filler
    /// per context. Elements with a nonzero operator are marked nonzero.
    pub fn from_family(f: &PovmFamily) -> Self {
        let labels: Vec<String> = f.elements().iter().map(|e| e.label().to_string()).collect();
        let nonzero = f
            .elements()
            .iter()
            .map(|e| e.operator().max_norm() > 0.0)
            .collect();
        let contexts: Vec<Vec<String>> = f.contexts().iter().map(|c| c.labels().to_vec()).collect();
        Self::build(f.name(), labels, nonzero, &contexts)
    }

    /// Same as [`from_family`](Self::from_family), treating every element as
    /// a nonzero POVM operator.
    pub fn from_hypergraph(name: &str, h: &ContextHypergraph) -> Self {
        let labels = h.elements().to_vec();
        let nonzero = vec![true; labels.len()];
        Self::build(name, labels, nonzero, h.contexts())
    }

    fn build(
        name: &str,
        labels: Vec<String>,
        mut nonzero: Vec<bool>,
        contexts: &[Vec<String>],
    ) -> Self {
        let n = labels.len();
        let mut atoms: Vec<Atom> = labels.into_iter().map(Atom::Element).collect();
        let mut groups = Vec::with_capacity(contexts.len());
        for (k, ctx) in contexts.iter().enumerate() {
            let mut g: Vec<usize> = ctx
                .iter()
                .map(|l| {
                    atoms[..n]
                        .iter()
                        .position(|a| matches!(a, Atom::Element(x) if x == l))
                        .expect("context labels are declared elements")
                })
                .collect();
            g.push(atoms.len());
            atoms.push(Atom::Filler(k));
            nonzero.push(false);
            groups.push(g);
        }
        Self {
            family: name.to_string(),
            atoms,
            groups,
            nonzero,
            orthogonal: BTreeMap::new(),
            confined: BTreeMap::new(),
            log: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn key(a: usize, b: usize) -> (usize, usize) {
        (a.min(b), a.max(b))
    }

    fn orth_step(&self, a: usize, b: usize) -> Option<usize> {
        self.orthogonal.get(&Self::key(a, b)).copied()
    }

    fn push(&mut self, rule: Rule, premises: Vec<Premise>, fact: Fact) -> usize {
        self.log.push((rule, premises, fact));
        self.log.len()
    }

    fn filler_of(&self, atom: usize) -> Option<usize> {
        match self.atoms[atom] {
            Atom::Filler(k) => Some(k),
            Atom::Element(_) => None,
        }
    }

    fn rule_orthogonality(&mut self) -> bool {
        let mut changed = false;
        for k in 0..self.groups.len() {
            let g = self.groups[k].clone();
            for i in 0..g.len() {
                for j in i + 1..g.len() {
                    let key = Self::key(g[i], g[j]);
                    if self.orthogonal.contains_key(&key) {
                        continue;
                    }
                    let fact = Fact::Orthogonal {
                        atoms: [self.atoms[key.0].clone(), self.atoms[key.1].clone()],
                    };
                    let step = self.push(
                        Rule::OrthogonalityFromSharedContext,
                        vec![Premise::Context(k)],
                        fact,
                    );
                    self.orthogonal.insert(key, step);
                    changed = true;
                }
            }
        }
        changed
    }

    fn element_atoms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.atoms.len()).filter(|&a| !self.atoms[a].is_filler())
    }

    fn rule_confinement(&mut self) -> bool {
        let mut changed = false;
        let elements: Vec<usize> = self.element_atoms().collect();
        for a in elements {
            for k in 0..self.groups.len() {
                let g = &self.groups[k];
                if g.contains(&a) {
                    continue;
                }
                if self
                    .confined
                    .get(&a)
                    .is_some_and(|v| v.iter().any(|c| c.context == k))
                {
                    continue;
                }
                let orth: Vec<(usize, usize)> = g
                    .iter()
                    .filter_map(|&b| self.orth_step(a, b).map(|s| (b, s)))
                    .collect();
                if orth.is_empty() {
                    continue;
                }
                let within: BTreeSet<usize> = g
                    .iter()
                    .copied()
                    .filter(|b| !orth.iter().any(|(o, _)| o == b))
                    .collect();
                let mut premises = vec![Premise::Context(k)];
                premises.extend(orth.iter().map(|&(_, s)| Premise::Step(s)));
                let fact = Fact::Confined {
                    atom: self.atoms[a].clone(),
                    within: within.iter().map(|&i| self.atoms[i].clone()).collect(),
                };
                let step = self.push(Rule::ConfinementFromCompleteness, premises, fact);
                self.confined.entry(a).or_default().push(Confinement {
                    context: k,
                    within,
                    step,
                });
                changed = true;
            }
        }
        changed
    }

    /// Tries every subset of `a`'s confinements, smallest first, for one whose
    /// element summands can all be excluded.
    fn rule_zero_trace(&mut self) -> Option<usize> {
        let elements: Vec<usize> = self.element_atoms().filter(|&a| self.nonzero[a]).collect();
        for a in elements {
            let Some(list) = self.confined.get(&a).cloned() else {
                continue;
            };
            let m = list.len();
            let mut subsets: Vec<u32> = (1..(1u32 << m)).collect();
            subsets.sort_by_key(|s| (s.count_ones(), *s));
            for mask in subsets {
                let chosen: Vec<&Confinement> = (0..m)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| &list[i])
                    .collect();
                if let Some(orth_steps) = self.exclusion(&chosen) {
                    let fillers: BTreeSet<usize> = chosen
                        .iter()
                        .flat_map(|c| c.within.iter().copied())
                        .filter(|&x| self.filler_of(x).is_some())
                        .collect();
                    let mut premises: Vec<Premise> =
                        chosen.iter().map(|c| Premise::Step(c.step)).collect();
                    premises.extend(orth_steps.into_iter().map(Premise::Step));
                    premises.extend(
                        fillers
                            .iter()
                            .map(|&x| Premise::ZeroTrace(self.filler_of(x).expect("filler"))),
                    );
                    let label = match &self.atoms[a] {
                        Atom::Element(l) => l.clone(),
                        Atom::Filler(_) => unreachable!(),
                    };
                    premises.push(Premise::NonzeroElement(label));
                    let fact = Fact::ZeroContribution {
                        atom: self.atoms[a].clone(),
                        within: fillers.iter().map(|&x| self.atoms[x].clone()).collect(),
                    };
                    return Some(self.push(Rule::ZeroTracePropagation, premises, fact));
                }
            }
        }
        None
    }

    /// Orthogonality steps that exclude every element summand of the chosen
    /// confinements, or `None` if some summand cannot be excluded.
    fn exclusion(&self, chosen: &[&Confinement]) -> Option<Vec<usize>> {
        let summands: BTreeSet<usize> = chosen
            .iter()
            .flat_map(|c| c.within.iter().copied())
            .filter(|&x| !self.atoms[x].is_filler())
            .collect();
        let mut steps = BTreeSet::new();
        for q in summands {
            let witness = chosen.iter().find_map(|c| {
                if c.within.contains(&q) {
                    return None;
                }
                c.within
                    .iter()
                    .filter(|&&x| !self.atoms[x].is_filler())
                    .map(|&x| self.orth_step(q, x))
                    .collect::<Option<Vec<usize>>>()
            })?;
            steps.extend(witness);
        }
        Some(steps.into_iter().collect())
    }

    /// Saturates R1 and R2 to a fixpoint, then applies R3.
    pub fn saturate(mut self) -> Feasibility {
        loop {
            let a = self.rule_orthogonality();
            let b = self.rule_confinement();
            if !a && !b {
                break;
            }
        }
        match self.rule_zero_trace() {
            Some(last) => Feasibility::Contradiction(self.certificate(last)),
            None => Feasibility::Feasible {
                family: self.family,
                orthogonal_facts: self.orthogonal.len(),
                confinement_facts: self.confined.values().map(Vec::len).sum(),
            },
        }
    }

    /// Keeps only the steps the final one depends on, renumbered in order.
    fn certificate(&self, last: usize) -> ContradictionCertificate {
        let mut needed = BTreeSet::new();
        let mut stack = vec![last];
        while let Some(s) = stack.pop() {
            if needed.insert(s) {
                for p in &self.log[s - 1].1 {
                    if let Premise::Step(j) = p {
                        stack.push(*j);
                    }
                }
            }
        }
        let renumber: BTreeMap<usize, usize> = needed
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i + 1))
            .collect();
        let steps = needed
            .iter()
            .map(|&s| {
                let (rule, premises, fact) = &self.log[s - 1];
                Step {
                    index: renumber[&s],
                    rule: *rule,
                    premises: premises
                        .iter()
                        .map(|p| match p {
                            Premise::Step(j) => Premise::Step(renumber[j]),
                            other => other.clone(),
                        })
                        .collect(),
                    conclusion: fact.clone(),
                    statement: fact.to_string(),
                }
            })
            .collect();
        let element = match &self.log[last - 1].2 {
            Fact::ZeroContribution {
                atom: Atom::Element(l),
                ..
            } => l.clone(),
            _ => unreachable!("last step is a zero-trace propagation"),
        };
        ContradictionCertificate {
            family: self.family.clone(),
            element,
            steps,
        }
    }
}

/// Tests whether the family admits one extended projector per element.
pub fn one_to_one_feasibility(f: &PovmFamily) -> Feasibility {
    ConstraintGraph::from_family(f).saturate()
}
