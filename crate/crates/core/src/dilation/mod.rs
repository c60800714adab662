//! Naimark dilations of the contextual POVMs.
//!
//! The joint space is ancilla ⊗ qubit (ancilla first) and POVM elements are
//! recovered as `ε = Tr_A[(ρ_A ⊗ I) P]`. Besides building and checking the
//! sequential dilation, this module audits which elements end up with
//! different extended projectors in different contexts, and
//! [`feasibility`] decides symbolically whether a one-to-one extension can
//! exist at all.

pub mod feasibility;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{projector_from_bloch, TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_projector, hermiticity_residual, idempotence_residual, identity, kron, max_abs_diff,
    max_norm, outer, reduce_with_ancilla, unitarity_residual, CMatrix, QUBIT_DIM,
};
use crate::povm::PovmFamily;

pub use feasibility::{
    one_to_one_feasibility, Atom, ConstraintGraph, ContradictionCertificate, Fact, Feasibility,
    Premise, Rule, Step,
};

/// Operator on the `2N`-dimensional ancilla ⊗ qubit space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOperator(pub CMatrix);

impl ExtendedOperator {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn approx_eq(&self, other: &ExtendedOperator, tol: f64) -> bool {
        self.0.shape() == other.0.shape() && max_abs_diff(&self.0, &other.0) <= tol
    }
}

/// A projective measurement on ancilla ⊗ qubit realizing one context.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationScheme {
    pub family: String,
    /// 0-based context index.
    pub context: usize,
    pub ancilla_dim: usize,
    pub ancilla_state: CMatrix,
    /// Extended projector per element label, in context listing order.
    pub projectors: Vec<(String, ExtendedOperator)>,
    /// Extra projectors that complete the identity without contributing.
    pub fillers: Vec<ExtendedOperator>,
    /// Ancilla slot given to each `±` pair, by pair base letter.
    pub slots: Vec<(String, usize)>,
}

impl DilationScheme {
    pub fn projector(&self, label: &str) -> Option<&ExtendedOperator> {
        self.projectors
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p)
    }
}

/// `|φ⟩⟨φ|` for the uniform superposition `|φ⟩ = Σ|i⟩/√N`.
pub fn uniform_ancilla_state(n: usize) -> CMatrix {
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    outer(&vec![amp; n])
}

/// Sequential dilation with the `k`-th listed pair on ancilla slot `k`.
pub fn sequential_dilation(f: &PovmFamily, context: usize) -> Result<DilationScheme> {
    let n = f.context_pairs(context)?.len();
    let slots: Vec<usize> = (0..n).collect();
    sequential_dilation_with_slots(f, context, &slots)
}

/// Sequential dilation with an explicit slot for each pair (in listing order).
///
/// The element `X±` on slot `k` is extended to `|k⟩⟨k| ⊗ (I ± v_X·σ)/2`, and
/// the ancilla is prepared in the uniform superposition over `N` = pair count
/// slots. The `2N` projectors already resolve the identity, so no fillers.
pub fn sequential_dilation_with_slots(
    f: &PovmFamily,
    context: usize,
    slots: &[usize],
) -> Result<DilationScheme> {
    let pairs = f.context_pairs(context)?;
    let n = pairs.len();
    if n == 0 {
        return Err(Error::InvalidContext(format!(
            "context {} is empty",
            context + 1
        )));
    }
    let mut seen = vec![false; n];
    if slots.len() != n
        || slots
            .iter()
            .any(|&s| s >= n || std::mem::replace(&mut seen[s], true))
    {
        return Err(Error::InvalidContext(format!(
            "slots {slots:?} are not a permutation of 0..{n}"
        )));
    }
    let weight = f.element(&pairs[0].plus)?.weight_f64();
    if (weight * n as f64 - 1.0).abs() > TOL {
        return Err(Error::InvalidContext(format!(
            "{n} pairs of weight {weight} cannot be dilated with a uniform ancilla"
        )));
    }

    let ancilla_state = uniform_ancilla_state(n);
    let mut by_label = Vec::with_capacity(2 * n);
    for (pair, &slot) in pairs.iter().zip(slots) {
        let anc = basis_projector(n, slot);
        let plus = projector_from_bloch(&pair.direction)?.to_matrix();
        let minus = projector_from_bloch(&pair.direction.antipode())?.to_matrix();
        by_label.push((pair.plus.clone(), ExtendedOperator(kron(&anc, &plus))));
        by_label.push((pair.minus.clone(), ExtendedOperator(kron(&anc, &minus))));
    }
    let ctx = f.context(context)?;
    let projectors = ctx
        .labels()
        .iter()
        .map(|l| {
            let (_, p) = by_label
                .iter()
                .find(|(x, _)| x == l)
                .expect("label from context");
            (l.clone(), p.clone())
        })
        .collect();
    Ok(DilationScheme {
        family: f.name().to_string(),
        context,
        ancilla_dim: n,
        ancilla_state,
        projectors,
        fillers: Vec::new(),
        slots: pairs
            .iter()
            .map(|p| p.base.clone())
            .zip(slots.iter().copied())
            .collect(),
    })
}

/// Sequential dilations of every context of the family.
pub fn sequential_dilations(f: &PovmFamily) -> Result<Vec<DilationScheme>> {
    (0..f.contexts().len())
        .map(|c| sequential_dilation(f, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementResidual {
    pub label: String,
    /// `‖Tr_A[(ρ_A⊗I)P] − ε‖_max`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationResiduals {
    /// 1-based context number.
    pub context: usize,
    pub ancilla_dim: usize,
    pub elements: Vec<ElementResidual>,
    /// `‖Tr_A[(ρ_A⊗I)F]‖_max` per filler.
    pub fillers: Vec<f64>,
    /// Largest `‖P_i P_j‖_max` over distinct projectors.
    pub orthogonality: f64,
    /// `‖Σ P − I‖_max`.
    pub completeness: f64,
    /// Largest idempotence or hermiticity defect.
    pub projector: f64,
}

impl DilationResiduals {
    pub fn max(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.residual)
            .chain(self.fillers.iter().copied())
            .chain([self.orthogonality, self.completeness, self.projector])
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

/// Checks a scheme against the POVM: partial-trace relation per element,
/// zero contribution of fillers, mutual orthogonality and completeness.
pub fn verify_dilation(
    s: &DilationScheme,
    f: &PovmFamily,
    context: usize,
) -> Result<DilationResiduals> {
    let ctx = f.context(context)?;
    let n = s.ancilla_dim;
    let dim = n * QUBIT_DIM;
    if s.ancilla_state.shape() != (n, n) {
        return Err(Error::InvalidScheme(format!(
            "ancilla state is {}x{}, expected {n}x{n}",
            s.ancilla_state.nrows(),
            s.ancilla_state.ncols()
        )));
    }
    let all: Vec<&CMatrix> = s
        .projectors
        .iter()
        .map(|(_, p)| &p.0)
        .chain(s.fillers.iter().map(|p| &p.0))
        .collect();
    if let Some(bad) = all.iter().find(|m| m.shape() != (dim, dim)) {
        return Err(Error::InvalidScheme(format!(
            "projector is {}x{}, expected {dim}x{dim}",
            bad.nrows(),
            bad.ncols()
        )));
    }
    let mut scheme_labels: Vec<&str> = s.projectors.iter().map(|(l, _)| l.as_str()).collect();
    let mut ctx_labels: Vec<&str> = ctx.labels().iter().map(String::as_str).collect();
    scheme_labels.sort_unstable();
    ctx_labels.sort_unstable();
    if scheme_labels != ctx_labels {
        return Err(Error::InvalidScheme(format!(
            "scheme labels {scheme_labels:?} do not match context {}",
            context + 1
        )));
    }

    let elements = s
        .projectors
        .iter()
        .map(|(label, p)| {
            let eps = f.element(label)?.operator().to_matrix();
            let reduced = reduce_with_ancilla(&s.ancilla_state, &p.0);
            Ok(ElementResidual {
                label: label.clone(),
                residual: max_abs_diff(&reduced, &eps),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fillers = s
        .fillers
        .iter()
        .map(|p| max_norm(&reduce_with_ancilla(&s.ancilla_state, &p.0)))
        .collect();
    let mut orthogonality: f64 = 0.0;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            orthogonality = orthogonality.max(max_norm(&(all[i] * all[j])));
        }
    }
    let sum = all.iter().fold(CMatrix::zeros(dim, dim), |acc, p| acc + *p);
    let completeness = max_abs_diff(&sum, &identity(dim));
    let projector = all
        .iter()
        .map(|p| idempotence_residual(p).max(hermiticity_residual(p)))
        .fold(0.0, f64::max);

    Ok(DilationResiduals {
        context: context + 1,
        ancilla_dim: n,
        elements,
        fillers,
        orthogonality,
        completeness,
        projector,
    })
}

/// Evaluates both sides of `Tr((UρU†)P) = Tr(ρ(U†PU))`.
pub fn shuffle_identity_check(rho: &CMatrix, p: &CMatrix, u: &CMatrix) -> Result<(f64, f64)> {
    let dim = rho.nrows();
    for m in [rho, p, u] {
        if m.shape() != (dim, dim) {
            return Err(Error::InvalidScheme(format!(
                "dimension mismatch: {}x{} vs {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let residual = unitarity_residual(u);
    if residual > TOL {
        return Err(Error::InvalidUnitary { residual });
    }
    let ud = u.adjoint();
    let lhs = (u * rho * &ud * p).trace().re;
    let rhs = (rho * (&ud * p * u)).trace().re;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub label: String,
    /// 1-based context numbers.
    pub contexts: (usize, usize),
    pub equal: bool,
}

/// Compares, for every element listed in two schemes, its two extended
/// projectors entrywise (tolerance 1e-12).
pub fn extension_audit(f: &PovmFamily, schemes: &[DilationScheme]) -> Result<Vec<AuditEntry>> {
    if let Some(first) = schemes.first() {
        for s in &schemes[1..] {
            if s.ancilla_dim != first.ancilla_dim {
                return Err(Error::IncomparableSchemes(format!(
                    "ancilla dimensions {} and {}",
                    first.ancilla_dim, s.ancilla_dim
                )));
            }
            if max_abs_diff(&s.ancilla_state, &first.ancilla_state) > TOL {
                return Err(Error::IncomparableSchemes(
                    "schemes prepare different ancilla states".into(),
                ));
            }
        }
    }
    let mut out = Vec::new();
    for e in f.elements() {
        let holders: Vec<(&DilationScheme, &ExtendedOperator)> = schemes
            .iter()
            .filter_map(|s| s.projector(e.label()).map(|p| (s, p)))
            .collect();
        for i in 0..holders.len() {
            for j in i + 1..holders.len() {
                let (si, pi) = holders[i];
                let (sj, pj) = holders[j];
                out.push(AuditEntry {
                    label: e.label().to_string(),
                    contexts: (si.context + 1, sj.context + 1),
                    equal: pi.approx_eq(pj, TOL),
                });
            }
        }
    }
    Ok(out)
}

/// Summary of the audit over every per-context slot assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExhaustiveAudit {
    pub family: String,
    pub assignments_checked: u64,
    /// Assignments under which every shared element keeps one projector.
    pub mismatch_free: u64,
    /// Fewest mismatched audit rows over all assignments.
    pub min_mismatched: usize,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Runs the extension audit over every combination of per-context slot
/// permutations (`N!` per context).
///
/// Each extended projector is built once per (context, permutation); the
/// pairwise comparisons are tabulated from the actual matrices, then every
/// combination is scored from the table.
pub fn exhaustive_extension_audit(f: &PovmFamily) -> Result<ExhaustiveAudit> {
    let k = f.contexts().len();
    let n = f.context_pairs(0)?.len();
    let perms = permutations(n);

    // schemes[c][p]
    let schemes: Vec<Vec<DilationScheme>> = (0..k)
        .map(|c| {
            perms
                .iter()
                .map(|p| sequential_dilation_with_slots(f, c, p))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    // Shared (label, c1, c2) triples and their equality tables eq[p1][p2].
    struct Shared {
        c1: usize,
        c2: usize,
        eq: Vec<Vec<bool>>,
    }
    let mut shared = Vec::new();
    for e in f.elements() {
        let cs = f.contexts_of(e.label());
        for i in 0..cs.len() {
            for j in i + 1..cs.len() {
                let (c1, c2) = (cs[i], cs[j]);
                let eq = schemes[c1]
                    .iter()
                    .map(|s1| {
                        let a = s1.projector(e.label()).expect("listed");
                        schemes[c2]
                            .iter()
                            .map(|s2| a.approx_eq(s2.projector(e.label()).expect("listed"), TOL))
                            .collect()
                    })
                    .collect();
                shared.push(Shared { c1, c2, eq });
            }
        }
    }

    let np = perms.len() as u64;
    let total = np.pow(k as u32);
    let (mismatch_free, min_mismatched) = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut choice = vec![0usize; k];
            let mut rest = code;
            for slot in choice.iter_mut().rev() {
                *slot = (rest % np) as usize;
                rest /= np;
            }
            let bad = shared
                .iter()
                .filter(|s| !s.eq[choice[s.c1]][choice[s.c2]])
                .count();
            (u64::from(bad == 0), bad)
        })
        .reduce(|| (0, usize::MAX), |a, b| (a.0 + b.0, a.1.min(b.1)));

    Ok(ExhaustiveAudit {
        family: f.name().to_string(),
        assignments_checked: total,
        mismatch_free,
        min_mismatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{projector_from_bloch, BlochVector};
    use crate::povm::{cabello_family, nakamura_family};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nakamura_first_context_layout() {
        let f = nakamura_family();
        let s = sequential_dilation(&f, 0).unwrap();
        assert_eq!(s.ancilla_dim, 2);
        assert_eq!(s.projectors.len(), 4);
        let a = f.element("A+").unwrap().direction();
        let expect = kron(
            &basis_projector(2, 0),
            &projector_from_bloch(&a).unwrap().to_matrix(),
        );
        assert!(max_abs_diff(&s.projector("A+").unwrap().0, &expect) < TOL);
        let b = f.element("B-").unwrap().direction();
        let expect = kron(
            &basis_projector(2, 1),
            &projector_from_bloch(&b).unwrap().to_matrix(),
        );
        assert!(max_abs_diff(&s.projector("B-").unwrap().0, &expect) < TOL);

        let reduced = reduce_with_ancilla(&s.ancilla_state, &s.projector("A+").unwrap().0);
        let eps = f.element("A+").unwrap().operator().to_matrix();
        assert!(max_abs_diff(&reduced, &eps) < TOL);

        let r = verify_dilation(&s, &f, 0).unwrap();
        assert!(r.passes(TOL), "{r:?}");
        assert!(r.completeness < TOL);
    }

    #[test]
    fn wrong_ancilla_state_doubles_slot_zero() {
        let f = nakamura_family();
        let mut s = sequential_dilation(&f, 0).unwrap();
        s.ancilla_state = basis_projector(2, 0);
        let r = verify_dilation(&s, &f, 0).unwrap();
        for e in &r.elements {
            let eps = f.element(&e.label).unwrap().operator();
            // slot-0 elements come out as A± instead of A±/2, slot-1 ones vanish
            let expect = eps.max_norm();
            assert!(
                (e.residual - expect).abs() < TOL,
                "{}: {}",
                e.label,
                e.residual
            );
        }
        // A+ is |0><0|: full projector minus half of it
        let a = r.elements.iter().find(|e| e.label == "A+").unwrap();
        assert!((a.residual - 0.5).abs() < TOL);
    }

    #[test]
    fn swapped_projectors_are_flagged() {
        let f = nakamura_family();
        let mut s = sequential_dilation(&f, 0).unwrap();
        let tmp = s.projectors[0].1.clone();
        s.projectors[0].1 = s.projectors[2].1.clone();
        s.projectors[2].1 = tmp;
        let r = verify_dilation(&s, &f, 0).unwrap();
        let bad: Vec<&str> = r
            .elements
            .iter()
            .filter(|e| e.residual > TOL)
            .map(|e| e.label.as_str())
            .collect();
        assert_eq!(bad, ["A+", "B+"]);
        assert!(r.orthogonality < TOL && r.completeness < TOL);
    }

    #[test]
    fn dimension_mismatch_is_invalid() {
        let f = nakamura_family();
        let mut s = sequential_dilation(&f, 0).unwrap();
        s.ancilla_state = uniform_ancilla_state(4);
        assert!(matches!(
            verify_dilation(&s, &f, 0),
            Err(Error::InvalidScheme(_))
        ));
        let s = sequential_dilation(&f, 0).unwrap();
        assert!(matches!(
            verify_dilation(&s, &f, 1),
            Err(Error::InvalidScheme(_))
        ));
    }

    #[test]
    fn fillers_are_checked() {
        let f = nakamura_family();
        let mut s = sequential_dilation(&f, 0).unwrap();
        // |ψ⟩ = (|0⟩ − |1⟩)/√2 on the ancilla is orthogonal to the uniform state
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let anti = outer(&[Complex64::new(h, 0.0), Complex64::new(-h, 0.0)]);
        s.fillers.push(ExtendedOperator(kron(&anti, &identity(2))));
        let r = verify_dilation(&s, &f, 0).unwrap();
        assert_eq!(r.fillers.len(), 1);
        assert!(r.fillers[0] < TOL);
        // the filler overlaps the existing projectors, so completeness breaks
        assert!(r.completeness > 0.1);
    }

    #[test]
    fn all_sequential_dilations_verify() {
        for f in [nakamura_family(), cabello_family()] {
            for (c, s) in sequential_dilations(&f).unwrap().iter().enumerate() {
                let r = verify_dilation(s, &f, c).unwrap();
                assert!(r.passes(TOL), "{} context {}: {}", f.name(), c + 1, r.max());
            }
        }
    }

    #[test]
    fn shuffle_identity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = crate::linalg::random_density(4, &mut rng);
        let p = crate::linalg::random_projector(4, 2, &mut rng);
        let (a, b) = shuffle_identity_check(&rho, &p, &identity(4)).unwrap();
        let direct = (&rho * &p).trace().re;
        assert_eq!(a, direct);
        assert!((b - direct).abs() < TOL);

        let mut swap = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = Complex64::new(1.0, 0.0);
        }
        let (a, b) = shuffle_identity_check(&rho, &p, &swap).unwrap();
        assert!((a - b).abs() < TOL);

        let not_unitary = identity(4) * Complex64::new(2.0, 0.0);
        assert!(matches!(
            shuffle_identity_check(&rho, &p, &not_unitary),
            Err(Error::InvalidUnitary { .. })
        ));
    }

    #[test]
    fn nakamura_audit_flags_b() {
        let f = nakamura_family();
        let schemes = sequential_dilations(&f).unwrap();
        let audit = extension_audit(&f, &schemes).unwrap();
        assert_eq!(audit.len(), 6);
        let flagged: Vec<&str> = audit
            .iter()
            .filter(|e| !e.equal)
            .map(|e| e.label.as_str())
            .collect();
        assert_eq!(flagged, ["B+", "B-"]);
        let b = audit.iter().find(|e| e.label == "B+").unwrap();
        assert_eq!(b.contexts, (1, 3));
    }

    #[test]
    fn single_context_audit_is_empty() {
        let f = nakamura_family().restricted_to(&[0]).unwrap();
        let schemes = sequential_dilations(&f).unwrap();
        assert!(extension_audit(&f, &schemes).unwrap().is_empty());
    }

    #[test]
    fn audit_rejects_mixed_ancillas() {
        let nk = nakamura_family();
        let cb = cabello_family();
        let schemes = vec![
            sequential_dilation(&nk, 0).unwrap(),
            sequential_dilation(&cb, 0).unwrap(),
        ];
        assert!(matches!(
            extension_audit(&nk, &schemes),
            Err(Error::IncomparableSchemes(_))
        ));
    }

    #[test]
    fn slot_validation() {
        let f = nakamura_family();
        assert!(sequential_dilation_with_slots(&f, 0, &[0, 0]).is_err());
        assert!(sequential_dilation_with_slots(&f, 0, &[1]).is_err());
        assert!(sequential_dilation_with_slots(&f, 0, &[1, 0]).is_ok());
        assert!(matches!(
            sequential_dilation(&f, 7),
            Err(Error::InvalidContext(_))
        ));
    }

    #[test]
    fn permutations_are_complete() {
        assert_eq!(permutations(2), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn nakamura_exhaustive_audit() {
        let a = exhaustive_extension_audit(&nakamura_family()).unwrap();
        assert_eq!(a.assignments_checked, 8);
        assert_eq!(a.mismatch_free, 0);
        assert!(a.min_mismatched >= 1);
    }

    #[test]
    fn pair_directions_survive_projection() {
        let v = BlochVector::new(0.6, 0.0, 0.8).unwrap();
        let p = projector_from_bloch(&v).unwrap().to_matrix();
        let ext = kron(&basis_projector(2, 1), &p);
        assert!(idempotence_residual(&ext) < TOL);
    }
}
