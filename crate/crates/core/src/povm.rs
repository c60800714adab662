//! The Cabello (dodecahedron) and Nakamura (hexagon) POVM families.
//!
//! Every element is a weighted rank-1 projector `w (I + v·σ)/2`. Elements are
//! identified by label: two contexts that list `"B+"` refer to the same
//! element.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    dodecahedron_vertices, hexagon_vertices, projector_from_bloch, split_label, BlochVector,
    QubitOperator, VertexSet, CABELLO_PAIR_CONTEXTS, TOL,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    label: String,
    weight: Rational64,
    direction: BlochVector,
    operator: QubitOperator,
}

impl PovmElement {
    pub fn new(label: impl Into<String>, weight: Rational64, direction: BlochVector) -> Self {
        let w = weight.to_f64().expect("finite weight");
        let operator = projector_from_bloch(&direction)
            .expect("BlochVector is unit by construction")
            .scale(w);
        Self {
            label: label.into(),
            weight,
            direction,
            operator,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weight(&self) -> Rational64 {
        self.weight
    }

    pub fn weight_f64(&self) -> f64 {
        self.weight.to_f64().unwrap_or(f64::NAN)
    }

    pub fn direction(&self) -> BlochVector {
        self.direction
    }

    pub fn operator(&self) -> &QubitOperator {
        &self.operator
    }
}

/// One complete measurement: an ordered list of element labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context(Vec<String>);

impl Context {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self(labels.into_iter().map(Into::into).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.iter().any(|l| l == label)
    }
}

/// An antipodal `±` pair inside a context, in listing order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSlot {
    pub base: String,
    pub plus: String,
    pub minus: String,
    /// Direction of the `+` element.
    pub direction: BlochVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmFamily {
    name: String,
    elements: Vec<PovmElement>,
    contexts: Vec<Context>,
}

impl PovmFamily {
    /// Builds a family, checking that every context label names an element
    /// and that labels are unique.
    pub fn new(
        name: impl Into<String>,
        elements: Vec<PovmElement>,
        contexts: Vec<Context>,
    ) -> Result<Self> {
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].iter().any(|o| o.label == e.label) {
                return Err(Error::InvalidFamily(format!(
                    "duplicate label `{}`",
                    e.label
                )));
            }
        }
        for ctx in &contexts {
            for (i, l) in ctx.labels().iter().enumerate() {
                if !elements.iter().any(|e| &e.label == l) {
                    return Err(Error::MissingElement(l.clone()));
                }
                if ctx.labels()[..i].contains(l) {
                    return Err(Error::InvalidContext(format!("`{l}` listed twice")));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            elements,
            contexts,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn context(&self, index: usize) -> Result<&Context> {
        self.contexts.get(index).ok_or_else(|| {
            Error::InvalidContext(format!(
                "index {index} out of range for {} contexts",
                self.contexts.len()
            ))
        })
    }

    pub fn element(&self, label: &str) -> Result<&PovmElement> {
        self.elements
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::MissingElement(label.to_string()))
    }

    /// Number of contexts listing `label`.
    pub fn incidence(&self, label: &str) -> usize {
        self.contexts.iter().filter(|c| c.contains(label)).count()
    }

    /// Indices of the contexts listing `label`.
    pub fn contexts_of(&self, label: &str) -> Vec<usize> {
        (0..self.contexts.len())
            .filter(|&i| self.contexts[i].contains(label))
            .collect()
    }

    /// Sub-family with only the chosen contexts (and the elements they use).
    pub fn restricted_to(&self, contexts: &[usize]) -> Result<PovmFamily> {
        let ctxs: Vec<Context> = contexts
            .iter()
            .map(|&i| self.context(i).cloned())
            .collect::<Result<_>>()?;
        let elements = self
            .elements
            .iter()
            .filter(|e| ctxs.iter().any(|c| c.contains(&e.label)))
            .cloned()
            .collect();
        PovmFamily::new(self.name.clone(), elements, ctxs)
    }

    /// The `±` pairs of a context, in the order their first member is listed.
    ///
    /// Each pair must list both `X+` and `X-`, with antipodal directions and
    /// equal weights.
    pub fn context_pairs(&self, index: usize) -> Result<Vec<PairSlot>> {
        let ctx = self.context(index)?;
        let mut bases: Vec<&str> = Vec::new();
        for l in ctx.labels() {
            let (base, _) = split_label(l)
                .ok_or_else(|| Error::InvalidContext(format!("label `{l}` has no +/- suffix")))?;
            if !bases.contains(&base) {
                bases.push(base);
            }
        }
        if ctx.len() != 2 * bases.len() {
            return Err(Error::InvalidContext(format!(
                "context {} is not made of +/- pairs",
                index + 1
            )));
        }
        let mut out = Vec::with_capacity(bases.len());
        for base in bases {
            let find = |plus: bool| {
                ctx.labels()
                    .iter()
                    .find(|l| split_label(l) == Some((base, plus)))
                    .cloned()
                    .ok_or_else(|| {
                        Error::InvalidContext(format!(
                            "pair `{base}` is missing its {} member",
                            if plus { '+' } else { '-' }
                        ))
                    })
            };
            let (plus, minus) = (find(true)?, find(false)?);
            let (ep, em) = (self.element(&plus)?, self.element(&minus)?);
            if (ep.direction.dot(&em.direction) + 1.0).abs() > TOL || ep.weight != em.weight {
                return Err(Error::InvalidContext(format!(
                    "`{plus}` and `{minus}` are not an antipodal pair of equal weight"
                )));
            }
            out.push(PairSlot {
                base: base.to_string(),
                plus,
                minus,
                direction: ep.direction,
            });
        }
        Ok(out)
    }

    pub fn to_document(&self) -> FamilyDocument {
        FamilyDocument {
            name: self.name.clone(),
            elements: self
                .elements
                .iter()
                .map(|e| ElementDocument {
                    label: e.label.clone(),
                    weight: e.weight_f64(),
                    direction: e.direction,
                })
                .collect(),
            contexts: self.contexts.clone(),
        }
    }

    pub fn from_document(doc: FamilyDocument) -> Result<Self> {
        let elements = doc
            .elements
            .into_iter()
            .map(|e| {
                let w = Rational64::approximate_float(e.weight)
                    .filter(|w| *w > Rational64::from_integer(0))
                    .ok_or_else(|| {
                        Error::InvalidFamily(format!(
                            "weight {} of `{}` is not a positive rational",
                            e.weight, e.label
                        ))
                    })?;
                Ok(PovmElement::new(e.label, w, e.direction))
            })
            .collect::<Result<Vec<_>>>()?;
        PovmFamily::new(doc.name, elements, doc.contexts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("family serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FamilyDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_document(doc)
    }
}

/// Serialized form of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDocument {
    pub name: String,
    pub elements: Vec<ElementDocument>,
    pub contexts: Vec<Context>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementDocument {
    pub label: String,
    pub weight: f64,
    pub direction: BlochVector,
}

fn elements_on(vs: &VertexSet, weight: Rational64) -> Vec<PovmElement> {
    vs.labels
        .iter()
        .zip(&vs.pairs)
        .flat_map(|(letter, &(p, m))| {
            [
                PovmElement::new(format!("{letter}+"), weight, vs.vertices[p]),
                PovmElement::new(format!("{letter}-"), weight, vs.vertices[m]),
            ]
        })
        .collect()
}

fn context_of(letters: &[&str]) -> Context {
    Context::new(
        letters
            .iter()
            .flat_map(|l| [format!("{l}+"), format!("{l}-")]),
    )
}

/// Cabello's five eight-element measurements on the dodecahedron, weight 1/4.
pub fn cabello_family() -> PovmFamily {
    let vs = dodecahedron_vertices();
    let contexts = (0..5)
        .map(|k| {
            let letters: Vec<&str> = CABELLO_PAIR_CONTEXTS
                .iter()
                .filter(|(_, ctxs)| ctxs.contains(&k))
                .map(|(l, _)| *l)
                .collect();
            context_of(&letters)
        })
        .collect();
    PovmFamily::new("cabello", elements_on(&vs, Rational64::new(1, 4)), contexts)
        .expect("cabello family is well formed")
}

/// Nakamura's three four-element measurements on the hexagon, weight 1/2.
pub fn nakamura_family() -> PovmFamily {
    let vs = hexagon_vertices();
    let contexts = vec![
        context_of(&["A", "B"]),
        context_of(&["A", "C"]),
        context_of(&["B", "C"]),
    ];
    PovmFamily::new(
        "nakamura",
        elements_on(&vs, Rational64::new(1, 2)),
        contexts,
    )
    .expect("nakamura family is well formed")
}

/// Looks a built-in family up by name.
pub fn family_by_name(name: &str) -> Option<PovmFamily> {
    match name {
        "cabello" => Some(cabello_family()),
        "nakamura" => Some(nakamura_family()),
        _ => None,
    }
}

/// `‖Σ_{e∈c} ε_e − I‖_max`.
pub fn check_completeness(c: &Context, f: &PovmFamily) -> Result<f64> {
    let sum = c
        .labels()
        .iter()
        .map(|l| f.element(l).map(|e| e.operator))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<QubitOperator>();
    Ok(sum.max_abs_diff(&QubitOperator::identity()))
}

/// `Tr(ρ ε)` for a density operator `ρ`, clamped into `[0, weight]`.
pub fn born_probability(state: &QubitOperator, e: &PovmElement) -> Result<f64> {
    state.validate_density()?;
    let p = (*state * e.operator).trace().re;
    Ok(p.clamp(0.0, e.weight_f64()))
}

/// Structural and algebraic checks over a whole family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyCheck {
    pub family: String,
    pub completeness: Vec<ContextResidual>,
    pub incidence: Vec<ElementIncidence>,
    pub elements: Vec<ElementCheck>,
    pub failures: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextResidual {
    /// 1-based context number.
    pub context: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementIncidence {
    pub label: String,
    pub contexts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementCheck {
    pub label: String,
    /// Smallest eigenvalue; must be ≥ −1e-12.
    pub psd_margin: f64,
    /// `|Tr ε − w|`.
    pub trace_residual: f64,
    /// `‖(ε/w)² − ε/w‖_max`.
    pub rank_one_residual: f64,
    pub hermiticity_residual: f64,
}

/// Runs completeness, incidence (exactly two contexts per element), positivity
/// and rank-1 checks.
pub fn check_family(f: &PovmFamily) -> FamilyCheck {
    let mut failures = Vec::new();
    let completeness: Vec<ContextResidual> = f
        .contexts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let residual = check_completeness(c, f).unwrap_or(f64::INFINITY);
            if residual > TOL {
                failures.push(format!(
                    "completeness: context {} residual {residual:e}",
                    i + 1
                ));
            }
            ContextResidual {
                context: i + 1,
                residual,
            }
        })
        .collect();
    let incidence: Vec<ElementIncidence> = f
        .elements
        .iter()
        .map(|e| {
            let contexts = f.incidence(&e.label);
            if contexts != 2 {
                failures.push(format!(
                    "incidence: `{}` is in {contexts} contexts",
                    e.label
                ));
            }
            ElementIncidence {
                label: e.label.clone(),
                contexts,
            }
        })
        .collect();
    let elements: Vec<ElementCheck> = f
        .elements
        .iter()
        .map(|e| {
            let w = e.weight_f64();
            let check = ElementCheck {
                label: e.label.clone(),
                psd_margin: e.operator.hermitian_eigenvalues()[0],
                trace_residual: (e.operator.trace().re - w).abs(),
                rank_one_residual: e.operator.scale(1.0 / w).idempotence_residual(),
                hermiticity_residual: e.operator.hermiticity_residual(),
            };
            if check.psd_margin < -TOL {
                failures.push(format!("positivity: `{}`", e.label));
            }
            if check.trace_residual > TOL || check.rank_one_residual > TOL {
                failures.push(format!("rank-1 form: `{}`", e.label));
            }
            check
        })
        .collect();
    FamilyCheck {
        family: f.name.clone(),
        passed: failures.is_empty(),
        completeness,
        incidence,
        elements,
        failures,
    }
}
