//! Bloch-sphere geometry: unit directions, qubit projectors and the two vertex
//! sets (dodecahedron and hexagon) the contextual POVMs are built on.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Tolerance for closed-form algebraic identities.
pub const TOL: f64 = 1e-12;

/// A unit 3-vector. Construction enforces `|‖v‖² − 1| ≤ 1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > TOL {
            return Err(Error::InvalidDirection { norm: n2.sqrt() });
        }
        Ok(Self { x, y, z })
    }

    /// Rescales an arbitrary nonzero vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub const fn north() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn antipode(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Angle to another direction, in radians.
    pub fn angle_to(&self, other: &BlochVector) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;

    fn neg(self) -> BlochVector {
        self.antipode()
    }
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        v.to_array()
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A 2×2 complex operator on the qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitOperator(Matrix2<Complex64>);

impl QubitOperator {
    pub fn from_entries(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self(Matrix2::new(a11, a12, a21, a22))
    }

    pub fn zero() -> Self {
        Self(Matrix2::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    /// `(I + v·σ)/2`.
    fn half_bloch(v: &BlochVector) -> Self {
        Self::from_entries(
            c((1.0 + v.z) / 2.0, 0.0),
            c(v.x / 2.0, -v.y / 2.0),
            c(v.x / 2.0, v.y / 2.0),
            c((1.0 - v.z) / 2.0, 0.0),
        )
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        [
            [self.0[(0, 0)], self.0[(0, 1)]],
            [self.0[(1, 0)], self.0[(1, 1)]],
        ]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self(self.0 * c(k, 0.0))
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &QubitOperator) -> f64 {
        (*self - *other).max_norm()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn idempotence_residual(&self) -> f64 {
        self.max_abs_diff(&(*self * *self))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = (self.0[(0, 1)] + self.0[(1, 0)].conj()) / 2.0;
        let mean = (a + d) / 2.0;
        let r = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Checks the density-operator conditions: Hermitian, unit trace, PSD.
    pub fn validate_density(&self) -> Result<()> {
        let h = self.hermiticity_residual();
        if h > TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {h:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = self.hermitian_eigenvalues()[0];
        if min < -TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| self.0[(i, j)])
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if m.shape() != (2, 2) {
            return Err(Error::Range(format!(
                "expected a 2x2 matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::from_entries(
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)],
        ))
    }
}

impl Add for QubitOperator {
    type Output = QubitOperator;

    fn add(self, rhs: QubitOperator) -> QubitOperator {
        QubitOperator(self.0 + rhs.0)
    }
}

impl Sub for QubitOperator {
    type Output = QubitOperator;

    fn sub(self, rhs: QubitOperator) -> QubitOperator {
        QubitOperator(self.0 - rhs.0)
    }
}

impl Mul for QubitOperator {
    type Output = QubitOperator;

    fn mul(self, rhs: QubitOperator) -> QubitOperator {
        QubitOperator(self.0 * rhs.0)
    }
}

impl std::iter::Sum for QubitOperator {
    fn sum<I: Iterator<Item = QubitOperator>>(iter: I) -> Self {
        iter.fold(QubitOperator::zero(), |acc, x| acc + x)
    }
}

/// Rank-1 projector `(I + v·σ)/2` onto the direction `v`.
pub fn projector_from_bloch(v: &BlochVector) -> Result<QubitOperator> {
    let v = BlochVector::new(v.x, v.y, v.z)?;
    Ok(QubitOperator::half_bloch(&v))
}

/// Pure state `|n⟩⟨n| = (I + n·σ)/2`.
pub fn state_from_bloch(n: &BlochVector) -> Result<QubitOperator> {
    let n = BlochVector::new(n.x, n.y, n.z)?;
    Ok(QubitOperator::half_bloch(&n))
}

/// Labeled antipodal vertex set on the Bloch sphere.
///
/// `pairs[k] = (plus, minus)` indexes into `vertices`; `labels[k]` is the
/// letter of pair `k`. Vertices are stored as `A+, A-, B+, B-, ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexSet {
    pub vertices: Vec<BlochVector>,
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<String>,
    /// How letters were tied to coordinates.
    pub labeling: String,
}

impl VertexSet {
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Direction of `"A+"`, `"C-"`, ...
    pub fn direction(&self, label: &str) -> Option<BlochVector> {
        let (letter, plus) = split_label(label)?;
        let k = self.labels.iter().position(|l| l == letter)?;
        let (p, m) = self.pairs[k];
        Some(self.vertices[if plus { p } else { m }])
    }
}

/// Splits `"A+"` into `("A", true)`. Accepts `-` and the Unicode minus.
pub fn split_label(label: &str) -> Option<(&str, bool)> {
    if let Some(base) = label.strip_suffix('+') {
        return (!base.is_empty()).then_some((base, true));
    }
    let base = label
        .strip_suffix('-')
        .or_else(|| label.strip_suffix('\u{2212}'))?;
    (!base.is_empty()).then_some((base, false))
}

/// Pair letters with the contexts (0-based, ascending) each one belongs to in
/// the five eight-element Cabello measurements.
pub(crate) const CABELLO_PAIR_CONTEXTS: [(&str, [usize; 2]); 10] = [
    ("A", [0, 1]),
    ("B", [2, 3]),
    ("C", [0, 4]),
    ("D", [1, 2]),
    ("E", [3, 4]),
    ("F", [2, 4]),
    ("G", [1, 4]),
    ("H", [1, 3]),
    ("I", [0, 3]),
    ("J", [0, 2]),
];

fn raw_dodecahedron() -> Vec<BlochVector> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let inv = 1.0 / phi;
    let s = 3f64.sqrt();
    let mut out = Vec::with_capacity(20);
    for &x in &[1.0, -1.0] {
        for &y in &[1.0, -1.0] {
            for &z in &[1.0, -1.0] {
                out.push([x, y, z]);
            }
        }
    }
    for &a in &[inv, -inv] {
        for &b in &[phi, -phi] {
            out.push([0.0, a, b]);
            out.push([a, b, 0.0]);
            out.push([b, 0.0, a]);
        }
    }
    out.into_iter()
        .map(|[x, y, z]| BlochVector {
            x: x / s,
            y: y / s,
            z: z / s,
        })
        .collect()
}

fn antipodal_pairs(vertices: &[BlochVector]) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    let mut seen = vec![false; vertices.len()];
    for i in 0..vertices.len() {
        if seen[i] {
            continue;
        }
        let partners: Vec<usize> = (0..vertices.len())
            .filter(|&j| j != i && (vertices[i].dot(&vertices[j]) + 1.0).abs() <= TOL)
            .collect();
        match partners.as_slice() {
            [j] if !seen[*j] => {
                seen[i] = true;
                seen[*j] = true;
                pairs.push((i, *j));
            }
            _ => {
                return Err(Error::StructureNotFound(format!(
                    "vertex {i} has no unique antipode"
                )))
            }
        }
    }
    Ok(pairs)
}

/// Orientation rule for a pair: the `+` vertex has the larger z, then y, then x.
fn plus_first(vertices: &[BlochVector], (a, b): (usize, usize)) -> (usize, usize) {
    let (va, vb) = (vertices[a], vertices[b]);
    let key = |v: BlochVector| (round(v.z), round(v.y), round(v.x));
    if key(va) >= key(vb) {
        (a, b)
    } else {
        (b, a)
    }
}

fn round(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// The twenty vertices of a regular dodecahedron inscribed in the Bloch sphere.
///
/// Coordinates are `(±1,±1,±1)/√3` and the cyclic permutations of
/// `(0, ±1/φ, ±φ)/√3`. Letters are chosen so that the two inscribed cubes
/// containing pair `X` are exactly the two measurements listing `X`.
pub fn dodecahedron_vertices() -> VertexSet {
    let raw = raw_dodecahedron();
    let pairs = antipodal_pairs(&raw).expect("dodecahedron is centrally symmetric");
    let unlabeled = VertexSet {
        vertices: raw.clone(),
        pairs: pairs.clone(),
        labels: (0..pairs.len()).map(|k| k.to_string()).collect(),
        labeling: String::new(),
    };
    let cubes = inscribed_cubes(&unlabeled).expect("dodecahedron has five inscribed cubes");

    let mut vertices = Vec::with_capacity(20);
    let mut labeled_pairs = Vec::with_capacity(10);
    let mut labels = Vec::with_capacity(10);
    for (letter, ctxs) in CABELLO_PAIR_CONTEXTS {
        let pair = pairs
            .iter()
            .copied()
            .find(|&(a, _)| {
                let member: Vec<usize> = (0..cubes.len())
                    .filter(|&k| cubes[k].contains(&a))
                    .collect();
                member == ctxs
            })
            .expect("every pair of cubes shares exactly one antipodal pair");
        let (p, m) = plus_first(&raw, pair);
        labeled_pairs.push((vertices.len(), vertices.len() + 1));
        vertices.push(raw[p]);
        vertices.push(raw[m]);
        labels.push(letter.to_string());
    }
    VertexSet {
        vertices,
        pairs: labeled_pairs,
        labels,
        labeling: "cubes ordered by smallest member vertex of the raw coordinate list \
                   ((±1,±1,±1) first, then cyclic (0,±1/φ,±φ)); cube k is measurement k; \
                   pair X sits in the two cubes of the measurements listing X; \
                   X+ is the vertex with larger z, then y, then x"
            .to_string(),
    }
}

/// Six vertices of a regular hexagon in the x–z plane, 60° apart, starting
/// with `A+` at the north pole and running `A+, B+, C+, A-, B-, C-`.
pub fn hexagon_vertices() -> VertexSet {
    let at = |deg: f64| {
        let t = deg.to_radians();
        BlochVector::normalized(t.sin(), 0.0, t.cos()).expect("nonzero")
    };
    let mut vertices = Vec::with_capacity(6);
    let mut pairs = Vec::with_capacity(3);
    let mut labels = Vec::with_capacity(3);
    for (k, letter) in ["A", "B", "C"].into_iter().enumerate() {
        let plus = at(60.0 * k as f64);
        pairs.push((vertices.len(), vertices.len() + 1));
        vertices.push(plus);
        vertices.push(plus.antipode());
        labels.push(letter.to_string());
    }
    VertexSet {
        vertices,
        pairs,
        labels,
        labeling: "x-z plane, X+ at (sin t, 0, cos t) with t = 0, 60, 120 degrees for A, B, C"
            .to_string(),
    }
}

/// Finds the five cubes inscribed in a regular dodecahedron.
///
/// Every 4-subset of antipodal pairs is tested; a subset is a cube when each
/// of its eight vertices sees three others at squared distance 4/3, three at
/// 8/3 and one at 4. Cubes come back sorted, each as sorted vertex indices.
pub fn inscribed_cubes(vs: &VertexSet) -> Result<Vec<Vec<usize>>> {
    if vs.vertices.len() != 20 || vs.pairs.len() != 10 {
        return Err(Error::StructureNotFound(format!(
            "expected 20 vertices in 10 antipodal pairs, got {} in {}",
            vs.vertices.len(),
            vs.pairs.len()
        )));
    }
    let d2 = |a: usize, b: usize| {
        let (u, v) = (vs.vertices[a], vs.vertices[b]);
        (u.x - v.x).powi(2) + (u.y - v.y).powi(2) + (u.z - v.z).powi(2)
    };
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;

    let n = vs.pairs.len();
    let mut cubes = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let verts: Vec<usize> = [a, b, c, d]
                        .iter()
                        .flat_map(|&k| [vs.pairs[k].0, vs.pairs[k].1])
                        .collect();
                    let is_cube = verts.iter().all(|&v| {
                        let ds: Vec<f64> = verts
                            .iter()
                            .filter(|&&w| w != v)
                            .map(|&w| d2(v, w))
                            .collect();
                        let count = |t: f64| ds.iter().filter(|&&x| close(x, t)).count();
                        count(4.0 / 3.0) == 3 && count(8.0 / 3.0) == 3 && count(4.0) == 1
                    });
                    if is_cube {
                        let mut sorted = verts;
                        sorted.sort_unstable();
                        cubes.push(sorted);
                    }
                }
            }
        }
    }
    cubes.sort();
    if cubes.len() != 5 {
        return Err(Error::StructureNotFound(format!(
            "found {} inscribed cubes, expected 5",
            cubes.len()
        )));
    }
    for v in 0..vs.vertices.len() {
        let k = cubes.iter().filter(|cube| cube.contains(&v)).count();
        if k != 2 {
            return Err(Error::StructureNotFound(format!(
                "vertex {v} lies in {k} cubes, expected 2"
            )));
        }
    }
    Ok(cubes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(rows: [[f64; 2]; 2]) -> QubitOperator {
        QubitOperator::from_entries(
            c(rows[0][0], 0.0),
            c(rows[0][1], 0.0),
            c(rows[1][0], 0.0),
            c(rows[1][1], 0.0),
        )
    }

    #[test]
    fn projector_examples() {
        let p = projector_from_bloch(&BlochVector::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(p.max_abs_diff(&op([[1.0, 0.0], [0.0, 0.0]])) < TOL);
        let p = projector_from_bloch(&BlochVector::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(p.max_abs_diff(&op([[0.5, 0.5], [0.5, 0.5]])) < TOL);
        let p = projector_from_bloch(&BlochVector::new(0.0, 0.0, -1.0).unwrap()).unwrap();
        assert!(p.max_abs_diff(&op([[0.0, 0.0], [0.0, 1.0]])) < TOL);
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        assert!(matches!(
            BlochVector::new(1.0, 1.0, 0.0),
            Err(Error::InvalidDirection { .. })
        ));
        assert_eq!(
            BlochVector::normalized(0.0, 0.0, 0.0),
            Err(Error::ZeroVector)
        );
        let bad: std::result::Result<BlochVector, _> = serde_json::from_str("[0.0, 0.5, 0.0]");
        assert!(bad.is_err());
    }

    #[test]
    fn state_overlaps() {
        let n = BlochVector::new(0.0, 1.0, 0.0).unwrap();
        let v = BlochVector::new(1.0, 0.0, 0.0).unwrap();
        let rho = state_from_bloch(&n).unwrap();
        let same = (rho * projector_from_bloch(&n).unwrap()).trace();
        let orth = (rho * projector_from_bloch(&v).unwrap()).trace();
        assert!((same.re - 1.0).abs() < TOL);
        assert!((orth.re - 0.5).abs() < TOL);
        assert!(rho.validate_density().is_ok());
    }

    #[test]
    fn density_validation_errors() {
        assert!(QubitOperator::identity().validate_density().is_err());
        let neg = op([[1.5, 0.0], [0.0, -0.5]]);
        assert!(matches!(
            neg.validate_density(),
            Err(Error::InvalidState(_))
        ));
        let non_herm = op([[0.5, 0.3], [0.0, 0.5]]);
        assert!(non_herm.validate_density().is_err());
    }

    #[test]
    fn label_splitting() {
        assert_eq!(split_label("A+"), Some(("A", true)));
        assert_eq!(split_label("B-"), Some(("B", false)));
        assert_eq!(split_label("C\u{2212}"), Some(("C", false)));
        assert_eq!(split_label("+"), None);
        assert_eq!(split_label("A"), None);
    }

    #[test]
    fn hexagon_examples() {
        let hx = hexagon_vertices();
        assert_eq!(hx.vertices.len(), 6);
        assert_eq!(hx.pair_count(), 3);
        let a = hx.direction("A+").unwrap();
        assert!((a.dot(&hx.direction("A-").unwrap()) + 1.0).abs() < TOL);
        assert!((a.dot(&hx.direction("B+").unwrap()) - 0.5).abs() < TOL);
        for v in &hx.vertices {
            assert!(v.y().abs() < TOL);
        }
    }

    #[test]
    fn inscribed_cubes_rejects_other_solids() {
        assert!(matches!(
            inscribed_cubes(&hexagon_vertices()),
            Err(Error::StructureNotFound(_))
        ));
    }
}
