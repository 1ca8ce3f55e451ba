//! Finite dGBV algebras with trace: loading, validation and the algebra operations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub field: String,
    pub dimension: i64,
    pub basis: Vec<BasisSpec>,
    pub unit: String,
    #[serde(default)]
    pub product: Vec<(String, String, String, Scalar)>,
    #[serde(default)]
    pub d: Vec<(String, String, Scalar)>,
    #[serde(default)]
    pub del: Vec<(String, String, Scalar)>,
    #[serde(default)]
    pub trace: Vec<(String, Scalar)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_product: Option<Vec<(String, String, Scalar)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub id: String,
    pub degree: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bidegree: Option<(i64, i64)>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }
}

/// A validation failure: the axiom name and the basis tuple that witnesses it.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("axiom {axiom} violated at ({})", witness.join(", "))]
pub struct AxiomError {
    pub axiom: &'static str,
    pub witness: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error("elements belong to different models")]
    ModelMismatch,
}

/// Order in which `load_model` checks axioms; the first failure is reported.
pub const AXIOM_ORDER: [&str; 22] = [
    "field",
    "bidegree",
    "product-degree",
    "d-degree",
    "d-bidegree",
    "del-degree",
    "del-bidegree",
    "unit",
    "graded-commutativity",
    "associativity",
    "d-squared",
    "del-squared",
    "d-del-anticommute",
    "d-derivation",
    "bracket-biderivation",
    "trace-support",
    "trace-d",
    "trace-del",
    "d-adjoint",
    "del-adjoint",
    "trace-nondegenerate",
    "inner-product",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    Rational,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBasisElement {
    pub id: String,
    pub degree: i64,
    pub bidegree: Option<(i64, i64)>,
}

/// Identifies the model an element was built against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelTag(pub u64);

/// Sparse element of a model, keyed by basis index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedElement {
    tag: ModelTag,
    coeffs: BTreeMap<usize, Scalar>,
}

impl GradedElement {
    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, Scalar> {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(&i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &GradedElement) -> Result<GradedElement, ModelError> {
        self.check(other)?;
        let mut out = self.coeffs.clone();
        add_into(&mut out, &other.coeffs, &Scalar::one());
        Ok(GradedElement { tag: self.tag, coeffs: out })
    }

    pub fn scale(&self, s: &Scalar) -> GradedElement {
        let mut out = BTreeMap::new();
        add_into(&mut out, &self.coeffs, s);
        GradedElement { tag: self.tag, coeffs: out }
    }

    fn check(&self, other: &GradedElement) -> Result<(), ModelError> {
        if self.tag == other.tag {
            Ok(())
        } else {
            Err(ModelError::ModelMismatch)
        }
    }
}

type Sparse = BTreeMap<usize, Scalar>;

fn add_into(acc: &mut Sparse, x: &Sparse, s: &Scalar) {
    for (k, v) in x {
        let term = v * s;
        let e = acc.entry(*k).or_default();
        *e += &term;
        if e.is_zero() {
            acc.remove(k);
        }
    }
}

fn sparse_add(a: &Sparse, b: &Sparse, s: &Scalar) -> Sparse {
    let mut out = a.clone();
    add_into(&mut out, b, s);
    out
}

fn sparse_scale(a: &Sparse, s: &Scalar) -> Sparse {
    let mut out = BTreeMap::new();
    add_into(&mut out, a, s);
    out
}

fn sign(odd: bool) -> Scalar {
    if odd {
        Scalar::from_int(-1)
    } else {
        Scalar::one()
    }
}

/// A validated finite dGBV model. Immutable after loading.
#[derive(Clone, PartialEq, Eq)]
pub struct DGBVModel {
    name: String,
    field: Field,
    dimension: i64,
    basis: Vec<GradedBasisElement>,
    index: HashMap<String, usize>,
    unit: usize,
    /// `product[a][b]` lists the nonzero components of e_a e_b.
    product: Vec<Vec<Vec<(usize, Scalar)>>>,
    /// Column j holds the image of basis element j.
    d: Matrix,
    del: Matrix,
    trace: Vec<Scalar>,
    inner: Matrix,
    inner_given: bool,
    hash: String,
}

impl fmt::Debug for DGBVModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DGBVModel")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("basis", &self.basis.iter().map(|b| b.id.as_str()).collect::<Vec<_>>())
            .field("hash", &self.hash)
            .finish()
    }
}

/// Reads, parses and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<DGBVModel, ModelError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| ModelError::Parse(format!("{}: {e}", path.as_ref().display())))?;
    DGBVModel::from_spec(&ModelSpec::from_json(&text)?)
}

impl DGBVModel {
    /// Builds and exhaustively validates a model.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self, ModelError> {
        let model = Self::assemble(spec)?;
        model.validate()?;
        Ok(model)
    }

    /// Builds the model tables without checking any axiom.
    fn assemble(spec: &ModelSpec) -> Result<Self, ModelError> {
        let field = match spec.field.as_str() {
            "Q" => Field::Rational,
            "Q(i)" => Field::Gaussian,
            other => return Err(ModelError::Parse(format!("unknown field {other:?}"))),
        };
        if spec.basis.is_empty() {
            return Err(ModelError::Parse("empty basis".into()));
        }
        if spec.dimension < 0 {
            return Err(ModelError::Parse("negative dimension".into()));
        }
        let mut index = HashMap::new();
        let mut basis = Vec::with_capacity(spec.basis.len());
        for (i, b) in spec.basis.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(ModelError::Parse(format!("duplicate basis id {:?}", b.id)));
            }
            basis.push(GradedBasisElement { id: b.id.clone(), degree: b.degree, bidegree: b.bidegree });
        }
        let n = basis.len();
        let look = |id: &str| -> Result<usize, ModelError> {
            index.get(id).copied().ok_or_else(|| ModelError::Parse(format!("unknown basis id {id:?}")))
        };
        let unit = look(&spec.unit)?;
        let mut product = vec![vec![Vec::new(); n]; n];
        let mut seen = std::collections::HashSet::new();
        for (a, b, c, s) in &spec.product {
            let (a, b, c) = (look(a)?, look(b)?, look(c)?);
            if !seen.insert((a, b, c)) {
                return Err(ModelError::Parse(format!("duplicate product entry {a},{b},{c}")));
            }
            if !s.is_zero() {
                product[a][b].push((c, s.clone()));
            }
        }
        for row in &mut product {
            for cell in row.iter_mut() {
                cell.sort_by_key(|(c, _)| *c);
            }
        }
        let op = |entries: &[(String, String, Scalar)], what: &str| -> Result<Matrix, ModelError> {
            let mut m = Matrix::zeros(n, n);
            let mut seen = std::collections::HashSet::new();
            for (from, to, s) in entries {
                let (i, j) = (look(from)?, look(to)?);
                if !seen.insert((i, j)) {
                    return Err(ModelError::Parse(format!("duplicate {what} entry {from}->{to}")));
                }
                m[(j, i)] = s.clone();
            }
            Ok(m)
        };
        let d = op(&spec.d, "d")?;
        let del = op(&spec.del, "del")?;
        let mut trace = vec![Scalar::zero(); n];
        let mut seen_tr = std::collections::HashSet::new();
        for (id, s) in &spec.trace {
            let i = look(id)?;
            if !seen_tr.insert(i) {
                return Err(ModelError::Parse(format!("duplicate trace entry {id}")));
            }
            trace[i] = s.clone();
        }
        let (inner, inner_given) = match &spec.inner_product {
            None => (Matrix::identity(n), false),
            Some(entries) => {
                let mut m = Matrix::zeros(n, n);
                let mut seen = std::collections::HashSet::new();
                for (a, b, s) in entries {
                    let (i, j) = (look(a)?, look(b)?);
                    if !seen.insert((i, j)) {
                        return Err(ModelError::Parse(format!("duplicate inner product entry {a},{b}")));
                    }
                    m[(i, j)] = s.clone();
                }
                let given = m != Matrix::identity(n);
                (m, given)
            }
        };
        let mut model = DGBVModel {
            name: spec.name.clone(),
            field,
            dimension: spec.dimension,
            basis,
            index,
            unit,
            product,
            d,
            del,
            trace,
            inner,
            inner_given,
            hash: String::new(),
        };
        let canonical = serde_json::to_string(&model.to_spec()).expect("model spec serializes");
        model.hash = hex(&Sha256::digest(canonical.as_bytes()));
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// The top degree d_top; the trace lives in bidegree (d_top, d_top).
    pub fn dimension(&self) -> i64 {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[GradedBasisElement] {
        &self.basis
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.basis[i].id
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.basis[i].degree
    }

    pub fn parity(&self, i: usize) -> bool {
        self.basis[i].degree.rem_euclid(2) == 1
    }

    pub fn has_bidegrees(&self) -> bool {
        self.basis.iter().all(|b| b.bidegree.is_some())
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    /// Hex sha256 of the canonical serialized spec.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn tag(&self) -> ModelTag {
        ModelTag(u64::from_str_radix(&self.hash[..16], 16).expect("hex digest"))
    }

    /// Nonzero components of e_a e_b.
    pub fn product_of(&self, a: usize, b: usize) -> &[(usize, Scalar)] {
        &self.product[a][b]
    }

    pub fn d_matrix(&self) -> &Matrix {
        &self.d
    }

    pub fn del_matrix(&self) -> &Matrix {
        &self.del
    }

    pub fn trace_vector(&self) -> &[Scalar] {
        &self.trace
    }

    pub fn inner_product(&self) -> &Matrix {
        &self.inner
    }

    /// Gram matrix T_ab = Tr(e_a e_b).
    pub fn trace_gram(&self) -> Matrix {
        let n = self.len();
        Matrix::from_fn(n, n, |a, b| {
            let mut acc = Scalar::zero();
            for (c, s) in &self.product[a][b] {
                acc += &(s * &self.trace[*c]);
            }
            acc
        })
    }

    pub fn element(&self, coeffs: impl IntoIterator<Item = (usize, Scalar)>) -> GradedElement {
        let mut out = BTreeMap::new();
        for (k, v) in coeffs {
            assert!(k < self.len(), "basis index out of range");
            let e: &mut Scalar = out.entry(k).or_default();
            *e += &v;
            if e.is_zero() {
                out.remove(&k);
            }
        }
        GradedElement { tag: self.tag(), coeffs: out }
    }

    pub fn basis_element(&self, i: usize) -> GradedElement {
        self.element([(i, Scalar::one())])
    }

    /// Element from `(id, coefficient)` pairs; panics on unknown ids.
    pub fn element_by_id(&self, coeffs: &[(&str, Scalar)]) -> GradedElement {
        self.element(
            coeffs
                .iter()
                .map(|(id, s)| (self.index_of(id).unwrap_or_else(|| panic!("unknown basis id {id}")), s.clone())),
        )
    }

    pub fn multiply(&self, a: &GradedElement, b: &GradedElement) -> Result<GradedElement, ModelError> {
        self.own(a)?;
        self.own(b)?;
        Ok(GradedElement { tag: a.tag, coeffs: self.mul_sparse(&a.coeffs, &b.coeffs) })
    }

    /// {a,b} = del(ab) - (del a)b - (-1)^|a| a(del b), extended bilinearly.
    pub fn bracket(&self, a: &GradedElement, b: &GradedElement) -> Result<GradedElement, ModelError> {
        self.own(a)?;
        self.own(b)?;
        let mut out = BTreeMap::new();
        for (i, x) in &a.coeffs {
            let ai: Sparse = [(*i, x.clone())].into_iter().collect();
            add_into(&mut out, &self.bracket_sparse(&ai, &b.coeffs, self.parity(*i)), &Scalar::one());
        }
        Ok(GradedElement { tag: a.tag, coeffs: out })
    }

    pub fn apply_d(&self, a: &GradedElement) -> Result<GradedElement, ModelError> {
        self.own(a)?;
        Ok(GradedElement { tag: a.tag, coeffs: apply(&self.d, &a.coeffs) })
    }

    pub fn apply_del(&self, a: &GradedElement) -> Result<GradedElement, ModelError> {
        self.own(a)?;
        Ok(GradedElement { tag: a.tag, coeffs: apply(&self.del, &a.coeffs) })
    }

    pub fn trace(&self, a: &GradedElement) -> Scalar {
        self.trace_sparse(&a.coeffs)
    }

    fn own(&self, a: &GradedElement) -> Result<(), ModelError> {
        if a.tag == self.tag() {
            Ok(())
        } else {
            Err(ModelError::ModelMismatch)
        }
    }

    fn mul_sparse(&self, a: &Sparse, b: &Sparse) -> Sparse {
        let mut out = BTreeMap::new();
        for (i, x) in a {
            for (j, y) in b {
                let xy = x * y;
                for (c, s) in &self.product[*i][*j] {
                    let e: &mut Scalar = out.entry(*c).or_default();
                    *e += &(&xy * s);
                }
            }
        }
        out.retain(|_, v: &mut Scalar| !v.is_zero());
        out
    }

    fn bracket_sparse(&self, a: &Sparse, b: &Sparse, a_odd: bool) -> Sparse {
        let ab = apply(&self.del, &self.mul_sparse(a, b));
        let t1 = self.mul_sparse(&apply(&self.del, a), b);
        let t2 = self.mul_sparse(a, &apply(&self.del, b));
        let r = sparse_add(&ab, &t1, &Scalar::from_int(-1));
        sparse_add(&r, &t2, &-sign(a_odd))
    }

    fn trace_sparse(&self, a: &Sparse) -> Scalar {
        let mut acc = Scalar::zero();
        for (i, x) in a {
            if !self.trace[*i].is_zero() {
                acc += &(x * &self.trace[*i]);
            }
        }
        acc
    }

    /// Canonical spec: basis in model order, table entries sorted by basis index.
    pub fn to_spec(&self) -> ModelSpec {
        let n = self.len();
        let id = |i: usize| self.basis[i].id.clone();
        let mut product = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for (c, s) in &self.product[a][b] {
                    product.push((id(a), id(b), id(*c), s.clone()));
                }
            }
        }
        let op = |m: &Matrix| {
            let mut v = Vec::new();
            for from in 0..n {
                for to in 0..n {
                    if !m[(to, from)].is_zero() {
                        v.push((id(from), id(to), m[(to, from)].clone()));
                    }
                }
            }
            v
        };
        let trace = (0..n).filter(|&i| !self.trace[i].is_zero()).map(|i| (id(i), self.trace[i].clone())).collect();
        let inner_product = self.inner_given.then(|| {
            let mut v = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if !self.inner[(a, b)].is_zero() {
                        v.push((id(a), id(b), self.inner[(a, b)].clone()));
                    }
                }
            }
            v
        });
        ModelSpec {
            name: self.name.clone(),
            field: match self.field {
                Field::Rational => "Q".into(),
                Field::Gaussian => "Q(i)".into(),
            },
            dimension: self.dimension,
            basis: self
                .basis
                .iter()
                .map(|b| BasisSpec { id: b.id.clone(), degree: b.degree, bidegree: b.bidegree })
                .collect(),
            unit: id(self.unit),
            product,
            d: op(&self.d),
            del: op(&self.del),
            trace,
            inner_product,
        }
    }

    fn fail(&self, axiom: &'static str, tuple: &[usize]) -> AxiomError {
        AxiomError { axiom, witness: tuple.iter().map(|&i| self.basis[i].id.clone()).collect() }
    }

    fn unit_vec(i: usize) -> Sparse {
        [(i, Scalar::one())].into_iter().collect()
    }

    /// Runs every axiom check over all basis tuples, in [`AXIOM_ORDER`].
    pub fn validate(&self) -> Result<(), AxiomError> {
        let n = self.len();
        let e = Self::unit_vec;
        let deg = |i: usize| self.basis[i].degree;
        let odd = |i: usize| self.parity(i);

        if self.field == Field::Rational {
            for a in 0..n {
                for b in 0..n {
                    if self.product[a][b].iter().any(|(_, s)| !s.is_real()) {
                        return Err(self.fail("field", &[a, b]));
                    }
                    for m in [&self.d, &self.del, &self.inner] {
                        if !m[(a, b)].is_real() {
                            return Err(self.fail("field", &[b, a]));
                        }
                    }
                }
                if !self.trace[a].is_real() {
                    return Err(self.fail("field", &[a]));
                }
            }
        }

        let bidegs = self.basis.iter().filter(|b| b.bidegree.is_some()).count();
        if bidegs != 0 && bidegs != n {
            let i = self.basis.iter().position(|b| b.bidegree.is_none()).expect("some basis lacks bidegree");
            return Err(self.fail("bidegree", &[i]));
        }
        for (i, b) in self.basis.iter().enumerate() {
            if let Some((p, q)) = b.bidegree {
                if p < 0 || q < 0 || p + q != b.degree {
                    return Err(self.fail("bidegree", &[i]));
                }
            }
        }
        let bideg = |i: usize| self.basis[i].bidegree;

        for a in 0..n {
            for b in 0..n {
                for (c, _) in &self.product[a][b] {
                    let ok = deg(*c) == deg(a) + deg(b)
                        && match (bideg(a), bideg(b), bideg(*c)) {
                            (Some(x), Some(y), Some(z)) => z == (x.0 + y.0, x.1 + y.1),
                            _ => true,
                        };
                    if !ok {
                        return Err(self.fail("product-degree", &[a, b, *c]));
                    }
                }
            }
        }
        for (op, dname, bname, shift, bshift) in
            [(&self.d, "d-degree", "d-bidegree", 1, (0, 1)), (&self.del, "del-degree", "del-bidegree", -1, (-1, 0))]
        {
            let entries =
                || (0..n).flat_map(|from| (0..n).map(move |to| (from, to))).filter(|&(f, t)| !op[(t, f)].is_zero());
            if let Some((from, to)) = entries().find(|&(f, t)| deg(t) != deg(f) + shift) {
                return Err(self.fail(dname, &[from, to]));
            }
            let bad_bideg = |(f, t): (usize, usize)| match (bideg(f), bideg(t)) {
                (Some(x), Some(y)) => y != (x.0 + bshift.0, x.1 + bshift.1),
                _ => false,
            };
            if let Some((from, to)) = entries().find(|&e| bad_bideg(e)) {
                return Err(self.fail(bname, &[from, to]));
            }
        }

        let u = self.unit;
        if deg(u) != 0 {
            return Err(self.fail("unit", &[u]));
        }
        for a in 0..n {
            if self.mul_sparse(&e(u), &e(a)) != e(a) || self.mul_sparse(&e(a), &e(u)) != e(a) {
                return Err(self.fail("unit", &[u, a]));
            }
        }

        for a in 0..n {
            for b in 0..n {
                let lhs = self.mul_sparse(&e(a), &e(b));
                let rhs = sparse_scale(&self.mul_sparse(&e(b), &e(a)), &sign(odd(a) && odd(b)));
                if lhs != rhs {
                    return Err(self.fail("graded-commutativity", &[a, b]));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = self.mul_sparse(&e(a), &e(b));
                for c in 0..n {
                    let bc = self.mul_sparse(&e(b), &e(c));
                    if self.mul_sparse(&ab, &e(c)) != self.mul_sparse(&e(a), &bc) {
                        return Err(self.fail("associativity", &[a, b, c]));
                    }
                }
            }
        }

        let dd = &self.d * &self.d;
        let ll = &self.del * &self.del;
        let dl = &(&self.d * &self.del) + &(&self.del * &self.d);
        for (m, name) in [(&dd, "d-squared"), (&ll, "del-squared"), (&dl, "d-del-anticommute")] {
            for j in 0..n {
                if let Some(i) = (0..n).find(|&i| !m[(i, j)].is_zero()) {
                    return Err(self.fail(name, &[j, i]));
                }
            }
        }

        for a in 0..n {
            for b in 0..n {
                let lhs = apply(&self.d, &self.mul_sparse(&e(a), &e(b)));
                let r1 = self.mul_sparse(&apply(&self.d, &e(a)), &e(b));
                let r2 = self.mul_sparse(&e(a), &apply(&self.d, &e(b)));
                if lhs != sparse_add(&r1, &r2, &sign(odd(a))) {
                    return Err(self.fail("d-derivation", &[a, b]));
                }
            }
        }

        let br = |x: &Sparse, y: &Sparse, x_odd: bool| self.bracket_sparse(x, y, x_odd);
        for a in 0..n {
            for b in 0..n {
                let ab = br(&e(a), &e(b), odd(a));
                for c in 0..n {
                    let lhs = br(&e(a), &self.mul_sparse(&e(b), &e(c)), odd(a));
                    let r1 = self.mul_sparse(&ab, &e(c));
                    let r2 = self.mul_sparse(&e(b), &br(&e(a), &e(c), odd(a)));
                    let s = sign((deg(a) + 1).rem_euclid(2) == 1 && odd(b));
                    if lhs != sparse_add(&r1, &r2, &s) {
                        return Err(self.fail("bracket-biderivation", &[a, b, c]));
                    }
                }
            }
        }

        for i in 0..n {
            if self.trace[i].is_zero() {
                continue;
            }
            let top = 2 * self.dimension;
            let ok = deg(i) == top && bideg(i).is_none_or(|b| b == (self.dimension, self.dimension));
            if !ok {
                return Err(self.fail("trace-support", &[i]));
            }
        }
        for (m, name) in [(&self.d, "trace-d"), (&self.del, "trace-del")] {
            for a in 0..n {
                if !self.trace_sparse(&apply(m, &e(a))).is_zero() {
                    return Err(self.fail(name, &[a]));
                }
            }
        }
        for (m, name, skew) in [(&self.d, "d-adjoint", true), (&self.del, "del-adjoint", false)] {
            for a in 0..n {
                for b in 0..n {
                    let x = self.trace_sparse(&self.mul_sparse(&apply(m, &e(a)), &e(b)));
                    let y = self.trace_sparse(&self.mul_sparse(&e(a), &apply(m, &e(b))));
                    // skew: Tr((d a) b) + (-1)^|a| Tr(a d b) = 0; otherwise the minus sign
                    let s = if skew { sign(odd(a)) } else { -sign(odd(a)) };
                    if !(&x + &(&s * &y)).is_zero() {
                        return Err(self.fail(name, &[a, b]));
                    }
                }
            }
        }

        let gram = self.trace_gram();
        if gram.determinant().is_zero() {
            let ns = gram.nullspace();
            let i = ns[0].iter().position(|x| !x.is_zero()).expect("nonzero null vector");
            return Err(self.fail("trace-nondegenerate", &[i]));
        }

        let h = &self.inner;
        for a in 0..n {
            for b in 0..n {
                if h[(a, b)] != h[(b, a)].conj() {
                    return Err(self.fail("inner-product", &[a, b]));
                }
            }
        }
        // Sylvester: leading principal minors of a Hermitian matrix are real
        for k in 1..=n {
            let minor = Matrix::from_fn(k, k, |r, c| h[(r, c)].clone());
            let det = minor.determinant();
            if !det.is_real() || det.re() <= &num_rational::BigRational::default() {
                return Err(self.fail("inner-product", &[k - 1]));
            }
        }
        Ok(())
    }
}

/// Applies an operator matrix (column = image) to a sparse vector.
fn apply(m: &Matrix, x: &Sparse) -> Sparse {
    let mut out = BTreeMap::new();
    for (j, v) in x {
        for i in 0..m.rows() {
            let c = &m[(i, *j)];
            if !c.is_zero() {
                let e: &mut Scalar = out.entry(i).or_default();
                *e += &(c * v);
            }
        }
    }
    out.retain(|_, v: &mut Scalar| !v.is_zero());
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
