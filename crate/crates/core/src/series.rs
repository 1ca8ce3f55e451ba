//! Truncated supercommutative power series, model-valued series and t-Laurent data.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use smallvec::SmallVec;

use crate::linalg::Matrix;
use crate::model::{DGBVModel, GradedElement};
use crate::scalar::Scalar;

/// Sorted coordinate indices; odd coordinates appear at most once.
pub type Mono = SmallVec<[u16; 8]>;

/// Raw coefficient map of a series.
pub type Poly = BTreeMap<Mono, Scalar>;

/// Laurent polynomial in t with scalar coefficients.
pub type Laurent = BTreeMap<i32, Scalar>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("series live in different coordinate rings or truncations")]
    TruncationMismatch,
}

/// Dual coordinate τ^{a,k} of the basis element `basis` at t-power `t_power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coordinate {
    pub basis: usize,
    pub t_power: u32,
    pub parity: bool,
}

/// Coordinate universe plus the global truncation order.
#[derive(Debug, PartialEq, Eq)]
pub struct Ring {
    coords: Vec<Coordinate>,
    names: Vec<String>,
    nmax: usize,
    lookup: HashMap<(usize, u32), u16>,
}

impl Ring {
    /// Coordinates for `basis × {0..=kmax}` in (basis, t) order.
    pub fn for_model(model: &DGBVModel, basis: &[usize], kmax: u32, nmax: usize) -> Arc<Ring> {
        let mut coords = Vec::new();
        let mut sorted = basis.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &a in &sorted {
            for k in 0..=kmax {
                coords.push(Coordinate { basis: a, t_power: k, parity: model.parity(a) });
            }
        }
        let names = coords.iter().map(|c| format!("{}:t{}", model.id(c.basis), c.t_power)).collect();
        Arc::new(Ring::from_parts(coords, names, nmax))
    }

    /// Ring with explicit coordinates; they must already be in canonical order.
    pub fn from_parts(coords: Vec<Coordinate>, names: Vec<String>, nmax: usize) -> Ring {
        assert!(coords.len() < u16::MAX as usize, "too many coordinates");
        assert!(coords.windows(2).all(|w| (w[0].basis, w[0].t_power) < (w[1].basis, w[1].t_power)));
        let lookup = coords.iter().enumerate().map(|(i, c)| ((c.basis, c.t_power), i as u16)).collect();
        Ring { coords, names, nmax, lookup }
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn coordinate(&self, c: u16) -> Coordinate {
        self.coords[c as usize]
    }

    pub fn name(&self, c: u16) -> &str {
        &self.names[c as usize]
    }

    pub fn index(&self, basis: usize, t_power: u32) -> Option<u16> {
        self.lookup.get(&(basis, t_power)).copied()
    }

    pub fn parity(&self, c: u16) -> bool {
        self.coords[c as usize].parity
    }

    pub fn mono_parity(&self, m: &[u16]) -> bool {
        m.iter().filter(|&&c| self.parity(c)).count() % 2 == 1
    }

    /// Product of two monomials: `None` if an odd coordinate repeats, else (negative sign, product).
    pub fn mono_mul(&self, a: &[u16], b: &[u16]) -> Option<(bool, Mono)> {
        let mut out = Mono::with_capacity(a.len() + b.len());
        let mut neg = false;
        let (mut i, mut j) = (0, 0);
        // odd entries of a not yet emitted
        let mut odd_left = a.iter().filter(|&&c| self.parity(c)).count();
        while i < a.len() || j < b.len() {
            let take_a = j == b.len() || (i < a.len() && a[i] <= b[j]);
            if take_a {
                if i < a.len() && j < b.len() && a[i] == b[j] && self.parity(a[i]) {
                    return None;
                }
                if self.parity(a[i]) {
                    odd_left -= 1;
                }
                out.push(a[i]);
                i += 1;
            } else {
                if self.parity(b[j]) && odd_left % 2 == 1 {
                    neg = !neg;
                }
                out.push(b[j]);
                j += 1;
            }
        }
        Some((neg, out))
    }
}

fn add_term(acc: &mut Poly, m: Mono, v: Scalar) {
    use std::collections::btree_map::Entry;
    match acc.entry(m) {
        Entry::Vacant(e) => {
            if !v.is_zero() {
                e.insert(v);
            }
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += &v;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

pub(crate) fn poly_add_scaled(acc: &mut Poly, x: &Poly, s: &Scalar) {
    if s.is_zero() {
        return;
    }
    let unit = s.is_one();
    for (m, v) in x {
        add_term(acc, m.clone(), if unit { v.clone() } else { v * s });
    }
}

pub(crate) fn poly_scale(x: &Poly, s: &Scalar) -> Poly {
    if s.is_zero() {
        return Poly::new();
    }
    x.iter().map(|(m, v)| (m.clone(), v * s)).collect()
}

/// x*y truncated at the ring order.
pub(crate) fn poly_mul(ring: &Ring, x: &Poly, y: &Poly) -> Poly {
    let mut out = Poly::new();
    poly_mul_into(ring, &mut out, x, y, &Scalar::one(), false);
    out
}

/// acc += s * (±1) * x*y, with an extra sign flip when `neg` is set.
pub(crate) fn poly_mul_into(ring: &Ring, acc: &mut Poly, x: &Poly, y: &Poly, s: &Scalar, neg: bool) {
    let n = ring.nmax;
    for (a, u) in x {
        for (b, v) in y {
            if a.len() + b.len() > n {
                continue;
            }
            if let Some((flip, m)) = ring.mono_mul(a, b) {
                let mut c = u * v;
                if !s.is_one() {
                    c = &c * s;
                }
                add_term(acc, m, c.signed(flip != neg));
            }
        }
    }
}

/// Left derivative with respect to coordinate c.
pub(crate) fn poly_deriv(ring: &Ring, x: &Poly, c: u16) -> Poly {
    let mut out = Poly::new();
    let odd = ring.parity(c);
    for (m, v) in x {
        let Some(pos) = m.iter().position(|&y| y == c) else {
            continue;
        };
        let mut nm = m.clone();
        nm.remove(pos);
        if odd {
            let passed = m[..pos].iter().filter(|&&y| ring.parity(y)).count();
            add_term(&mut out, nm, v.clone().signed(passed % 2 == 1));
        } else {
            let mult = m.iter().filter(|&&y| y == c).count() as i64;
            add_term(&mut out, nm, v * &Scalar::from_int(mult));
        }
    }
    out
}

/// Terms of total order exactly n.
pub(crate) fn poly_homogeneous(x: &Poly, n: usize) -> Poly {
    x.iter().filter(|(m, _)| m.len() == n).map(|(m, v)| (m.clone(), v.clone())).collect()
}

pub(crate) fn poly_truncate(x: &Poly, n: usize) -> Poly {
    x.iter().filter(|(m, _)| m.len() <= n).map(|(m, v)| (m.clone(), v.clone())).collect()
}

/// Serialized term of a series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermJson {
    pub monomial: Vec<String>,
    pub coeff: String,
}

/// Truncated supercommutative power series in the coordinates of a [`Ring`].
#[derive(Clone, PartialEq, Eq)]
pub struct SuperSeries {
    ring: Arc<Ring>,
    terms: Poly,
}

impl fmt::Debug for SuperSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SuperSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, v)| {
                let names: Vec<&str> = m.iter().map(|&c| self.ring.name(c)).collect();
                format!("({v})[{}]", names.join(" "))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl SuperSeries {
    pub fn zero(ring: &Arc<Ring>) -> Self {
        SuperSeries { ring: ring.clone(), terms: Poly::new() }
    }

    pub fn constant(ring: &Arc<Ring>, s: Scalar) -> Self {
        let mut terms = Poly::new();
        add_term(&mut terms, Mono::new(), s);
        SuperSeries { ring: ring.clone(), terms }
    }

    pub fn coordinate(ring: &Arc<Ring>, c: u16) -> Self {
        let mut terms = Poly::new();
        if ring.nmax >= 1 {
            terms.insert(SmallVec::from_slice(&[c]), Scalar::one());
        }
        SuperSeries { ring: ring.clone(), terms }
    }

    /// Builds a series from raw terms, normalizing order, signs and truncation.
    pub fn from_terms(ring: &Arc<Ring>, terms: impl IntoIterator<Item = (Vec<u16>, Scalar)>) -> Self {
        let mut out = SuperSeries::zero(ring);
        for (m, v) in terms {
            let mut acc = (false, Mono::new());
            let mut dead = false;
            for c in m {
                match ring.mono_mul(&acc.1, &[c]) {
                    Some((neg, nm)) => acc = (acc.0 != neg, nm),
                    None => {
                        dead = true;
                        break;
                    }
                }
            }
            if !dead && acc.1.len() <= ring.nmax {
                add_term(&mut out.terms, acc.1, v.signed(acc.0));
            }
        }
        out
    }

    pub(crate) fn from_poly(ring: &Arc<Ring>, terms: Poly) -> Self {
        SuperSeries { ring: ring.clone(), terms }
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn terms(&self) -> &Poly {
        &self.terms
    }

    pub fn into_terms(self) -> Poly {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &[u16]) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Lowest total order present, if any.
    pub fn min_order(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.len()).min()
    }

    pub fn add(&self, o: &SuperSeries) -> SuperSeries {
        self.add_scaled(o, &Scalar::one())
    }

    pub fn sub(&self, o: &SuperSeries) -> SuperSeries {
        self.add_scaled(o, &Scalar::from_int(-1))
    }

    pub fn add_scaled(&self, o: &SuperSeries, s: &Scalar) -> SuperSeries {
        assert!(Arc::ptr_eq(&self.ring, &o.ring) || self.ring == o.ring, "ring mismatch");
        let mut terms = self.terms.clone();
        poly_add_scaled(&mut terms, &o.terms, s);
        SuperSeries { ring: self.ring.clone(), terms }
    }

    pub fn scale(&self, s: &Scalar) -> SuperSeries {
        SuperSeries { ring: self.ring.clone(), terms: poly_scale(&self.terms, s) }
    }

    /// Graded-commutative product truncated at the ring order.
    pub fn super_mul(&self, o: &SuperSeries) -> Result<SuperSeries, SeriesError> {
        if !(Arc::ptr_eq(&self.ring, &o.ring) || self.ring == o.ring) {
            return Err(SeriesError::TruncationMismatch);
        }
        Ok(SuperSeries { ring: self.ring.clone(), terms: poly_mul(&self.ring, &self.terms, &o.terms) })
    }

    /// Left graded derivative.
    pub fn partial_derivative(&self, c: u16) -> SuperSeries {
        SuperSeries { ring: self.ring.clone(), terms: poly_deriv(&self.ring, &self.terms, c) }
    }

    pub fn homogeneous(&self, n: usize) -> SuperSeries {
        SuperSeries { ring: self.ring.clone(), terms: poly_homogeneous(&self.terms, n) }
    }

    pub fn truncate(&self, n: usize) -> SuperSeries {
        SuperSeries { ring: self.ring.clone(), terms: poly_truncate(&self.terms, n) }
    }

    /// Keeps monomials accepted by the predicate.
    pub fn filter(&self, mut keep: impl FnMut(&[u16]) -> bool) -> SuperSeries {
        let terms = self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, v)| (m.clone(), v.clone())).collect();
        SuperSeries { ring: self.ring.clone(), terms }
    }

    /// Re-expresses the series in another ring, dropping monomials whose coordinates are absent.
    pub fn restrict_to(&self, target: &Arc<Ring>) -> SuperSeries {
        let mut out = SuperSeries::zero(target);
        for (m, v) in &self.terms {
            let mapped: Option<Vec<u16>> = m
                .iter()
                .map(|&c| {
                    let co = self.ring.coordinate(c);
                    target.index(co.basis, co.t_power)
                })
                .collect();
            if let Some(mm) = mapped {
                let s = SuperSeries::from_terms(target, [(mm, v.clone())]);
                poly_add_scaled(&mut out.terms, &s.terms, &Scalar::one());
            }
        }
        out
    }

    /// Is every term of the stated Z/2 parity?
    pub fn has_parity(&self, odd: bool) -> bool {
        self.terms.keys().all(|m| self.ring.mono_parity(m) == odd)
    }

    /// Rebuilds F from its gradient: each order-n part is (1/n) Σ_c τ^c ∂_c F.
    pub fn euler_integrate(ring: &Arc<Ring>, grads: &[SuperSeries]) -> SuperSeries {
        assert_eq!(grads.len(), ring.len(), "one gradient component per coordinate");
        let mut sum = Poly::new();
        for (c, g) in grads.iter().enumerate() {
            let tau = SuperSeries::coordinate(ring, c as u16);
            poly_mul_into(ring, &mut sum, &tau.terms, &g.terms, &Scalar::one(), false);
        }
        let terms = sum
            .into_iter()
            .filter(|(m, _)| !m.is_empty())
            .map(|(m, v)| {
                let n = Scalar::from_int(m.len() as i64);
                let v = v.div(&n).expect("nonzero order");
                (m, v)
            })
            .collect();
        SuperSeries { ring: ring.clone(), terms }
    }

    pub fn to_json(&self) -> Vec<TermJson> {
        self.terms
            .iter()
            .map(|(m, v)| TermJson {
                monomial: m.iter().map(|&c| self.ring.name(c).to_string()).collect(),
                coeff: v.to_string(),
            })
            .collect()
    }
}

/// Sparse operator with its parity, for acting on model-valued series.
#[derive(Clone, Debug)]
pub struct SparseOp {
    cols: Vec<Vec<(usize, Scalar)>>,
    odd: bool,
}

impl SparseOp {
    /// `m` has the image of basis element j in column j.
    pub fn new(m: &Matrix, odd: bool) -> SparseOp {
        let cols = (0..m.cols())
            .map(|j| (0..m.rows()).filter(|&i| !m[(i, j)].is_zero()).map(|i| (i, m[(i, j)].clone())).collect())
            .collect();
        SparseOp { cols, odd }
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }
}

/// Element of A ⊗ R: one series per basis element, coefficients written on the left.
#[derive(Clone, PartialEq, Eq)]
pub struct ElementSeries {
    ring: Arc<Ring>,
    comps: BTreeMap<usize, Poly>,
}

impl fmt::Debug for ElementSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (i, p) in &self.comps {
            m.entry(i, &SuperSeries::from_poly(&self.ring, p.clone()));
        }
        m.finish()
    }
}

impl ElementSeries {
    pub fn zero(ring: &Arc<Ring>) -> Self {
        ElementSeries { ring: ring.clone(), comps: BTreeMap::new() }
    }

    /// r · e_i.
    pub fn term(ring: &Arc<Ring>, i: usize, r: &SuperSeries) -> Self {
        let mut out = ElementSeries::zero(ring);
        if !r.is_zero() {
            out.comps.insert(i, r.terms.clone());
        }
        out
    }

    pub fn basis(ring: &Arc<Ring>, i: usize) -> Self {
        ElementSeries::term(ring, i, &SuperSeries::constant(ring, Scalar::one()))
    }

    pub fn from_element(ring: &Arc<Ring>, x: &GradedElement) -> Self {
        let mut out = ElementSeries::zero(ring);
        for (i, v) in x.coeffs() {
            out.comps.insert(*i, SuperSeries::constant(ring, v.clone()).terms);
        }
        out
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn component(&self, i: usize) -> SuperSeries {
        SuperSeries::from_poly(&self.ring, self.comps.get(&i).cloned().unwrap_or_default())
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, SuperSeries)> + '_ {
        self.comps.iter().map(|(i, p)| (*i, SuperSeries::from_poly(&self.ring, p.clone())))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Number of stored (basis, monomial) terms.
    pub fn term_count(&self) -> usize {
        self.comps.values().map(BTreeMap::len).sum()
    }

    fn clean(mut self) -> Self {
        self.comps.retain(|_, p| !p.is_empty());
        self
    }

    pub fn add(&self, o: &ElementSeries) -> ElementSeries {
        self.add_scaled(o, &Scalar::one())
    }

    pub fn sub(&self, o: &ElementSeries) -> ElementSeries {
        self.add_scaled(o, &Scalar::from_int(-1))
    }

    pub fn add_scaled(&self, o: &ElementSeries, s: &Scalar) -> ElementSeries {
        let mut out = self.clone();
        out.add_assign_scaled(o, s);
        out
    }

    pub fn add_assign_scaled(&mut self, o: &ElementSeries, s: &Scalar) {
        for (i, p) in &o.comps {
            poly_add_scaled(self.comps.entry(*i).or_default(), p, s);
        }
        self.comps.retain(|_, p| !p.is_empty());
    }

    pub fn scale(&self, s: &Scalar) -> ElementSeries {
        ElementSeries {
            ring: self.ring.clone(),
            comps: self.comps.iter().map(|(i, p)| (*i, poly_scale(p, s))).collect(),
        }
        .clean()
    }

    /// r · x for a ring element r written on the left.
    pub fn left_mul(&self, r: &SuperSeries) -> ElementSeries {
        let comps = self.comps.iter().map(|(i, p)| (*i, poly_mul(&self.ring, &r.terms, p))).collect();
        ElementSeries { ring: self.ring.clone(), comps }.clean()
    }

    /// Product in A ⊗ R: (r e_i)(s e_j) = (-1)^{|e_i||s|} rs e_i e_j.
    pub fn mul(&self, model: &DGBVModel, o: &ElementSeries) -> ElementSeries {
        let mut comps: BTreeMap<usize, Poly> = BTreeMap::new();
        for (i, x) in &self.comps {
            let odd_i = model.parity(*i);
            for (j, y) in &o.comps {
                let prods = model.product_of(*i, *j);
                if prods.is_empty() {
                    continue;
                }
                let n = self.ring.nmax;
                let mut xy = Poly::new();
                for (a, u) in x {
                    for (b, v) in y {
                        if a.len() + b.len() > n {
                            continue;
                        }
                        if let Some((neg, m)) = self.ring.mono_mul(a, b) {
                            let flip = neg != (odd_i && self.ring.mono_parity(b));
                            add_term(&mut xy, m, (u * v).signed(flip));
                        }
                    }
                }
                if xy.is_empty() {
                    continue;
                }
                for (k, w) in prods {
                    poly_add_scaled(comps.entry(*k).or_default(), &xy, w);
                }
            }
        }
        ElementSeries { ring: self.ring.clone(), comps }.clean()
    }

    /// L(r e_i) = (-1)^{|L||r|} r L(e_i).
    pub fn apply(&self, op: &SparseOp) -> ElementSeries {
        let mut comps: BTreeMap<usize, Poly> = BTreeMap::new();
        for (j, x) in &self.comps {
            let col = &op.cols[*j];
            if col.is_empty() {
                continue;
            }
            let signed: Poly = if op.odd {
                x.iter().map(|(m, v)| (m.clone(), v.clone().signed(self.ring.mono_parity(m)))).collect()
            } else {
                x.clone()
            };
            for (i, w) in col {
                poly_add_scaled(comps.entry(*i).or_default(), &signed, w);
            }
        }
        ElementSeries { ring: self.ring.clone(), comps }.clean()
    }

    /// Tr(Σ r_i e_i) = Σ r_i Tr(e_i).
    pub fn trace(&self, model: &DGBVModel) -> SuperSeries {
        let mut terms = Poly::new();
        let tr = model.trace_vector();
        for (i, x) in &self.comps {
            poly_add_scaled(&mut terms, x, &tr[*i]);
        }
        SuperSeries::from_poly(&self.ring, terms)
    }

    pub fn partial_derivative(&self, c: u16) -> ElementSeries {
        let comps = self.comps.iter().map(|(i, p)| (*i, poly_deriv(&self.ring, p, c))).collect();
        ElementSeries { ring: self.ring.clone(), comps }.clean()
    }

    pub fn homogeneous(&self, n: usize) -> ElementSeries {
        let comps = self.comps.iter().map(|(i, p)| (*i, poly_homogeneous(p, n))).collect();
        ElementSeries { ring: self.ring.clone(), comps }.clean()
    }

    pub fn truncate(&self, n: usize) -> ElementSeries {
        let comps = self.comps.iter().map(|(i, p)| (*i, poly_truncate(p, n))).collect();
        ElementSeries { ring: self.ring.clone(), comps }.clean()
    }

    /// Value at τ = 0 as a model element.
    pub fn constant_term(&self, model: &DGBVModel) -> GradedElement {
        model.element(self.comps.iter().filter_map(|(i, p)| p.get(&Mono::new()).map(|v| (*i, v.clone()))))
    }

    pub fn to_json(&self, model: &DGBVModel) -> BTreeMap<String, Vec<TermJson>> {
        self.comps
            .iter()
            .map(|(i, p)| (model.id(*i).to_string(), SuperSeries::from_poly(&self.ring, p.clone()).to_json()))
            .collect()
    }
}

/// Model-valued series with a finite window of t-powers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LaurentSeries {
    ring: Arc<Ring>,
    coeffs: BTreeMap<i32, ElementSeries>,
}

impl LaurentSeries {
    pub fn zero(ring: &Arc<Ring>) -> Self {
        LaurentSeries { ring: ring.clone(), coeffs: BTreeMap::new() }
    }

    pub fn single(k: i32, x: ElementSeries) -> Self {
        let ring = x.ring.clone();
        let mut coeffs = BTreeMap::new();
        if !x.is_zero() {
            coeffs.insert(k, x);
        }
        LaurentSeries { ring, coeffs }
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, ElementSeries> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> ElementSeries {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| ElementSeries::zero(&self.ring))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// (lowest, highest) t-power present.
    pub fn window(&self) -> Option<(i32, i32)> {
        Some((*self.coeffs.keys().next()?, *self.coeffs.keys().next_back()?))
    }

    pub fn insert(&mut self, k: i32, x: ElementSeries) {
        if x.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, x);
        }
    }

    fn map(&self, mut f: impl FnMut(&ElementSeries) -> ElementSeries) -> LaurentSeries {
        let mut out = LaurentSeries::zero(&self.ring);
        for (k, x) in &self.coeffs {
            out.insert(*k, f(x));
        }
        out
    }

    pub fn add_scaled(&self, o: &LaurentSeries, s: &Scalar) -> LaurentSeries {
        let mut out = self.clone();
        for (k, x) in &o.coeffs {
            let cur = out.coeff(*k).add_scaled(x, s);
            out.insert(*k, cur);
        }
        out
    }

    pub fn add(&self, o: &LaurentSeries) -> LaurentSeries {
        self.add_scaled(o, &Scalar::one())
    }

    pub fn sub(&self, o: &LaurentSeries) -> LaurentSeries {
        self.add_scaled(o, &Scalar::from_int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> LaurentSeries {
        self.map(|x| x.scale(s))
    }

    /// Multiplies by t^s.
    pub fn shift(&self, s: i32) -> LaurentSeries {
        LaurentSeries { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|(k, x)| (k + s, x.clone())).collect() }
    }

    pub fn mul(&self, model: &DGBVModel, o: &LaurentSeries) -> LaurentSeries {
        let mut out = LaurentSeries::zero(&self.ring);
        for (i, x) in &self.coeffs {
            for (j, y) in &o.coeffs {
                let p = x.mul(model, y);
                let cur = out.coeff(i + j).add(&p);
                out.insert(i + j, cur);
            }
        }
        out
    }

    pub fn apply(&self, op: &SparseOp) -> LaurentSeries {
        self.map(|x| x.apply(op))
    }

    pub fn partial_derivative(&self, c: u16) -> LaurentSeries {
        self.map(|x| x.partial_derivative(c))
    }

    pub fn truncate(&self, n: usize) -> LaurentSeries {
        self.map(|x| x.truncate(n))
    }

    pub fn left_mul(&self, r: &SuperSeries) -> LaurentSeries {
        self.map(|x| x.left_mul(r))
    }

    /// Keeps t-powers accepted by the predicate.
    pub fn filter_powers(&self, keep: impl Fn(i32) -> bool) -> LaurentSeries {
        LaurentSeries {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().filter(|(k, _)| keep(**k)).map(|(k, x)| (*k, x.clone())).collect(),
        }
    }
}

/// ⟨u, v⟩ = Σ t^i (-t)^j Tr(u_i v_j), valued in series.
pub fn loop_pairing_series(model: &DGBVModel, u: &LaurentSeries, v: &LaurentSeries) -> BTreeMap<i32, SuperSeries> {
    let mut out: BTreeMap<i32, SuperSeries> = BTreeMap::new();
    for (i, a) in &u.coeffs {
        for (j, b) in &v.coeffs {
            let tr = a.mul(model, b).trace(model);
            if tr.is_zero() {
                continue;
            }
            let s = if j.rem_euclid(2) == 1 { Scalar::from_int(-1) } else { Scalar::one() };
            let e = out.entry(i + j).or_insert_with(|| SuperSeries::zero(&u.ring));
            *e = e.add_scaled(&tr, &s);
        }
    }
    out.retain(|_, s| !s.is_zero());
    out
}

/// Residue of the series-valued pairing: the t^{-1} coefficient.
pub fn residue_pairing_series(model: &DGBVModel, u: &LaurentSeries, v: &LaurentSeries) -> SuperSeries {
    let mut acc = SuperSeries::zero(&u.ring);
    for (i, a) in &u.coeffs {
        let j = -1 - i;
        if let Some(b) = v.coeffs.get(&j) {
            let tr = a.mul(model, b).trace(model);
            let s = if j.rem_euclid(2) == 1 { Scalar::from_int(-1) } else { Scalar::one() };
            acc = acc.add_scaled(&tr, &s);
        }
    }
    acc
}

/// Laurent polynomial in t with model-element coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TLaurent {
    coeffs: BTreeMap<i32, GradedElement>,
}

impl TLaurent {
    pub fn new() -> Self {
        TLaurent { coeffs: BTreeMap::new() }
    }

    /// t^k · x
    pub fn monomial(k: i32, x: GradedElement) -> Self {
        let mut out = TLaurent::new();
        out.insert(k, x);
        out
    }

    pub fn insert(&mut self, k: i32, x: GradedElement) {
        if x.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, x);
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, GradedElement> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> Option<&GradedElement> {
        self.coeffs.get(&k)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// (k_min, k_max) of the nonzero coefficients.
    pub fn bounds(&self) -> Option<(i32, i32)> {
        Some((*self.coeffs.keys().next()?, *self.coeffs.keys().next_back()?))
    }

    pub fn shift(&self, s: i32) -> TLaurent {
        TLaurent { coeffs: self.coeffs.iter().map(|(k, x)| (k + s, x.clone())).collect() }
    }

    pub fn add(&self, o: &TLaurent) -> Result<TLaurent, crate::model::ModelError> {
        let mut out = self.clone();
        for (k, x) in &o.coeffs {
            let cur = match out.coeffs.get(k) {
                Some(y) => y.add(x)?,
                None => x.clone(),
            };
            out.insert(*k, cur);
        }
        Ok(out)
    }
}

impl Default for TLaurent {
    fn default() -> Self {
        TLaurent::new()
    }
}

/// ⟨f(t)α, g(t)β⟩ = f(t) g(-t) Tr(αβ), extended bilinearly.
pub fn loop_pairing(model: &DGBVModel, u: &TLaurent, v: &TLaurent) -> Result<Laurent, crate::model::ModelError> {
    let mut out = Laurent::new();
    for (i, a) in &u.coeffs {
        for (j, b) in &v.coeffs {
            let tr = model.trace(&model.multiply(a, b)?);
            if tr.is_zero() {
                continue;
            }
            let e = out.entry(i + j).or_default();
            *e += &tr.signed(j.rem_euclid(2) == 1);
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Coefficient of t^{-1}.
pub fn t_residue(l: &Laurent) -> Scalar {
    l.get(&-1).cloned().unwrap_or_default()
}

/// ω(u, v) = Res ⟨u, v⟩.
pub fn symplectic_form(model: &DGBVModel, u: &TLaurent, v: &TLaurent) -> Result<Scalar, crate::model::ModelError> {
    Ok(t_residue(&loop_pairing(model, u, v)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// θ1, θ2 odd and x even.
    fn small_ring() -> Arc<Ring> {
        let coords = vec![
            Coordinate { basis: 0, t_power: 0, parity: true },
            Coordinate { basis: 1, t_power: 0, parity: true },
            Coordinate { basis: 2, t_power: 0, parity: false },
        ];
        Arc::new(Ring::from_parts(coords, vec!["th1".into(), "th2".into(), "x".into()], 4))
    }

    #[test]
    fn odd_squares_vanish() {
        let r = small_ring();
        let th = SuperSeries::coordinate(&r, 0);
        assert!(th.super_mul(&th).unwrap().is_zero());
    }

    #[test]
    fn odd_coordinates_anticommute() {
        let r = small_ring();
        let a = SuperSeries::coordinate(&r, 0);
        let b = SuperSeries::coordinate(&r, 1);
        let ab = a.super_mul(&b).unwrap();
        let ba = b.super_mul(&a).unwrap();
        assert_eq!(ab, ba.scale(&Scalar::from_int(-1)));
        let x = SuperSeries::coordinate(&r, 2);
        assert_eq!(x.super_mul(&a).unwrap(), a.super_mul(&x).unwrap());
    }

    #[test]
    fn left_derivatives() {
        let r = small_ring();
        let th1 = SuperSeries::coordinate(&r, 0);
        let th2 = SuperSeries::coordinate(&r, 1);
        let x = SuperSeries::coordinate(&r, 2);
        assert_eq!(th1.super_mul(&x).unwrap().partial_derivative(0), x);
        assert_eq!(x.super_mul(&x).unwrap().partial_derivative(2), x.scale(&Scalar::from_int(2)));
        let p = th1.super_mul(&th2).unwrap();
        assert_eq!(p.partial_derivative(1), th1.scale(&Scalar::from_int(-1)));
    }

    #[test]
    fn truncation_is_enforced() {
        let r = small_ring();
        let x = SuperSeries::coordinate(&r, 2);
        let mut p = x.clone();
        for _ in 0..6 {
            p = p.super_mul(&x).unwrap();
        }
        assert!(p.is_zero());
    }

    #[test]
    fn residues() {
        let mut l = Laurent::new();
        l.insert(-1, Scalar::from_int(3));
        l.insert(0, Scalar::from_int(5));
        assert_eq!(t_residue(&l), Scalar::from_int(3));
        let mut l2 = Laurent::new();
        l2.insert(-2, Scalar::one());
        assert!(t_residue(&l2).is_zero());
    }
}
