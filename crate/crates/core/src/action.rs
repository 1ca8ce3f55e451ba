//! The classical action: vertices, field evaluation, Poisson bracket and master equation.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::hodge::HodgeData;
use crate::linalg::Matrix;
use crate::model::{DGBVModel, GradedElement};
use crate::scalar::{factorial, multinomial, Scalar};
use crate::series::{ElementSeries, LaurentSeries, Ring, SparseOp, SuperSeries};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("a vertex needs at least 3 legs, got {0}")]
    TooFewLegs(usize),
    #[error("series ring does not match the model: {0}")]
    ModelMismatch(String),
    #[error("order {order} exceeds the action's n_max {nmax}")]
    OrderTooLarge { order: usize, nmax: usize },
}

/// multinomial(n−3; k₁..kₙ)·Tr(α₁⋯αₙ) when Σk = n−3, else 0.
pub fn vertex(model: &DGBVModel, inputs: &[(GradedElement, u32)]) -> Result<Scalar, ActionError> {
    let n = inputs.len();
    if n < 3 {
        return Err(ActionError::TooFewLegs(n));
    }
    let ks: Vec<u32> = inputs.iter().map(|(_, k)| *k).collect();
    if ks.iter().sum::<u32>() as usize != n - 3 {
        return Ok(Scalar::zero());
    }
    let mut prod = model.basis_element(model.unit());
    for (a, _) in inputs {
        prod = model.multiply(&prod, a).map_err(|e| ActionError::ModelMismatch(e.to_string()))?;
    }
    Ok(&multinomial(&ks) * &model.trace(&prod))
}

/// One leg slot: basis element and t-power.
pub type Leg = (usize, u32);

/// Vertex values on canonically ordered leg tuples (sorted by basis, then t-power).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexTensor {
    pub n: usize,
    pub entries: BTreeMap<Vec<Leg>, Scalar>,
}

impl VertexTensor {
    /// Value on an arbitrary leg order, with the Koszul sign of sorting the odd legs.
    pub fn value(&self, model: &DGBVModel, legs: &[Leg]) -> Scalar {
        let mut idx: Vec<usize> = (0..legs.len()).collect();
        idx.sort_by_key(|&i| legs[i]);
        let mut inversions = 0;
        for i in 0..legs.len() {
            for j in i + 1..legs.len() {
                if model.parity(legs[i].0) && model.parity(legs[j].0) && legs[i] > legs[j] {
                    inversions += 1;
                }
            }
        }
        let sorted: Vec<Leg> = idx.iter().map(|&i| legs[i]).collect();
        self.entries.get(&sorted).cloned().unwrap_or_default().signed(inversions % 2 == 1)
    }
}

/// Exact weights of the n = 4 vertex; `Flat` replaces the multinomial by 1 for every t-power tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarticWeight {
    Multinomial,
    Flat,
}

/// The action S = Σ_n V_n(φ^n)/n!.
#[derive(Debug, Clone)]
pub struct ActionFunctional {
    model: Arc<DGBVModel>,
    nmax: usize,
    kmax: u32,
    vertices: Vec<VertexTensor>,
    quartic: QuarticWeight,
}

/// Populates vertex tensors for 3 ≤ n ≤ n_max over all basis elements and t-powers ≤ k_max.
pub fn build_action(model: &Arc<DGBVModel>, nmax: usize, kmax: u32) -> ActionFunctional {
    build_action_weighted(model, nmax, kmax, QuarticWeight::Multinomial)
}

/// [`build_action`] with a choice of quartic weight; `Flat` exists as a negative control.
pub fn build_action_weighted(
    model: &Arc<DGBVModel>,
    nmax: usize,
    kmax: u32,
    quartic: QuarticWeight,
) -> ActionFunctional {
    assert!(nmax >= 3, "n_max must be at least 3");
    let slots: Vec<Leg> = (0..model.len()).flat_map(|a| (0..=kmax).map(move |k| (a, k))).collect();
    let vertices = (3..=nmax).map(|n| populate(model, &slots, n, quartic)).collect();
    ActionFunctional { model: model.clone(), nmax, kmax, vertices, quartic }
}

fn populate(model: &DGBVModel, slots: &[Leg], n: usize, quartic: QuarticWeight) -> VertexTensor {
    let flat = n == 4 && quartic == QuarticWeight::Flat;
    let budget = if flat { u32::MAX } else { (n - 3) as u32 };
    let unit = model.basis_element(model.unit());
    let parts: Vec<BTreeMap<Vec<Leg>, Scalar>> = (0..slots.len())
        .into_par_iter()
        .map(|first| {
            let mut out = BTreeMap::new();
            let mut legs = vec![slots[first]];
            let prod = model.multiply(&unit, &model.basis_element(slots[first].0)).expect("same model");
            extend(model, slots, n, first, &mut legs, prod, slots[first].1, budget, flat, &mut out);
            out
        })
        .collect();
    let mut entries = BTreeMap::new();
    for p in parts {
        entries.extend(p);
    }
    VertexTensor { n, entries }
}

#[allow(clippy::too_many_arguments)]
fn extend(
    model: &DGBVModel,
    slots: &[Leg],
    n: usize,
    from: usize,
    legs: &mut Vec<Leg>,
    prod: GradedElement,
    tsum: u32,
    budget: u32,
    flat: bool,
    out: &mut BTreeMap<Vec<Leg>, Scalar>,
) {
    if prod.is_zero() || tsum > budget {
        return;
    }
    if legs.len() == n {
        if !flat && tsum as usize != n - 3 {
            return;
        }
        let tr = model.trace(&prod);
        if tr.is_zero() {
            return;
        }
        let w = if flat { Scalar::one() } else { multinomial(&legs.iter().map(|l| l.1).collect::<Vec<_>>()) };
        out.insert(legs.clone(), &w * &tr);
        return;
    }
    for i in from..slots.len() {
        let s = slots[i];
        // odd legs cannot repeat in a graded-symmetric tensor
        if i == from && legs.last() == Some(&s) && model.parity(s.0) {
            continue;
        }
        let next = model.multiply(&prod, &model.basis_element(s.0)).expect("same model");
        legs.push(s);
        extend(model, slots, n, i, legs, next, tsum + s.1, budget, flat, out);
        legs.pop();
    }
}

/// Polynomial in an auxiliary variable x with model-valued coefficients.
type XPoly = BTreeMap<u32, ElementSeries>;

fn xmul(model: &DGBVModel, a: &XPoly, b: &XPoly, maxdeg: u32) -> XPoly {
    let mut out: XPoly = BTreeMap::new();
    for (i, x) in a {
        for (j, y) in b {
            if i + j > maxdeg {
                continue;
            }
            let p = x.mul(model, y);
            if p.is_zero() {
                continue;
            }
            match out.get_mut(&(i + j)) {
                Some(cur) => cur.add_assign_scaled(&p, &Scalar::one()),
                None => {
                    out.insert(i + j, p);
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// ψ(x) = Σ_k X_k x^k / k!, truncated at x^maxdeg.
fn psi(field: &LaurentSeries, maxdeg: u32) -> XPoly {
    field
        .coeffs()
        .iter()
        .filter(|(k, _)| **k >= 0 && (**k as u32) <= maxdeg)
        .map(|(k, v)| (*k as u32, v.scale(&factorial(*k as usize).inv().expect("nonzero"))))
        .collect()
}

fn flatten(field: &LaurentSeries) -> ElementSeries {
    let mut acc = ElementSeries::zero(field.ring());
    for v in field.coeffs().values() {
        acc.add_assign_scaled(v, &Scalar::one());
    }
    acc
}

/// The model-valued vertex output with one open t⁰ slot on the left:
/// Tr(Z · out) = V(Z, X₁, …, X_m) for t⁰ insertions Z.
pub fn vertex_output(model: &DGBVModel, fields: &[&LaurentSeries], quartic: QuarticWeight) -> ElementSeries {
    let ring = fields[0].ring();
    let valence = fields.len() + 1;
    assert!(valence >= 3, "vertex output needs at least two inputs");
    if valence == 4 && quartic == QuarticWeight::Flat {
        let mut acc = ElementSeries::basis(ring, model.unit());
        for f in fields {
            acc = acc.mul(model, &flatten(f));
        }
        return acc;
    }
    let e = (valence - 3) as u32;
    let mut p: XPoly = [(0, ElementSeries::basis(ring, model.unit()))].into_iter().collect();
    for f in fields {
        p = xmul(model, &p, &psi(f, e), e);
        if p.is_empty() {
            return ElementSeries::zero(ring);
        }
    }
    p.get(&e).map(|x| x.scale(&factorial(e as usize))).unwrap_or_else(|| ElementSeries::zero(ring))
}

/// V(X₁, …, X_n) as a series.
pub fn vertex_value(model: &DGBVModel, fields: &[&LaurentSeries], quartic: QuarticWeight) -> SuperSeries {
    let ring = fields[0].ring();
    let n = fields.len();
    assert!(n >= 3, "vertex needs at least 3 legs");
    if n == 4 && quartic == QuarticWeight::Flat {
        let mut acc = ElementSeries::basis(ring, model.unit());
        for f in fields {
            acc = acc.mul(model, &flatten(f));
        }
        return acc.trace(model);
    }
    let e = (n - 3) as u32;
    let mut p: XPoly = [(0, ElementSeries::basis(ring, model.unit()))].into_iter().collect();
    for f in fields {
        p = xmul(model, &p, &psi(f, e), e);
        if p.is_empty() {
            return SuperSeries::zero(ring);
        }
    }
    p.get(&e).map(|x| x.trace(model).scale(&factorial(e as usize))).unwrap_or_else(|| SuperSeries::zero(ring))
}

/// φ = Σ τ^{a,k} F_a t^k over the ring's coordinates, F_a given by `frame(a)`.
pub fn generic_field(ring: &Arc<Ring>, frame: impl Fn(usize) -> Vec<(usize, Scalar)>) -> LaurentSeries {
    let mut out = LaurentSeries::zero(ring);
    for (c, co) in ring.coords().iter().enumerate() {
        let tau = SuperSeries::coordinate(ring, c as u16);
        let k = co.t_power as i32;
        let mut cur = out.coeff(k);
        for (i, s) in frame(co.basis) {
            cur.add_assign_scaled(&ElementSeries::term(ring, i, &tau), &s);
        }
        out.insert(k, cur);
    }
    out
}

/// Field whose coordinates are dual to the model basis itself.
pub fn basis_field(ring: &Arc<Ring>) -> LaurentSeries {
    generic_field(ring, |a| vec![(a, Scalar::one())])
}

/// Field whose coordinates are dual to the harmonic vectors Π e_a.
pub fn harmonic_field(ring: &Arc<Ring>, hodge: &HodgeData) -> LaurentSeries {
    generic_field(ring, |a| {
        let pos = hodge.harmonic.iter().position(|&h| h == a).expect("coordinate is harmonic");
        hodge.harmonic_vectors[pos].iter().cloned().enumerate().filter(|(_, s)| !s.is_zero()).collect()
    })
}

impl ActionFunctional {
    pub fn model(&self) -> &Arc<DGBVModel> {
        &self.model
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn quartic(&self) -> QuarticWeight {
        self.quartic
    }

    pub fn vertices(&self) -> &[VertexTensor] {
        &self.vertices
    }

    pub fn vertex_tensor(&self, n: usize) -> Option<&VertexTensor> {
        self.vertices.get(n.checked_sub(3)?)
    }

    /// Ring of all basis coordinates at t-powers ≤ k_max, truncated at n_max.
    pub fn full_ring(&self) -> Arc<Ring> {
        let all: Vec<usize> = (0..self.model.len()).collect();
        Ring::for_model(&self.model, &all, self.kmax, self.nmax)
    }

    /// S as a series on a full ring, assembled from the vertex tensors.
    pub fn series(&self, ring: &Arc<Ring>) -> SuperSeries {
        let mut terms = Vec::new();
        for vt in &self.vertices {
            for (legs, v) in &vt.entries {
                let Some(mono) = legs.iter().map(|&(a, k)| ring.index(a, k)).collect::<Option<Vec<u16>>>() else {
                    continue;
                };
                let odd = legs.iter().filter(|l| self.model.parity(l.0)).count();
                let mut mult = Scalar::one();
                let mut i = 0;
                while i < legs.len() {
                    let j = (i..legs.len()).find(|&j| legs[j] != legs[i]).unwrap_or(legs.len());
                    mult = &mult * &factorial(j - i);
                    i = j;
                }
                // (τ¹E₁)⋯(τⁿEₙ) = (−1)^{C(o,2)} τ¹⋯τⁿ E₁⋯Eₙ
                let eps = (odd * odd.saturating_sub(1) / 2) % 2 == 1;
                terms.push((mono, v.div(&mult).expect("nonzero").signed(eps)));
            }
        }
        SuperSeries::from_terms(ring, terms)
    }

    /// S(φ) by direct field evaluation.
    pub fn evaluate(&self, field: &LaurentSeries) -> SuperSeries {
        let ring = field.ring();
        let mut acc = SuperSeries::zero(ring);
        for n in 3..=self.nmax.min(ring.nmax()) {
            let fs: Vec<&LaurentSeries> = vec![field; n];
            let v = vertex_value(&self.model, &fs, self.quartic);
            acc = acc.add_scaled(&v, &factorial(n).inv().expect("nonzero"));
        }
        acc
    }

    /// ∇₀S(φ) = Σ_n out(φ^{n−1})/(n−1)!, with S'(φ)[Z] = Tr(Z·∇₀S) for t⁰ directions Z.
    pub fn gradient(&self, field: &LaurentSeries, max_order: usize) -> ElementSeries {
        let ring = field.ring();
        let mut acc = ElementSeries::zero(ring);
        for n in 3..=self.nmax.min(max_order + 1) {
            let fs: Vec<&LaurentSeries> = vec![field; n - 1];
            let y = vertex_output(&self.model, &fs, self.quartic);
            acc.add_assign_scaled(&y, &factorial(n - 1).inv().expect("nonzero"));
        }
        acc
    }

    /// S'(φ)[Y] = Σ_n V_n(Y, φ^{n−1})/(n−1)! with Y in the first slot.
    pub fn derivative(&self, field: &LaurentSeries, dir: &LaurentSeries) -> SuperSeries {
        let ring = field.ring();
        let mut acc = SuperSeries::zero(ring);
        for n in 3..=self.nmax.min(ring.nmax()) {
            let mut fs: Vec<&LaurentSeries> = vec![dir];
            fs.extend(std::iter::repeat_n(field, n - 1));
            let v = vertex_value(&self.model, &fs, self.quartic);
            acc = acc.add_scaled(&v, &factorial(n - 1).inv().expect("nonzero"));
        }
        acc
    }
}

/// Trace-dual gradient of an arbitrary series: g with Tr(Δ_a · g) = ∂H/∂τ^{a,0} for all basis a.
pub fn series_gradient(model: &DGBVModel, h: &SuperSeries) -> Result<ElementSeries, ActionError> {
    let ring = h.ring();
    let n = model.len();
    let t = model.trace_gram();
    let tinv = t.inverse().expect("validated models have a nondegenerate trace");
    let mut derivs = Vec::with_capacity(n);
    for a in 0..n {
        let c = ring
            .index(a, 0)
            .ok_or_else(|| ActionError::ModelMismatch(format!("no t0 coordinate for {}", model.id(a))))?;
        derivs.push(h.partial_derivative(c));
    }
    // Σ_b T_ab (−1)^{|a||m|} h_b[m] = (∂_a H)[m]
    let mut out = ElementSeries::zero(ring);
    for b in 0..n {
        let mut comp = Vec::new();
        for (a, d) in derivs.iter().enumerate() {
            let w = &tinv[(b, a)];
            if w.is_zero() {
                continue;
            }
            for (m, v) in d.terms() {
                let odd = model.parity(a) && ring.mono_parity(m);
                comp.push((m.to_vec(), (w * v).signed(odd)));
            }
        }
        let s = SuperSeries::from_terms(ring, comp);
        out.add_assign_scaled(&ElementSeries::term(ring, b, &s), &Scalar::one());
    }
    Ok(out)
}

fn require_full_ring(model: &DGBVModel, ring: &Ring) -> Result<(), ActionError> {
    for a in 0..model.len() {
        if ring.index(a, 0).is_none() {
            return Err(ActionError::ModelMismatch(format!("ring lacks t0 coordinate of {}", model.id(a))));
        }
    }
    Ok(())
}

/// {F, H} = Tr(∇₀F · del ∇₀H), contracting the t⁰ slots through the kernel of del.
pub fn poisson_bracket(f: &ActionFunctional, h: &SuperSeries) -> Result<SuperSeries, ActionError> {
    let model = f.model();
    let ring = h.ring();
    require_full_ring(model, ring)?;
    let del = SparseOp::new(model.del_matrix(), true);
    if del.is_zero() {
        return Ok(SuperSeries::zero(ring));
    }
    let phi = basis_field(ring);
    let gf = f.gradient(&phi, ring.nmax());
    let gh = series_gradient(model, h)?;
    Ok(gf.mul(model, &gh.apply(&del)).trace(model))
}

/// Q φ = dφ + t·del φ.
pub fn q_field(model: &DGBVModel, field: &LaurentSeries) -> LaurentSeries {
    let d = SparseOp::new(model.d_matrix(), true);
    let del = SparseOp::new(model.del_matrix(), true);
    field.apply(&d).add(&field.apply(&del).shift(1))
}

/// QS + ½{S, S} through the given τ-order; (QS)(φ) = −S'(φ)[Qφ].
pub fn cme_residual(s: &ActionFunctional, order: usize) -> Result<SuperSeries, ActionError> {
    if order > s.nmax() {
        return Err(ActionError::OrderTooLarge { order, nmax: s.nmax() });
    }
    let model = s.model();
    let all: Vec<usize> = (0..model.len()).collect();
    let ring = Ring::for_model(model, &all, s.kmax(), order);
    let phi = basis_field(&ring);
    let qphi = q_field(model, &phi);
    let qs =
        if qphi.is_zero() { SuperSeries::zero(&ring) } else { s.derivative(&phi, &qphi).scale(&Scalar::from_int(-1)) };
    let del = SparseOp::new(model.del_matrix(), true);
    let bracket = if del.is_zero() {
        SuperSeries::zero(&ring)
    } else {
        let g = s.gradient(&phi, order - 1);
        g.mul(model, &g.apply(&del)).trace(model)
    };
    Ok(qs.add_scaled(&bracket, &Scalar::from_frac(1, 2)).truncate(order))
}

/// Trace Gram matrix restricted to a list of vectors: g_ab = Tr(v_a v_b).
pub fn trace_form(model: &DGBVModel, vectors: &[Vec<Scalar>]) -> Matrix {
    let els: Vec<GradedElement> = vectors.iter().map(|v| crate::hodge::from_vec(model, v)).collect();
    Matrix::from_fn(els.len(), els.len(), |a, b| model.trace(&model.multiply(&els[a], &els[b]).expect("same model")))
}

/// Canonical leg key for reports.
pub fn leg_names(model: &DGBVModel, legs: &[Leg]) -> Vec<String> {
    legs.iter().map(|(a, k)| format!("{}:t{}", model.id(*a), k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{generate_model, ZooParams};

    fn load(name: &str) -> Arc<DGBVModel> {
        Arc::new(DGBVModel::from_spec(&generate_model(name, &ZooParams::default()).unwrap()).unwrap())
    }

    #[test]
    fn too_few_legs() {
        let m = load("torus(1)");
        let e = m.basis_element(0);
        assert_eq!(vertex(&m, &[(e.clone(), 0), (e, 0)]), Err(ActionError::TooFewLegs(2)));
    }

    #[test]
    fn cubic_vertex_is_yukawa() {
        let m = load("torus(1)");
        let legs = [(m.basis_element(0), 0), (m.basis_element(1), 0), (m.basis_element(2), 0)];
        assert_eq!(vertex(&m, &legs).unwrap(), Scalar::one());
    }

    #[test]
    fn series_matches_field_evaluation() {
        for name in ["torus(1)", "twostep-del", "cy3-toy"] {
            let m = load(name);
            let s = build_action(&m, 5, 2);
            let ring = s.full_ring();
            let phi = basis_field(&ring);
            assert_eq!(s.series(&ring), s.evaluate(&phi), "{name}");
        }
    }

    #[test]
    fn generic_gradient_matches_action_gradient() {
        let m = load("twostep-del");
        let s = build_action(&m, 5, 1);
        let ring = s.full_ring();
        let phi = basis_field(&ring);
        let direct = s.gradient(&phi, 4);
        let generic = series_gradient(&m, &s.evaluate(&phi)).unwrap();
        assert_eq!(direct.truncate(4), generic.truncate(4));
    }

    #[test]
    fn master_equation_and_negative_control() {
        let m = load("twostep-del");
        let s = build_action(&m, 5, 2);
        assert!(cme_residual(&s, 5).unwrap().is_zero());
        let bad = build_action_weighted(&m, 5, 2, QuarticWeight::Flat);
        assert!(!cme_residual(&bad, 5).unwrap().is_zero());
    }
}
