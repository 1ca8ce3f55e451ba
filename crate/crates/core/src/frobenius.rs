//! Period side: Maurer–Cartan solutions, the J-function, flat structure and potential.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{harmonic_field, ActionFunctional};
use crate::feynman::{check_integrable, harmonic_ring, tree_sum_on_field, FeynmanError};
use crate::hodge::{HodgeData, HodgeError};
use crate::linalg::Matrix;
use crate::model::{DGBVModel, GradedElement};
use crate::scalar::{factorial, Scalar};
use crate::series::{
    loop_pairing_series, residue_pairing_series, ElementSeries, LaurentSeries, Ring, SparseOp, SuperSeries, TLaurent,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrobeniusError {
    #[error("obstructed at order {order}: harmonic class {witness}")]
    ObstructionError { order: usize, witness: String },
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error("flat metric is degenerate")]
    DegenerateMetric,
    #[error("miniversality fails: {0}")]
    MiniversalityFailure(String),
    #[error("basis element {0} has no bidegree")]
    MissingBidegree(String),
    #[error(transparent)]
    Feynman(#[from] FeynmanError),
}

/// Universal Maurer–Cartan solution in harmonic coordinates, d*-gauge.
#[derive(Debug, Clone)]
pub struct MCSolution {
    pub ring: Arc<Ring>,
    pub mu: ElementSeries,
    /// w_n with μ⁽ⁿ⁾ = d* w_n, for n = 2..=order.
    pub witnesses: Vec<ElementSeries>,
    pub order: usize,
}

fn ops(model: &DGBVModel, hodge: &HodgeData) -> (SparseOp, SparseOp, SparseOp, SparseOp) {
    (
        SparseOp::new(model.d_matrix(), true),
        SparseOp::new(model.del_matrix(), true),
        SparseOp::new(&hodge.green.matrix, true),
        SparseOp::new(&hodge.projection.matrix, false),
    )
}

/// {a, b} for even a: del(ab) − (del a)b − a(del b).
fn bracket_even(model: &DGBVModel, del: &SparseOp, a: &ElementSeries, b: &ElementSeries) -> ElementSeries {
    let ab = a.mul(model, b).apply(del);
    ab.sub(&a.apply(del).mul(model, b)).sub(&a.mul(model, &b.apply(del)))
}

/// Kuranishi iteration μ = τ − ½ G del(μ²), checking the harmonic obstruction at every order.
pub fn mc_solve(model: &DGBVModel, hodge: &HodgeData, order: usize) -> Result<MCSolution, FrobeniusError> {
    hodge.check_kahler_gauge(model)?;
    if !hodge.check_decomposition() {
        return Err(HodgeError::KahlerAxiomError { identity: "hodge-decomposition", witness: vec![] }.into());
    }
    let ring = harmonic_ring(model, hodge, 0, order);
    let tau = harmonic_field(&ring, hodge).coeff(0);
    let (_, del, green, proj) = ops(model, hodge);
    let pinv = SparseOp::new(&hodge.laplacian_pinv.matrix, false);
    let mut mu = tau;
    let mut witnesses = Vec::new();
    for n in 2..=order {
        let sq = mu.mul(model, &mu).homogeneous(n);
        let dsq = sq.apply(&del);
        let obstruction = dsq.apply(&proj);
        if !obstruction.is_zero() {
            return Err(FrobeniusError::ObstructionError {
                order: n,
                witness: serde_json::to_string(&obstruction.to_json(model)).expect("serializable"),
            });
        }
        let half = Scalar::from_frac(-1, 2);
        let next = dsq.apply(&green).scale(&half);
        witnesses.push(dsq.apply(&pinv).scale(&half));
        mu = mu.add(&next);
    }
    Ok(MCSolution { ring, mu, witnesses, order })
}

/// Residuals (d μ + ½{μ, μ}, del μ, μ⁽ⁿ⁾ − d* w_n summed) of an MC solution.
pub fn mc_residuals(
    model: &DGBVModel,
    hodge: &HodgeData,
    sol: &MCSolution,
) -> (ElementSeries, ElementSeries, ElementSeries) {
    let (d, del, _, _) = ops(model, hodge);
    let dstar = SparseOp::new(&hodge.d_star.matrix, true);
    let mc = sol.mu.apply(&d).add_scaled(&bracket_even(model, &del, &sol.mu, &sol.mu), &Scalar::from_frac(1, 2));
    let mut gauge = ElementSeries::zero(&sol.ring);
    for (i, w) in sol.witnesses.iter().enumerate() {
        let n = i + 2;
        gauge = gauge.add(&sol.mu.homogeneous(n).sub(&w.apply(&dstar)));
    }
    (mc, sol.mu.apply(&del), gauge)
}

/// Π Σ_k (−t del G)^k applied to a model-valued Laurent series.
pub fn q_class_series(model: &DGBVModel, hodge: &HodgeData, x: &LaurentSeries) -> LaurentSeries {
    let (_, del, green, proj) = ops(model, hodge);
    let mut acc = LaurentSeries::zero(x.ring());
    let mut cur = x.clone();
    for _ in 0..=model.len() {
        if cur.is_zero() {
            break;
        }
        acc = acc.add(&cur.apply(&proj));
        cur = cur.apply(&green).apply(&del).scale(&Scalar::from_int(-1)).shift(1);
    }
    acc
}

/// J = t·e^{μ/t} − t = Σ_{n≥1} [μⁿ]/n! · t^{1−n}, harmonic coefficients.
#[derive(Debug, Clone)]
pub struct JFunction {
    pub series: LaurentSeries,
    pub order: usize,
}

pub fn j_function(model: &DGBVModel, hodge: &HodgeData, sol: &MCSolution) -> JFunction {
    let ring = &sol.ring;
    let mut raw = LaurentSeries::zero(ring);
    let mut pow = ElementSeries::basis(ring, model.unit());
    for n in 1..=sol.order {
        pow = pow.mul(model, &sol.mu);
        if pow.is_zero() {
            break;
        }
        raw.insert(1 - n as i32, pow.scale(&factorial(n).inv().expect("nonzero")));
    }
    JFunction { series: q_class_series(model, hodge, &raw), order: sol.order }
}

/// π₀(J): the t⁰ coefficient.
pub fn pi0(j: &JFunction) -> ElementSeries {
    j.series.coeff(0)
}

/// τ = Σ τ^a Δ_a on the J ring.
pub fn tau_element(hodge: &HodgeData, ring: &Arc<Ring>) -> ElementSeries {
    harmonic_field(ring, hodge).coeff(0)
}

/// Harmonic vectors ordered by basis index, matching the coordinate order of harmonic rings.
pub fn harmonic_frame(hodge: &HodgeData) -> Vec<(usize, Vec<Scalar>)> {
    let mut frame: Vec<(usize, Vec<Scalar>)> =
        hodge.harmonic.iter().cloned().zip(hodge.harmonic_vectors.iter().cloned()).collect();
    frame.sort_by_key(|(b, _)| *b);
    frame
}

fn harmonic_elements(model: &DGBVModel, hodge: &HodgeData) -> Vec<GradedElement> {
    harmonic_frame(hodge).into_iter().map(|(_, v)| model.element(v.into_iter().enumerate())).collect()
}

/// g_ab = Tr(Δ_a Δ_b) on the harmonic basis.
pub fn flat_metric(model: &DGBVModel, hodge: &HodgeData) -> Result<Matrix, FrobeniusError> {
    let els = harmonic_elements(model, hodge);
    let g = Matrix::from_fn(els.len(), els.len(), |a, b| {
        model.trace(&model.multiply(&els[a], &els[b]).expect("same model"))
    });
    if g.determinant().is_zero() {
        return Err(FrobeniusError::DegenerateMetric);
    }
    Ok(g)
}

/// ∂_a J for each harmonic coordinate a (ring order).
pub fn j_derivatives(j: &JFunction) -> Vec<LaurentSeries> {
    let ring = j.series.ring();
    (0..ring.len()).map(|c| j.series.partial_derivative(c as u16)).collect()
}

/// ⟨∂_a J, ∂_b J⟩ − g_ab at every t-power; all zero iff the metric is flat and constant.
pub fn metric_defect(model: &DGBVModel, j: &JFunction, g: &Matrix) -> usize {
    let ring = j.series.ring().clone();
    let dj = j_derivatives(j);
    let n = dj.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut pr = loop_pairing_series(model, &dj[a], &dj[b]);
            let c = pr.entry(0).or_insert_with(|| SuperSeries::zero(&ring));
            *c = c.sub(&SuperSeries::constant(&ring, g[(a, b)].clone()));
            pr.values().map(|s| s.truncate(j.order.saturating_sub(2)).len()).sum::<usize>()
        })
        .sum()
}

/// Expresses a harmonic-valued element series in the harmonic frame; `None` if it leaves the span.
pub fn harmonic_coordinates(model: &DGBVModel, hodge: &HodgeData, x: &ElementSeries) -> Option<Vec<SuperSeries>> {
    let n = model.len();
    let vectors: Vec<Vec<Scalar>> = harmonic_frame(hodge).into_iter().map(|(_, v)| v).collect();
    let h = vectors.len();
    let frame = Matrix::from_columns(n, &vectors);
    let rows = frame.transpose().column_basis();
    let square = Matrix::from_fn(h, h, |r, c| frame[(rows[r], c)].clone());
    let inv = square.inverse().expect("harmonic frame has full rank");
    let ring = x.ring();
    let coords: Vec<SuperSeries> = (0..h)
        .map(|e| {
            let mut acc = SuperSeries::zero(ring);
            for (r, &row) in rows.iter().enumerate() {
                acc = acc.add_scaled(&x.component(row), &inv[(e, r)]);
            }
            acc
        })
        .collect();
    let mut back = ElementSeries::zero(ring);
    for (e, c) in coords.iter().enumerate() {
        for (i, s) in vectors[e].iter().enumerate() {
            if !s.is_zero() {
                back.add_assign_scaled(&ElementSeries::term(ring, i, c), s);
            }
        }
    }
    (back == *x).then_some(coords)
}

/// A_ab^c(τ), indexed [a][b][c] over harmonic coordinates.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    pub a: Vec<Vec<Vec<SuperSeries>>>,
    /// Number of nonzero terms in t∂_a∂_b J − Σ_c A_ab^c ∂_c J over all t-powers.
    pub residual_terms: usize,
}

/// Solves t ∂_a∂_b J = Σ_c A_ab^c ∂_c J order by order.
pub fn structure_constants(
    model: &DGBVModel,
    hodge: &HodgeData,
    j: &JFunction,
) -> Result<StructureConstants, FrobeniusError> {
    let ring = j.series.ring().clone();
    let h = ring.len();
    let dj = j_derivatives(j);
    // M_ce: harmonic coordinates of [t⁰] ∂_c J
    let mut m = Vec::with_capacity(h);
    for (c, djc) in dj.iter().enumerate() {
        let coords = harmonic_coordinates(model, hodge, &djc.coeff(0)).ok_or_else(|| {
            FrobeniusError::MiniversalityFailure(format!("t0 part of dJ/d{} is not harmonic", ring.name(c as u16)))
        })?;
        m.push(coords);
    }
    let m0 = Matrix::from_fn(h, h, |c, e| m[c][e].coefficient(&[]));
    let m0inv = m0.inverse().ok_or_else(|| {
        FrobeniusError::MiniversalityFailure("t-derivatives of J are dependent at the base point".into())
    })?;
    let nilp: Vec<Vec<SuperSeries>> = m
        .iter()
        .enumerate()
        .map(|(c, row)| {
            row.iter().enumerate().map(|(e, s)| s.sub(&SuperSeries::constant(&ring, m0[(c, e)].clone()))).collect()
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..h).flat_map(|a| (0..h).map(move |b| (a, b))).collect();
    let solved: Vec<Result<Vec<SuperSeries>, FrobeniusError>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let x = dj[b].partial_derivative(a as u16).coeff(-1);
            let rhs = harmonic_coordinates(model, hodge, &x).ok_or_else(|| {
                FrobeniusError::MiniversalityFailure(format!("second derivative ({a},{b}) leaves the harmonic span"))
            })?;
            // A = (X − A·N)·M0⁻¹, iterated to the truncation order
            let mut sol = vec![SuperSeries::zero(&ring); h];
            for _ in 0..=j.order {
                let mut next = Vec::with_capacity(h);
                let mut tmp = rhs.clone();
                for (e, t) in tmp.iter_mut().enumerate() {
                    for (c, s) in sol.iter().enumerate() {
                        if s.is_zero() || nilp[c][e].is_zero() {
                            continue;
                        }
                        *t = t.sub(&s.super_mul(&nilp[c][e]).expect("same ring"));
                    }
                }
                for f in 0..h {
                    let mut acc = SuperSeries::zero(&ring);
                    for (e, t) in tmp.iter().enumerate() {
                        acc = acc.add_scaled(t, &m0inv[(e, f)]);
                    }
                    next.push(acc);
                }
                if next == sol {
                    break;
                }
                sol = next;
            }
            Ok(sol)
        })
        .collect();
    let mut a_out = vec![vec![Vec::new(); h]; h];
    for (&(a, b), r) in pairs.iter().zip(solved) {
        a_out[a][b] = r?;
    }
    // residual of the ansatz over every t-power, to order − 2
    let residual_terms: usize = pairs
        .par_iter()
        .map(|&(a, b)| {
            let lhs = dj[b].partial_derivative(a as u16).shift(1);
            let mut rhs = LaurentSeries::zero(&ring);
            for (c, djc) in dj.iter().enumerate() {
                rhs = rhs.add(&djc.left_mul(&a_out[a][b][c]));
            }
            let diff = lhs.sub(&rhs).truncate(j.order.saturating_sub(2));
            diff.coeffs().values().map(ElementSeries::term_count).sum::<usize>()
        })
        .sum();
    Ok(StructureConstants { a: a_out, residual_terms })
}

/// A_abc = Σ_d A_ab^d g_dc.
pub fn lower_index(sc: &StructureConstants, g: &Matrix) -> Vec<Vec<Vec<SuperSeries>>> {
    let h = g.rows();
    (0..h)
        .map(|a| {
            (0..h)
                .map(|b| {
                    (0..h)
                        .map(|c| {
                            let mut acc = SuperSeries::zero(sc.a[a][b][0].ring());
                            for d in 0..h {
                                acc = acc.add_scaled(&sc.a[a][b][d], &g[(d, c)]);
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// f₀ from ∂_a f₀ = Res⟨J − τ, Δ_a⟩, integrated with the Euler operator.
pub fn potential_from_period(
    model: &DGBVModel,
    hodge: &HodgeData,
    j: &JFunction,
) -> Result<SuperSeries, FrobeniusError> {
    let ring = j.series.ring().clone();
    let tau = tau_element(hodge, &ring);
    let shifted = j.series.sub(&LaurentSeries::single(0, tau));
    let els = harmonic_elements(model, hodge);
    let grads: Vec<SuperSeries> = els
        .iter()
        .map(|el| {
            let delta = LaurentSeries::single(0, ElementSeries::from_element(&ring, el));
            residue_pairing_series(model, &shifted, &delta)
        })
        .collect();
    check_integrable(&ring, &grads)?;
    Ok(SuperSeries::euler_integrate(&ring, &grads))
}

/// Third derivatives ∂_a∂_b∂_c f (left derivatives, c applied first).
pub fn third_derivatives(f: &SuperSeries) -> Vec<Vec<Vec<SuperSeries>>> {
    let ring = f.ring().clone();
    let h = ring.len();
    (0..h)
        .into_par_iter()
        .map(|a| {
            (0..h)
                .map(|b| {
                    (0..h)
                        .map(|c| {
                            f.partial_derivative(c as u16).partial_derivative(b as u16).partial_derivative(a as u16)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Structure constants A_ab^f = Σ_e (∂_a∂_b∂_e f) g^{ef}.
pub fn structure_from_potential(f: &SuperSeries, g: &Matrix) -> Vec<Vec<Vec<SuperSeries>>> {
    let ginv = g.inverse().expect("nondegenerate metric");
    let third = third_derivatives(f);
    let h = g.rows();
    (0..h)
        .map(|a| {
            (0..h)
                .map(|b| {
                    (0..h)
                        .map(|fi| {
                            let mut acc = SuperSeries::zero(f.ring());
                            for e in 0..h {
                                acc = acc.add_scaled(&third[a][b][e], &ginv[(e, fi)]);
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Associativity defect of ∂_a∘∂_b = Σ A_ab^e ∂_e, functions acting from the left:
/// Σ_e A_ab^e A_ec^f − (−1)^{|a|(|b|+|c|+|e|)} A_bc^e A_ae^f. Returns max |coefficient|.
pub fn associativity_defect(a: &[Vec<Vec<SuperSeries>>], parity: &[bool], order: usize) -> Scalar {
    let h = a.len();
    let triples: Vec<(usize, usize, usize)> =
        (0..h).flat_map(|x| (0..h).flat_map(move |y| (0..h).map(move |z| (x, y, z)))).collect();
    let maxes: Vec<Scalar> = triples
        .par_iter()
        .map(|&(x, y, z)| {
            let mut best = Scalar::zero();
            for f in 0..h {
                let mut acc = SuperSeries::zero(a[0][0][0].ring());
                for e in 0..h {
                    let l = a[x][y][e].super_mul(&a[e][z][f]).expect("same ring");
                    let odd = parity[x] && (parity[y] ^ parity[z] ^ parity[e]);
                    let r = a[y][z][e].super_mul(&a[x][e][f]).expect("same ring");
                    acc = acc.add(&l).add_scaled(&r, &Scalar::one().signed(!odd));
                }
                for v in acc.truncate(order).terms().values() {
                    let m = Scalar::from(v.max_abs());
                    if m.re() > best.re() {
                        best = m;
                    }
                }
            }
            best
        })
        .collect();
    maxes.into_iter().fold(Scalar::zero(), |acc, m| if m.re() > acc.re() { m } else { acc })
}

/// WDVV residual of a potential: associativity defect of the product it defines with g.
pub fn wdvv_residual(f: &SuperSeries, g: &Matrix) -> Scalar {
    let ring = f.ring();
    let parity: Vec<bool> = (0..ring.len()).map(|c| ring.parity(c as u16)).collect();
    // third derivatives lose three orders
    let order = ring.nmax().saturating_sub(3);
    associativity_defect(&structure_from_potential(f, g), &parity, order)
}

/// Flat metric, structure constants and potential.
#[derive(Debug, Clone)]
pub struct FrobeniusData {
    pub g: Matrix,
    pub structure: StructureConstants,
    pub f0: SuperSeries,
    pub unit_index: usize,
}

pub fn frobenius_data(model: &DGBVModel, hodge: &HodgeData, j: &JFunction) -> Result<FrobeniusData, FrobeniusError> {
    let g = flat_metric(model, hodge)?;
    let structure = structure_constants(model, hodge, j)?;
    let f0 = potential_from_period(model, hodge, j)?;
    let unit_index = harmonic_frame(hodge).iter().position(|(x, _)| *x == model.unit()).unwrap_or(0);
    Ok(FrobeniusData { g, structure, f0, unit_index })
}

/// Pass/fail per semi-infinite Hodge axiom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VhsReport {
    pub pairing_symmetry: bool,
    pub sesquilinearity: bool,
    pub connection_leibniz: bool,
    pub nondegenerate_at_zero: bool,
    pub transversality: bool,
}

impl VhsReport {
    pub fn all_pass(&self) -> bool {
        self.pairing_symmetry
            && self.sesquilinearity
            && self.connection_leibniz
            && self.nondegenerate_at_zero
            && self.transversality
    }
}

fn negate_t(x: &std::collections::BTreeMap<i32, SuperSeries>) -> std::collections::BTreeMap<i32, SuperSeries> {
    x.iter().map(|(k, v)| (*k, if k.rem_euclid(2) == 1 { v.scale(&Scalar::from_int(-1)) } else { v.clone() })).collect()
}

fn truncated(
    x: &std::collections::BTreeMap<i32, SuperSeries>,
    n: usize,
) -> std::collections::BTreeMap<i32, SuperSeries> {
    x.iter().map(|(k, v)| (*k, v.truncate(n))).filter(|(_, v)| !v.is_zero()).collect()
}

/// Checks the axioms on the sections ∂_a J through the truncation order.
pub fn vhs_axiom_check(model: &DGBVModel, j: &JFunction, g: &Matrix, sc: &StructureConstants) -> VhsReport {
    let ring = j.series.ring().clone();
    let dj = j_derivatives(j);
    let n = dj.len();
    let cut = j.order.saturating_sub(2);
    let par = |a: usize| ring.parity(a as u16);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();

    let pairing_symmetry = pairs.par_iter().all(|&(a, b)| {
        let uv = loop_pairing_series(model, &dj[a], &dj[b]);
        let vu = negate_t(&loop_pairing_series(model, &dj[b], &dj[a]));
        let s = Scalar::one().signed(par(a) && par(b));
        let vu: std::collections::BTreeMap<i32, SuperSeries> = vu.into_iter().map(|(k, v)| (k, v.scale(&s))).collect();
        truncated(&uv, cut) == truncated(&vu, cut)
    });

    let sesquilinearity = pairs.par_iter().all(|&(a, b)| {
        let lhs = loop_pairing_series(model, &dj[a].shift(1), &dj[b]);
        let rhs = loop_pairing_series(model, &dj[a], &dj[b].shift(1).scale(&Scalar::from_int(-1)));
        truncated(&lhs, cut) == truncated(&rhs, cut)
    });

    let connection_leibniz = pairs.par_iter().all(|&(a, b)| {
        let base = loop_pairing_series(model, &dj[a], &dj[b]);
        (0..n).all(|c| {
            let lhs: std::collections::BTreeMap<i32, SuperSeries> =
                base.iter().map(|(k, v)| (*k, v.partial_derivative(c as u16))).collect();
            let t1 = loop_pairing_series(model, &dj[a].partial_derivative(c as u16), &dj[b]);
            let t2 = loop_pairing_series(model, &dj[a], &dj[b].partial_derivative(c as u16));
            let s = Scalar::one().signed(par(c) && par(a));
            let mut rhs = t1;
            for (k, v) in t2 {
                let e = rhs.entry(k).or_insert_with(|| SuperSeries::zero(&ring));
                *e = e.add_scaled(&v, &s);
            }
            truncated(&lhs, cut.saturating_sub(1)) == truncated(&rhs, cut.saturating_sub(1))
        })
    });

    let gram = Matrix::from_fn(n, n, |a, b| {
        loop_pairing_series(model, &dj[a], &dj[b]).get(&0).map(|s| s.coefficient(&[])).unwrap_or_default()
    });
    let nondegenerate_at_zero = &gram == g && !gram.determinant().is_zero();

    let lowest = 3 - j.order as i32;
    let transversality = sc.residual_terms == 0
        && pairs.par_iter().all(|&(a, b)| {
            let x = dj[b].partial_derivative(a as u16).shift(2);
            x.coeffs().iter().all(|(k, v)| v.is_zero() || (*k <= 1 && *k >= lowest))
        });

    VhsReport { pairing_symmetry, sesquilinearity, connection_leibniz, nondegenerate_at_zero, transversality }
}

/// Reindexes the bidegree-(i, j) component from t^k to t^{k+i−1}.
pub fn gamma_flat(model: &DGBVModel, x: &TLaurent) -> Result<TLaurent, FrobeniusError> {
    gamma_shift(model, x, 1)
}

pub fn gamma_flat_inverse(model: &DGBVModel, x: &TLaurent) -> Result<TLaurent, FrobeniusError> {
    gamma_shift(model, x, -1)
}

fn gamma_shift(model: &DGBVModel, x: &TLaurent, dir: i32) -> Result<TLaurent, FrobeniusError> {
    let mut parts: std::collections::BTreeMap<i32, Vec<(usize, Scalar)>> = std::collections::BTreeMap::new();
    for (k, el) in x.coeffs() {
        for (i, v) in el.coeffs() {
            let (p, _) =
                model.basis()[*i].bidegree.ok_or_else(|| FrobeniusError::MissingBidegree(model.id(*i).to_string()))?;
            parts.entry(k + dir * (p as i32 - 1)).or_default().push((*i, v.clone()));
        }
    }
    let mut out = TLaurent::new();
    for (k, v) in parts {
        out.insert(k, model.element(v));
    }
    Ok(out)
}

/// Period-side generating functional over all descendant coordinates, and F₀ on the cone point.
#[derive(Debug, Clone)]
pub struct DescendantComparison {
    /// Φ(T) with ∂_c Φ = Res⟨∂_c q, p⟩.
    pub period: SuperSeries,
    /// F₀ evaluated on the field q(T).
    pub trees: SuperSeries,
    /// Nonzero terms of the t-extended MC residual (d + t del)ν + ½{ν, ν}.
    pub mc_residual_terms: usize,
}

/// Solves ν = T − ½ G{ν, ν} over A[[t]], forms x = t − t·e^{−ν/t}, and compares both sides.
pub fn descendant_comparison(
    s: &ActionFunctional,
    hodge: &HodgeData,
    order: usize,
    kmax: u32,
) -> Result<DescendantComparison, FrobeniusError> {
    let model = s.model();
    let p = hodge.propagator(model)?;
    let ring = harmonic_ring(model, hodge, kmax, order);
    let big_t = harmonic_field(&ring, hodge);
    let (d, del, green, _) = ops(model, hodge);
    let br = |x: &LaurentSeries, y: &LaurentSeries| {
        let xy = x.mul(model, y);
        xy.apply(&del).sub(&x.apply(&del).mul(model, y)).sub(&x.mul(model, &y.apply(&del)))
    };
    let mut nu = big_t.clone();
    for _ in 0..order {
        let next = big_t.add(&br(&nu, &nu).apply(&green).scale(&Scalar::from_frac(-1, 2)));
        if next == nu {
            break;
        }
        nu = next;
    }
    let residual = nu.apply(&d).add(&nu.apply(&del).shift(1)).add(&br(&nu, &nu).scale(&Scalar::from_frac(1, 2)));
    let mc_residual_terms = residual.coeffs().values().map(ElementSeries::term_count).sum();

    // x = −Σ_n (−ν)^n / (n! t^{n−1})
    let neg = nu.scale(&Scalar::from_int(-1));
    let mut pow = LaurentSeries::single(0, ElementSeries::basis(&ring, model.unit()));
    let mut x = LaurentSeries::zero(&ring);
    for n in 1..=order {
        pow = pow.mul(model, &neg);
        if pow.is_zero() {
            break;
        }
        x = x.add(&pow.shift(1 - n as i32).scale(&(-factorial(n).inv().expect("nonzero"))));
    }
    let x = q_class_series(model, hodge, &x);
    let q = x.filter_powers(|k| k >= 0);
    let pm = x.filter_powers(|k| k < 0);
    let grads: Vec<SuperSeries> = (0..ring.len())
        .into_par_iter()
        .map(|c| residue_pairing_series(model, &q.partial_derivative(c as u16), &pm))
        .collect();
    let period = SuperSeries::euler_integrate(&ring, &grads).truncate(order);
    let trees = tree_sum_on_field(s, &p, &q, order)?;
    Ok(DescendantComparison { period, trees, mc_residual_terms })
}
