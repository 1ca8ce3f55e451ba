//! Genus-zero partition function by tree sums and by the perturbation fixed point.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::action::{harmonic_field, vertex_output, vertex_value, ActionFunctional, QuarticWeight};
use crate::hodge::{HodgeData, HodgeError, PropagatorKernel};
use crate::model::{DGBVModel, GradedElement};
use crate::scalar::{factorial, Scalar};
use crate::series::{ElementSeries, LaurentSeries, Ring, SparseOp, SuperSeries};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeynmanError {
    #[error("a tree needs at least 3 legs, got {0}")]
    TooFewLegs(usize),
    #[error("tree has {tree} legs but {given} were supplied")]
    ShapeMismatch { tree: usize, given: usize },
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error("gradient is not integrable: mixed derivatives differ for ({0}, {1})")]
    NonIntegrableGradient(String, String),
    #[error("order must be at least 3, got {0}")]
    OrderTooSmall(usize),
}

/// Tree with leaves 0..n and internal vertices n.. of valence ≥ 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    leaves: usize,
    internal: usize,
    edges: Vec<(usize, usize)>,
}

impl Tree {
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn internal_vertices(&self) -> usize {
        self.internal
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn internal_edges(&self) -> usize {
        self.edges.iter().filter(|(a, b)| *a >= self.leaves && *b >= self.leaves).count()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.leaves + self.internal];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for v in &mut adj {
            v.sort_unstable();
        }
        adj
    }

    /// Nontrivial leaf bipartitions cut by internal edges, each as the side without leaf 0.
    pub fn splits(&self) -> BTreeSet<Vec<usize>> {
        let adj = self.adjacency();
        let mut out = BTreeSet::new();
        for &(a, b) in &self.edges {
            if a < self.leaves || b < self.leaves {
                continue;
            }
            let side = self.leaves_behind(&adj, b, a);
            let side = if side.contains(&0) { (0..self.leaves).filter(|x| !side.contains(x)).collect() } else { side };
            out.insert(side);
        }
        out
    }

    fn leaves_behind(&self, adj: &[Vec<usize>], v: usize, parent: usize) -> Vec<usize> {
        let mut stack = vec![(v, parent)];
        let mut out = Vec::new();
        while let Some((x, p)) = stack.pop() {
            if x < self.leaves {
                out.push(x);
                continue;
            }
            for &y in &adj[x] {
                if y != p {
                    stack.push((y, x));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Order of the group of automorphisms fixing every leaf.
    pub fn symmetry_factor(&self) -> usize {
        // each internal vertex is pinned by the leaf sets of its branches
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        for v in self.leaves..self.leaves + self.internal {
            let mut branches: Vec<Vec<usize>> = adj[v].iter().map(|&y| self.leaves_behind(&adj, y, v)).collect();
            branches.sort();
            if !seen.insert(branches) {
                return 2;
            }
        }
        1
    }

    fn check(&self) {
        let adj = self.adjacency();
        assert_eq!(self.edges.len(), self.leaves + self.internal - 1, "tree must be acyclic and connected");
        for (v, nb) in adj.iter().enumerate() {
            if v < self.leaves {
                assert_eq!(nb.len(), 1, "leaf has one edge");
            } else {
                assert!(nb.len() >= 3, "internal valence at least 3");
            }
        }
    }

    /// Canonical string of the tree rooted at `v` (seen from `parent`), leaves anonymous.
    fn shape(&self, adj: &[Vec<usize>], v: usize, parent: usize) -> String {
        if v < self.leaves {
            return "L".into();
        }
        let mut kids: Vec<String> = adj[v].iter().filter(|&&y| y != parent).map(|&y| self.shape(adj, y, v)).collect();
        kids.sort();
        format!("({})", kids.join(""))
    }
}

/// One representative per leaf-labeled tree with internal valence ≥ 3.
pub fn enumerate_trees(n: usize) -> Result<Vec<Tree>, FeynmanError> {
    if n < 3 {
        return Err(FeynmanError::TooFewLegs(n));
    }
    let mut trees = vec![Tree { leaves: 3, internal: 1, edges: vec![(0, 3), (1, 3), (2, 3)] }];
    for m in 4..=n {
        // insert leaf m−1: shift internal labels up by one, then attach
        let mut next = Vec::new();
        for t in &trees {
            let sh = |x: usize| if x < m - 1 { x } else { x + 1 };
            let edges: Vec<(usize, usize)> = t.edges.iter().map(|&(a, b)| (sh(a), sh(b))).collect();
            let leaf = m - 1;
            for v in m..m + t.internal {
                let mut e = edges.clone();
                e.push((leaf, v));
                next.push(Tree { leaves: m, internal: t.internal, edges: e });
            }
            let fresh = m + t.internal;
            for i in 0..edges.len() {
                let (a, b) = edges[i];
                let mut e = edges.clone();
                e.remove(i);
                e.extend([(a, fresh), (fresh, b), (leaf, fresh)]);
                next.push(Tree { leaves: m, internal: t.internal + 1, edges: e });
            }
        }
        trees = next;
    }
    for t in &trees {
        t.check();
        assert_eq!(t.symmetry_factor(), 1, "leaf-fixing automorphisms are trivial");
    }
    Ok(trees)
}

/// Shared machinery for evaluating trees on fields.
struct Evaluator<'a> {
    model: &'a DGBVModel,
    edge: SparseOp,
    quartic: QuarticWeight,
}

impl Evaluator<'_> {
    /// Field carried by the edge from `v` towards `parent`.
    fn edge_field(
        &self,
        tree: &Tree,
        adj: &[Vec<usize>],
        v: usize,
        parent: usize,
        leaf: &dyn Fn(usize) -> LaurentSeries,
    ) -> LaurentSeries {
        if v < tree.leaves {
            return leaf(v);
        }
        let kids: Vec<LaurentSeries> =
            adj[v].iter().filter(|&&y| y != parent).map(|&y| self.edge_field(tree, adj, y, v, leaf)).collect();
        let refs: Vec<&LaurentSeries> = kids.iter().collect();
        let y = vertex_output(self.model, &refs, self.quartic);
        LaurentSeries::single(0, y.apply(&self.edge).scale(&Scalar::from_int(-1)))
    }

    fn amplitude(&self, tree: &Tree, leaf: &dyn Fn(usize) -> LaurentSeries) -> SuperSeries {
        let adj = tree.adjacency();
        let root = adj[0][0];
        let kids: Vec<LaurentSeries> = adj[root].iter().map(|&y| self.edge_field(tree, &adj, y, root, leaf)).collect();
        let refs: Vec<&LaurentSeries> = kids.iter().collect();
        vertex_value(self.model, &refs, self.quartic)
    }
}

/// G∘del recovered from the kernel as P·T.
fn edge_operator(model: &DGBVModel, p: &PropagatorKernel) -> SparseOp {
    SparseOp::new(&(&p.entries * &model.trace_gram()), false)
}

/// Contracts the vertices of Γ with the given legs; internal edges carry −P at t⁰ on both ends.
pub fn tree_amplitude(
    tree: &Tree,
    legs: &[(GradedElement, u32)],
    s: &ActionFunctional,
    p: &PropagatorKernel,
) -> Result<Scalar, FeynmanError> {
    if legs.len() != tree.leaves {
        return Err(FeynmanError::ShapeMismatch { tree: tree.leaves, given: legs.len() });
    }
    let model = s.model();
    let ring = Arc::new(Ring::from_parts(Vec::new(), Vec::new(), 0));
    let ev = Evaluator { model, edge: edge_operator(model, p), quartic: s.quartic() };
    let leaf = |i: usize| LaurentSeries::single(legs[i].1 as i32, ElementSeries::from_element(&ring, &legs[i].0));
    let amp = ev.amplitude(tree, &leaf);
    Ok(amp.coefficient(&[]).div(&Scalar::from_int(tree.symmetry_factor() as i64)).expect("nonzero"))
}

/// Genus-zero potential in harmonic coordinates τ^{a,k}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genus0Potential {
    pub series: SuperSeries,
    pub order: usize,
}

/// Ring of harmonic coordinates up to t^kmax, truncated at `order`.
pub fn harmonic_ring(model: &DGBVModel, hodge: &HodgeData, kmax: u32, order: usize) -> Arc<Ring> {
    Ring::for_model(model, &hodge.harmonic, kmax, order)
}

/// Σ over leaf-labeled trees with n ≤ `order` legs, all leaves carrying `field`, divided by n!.
pub fn tree_sum_on_field(
    s: &ActionFunctional,
    p: &PropagatorKernel,
    field: &LaurentSeries,
    order: usize,
) -> Result<SuperSeries, FeynmanError> {
    let model = s.model();
    let ev = Evaluator { model, edge: edge_operator(model, p), quartic: s.quartic() };
    let ring = field.ring().clone();
    let mut total = SuperSeries::zero(&ring);
    let cache: Mutex<HashMap<String, SuperSeries>> = Mutex::new(HashMap::new());
    for n in 3..=order {
        let trees = enumerate_trees(n)?;
        let amps: Vec<SuperSeries> = trees
            .par_iter()
            .map(|t| {
                if p.is_zero() && t.internal > 1 {
                    return SuperSeries::zero(&ring);
                }
                let adj = t.adjacency();
                let key = t.shape(&adj, adj[0][0], usize::MAX);
                if let Some(hit) = cache.lock().expect("cache lock").get(&key) {
                    return hit.clone();
                }
                let amp = ev.amplitude(t, &|_| field.clone());
                cache.lock().expect("cache lock").insert(key, amp.clone());
                amp
            })
            .collect();
        let inv = factorial(n).inv().expect("nonzero");
        for a in &amps {
            total = total.add_scaled(a, &inv);
        }
    }
    Ok(total.truncate(order))
}

/// F₀ as the sum over trees, with legs over harmonic coordinates and t-powers ≤ `kmax`.
pub fn f0_tree_sum(
    s: &ActionFunctional,
    hodge: &HodgeData,
    order: usize,
    kmax: u32,
) -> Result<Genus0Potential, FeynmanError> {
    if order < 3 {
        return Err(FeynmanError::OrderTooSmall(order));
    }
    let model = s.model();
    let p = hodge.propagator(model)?;
    let ring = harmonic_ring(model, hodge, kmax, order);
    let phi = harmonic_field(&ring, hodge);
    Ok(Genus0Potential { series: tree_sum_on_field(s, &p, &phi, order)?, order })
}

/// Outputs at every t-power slot: Tr(Z · out[k]) = V(Z t^k, X₁, …, X_m).
fn vertex_outputs_by_slot(model: &DGBVModel, fields: &[&LaurentSeries], kmax: u32) -> Vec<ElementSeries> {
    let ring = fields[0].ring();
    let e = (fields.len() + 1 - 3) as u32;
    let mut p: BTreeMap<u32, ElementSeries> = [(0, ElementSeries::basis(ring, model.unit()))].into_iter().collect();
    for f in fields {
        let psi: BTreeMap<u32, ElementSeries> = f
            .coeffs()
            .iter()
            .filter(|(k, _)| **k >= 0 && (**k as u32) <= e)
            .map(|(k, v)| (*k as u32, v.scale(&factorial(*k as usize).inv().expect("nonzero"))))
            .collect();
        let mut out: BTreeMap<u32, ElementSeries> = BTreeMap::new();
        for (i, x) in &p {
            for (j, y) in &psi {
                if i + j > e {
                    continue;
                }
                let prod = x.mul(model, y);
                let cur = out.remove(&(i + j)).unwrap_or_else(|| ElementSeries::zero(ring));
                out.insert(i + j, cur.add(&prod));
            }
        }
        p = out;
    }
    (0..=kmax)
        .map(|k| {
            if k > e {
                return ElementSeries::zero(ring);
            }
            let w = factorial(e as usize).div(&factorial(k as usize)).expect("nonzero");
            p.get(&(e - k)).map(|x| x.scale(&w)).unwrap_or_else(|| ElementSeries::zero(ring))
        })
        .collect()
}

/// Fixed point Φ = φ − G del ∇₀S(Φ) at t⁰.
pub fn hpl_field(s: &ActionFunctional, hodge: &HodgeData, phi: &LaurentSeries, order: usize) -> LaurentSeries {
    let edge = SparseOp::new(&hodge.propagator_operator(), false);
    if edge.is_zero() {
        return phi.clone();
    }
    let mut field = phi.clone();
    for _ in 0..order {
        let g = s.gradient(&field, order.saturating_sub(1));
        let corr = g.apply(&edge).scale(&Scalar::from_int(-1));
        let mut next = phi.clone();
        next.insert(0, phi.coeff(0).add(&corr));
        if next == field {
            break;
        }
        field = next;
    }
    field
}

/// F₀ from the perturbation recursion: gradient at the fixed point, then Euler integration.
pub fn f0_hpl(
    s: &ActionFunctional,
    hodge: &HodgeData,
    order: usize,
    kmax: u32,
) -> Result<Genus0Potential, FeynmanError> {
    if order < 3 {
        return Err(FeynmanError::OrderTooSmall(order));
    }
    let model = s.model();
    hodge.propagator(model)?;
    let ring = harmonic_ring(model, hodge, kmax, order);
    let phi = harmonic_field(&ring, hodge);
    let big = hpl_field(s, hodge, &phi, order);

    // per valence n: outputs at each t-slot, weighted by 1/(n−1)!
    let per_n: Vec<Vec<ElementSeries>> = (3..=order.min(s.nmax()))
        .into_par_iter()
        .map(|n| {
            let fs: Vec<&LaurentSeries> = vec![&big; n - 1];
            let inv = factorial(n - 1).inv().expect("nonzero");
            vertex_outputs_by_slot(model, &fs, kmax).into_iter().map(|x| x.scale(&inv).truncate(order - 1)).collect()
        })
        .collect();
    let mut outs = vec![ElementSeries::zero(&ring); kmax as usize + 1];
    for v in per_n {
        for (k, x) in v.into_iter().enumerate() {
            outs[k] = outs[k].add(&x);
        }
    }

    let grads: Vec<SuperSeries> = ring
        .coords()
        .par_iter()
        .map(|co| {
            let pos = hodge.harmonic.iter().position(|&h| h == co.basis).expect("harmonic coordinate");
            let delta = model.element(hodge.harmonic_vectors[pos].iter().cloned().enumerate());
            ElementSeries::from_element(&ring, &delta).mul(model, &outs[co.t_power as usize]).trace(model)
        })
        .collect();
    check_integrable(&ring, &grads)?;
    Ok(Genus0Potential { series: SuperSeries::euler_integrate(&ring, &grads), order })
}

/// ∂_b g_a = (−1)^{|a||b|} ∂_a g_b for all coordinate pairs.
pub fn check_integrable(ring: &Arc<Ring>, grads: &[SuperSeries]) -> Result<(), FeynmanError> {
    let n = ring.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let bad = pairs.par_iter().find_first(|&&(a, b)| {
        let lhs = grads[a].partial_derivative(b as u16).truncate(ring.nmax() - 2);
        let rhs = grads[b].partial_derivative(a as u16).truncate(ring.nmax() - 2);
        let odd = ring.parity(a as u16) && ring.parity(b as u16);
        lhs != rhs.scale(&Scalar::one().signed(odd))
    });
    match bad {
        Some(&(a, b)) => {
            Err(FeynmanError::NonIntegrableGradient(ring.name(a as u16).to_string(), ring.name(b as u16).to_string()))
        }
        None => Ok(()),
    }
}

/// Restriction to monomials built only from t⁰ coordinates.
pub fn restrict_to_t0(f: &SuperSeries) -> SuperSeries {
    let ring = f.ring().clone();
    f.filter(|m| m.iter().all(|&c| ring.coordinate(c).t_power == 0))
}
