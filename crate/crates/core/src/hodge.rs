//! Finite Hodge theory: adjoints, Laplacian, harmonic projection, Green operator, propagator.

use crate::linalg::Matrix;
use crate::model::{DGBVModel, GradedElement};
use crate::scalar::Scalar;
use crate::series::TLaurent;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HodgeError {
    #[error("inner product is singular")]
    SingularInnerProduct,
    #[error("Kahler identity {identity} fails at ({})", witness.join(", "))]
    KahlerAxiomError { identity: &'static str, witness: Vec<String> },
}

/// Matrix over the model basis (column j is the image of e_j) with a degree shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearOperator {
    pub matrix: Matrix,
    pub degree_shift: i64,
}

impl LinearOperator {
    pub fn new(matrix: Matrix, degree_shift: i64) -> Self {
        LinearOperator { matrix, degree_shift }
    }

    pub fn apply(&self, model: &DGBVModel, x: &GradedElement) -> GradedElement {
        let v = self.matrix.mul_vec(&to_vec(model, x));
        from_vec(model, &v)
    }

    /// Does every nonzero entry shift degree by `degree_shift`?
    pub fn respects_degree(&self, model: &DGBVModel) -> bool {
        let n = model.len();
        (0..n).all(|i| {
            (0..n).all(|j| self.matrix[(i, j)].is_zero() || model.degree(i) == model.degree(j) + self.degree_shift)
        })
    }
}

pub fn to_vec(model: &DGBVModel, x: &GradedElement) -> Vec<Scalar> {
    (0..model.len()).map(|i| x.coeff(i)).collect()
}

pub fn from_vec(model: &DGBVModel, v: &[Scalar]) -> GradedElement {
    model.element(v.iter().cloned().enumerate())
}

/// Adjoint for ⟨x, y⟩_h = x† H y: A* = H⁻¹ A† H.
pub fn adjoint(op: &LinearOperator, model: &DGBVModel) -> Result<LinearOperator, HodgeError> {
    let h = model.inner_product();
    let hinv = h.inverse().ok_or(HodgeError::SingularInnerProduct)?;
    let m = &(&hinv * &op.matrix.conj_transpose()) * h;
    Ok(LinearOperator::new(m, -op.degree_shift))
}

/// Two-tensor P_ab with (G∘del)(β) = Σ P_ab e_a Tr(e_b β).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagatorKernel {
    pub entries: Matrix,
}

impl PropagatorKernel {
    pub fn is_zero(&self) -> bool {
        self.entries.is_zero()
    }

    /// Σ_ab P_ab e_a Tr(e_b β).
    pub fn contract(&self, model: &DGBVModel, beta: &GradedElement) -> GradedElement {
        let n = model.len();
        let t = model.trace_gram();
        let bv = to_vec(model, beta);
        let tb = t.mul_vec(&bv);
        let v = self.entries.mul_vec(&tb);
        debug_assert_eq!(v.len(), n);
        from_vec(model, &v)
    }
}

/// Hodge data of a model, computed once and read-only afterwards.
#[derive(Clone, Debug)]
pub struct HodgeData {
    pub d: LinearOperator,
    pub del: LinearOperator,
    pub d_star: LinearOperator,
    pub laplacian: LinearOperator,
    pub laplacian_pinv: LinearOperator,
    pub green: LinearOperator,
    pub projection: LinearOperator,
    /// Basis columns whose projections form the harmonic basis, unit first.
    pub harmonic: Vec<usize>,
    /// Π e_j for each j in `harmonic`.
    pub harmonic_vectors: Vec<Vec<Scalar>>,
}

impl HodgeData {
    pub fn new(model: &DGBVModel) -> Result<HodgeData, HodgeError> {
        let n = model.len();
        let d = LinearOperator::new(model.d_matrix().clone(), 1);
        let del = LinearOperator::new(model.del_matrix().clone(), -1);
        let d_star = adjoint(&d, model)?;
        let lap = &(&d.matrix * &d_star.matrix) + &(&d_star.matrix * &d.matrix);
        let lap_pinv = pseudo_inverse_selfadjoint(&lap);
        let green = &d_star.matrix * &lap_pinv;
        let proj = &Matrix::identity(n) - &(&lap_pinv * &lap);

        let unit = model.unit();
        let order: Vec<usize> = std::iter::once(unit).chain((0..n).filter(|&j| j != unit)).collect();
        let reordered = Matrix::from_fn(n, n, |r, c| proj[(r, order[c])].clone());
        let harmonic: Vec<usize> = reordered.column_basis().into_iter().map(|c| order[c]).collect();
        let harmonic_vectors = harmonic.iter().map(|&j| proj.column(j)).collect();

        Ok(HodgeData {
            d,
            del,
            d_star,
            laplacian: LinearOperator::new(lap, 0),
            laplacian_pinv: LinearOperator::new(lap_pinv, 0),
            green: LinearOperator::new(green, -1),
            projection: LinearOperator::new(proj, 0),
            harmonic,
            harmonic_vectors,
        })
    }

    pub fn dimension_harmonic(&self) -> usize {
        self.harmonic.len()
    }

    /// Π is idempotent, self-adjoint and its image is ker Δ.
    pub fn check_projection(&self, model: &DGBVModel) -> bool {
        let p = &self.projection.matrix;
        let idem = &(p * p) == p;
        let selfadj = adjoint(&self.projection, model).map(|a| &a.matrix == p).unwrap_or(false);
        let kills = (&self.laplacian.matrix * p).is_zero();
        let rank_ok = p.rank() == self.laplacian.matrix.nullspace().len();
        idem && selfadj && kills && rank_ok
    }

    /// 1 − (dG + Gd) = Π.
    pub fn check_homotopy(&self) -> bool {
        let n = self.projection.matrix.rows();
        let dg = &self.d.matrix * &self.green.matrix;
        let gd = &self.green.matrix * &self.d.matrix;
        &Matrix::identity(n) - &(&dg + &gd) == self.projection.matrix
    }

    /// (dim ker Δ, rank d, rank d*): the three summands of A = ker Δ ⊕ im d ⊕ im d*.
    pub fn rank_counts(&self) -> (usize, usize, usize) {
        (self.projection.matrix.rank(), self.d.matrix.rank(), self.d_star.matrix.rank())
    }

    /// Rank counts sum to the dimension and dim H = dim ker d − rank d.
    pub fn check_decomposition(&self) -> bool {
        let n = self.projection.matrix.rows();
        let (h, rd, rds) = self.rank_counts();
        let ker_d = n - rd;
        h + rd + rds == n && h == ker_d - rd
    }

    fn witness(model: &DGBVModel, m: &Matrix) -> Option<Vec<String>> {
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                if !m[(i, j)].is_zero() {
                    return Some(vec![model.id(j).to_string(), model.id(i).to_string()]);
                }
            }
        }
        None
    }

    fn require_zero(model: &DGBVModel, m: &Matrix, identity: &'static str) -> Result<(), HodgeError> {
        match Self::witness(model, m) {
            None => Ok(()),
            Some(witness) => Err(HodgeError::KahlerAxiomError { identity, witness }),
        }
    }

    /// Kähler identities (i) del∘G + G∘del = 0 and (ii) [Δ, del] = 0.
    pub fn check_kahler_gauge(&self, model: &DGBVModel) -> Result<(), HodgeError> {
        let l = &self.del.matrix;
        let g = &self.green.matrix;
        Self::require_zero(model, &(&(l * g) + &(g * l)), "del-green-anticommute")?;
        let lap = &self.laplacian.matrix;
        Self::require_zero(model, &(&(lap * l) - &(l * lap)), "laplacian-del-commute")
    }

    /// Full Kähler set: the gauge identities plus (iii) Π∘del = del∘Π = 0.
    pub fn check_kahler(&self, model: &DGBVModel) -> Result<(), HodgeError> {
        self.check_kahler_gauge(model)?;
        let l = &self.del.matrix;
        let p = &self.projection.matrix;
        Self::require_zero(model, &(p * l), "projection-del")?;
        Self::require_zero(model, &(l * p), "del-projection")
    }

    /// Matrix of G∘del.
    pub fn propagator_operator(&self) -> Matrix {
        &self.green.matrix * &self.del.matrix
    }

    /// Propagator kernel, after checking the Kähler set and its symmetry.
    pub fn propagator(&self, model: &DGBVModel) -> Result<PropagatorKernel, HodgeError> {
        self.check_kahler(model)?;
        let m = self.propagator_operator();
        let t = model.trace_gram();
        let tinv = t.inverse().expect("validated models have a nondegenerate trace");
        let entries = &m * &tinv;
        self.check_propagator_symmetry(model, &m)?;
        let p = &self.projection.matrix;
        Self::require_zero(model, &(p * &m), "propagator-harmonic-left")?;
        Self::require_zero(model, &(&m * p), "propagator-harmonic-right")?;
        Ok(PropagatorKernel { entries })
    }

    /// Tr((G del α) β) = (−1)^{|α||β|} Tr((G del β) α) for all basis α, β.
    fn check_propagator_symmetry(&self, model: &DGBVModel, m: &Matrix) -> Result<(), HodgeError> {
        let n = model.len();
        let t = model.trace_gram();
        // Tr((M e_a) e_b) = Σ_c M_ca T_cb
        let tm = &m.transpose() * &t;
        for a in 0..n {
            for b in 0..n {
                let s = tm[(b, a)].clone().signed(model.parity(a) && model.parity(b));
                if tm[(a, b)] != s {
                    return Err(HodgeError::KahlerAxiomError {
                        identity: "propagator-symmetry",
                        witness: vec![model.id(a).to_string(), model.id(b).to_string()],
                    });
                }
            }
        }
        Ok(())
    }

    /// Π Σ_k (−t del G)^k x, a harmonic representative of the Q-class.
    pub fn q_class(&self, model: &DGBVModel, x: &TLaurent) -> Result<TLaurent, HodgeError> {
        self.check_kahler(model)?;
        let step = -&(&self.del.matrix * &self.green.matrix);
        let mut out = TLaurent::new();
        let mut cur: Vec<(i32, Vec<Scalar>)> = x.coeffs().iter().map(|(k, e)| (*k, to_vec(model, e))).collect();
        let n = model.len();
        // step is nilpotent: it lowers the degree by 2 on a finite graded space
        for _ in 0..=n {
            if cur.iter().all(|(_, v)| v.iter().all(Scalar::is_zero)) {
                break;
            }
            for (k, v) in &cur {
                let pv = self.projection.matrix.mul_vec(v);
                let prev = out.coeff(*k).map(|e| to_vec(model, e)).unwrap_or_else(|| vec![Scalar::zero(); n]);
                let sum: Vec<Scalar> = prev.iter().zip(&pv).map(|(a, b)| a + b).collect();
                out.insert(*k, from_vec(model, &sum));
            }
            cur = cur.iter().map(|(k, v)| (k + 1, step.mul_vec(v))).collect();
        }
        Ok(out)
    }
}

/// Δ⁺ for self-adjoint Δ: inverse on im Δ, zero on ker Δ, by exact solves.
fn pseudo_inverse_selfadjoint(lap: &Matrix) -> Matrix {
    let n = lap.rows();
    let image_cols = lap.column_basis();
    if image_cols.is_empty() {
        return Matrix::zeros(n, n);
    }
    let b_cols: Vec<Vec<Scalar>> = image_cols.iter().map(|&c| lap.column(c)).collect();
    let b = Matrix::from_columns(n, &b_cols);
    let k_cols = lap.nullspace();
    let r = b_cols.len();
    // Δ B = B M: solve column by column
    let lb = lap * &b;
    let mut m = Matrix::zeros(r, r);
    for c in 0..r {
        let x = b.solve(&lb.column(c)).expect("image of Laplacian is invariant");
        for (i, v) in x.into_iter().enumerate() {
            m[(i, c)] = v;
        }
    }
    let minv = m.inverse().expect("Laplacian is invertible on its image");
    let mut all = b_cols;
    all.extend(k_cols);
    let frame = Matrix::from_columns(n, &all);
    let frame_inv = frame.inverse().expect("image and kernel span the space");
    let mut diag = Matrix::zeros(n, n);
    for i in 0..r {
        for j in 0..r {
            diag[(i, j)] = minv[(i, j)].clone();
        }
    }
    &(&frame * &diag) * &frame_inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{generate_model, ZooParams};

    fn load(name: &str) -> DGBVModel {
        DGBVModel::from_spec(&generate_model(name, &ZooParams::default()).unwrap()).unwrap()
    }

    #[test]
    fn torus_is_all_harmonic() {
        let m = load("torus(1)");
        let h = HodgeData::new(&m).unwrap();
        assert_eq!(h.projection.matrix, Matrix::identity(4));
        assert!(h.green.matrix.is_zero());
        assert!(h.propagator(&m).unwrap().is_zero());
    }

    #[test]
    fn twostep_green_inverts_d() {
        let m = load("twostep");
        let h = HodgeData::new(&m).unwrap();
        let e = m.index_of("e").unwrap();
        let f = m.index_of("f").unwrap();
        let mut expected = vec![Scalar::zero(); m.len()];
        expected[e] = Scalar::one();
        assert_eq!(h.green.matrix.column(f), expected);
        assert!(h.green.matrix.column(e).iter().all(Scalar::is_zero));
        assert!(h.check_homotopy());
        assert!(h.check_decomposition());
    }
}
