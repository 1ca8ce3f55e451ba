#![allow(dead_code)]

pub mod mutate;
pub mod oracle;

use std::collections::BTreeSet;
use std::sync::Arc;

use bcov_core::hodge::{from_vec, to_vec};
use bcov_core::{generate_model, DGBVModel, HodgeData, Matrix, Scalar, TLaurent, ZooParams, ZOO_NAMES};

pub fn zoo(name: &str) -> Arc<DGBVModel> {
    let spec = generate_model(name, &ZooParams::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
    Arc::new(DGBVModel::from_spec(&spec).unwrap_or_else(|e| panic!("{name}: {e}")))
}

pub fn all_zoo() -> Vec<(&'static str, Arc<DGBVModel>)> {
    ZOO_NAMES.iter().map(|&n| (n, zoo(n))).collect()
}

pub fn obstructed() -> DGBVModel {
    bcov_core::load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/obstructed.json")).unwrap()
}

pub fn int(n: i64) -> Scalar {
    Scalar::from_int(n)
}

/// Every family of pairwise compatible nontrivial splits of {0..n}, each split given by the side without leaf 0.
/// Leaf-labeled trees with internal valence ≥ 3 correspond bijectively to these families.
pub fn split_families(n: usize) -> BTreeSet<BTreeSet<Vec<usize>>> {
    let mut splits = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask & 1 != 0 {
            continue;
        }
        let size = mask.count_ones() as usize;
        if size >= 2 && n - size >= 2 {
            splits.push(mask);
        }
    }
    let compatible = |a: u32, b: u32| a & b == 0 || a & b == a || a & b == b;
    let mut out = BTreeSet::new();
    fn grow(
        i: usize,
        chosen: &mut Vec<u32>,
        splits: &[u32],
        ok: &dyn Fn(u32, u32) -> bool,
        n: usize,
        out: &mut BTreeSet<BTreeSet<Vec<usize>>>,
    ) {
        if i == splits.len() {
            let fam = chosen.iter().map(|&m| (0..n).filter(|&l| m & (1 << l) != 0).collect()).collect();
            out.insert(fam);
            return;
        }
        grow(i + 1, chosen, splits, ok, n, out);
        if chosen.iter().all(|&c| ok(c, splits[i])) {
            chosen.push(splits[i]);
            grow(i + 1, chosen, splits, ok, n, out);
            chosen.pop();
        }
    }
    grow(0, &mut Vec::new(), &splits, &compatible, n, &mut out);
    out
}

/// Harmonic representative of the class of x in (A((t)), d + t·del), by solving x = h + Q y on a padded window.
pub fn q_class_by_elimination(model: &DGBVModel, hodge: &HodgeData, x: &TLaurent) -> TLaurent {
    let n = model.len();
    let (lo, hi) = x.bounds().expect("nonzero input");
    let (lo, hi) = (lo - 1, hi + n as i32 + 1);
    let width = (hi - lo + 1) as usize;
    let h = hodge.harmonic_vectors.len();
    // unknowns: harmonic coefficients per power, then y per power
    let cols = width * h + width * n;
    let rows = width * n;
    let d = model.d_matrix();
    let del = model.del_matrix();
    let mut m = Matrix::zeros(rows, cols);
    for p in 0..width {
        for (e, v) in hodge.harmonic_vectors.iter().enumerate() {
            for i in 0..n {
                m[(p * n + i, p * h + e)] = v[i].clone();
            }
        }
        for j in 0..n {
            let col = width * h + p * n + j;
            for i in 0..n {
                m[(p * n + i, col)] = d[(i, j)].clone();
                if p + 1 < width {
                    m[((p + 1) * n + i, col)] = del[(i, j)].clone();
                }
            }
        }
    }
    let mut rhs = vec![Scalar::zero(); rows];
    for (k, el) in x.coeffs() {
        let p = (k - lo) as usize;
        for (i, v) in to_vec(model, el).into_iter().enumerate() {
            rhs[p * n + i] = v;
        }
    }
    let sol = m.solve(&rhs).expect("class exists in the window");
    let mut out = TLaurent::new();
    for p in 0..width {
        let mut v = vec![Scalar::zero(); n];
        for (e, hv) in hodge.harmonic_vectors.iter().enumerate() {
            for i in 0..n {
                v[i] = &v[i] + &(&sol[p * h + e] * &hv[i]);
            }
        }
        out.insert(lo + p as i32, from_vec(model, &v));
    }
    out
}
