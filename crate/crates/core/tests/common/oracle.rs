#![allow(clippy::needless_range_loop)]

//! Reference validator written directly against dense tables; shares nothing with the library's validator.

use std::collections::HashMap;

use bcov_core::{ModelSpec, Scalar};
use num_rational::BigRational;

type Vector = Vec<Scalar>;

pub struct Dense {
    n: usize,
    deg: Vec<i64>,
    bideg: Vec<Option<(i64, i64)>>,
    top: i64,
    unit: usize,
    rational: bool,
    /// m[a][b] = e_a · e_b
    m: Vec<Vec<Vector>>,
    /// d[j] = d(e_j)
    d: Vec<Vector>,
    del: Vec<Vector>,
    tr: Vector,
    h: Vec<Vec<Scalar>>,
}

fn zero(n: usize) -> Vector {
    vec![Scalar::zero(); n]
}

fn odd(x: i64) -> bool {
    x.rem_euclid(2) == 1
}

fn sgn(neg: bool) -> Scalar {
    if neg {
        Scalar::from_int(-1)
    } else {
        Scalar::one()
    }
}

impl Dense {
    pub fn from_spec(spec: &ModelSpec) -> Option<Dense> {
        let n = spec.basis.len();
        let idx: HashMap<&str, usize> = spec.basis.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let rational = match spec.field.as_str() {
            "Q" => true,
            "Q(i)" => false,
            _ => return None,
        };
        let mut m = vec![vec![zero(n); n]; n];
        for (a, b, c, s) in &spec.product {
            m[idx[a.as_str()]][idx[b.as_str()]][idx[c.as_str()]] = s.clone();
        }
        let mut d = vec![zero(n); n];
        for (f, t, s) in &spec.d {
            d[idx[f.as_str()]][idx[t.as_str()]] = s.clone();
        }
        let mut del = vec![zero(n); n];
        for (f, t, s) in &spec.del {
            del[idx[f.as_str()]][idx[t.as_str()]] = s.clone();
        }
        let mut tr = zero(n);
        for (i, s) in &spec.trace {
            tr[idx[i.as_str()]] = s.clone();
        }
        let mut h: Vec<Vec<Scalar>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect()).collect();
        if let Some(ip) = &spec.inner_product {
            h = vec![zero(n); n];
            for (a, b, s) in ip {
                h[idx[a.as_str()]][idx[b.as_str()]] = s.clone();
            }
        }
        Some(Dense {
            n,
            deg: spec.basis.iter().map(|b| b.degree).collect(),
            bideg: spec.basis.iter().map(|b| b.bidegree).collect(),
            top: spec.dimension,
            unit: idx[spec.unit.as_str()],
            rational,
            m,
            d,
            del,
            tr,
            h,
        })
    }

    fn e(&self, i: usize) -> Vector {
        let mut v = zero(self.n);
        v[i] = Scalar::one();
        v
    }

    fn mul(&self, x: &Vector, y: &Vector) -> Vector {
        let mut out = zero(self.n);
        for a in 0..self.n {
            if x[a].is_zero() {
                continue;
            }
            for b in 0..self.n {
                if y[b].is_zero() {
                    continue;
                }
                let s = &x[a] * &y[b];
                for c in 0..self.n {
                    if !self.m[a][b][c].is_zero() {
                        out[c] = &out[c] + &(&s * &self.m[a][b][c]);
                    }
                }
            }
        }
        out
    }

    fn op(&self, table: &[Vector], x: &Vector) -> Vector {
        let mut out = zero(self.n);
        for j in 0..self.n {
            if x[j].is_zero() {
                continue;
            }
            for i in 0..self.n {
                if !table[j][i].is_zero() {
                    out[i] = &out[i] + &(&x[j] * &table[j][i]);
                }
            }
        }
        out
    }

    fn add(x: &Vector, y: &Vector, s: &Scalar) -> Vector {
        x.iter().zip(y).map(|(a, b)| a + &(s * b)).collect()
    }

    fn trace(&self, x: &Vector) -> Scalar {
        x.iter().zip(&self.tr).fold(Scalar::zero(), |acc, (a, b)| &acc + &(a * b))
    }

    fn bracket(&self, a: usize, y: &Vector) -> Vector {
        let x = self.e(a);
        let t0 = self.op(&self.del, &self.mul(&x, y));
        let t1 = self.mul(&self.op(&self.del, &x), y);
        let t2 = self.mul(&x, &self.op(&self.del, y));
        Self::add(&Self::add(&t0, &t1, &Scalar::from_int(-1)), &t2, &-sgn(odd(self.deg[a])))
    }

    /// First violated axiom, in the library's documented order; `None` for a valid model.
    pub fn first_violation(&self) -> Option<&'static str> {
        let n = self.n;
        let all_scalars = || {
            self.m
                .iter()
                .flatten()
                .flatten()
                .chain(self.d.iter().flatten())
                .chain(self.del.iter().flatten())
                .chain(&self.tr)
                .chain(self.h.iter().flatten())
        };
        if self.rational && all_scalars().any(|s| !s.is_real()) {
            return Some("field");
        }
        let with = self.bideg.iter().filter(|b| b.is_some()).count();
        if with != 0 && with != n {
            return Some("bidegree");
        }
        if (0..n).any(|i| self.bideg[i].is_some_and(|(p, q)| p < 0 || q < 0 || p + q != self.deg[i])) {
            return Some("bidegree");
        }
        let bsum = |x: Option<(i64, i64)>, y: Option<(i64, i64)>| x.zip(y).map(|(x, y)| (x.0 + y.0, x.1 + y.1));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.m[a][b][c].is_zero() {
                        continue;
                    }
                    let bd = bsum(self.bideg[a], self.bideg[b]);
                    if self.deg[c] != self.deg[a] + self.deg[b] || (bd.is_some() && bd != self.bideg[c]) {
                        return Some("product-degree");
                    }
                }
            }
        }
        for (table, shift, bshift, dn, bn) in
            [(&self.d, 1, (0, 1), "d-degree", "d-bidegree"), (&self.del, -1, (-1, 0), "del-degree", "del-bidegree")]
        {
            let nz: Vec<(usize, usize)> =
                (0..n).flat_map(|f| (0..n).map(move |t| (f, t))).filter(|&(f, t)| !table[f][t].is_zero()).collect();
            if nz.iter().any(|&(f, t)| self.deg[t] != self.deg[f] + shift) {
                return Some(dn);
            }
            if nz.iter().any(|&(f, t)| self.bideg[f].is_some() && bsum(self.bideg[f], Some(bshift)) != self.bideg[t]) {
                return Some(bn);
            }
        }
        let u = self.e(self.unit);
        if self.deg[self.unit] != 0
            || (0..n).any(|a| self.mul(&u, &self.e(a)) != self.e(a) || self.mul(&self.e(a), &u) != self.e(a))
        {
            return Some("unit");
        }
        for a in 0..n {
            for b in 0..n {
                let s = sgn(odd(self.deg[a]) && odd(self.deg[b]));
                let ba: Vector = self.mul(&self.e(b), &self.e(a)).iter().map(|x| x * &s).collect();
                if self.mul(&self.e(a), &self.e(b)) != ba {
                    return Some("graded-commutativity");
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let l = self.mul(&self.mul(&self.e(a), &self.e(b)), &self.e(c));
                    let r = self.mul(&self.e(a), &self.mul(&self.e(b), &self.e(c)));
                    if l != r {
                        return Some("associativity");
                    }
                }
            }
        }
        let nil = |f: &dyn Fn(&Vector) -> Vector| (0..n).all(|j| f(&self.e(j)).iter().all(Scalar::is_zero));
        if !nil(&|x| self.op(&self.d, &self.op(&self.d, x))) {
            return Some("d-squared");
        }
        if !nil(&|x| self.op(&self.del, &self.op(&self.del, x))) {
            return Some("del-squared");
        }
        if !nil(&|x| {
            Self::add(
                &self.op(&self.d, &self.op(&self.del, x)),
                &self.op(&self.del, &self.op(&self.d, x)),
                &Scalar::one(),
            )
        }) {
            return Some("d-del-anticommute");
        }
        for a in 0..n {
            for b in 0..n {
                let (x, y) = (self.e(a), self.e(b));
                let l = self.op(&self.d, &self.mul(&x, &y));
                let r = Self::add(
                    &self.mul(&self.op(&self.d, &x), &y),
                    &self.mul(&x, &self.op(&self.d, &y)),
                    &sgn(odd(self.deg[a])),
                );
                if l != r {
                    return Some("d-derivation");
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let l = self.bracket(a, &self.mul(&self.e(b), &self.e(c)));
                    let r1 = self.mul(&self.bracket(a, &self.e(b)), &self.e(c));
                    let r2 = self.mul(&self.e(b), &self.bracket(a, &self.e(c)));
                    let s = sgn(odd(self.deg[a] + 1) && odd(self.deg[b]));
                    if l != Self::add(&r1, &r2, &s) {
                        return Some("bracket-biderivation");
                    }
                }
            }
        }
        for i in 0..n {
            if !self.tr[i].is_zero()
                && (self.deg[i] != 2 * self.top || self.bideg[i].is_some_and(|b| b != (self.top, self.top)))
            {
                return Some("trace-support");
            }
        }
        if (0..n).any(|a| !self.trace(&self.op(&self.d, &self.e(a))).is_zero()) {
            return Some("trace-d");
        }
        if (0..n).any(|a| !self.trace(&self.op(&self.del, &self.e(a))).is_zero()) {
            return Some("trace-del");
        }
        for (table, name, sign_of_second) in [(&self.d, "d-adjoint", 1), (&self.del, "del-adjoint", -1)] {
            for a in 0..n {
                for b in 0..n {
                    let x = self.trace(&self.mul(&self.op(table, &self.e(a)), &self.e(b)));
                    let y = self.trace(&self.mul(&self.e(a), &self.op(table, &self.e(b))));
                    let s = &sgn(odd(self.deg[a])) * &Scalar::from_int(sign_of_second);
                    if !(&x + &(&s * &y)).is_zero() {
                        return Some(name);
                    }
                }
            }
        }
        let gram: Vec<Vec<Scalar>> =
            (0..n).map(|a| (0..n).map(|b| self.trace(&self.mul(&self.e(a), &self.e(b)))).collect()).collect();
        if rank(gram) < n {
            return Some("trace-nondegenerate");
        }
        if !positive_hermitian(&self.h) {
            return Some("inner-product");
        }
        None
    }
}

fn rank(mut m: Vec<Vec<Scalar>>) -> usize {
    let (rows, cols) = (m.len(), m.first().map_or(0, Vec::len));
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].inv().unwrap();
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] * &inv;
                for k in 0..cols {
                    let v = &m[r][k] * &f;
                    m[i][k] = &m[i][k] - &v;
                }
            }
        }
        r += 1;
    }
    r
}

/// Hermitian and positive definite, by symmetric elimination: every pivot must be real and positive.
fn positive_hermitian(h: &[Vec<Scalar>]) -> bool {
    let n = h.len();
    for a in 0..n {
        for b in 0..n {
            if h[a][b] != h[b][a].conj() {
                return false;
            }
        }
    }
    let mut m = h.to_vec();
    for k in 0..n {
        let p = m[k][k].clone();
        if !p.is_real() || p.re() <= &BigRational::default() {
            return false;
        }
        let inv = p.inv().unwrap();
        for i in k + 1..n {
            let f = &m[i][k] * &inv;
            for j in k..n {
                let v = &m[k][j] * &f;
                m[i][j] = &m[i][j] - &v;
            }
        }
    }
    true
}
