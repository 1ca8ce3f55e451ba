use bcov_core::{ModelSpec, Scalar};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

fn coefficient(rng: &mut StdRng) -> Scalar {
    match rng.gen_range(0..6) {
        0 => Scalar::i(),
        1 => Scalar::from_frac(1, 2),
        k => Scalar::from_int([-2, -1, 1, 2][k - 2]),
    }
}

fn id(spec: &ModelSpec, rng: &mut StdRng) -> String {
    spec.basis.choose(rng).unwrap().id.clone()
}

/// One random corruption of a single table entry, degree or bidegree.
pub fn mutate(base: &ModelSpec, rng: &mut StdRng) -> ModelSpec {
    let mut s = base.clone();
    match rng.gen_range(0..11) {
        0 if !s.product.is_empty() => {
            let i = rng.gen_range(0..s.product.len());
            s.product[i].3 = coefficient(rng);
        }
        1 => {
            let (a, b, c) = (id(&s, rng), id(&s, rng), id(&s, rng));
            if !s.product.iter().any(|p| p.0 == a && p.1 == b && p.2 == c) {
                s.product.push((a, b, c, coefficient(rng)));
            }
        }
        2 if !s.product.is_empty() => {
            let i = rng.gen_range(0..s.product.len());
            s.product.remove(i);
        }
        3 | 4 => {
            let table = if rng.gen() { &mut s.d } else { &mut s.del };
            let (f, t) = (base.basis.choose(rng).unwrap().id.clone(), base.basis.choose(rng).unwrap().id.clone());
            match table.iter().position(|e| e.0 == f && e.1 == t) {
                Some(i) if rng.gen() => {
                    table.remove(i);
                }
                Some(i) => table[i].2 = coefficient(rng),
                None => table.push((f, t, coefficient(rng))),
            }
        }
        5 => {
            let target = id(&s, rng);
            match s.trace.iter().position(|e| e.0 == target) {
                Some(i) if rng.gen() => {
                    s.trace.remove(i);
                }
                Some(i) => s.trace[i].1 = coefficient(rng),
                None => s.trace.push((target, coefficient(rng))),
            }
        }
        6 => {
            let i = rng.gen_range(0..s.basis.len());
            s.basis[i].degree += if rng.gen() { 1 } else { -1 };
        }
        7 => {
            let i = rng.gen_range(0..s.basis.len());
            s.basis[i].bidegree = match s.basis[i].bidegree {
                Some((p, q)) if rng.gen() => Some((q, p)),
                Some((p, q)) => Some((p + 1, q - 1)),
                None => Some((s.basis[i].degree, 0)),
            };
        }
        8 => {
            let i = rng.gen_range(0..s.basis.len());
            s.basis[i].bidegree = None;
        }
        9 => {
            let (a, b) = (id(&s, rng), id(&s, rng));
            let mut ip: Vec<_> = s.basis.iter().map(|x| (x.id.clone(), x.id.clone(), Scalar::one())).collect();
            match ip.iter().position(|e| e.0 == a && e.1 == b) {
                Some(i) => ip[i].2 = coefficient(rng),
                None => ip.push((a, b, coefficient(rng))),
            }
            s.inner_product = Some(ip);
        }
        _ => {
            let u = id(&s, rng);
            s.unit = u;
        }
    }
    s
}
