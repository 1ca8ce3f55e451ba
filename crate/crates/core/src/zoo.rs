//! Built-in model generators.

use crate::model::{BasisSpec, ModelSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZooError {
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("bad parameter: {0}")]
    ParamError(String),
}

/// Extra inputs for [`generate_model`].
#[derive(Debug, Clone, Default)]
pub struct ZooParams {
    /// Complex dimension for `torus`.
    pub dimension: Option<u32>,
    /// Spec returned verbatim by `custom`.
    pub spec: Option<ModelSpec>,
}

/// Names accepted by [`generate_model`] without parameters.
pub const ZOO_NAMES: [&str; 5] = ["torus(1)", "torus(2)", "twostep", "twostep-del", "cy3-toy"];

const MAX_TORUS_DIM: u32 = 3;

/// Builds a zoo model spec.
///
/// `torus(d)` (also `torusD`, or `torus` with `params.dimension`), `twostep`,
/// `twostep-del`, `cy3-toy`, and `custom` (returns `params.spec`).
pub fn generate_model(name: &str, params: &ZooParams) -> Result<ModelSpec, ZooError> {
    if let Some(d) = parse_torus(name)? {
        return torus(d.or(params.dimension).ok_or_else(|| ZooError::ParamError("torus needs a dimension".into()))?);
    }
    match name {
        "twostep" => Ok(twostep(false)),
        "twostep-del" => Ok(twostep(true)),
        "cy3-toy" => Ok(cy3_toy()),
        "custom" => params.spec.clone().ok_or_else(|| ZooError::ParamError("custom needs a spec".into())),
        other => Err(ZooError::UnknownModel(other.to_string())),
    }
}

/// `Ok(None)` if `name` is not a torus; `Ok(Some(None))` for bare `torus`.
fn parse_torus(name: &str) -> Result<Option<Option<u32>>, ZooError> {
    let Some(rest) = name.strip_prefix("torus") else {
        return Ok(None);
    };
    if rest.is_empty() {
        return Ok(Some(None));
    }
    let digits = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
    digits
        .parse::<u32>()
        .map(|d| Some(Some(d)))
        .map_err(|_| ZooError::ParamError(format!("bad torus dimension {rest:?}")))
}

fn one() -> Scalar {
    Scalar::one()
}

struct Builder {
    basis: Vec<BasisSpec>,
    product: Vec<(String, String, String, Scalar)>,
}

impl Builder {
    fn new() -> Self {
        Builder { basis: Vec::new(), product: Vec::new() }
    }

    fn add(&mut self, id: &str, bidegree: (i64, i64)) {
        self.basis.push(BasisSpec { id: id.into(), degree: bidegree.0 + bidegree.1, bidegree: Some(bidegree) });
    }

    fn degree(&self, id: &str) -> i64 {
        self.basis.iter().find(|b| b.id == id).expect("known id").degree
    }

    /// Records a*b = s*c and the graded-commuted entry.
    fn prod(&mut self, a: &str, b: &str, c: &str, s: Scalar) {
        let swap = if self.degree(a) * self.degree(b) % 2 != 0 { -s.clone() } else { s.clone() };
        self.product.push((a.into(), b.into(), c.into(), s));
        if a != b {
            self.product.push((b.into(), a.into(), c.into(), swap));
        }
    }

    fn with_unit(&mut self, unit: &str) {
        let ids: Vec<String> = self.basis.iter().map(|b| b.id.clone()).collect();
        for id in &ids {
            self.prod(unit, id, id, one());
        }
    }

    fn finish(
        self,
        name: &str,
        dimension: i64,
        unit: &str,
        d: Vec<(&str, &str, i64)>,
        del: Vec<(&str, &str, i64)>,
        top: &str,
    ) -> ModelSpec {
        let conv = |v: Vec<(&str, &str, i64)>| {
            v.into_iter().map(|(a, b, s)| (a.to_string(), b.to_string(), Scalar::from_int(s))).collect()
        };
        ModelSpec {
            name: name.into(),
            field: "Q".into(),
            dimension,
            basis: self.basis,
            unit: unit.into(),
            product: self.product,
            d: conv(d),
            del: conv(del),
            trace: vec![(top.into(), one())],
            inner_product: None,
        }
    }
}

/// Exterior algebra on 2d odd generators; basis `e{mask}`, bits below d have bidegree (1,0).
pub fn torus(d: u32) -> Result<ModelSpec, ZooError> {
    if d == 0 || d > MAX_TORUS_DIM {
        return Err(ZooError::ParamError(format!("torus dimension must be in 1..={MAX_TORUS_DIM}, got {d}")));
    }
    let gens = 2 * d;
    let low = (1u32 << d) - 1;
    let full = (1u32 << gens) - 1;
    let mut basis = Vec::new();
    for mask in 0..=full {
        let bd = ((mask & low).count_ones() as i64, (mask >> d).count_ones() as i64);
        basis.push(BasisSpec { id: format!("e{mask}"), degree: bd.0 + bd.1, bidegree: Some(bd) });
    }
    let mut product = Vec::new();
    for a in 0..=full {
        for b in 0..=full {
            if a & b != 0 {
                continue;
            }
            // sign of reordering e_a e_b into increasing generator order
            let mut swaps = 0;
            for i in 0..gens {
                if a & (1 << i) != 0 {
                    swaps += (b & ((1 << i) - 1)).count_ones();
                }
            }
            let s = if swaps % 2 == 1 { -one() } else { one() };
            product.push((format!("e{a}"), format!("e{b}"), format!("e{}", a | b), s));
        }
    }
    Ok(ModelSpec {
        name: format!("torus({d})"),
        field: "Q".into(),
        dimension: d as i64,
        basis,
        unit: "e0".into(),
        product,
        d: vec![],
        del: vec![],
        trace: vec![(format!("e{full}"), one())],
        inner_product: None,
    })
}

/// torus(1) plus an acyclic square {e, f, u, v} paired against itself by the trace.
fn twostep(with_del: bool) -> ModelSpec {
    let mut b = Builder::new();
    b.add("e0", (0, 0));
    b.add("e1", (1, 0));
    b.add("e2", (0, 1));
    b.add("e3", (1, 1));
    b.add("e", (0, 0));
    b.add("f", (0, 1));
    b.add("u", (1, 0));
    b.add("v", (1, 1));
    b.with_unit("e0");
    b.prod("e1", "e2", "e3", one());
    b.prod("e", "v", "e3", one());
    b.prod("u", "f", "e3", one());
    let d = vec![("e", "f", 1), ("u", "v", 1)];
    let (name, del) = if with_del { ("twostep-del", vec![("u", "e", -1), ("v", "f", 1)]) } else { ("twostep", vec![]) };
    b.finish(name, 1, "e0", d, del, "e3")
}

/// Dimension-3 toy with a nontrivial cubic, a quartic potential term and a propagator.
fn cy3_toy() -> ModelSpec {
    let mut b = Builder::new();
    b.add("1", (0, 0));
    b.add("x", (1, 1));
    b.add("y", (2, 2));
    b.add("w", (3, 3));
    b.add("k", (1, 1));
    b.add("p", (2, 1));
    b.add("m", (1, 2));
    b.add("n", (2, 2));
    b.with_unit("1");
    b.product.push(("x".into(), "x".into(), "y".into(), one()));
    b.product.push(("x".into(), "x".into(), "n".into(), one()));
    b.prod("x", "y", "w", one());
    b.prod("x", "k", "y", one());
    b.prod("k", "n", "w", one());
    b.prod("p", "m", "w", one());
    let d = vec![("k", "m", 1), ("p", "n", 1)];
    let del = vec![("p", "k", 1), ("n", "m", -1)];
    b.finish("cy3-toy", 3, "1", d, del, "w")
}
