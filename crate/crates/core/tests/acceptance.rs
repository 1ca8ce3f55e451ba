//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails or overruns its time budget.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bcov_core::action::build_action_weighted;
use bcov_core::feynman::restrict_to_t0;
use bcov_core::frobenius::{
    descendant_comparison, frobenius_data, lower_index, mc_residuals, metric_defect, pi0, tau_element,
    third_derivatives, vhs_axiom_check,
};
use bcov_core::{
    build_action, cme_residual, enumerate_trees, f0_hpl, f0_tree_sum, generate_model, j_function, mc_solve,
    run_pipeline, wdvv_residual, DGBVModel, HodgeData, ModelError, PipelineParams, QuarticWeight, Scalar, SuperSeries,
    ZooParams, ZOO_NAMES,
};
use common::mutate::mutate;
use common::oracle::Dense;
use common::{split_families, zoo};
use rand::rngs::StdRng;
use rand::SeedableRng;

type Outcome = Result<String, String>;

/// Name, check and time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn axiom_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xacce);
    let mut rejected = 0;
    for name in ZOO_NAMES {
        let spec = generate_model(name, &ZooParams::default()).map_err(|e| e.to_string())?;
        DGBVModel::from_spec(&spec).map_err(|e| format!("{name}: {e}"))?;
        ensure(Dense::from_spec(&spec).unwrap().first_violation().is_none(), || {
            format!("{name}: reference validator rejects it")
        })?;
        let mut done = 0;
        while done < 20 {
            let m = mutate(&spec, &mut rng);
            let Some(expected) = Dense::from_spec(&m).unwrap().first_violation() else { continue };
            match DGBVModel::from_spec(&m) {
                Err(ModelError::Axiom(e)) if e.axiom == expected => {}
                other => return Err(format!("{name}: expected {expected}, got {other:?}")),
            }
            done += 1;
            rejected += 1;
        }
    }
    Ok(format!("{} models valid, {rejected} mutations named correctly", ZOO_NAMES.len()))
}

fn master_equation() -> Outcome {
    for name in ["torus(1)", "torus(2)", "twostep-del"] {
        let s = build_action(&zoo(name), 6, 3);
        let r = cme_residual(&s, 6).map_err(|e| e.to_string())?;
        ensure(r.is_zero(), || format!("{name}: {} nonzero terms", r.len()))?;
    }
    let bad = build_action_weighted(&zoo("twostep-del"), 6, 3, QuarticWeight::Flat);
    let r = cme_residual(&bad, 6).map_err(|e| e.to_string())?;
    ensure(!r.is_zero(), || "flat quartic control satisfies the master equation".into())?;
    Ok(format!("zero through order 6, t^3; control has {} terms", r.len()))
}

fn hodge_identities() -> Outcome {
    for name in ZOO_NAMES {
        let m = zoo(name);
        let h = HodgeData::new(&m).map_err(|e| format!("{name}: {e}"))?;
        ensure(h.check_homotopy(), || format!("{name}: 1 − (dG + Gd) ≠ Π"))?;
        ensure(h.check_projection(&m), || format!("{name}: projection"))?;
        ensure(h.check_decomposition(), || format!("{name}: rank counts {:?}", h.rank_counts()))?;
        h.propagator(&m).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok("all zoo models".into())
}

fn tree_counts() -> Outcome {
    let mut counts = Vec::new();
    for n in 3..=6 {
        let trees = enumerate_trees(n).map_err(|e| e.to_string())?;
        let got: BTreeSet<_> = trees.iter().map(|t| t.splits()).collect();
        ensure(got.len() == trees.len() && got == split_families(n), || {
            format!("n = {n}: differs from split families")
        })?;
        counts.push(trees.len());
    }
    ensure(counts == [1, 4, 26, 236], || format!("counts {counts:?}"))?;
    Ok(format!("counts {counts:?}"))
}

fn method_equivalence() -> Outcome {
    for name in ["torus(1)", "torus(2)", "twostep-del"] {
        let m = zoo(name);
        let h = HodgeData::new(&m).map_err(|e| e.to_string())?;
        let s = build_action(&m, 5, 2);
        let trees = f0_tree_sum(&s, &h, 5, 2).map_err(|e| e.to_string())?;
        let hpl = f0_hpl(&s, &h, 5, 2).map_err(|e| e.to_string())?;
        ensure(trees == hpl, || format!("{name}: methods differ"))?;
    }
    Ok("order 5, t^2".into())
}

fn mc_and_j() -> Outcome {
    for name in ZOO_NAMES {
        let m = zoo(name);
        let h = HodgeData::new(&m).map_err(|e| e.to_string())?;
        let sol = mc_solve(&m, &h, 5).map_err(|e| format!("{name}: {e}"))?;
        let (mc, del_mu, gauge) = mc_residuals(&m, &h, &sol);
        ensure(mc.is_zero() && del_mu.is_zero() && gauge.is_zero(), || format!("{name}: nonzero MC residual"))?;
        let j = j_function(&m, &h, &sol);
        ensure(pi0(&j) == tau_element(&h, &sol.ring), || format!("{name}: π₀(J) ≠ τ"))?;
    }
    Ok("order 5, all zoo models".into())
}

fn frobenius_suite() -> Outcome {
    for name in ZOO_NAMES {
        let m = zoo(name);
        let h = HodgeData::new(&m).map_err(|e| e.to_string())?;
        let j = j_function(&m, &h, &mc_solve(&m, &h, 5).map_err(|e| e.to_string())?);
        let fd = frobenius_data(&m, &h, &j).map_err(|e| format!("{name}: {e}"))?;
        ensure(metric_defect(&m, &j, &fd.g) == 0, || format!("{name}: metric varies"))?;
        ensure(fd.structure.residual_terms == 0, || format!("{name}: structure residual"))?;
        let ring = j.series.ring().clone();
        let r = fd.g.rows();
        let parity: Vec<bool> = (0..r).map(|c| ring.parity(c as u16)).collect();
        let lowered = lower_index(&fd.structure, &fd.g);
        let third = third_derivatives(&fd.f0);
        let one = Scalar::one();
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    let x = lowered[a][b][c].truncate(2);
                    let ab = lowered[b][a][c].truncate(2).scale(&one.clone().signed(parity[a] && parity[b]));
                    let bc = lowered[a][c][b].truncate(2).scale(&one.clone().signed(parity[b] && parity[c]));
                    ensure(x == ab && x == bc, || format!("{name}: A not graded symmetric at {a}{b}{c}"))?;
                    ensure(x == third[a][b][c].truncate(2), || format!("{name}: ∂³f₀ ≠ A at {a}{b}{c}"))?;
                }
            }
        }
        let w = wdvv_residual(&fd.f0, &fd.g);
        ensure(w.is_zero(), || format!("{name}: WDVV residual {w}"))?;
        let u = fd.unit_index;
        for b in 0..r {
            for c in 0..r {
                let want = if b == c { SuperSeries::constant(&ring, one.clone()) } else { SuperSeries::zero(&ring) };
                ensure(fd.structure.a[u][b][c] == want, || format!("{name}: A_0{b}^{c} ≠ δ"))?;
            }
        }
    }
    Ok("order 5, all zoo models".into())
}

fn main_theorem() -> Outcome {
    for name in ZOO_NAMES {
        let m = zoo(name);
        let h = HodgeData::new(&m).map_err(|e| e.to_string())?;
        let j = j_function(&m, &h, &mc_solve(&m, &h, 5).map_err(|e| e.to_string())?);
        let fd = frobenius_data(&m, &h, &j).map_err(|e| format!("{name}: {e}"))?;
        let s = build_action(&m, 5, 2);
        let full = f0_hpl(&s, &h, 5, 2).map_err(|e| e.to_string())?;
        let restricted = restrict_to_t0(&full.series).restrict_to(fd.f0.ring());
        ensure(fd.f0 == restricted, || format!("{name}: period potential ≠ F₀ at t⁰"))?;
    }
    let m = zoo("twostep-del");
    let h = HodgeData::new(&m).map_err(|e| e.to_string())?;
    let s = build_action(&m, 4, 1);
    let cmp = descendant_comparison(&s, &h, 4, 1).map_err(|e| e.to_string())?;
    ensure(cmp.mc_residual_terms == 0, || "descendant MC residual".into())?;
    ensure(cmp.period == cmp.trees, || "descendant period side ≠ F₀".into())?;
    Ok(format!("t⁰ order 5 on the zoo; descendants order 4 ({} terms)", cmp.period.len()))
}

fn vhs_axioms() -> Outcome {
    for name in ZOO_NAMES {
        let m = zoo(name);
        let h = HodgeData::new(&m).map_err(|e| e.to_string())?;
        let j = j_function(&m, &h, &mc_solve(&m, &h, 4).map_err(|e| e.to_string())?);
        let fd = frobenius_data(&m, &h, &j).map_err(|e| format!("{name}: {e}"))?;
        let r = vhs_axiom_check(&m, &j, &fd.g, &fd.structure);
        ensure(r.all_pass(), || format!("{name}: {r:?}"))?;
    }
    Ok("order 4, all zoo models".into())
}

fn determinism() -> Outcome {
    for name in ["twostep-del", "cy3-toy"] {
        let m = zoo(name);
        let mut params = PipelineParams::new(5);
        params.descendants = true;
        params.tmax = 1;
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool");
            pool.install(|| run_pipeline(&Arc::clone(&m), &params).map(|r| r.to_json()).map_err(|e| e.to_string()))
        };
        let (one, four) = (run(1)?, run(4)?);
        ensure(one == four, || format!("{name}: reports differ between 1 and 4 threads"))?;
    }
    Ok("1 vs 4 threads, full pipeline".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("axiom suite", axiom_suite, 10),
        ("master equation", master_equation, 60),
        ("hodge identities", hodge_identities, 5),
        ("tree combinatorics", tree_counts, 30),
        ("method equivalence", method_equivalence, 300),
        ("MC and J", mc_and_j, 60),
        ("frobenius suite", frobenius_suite, 120),
        ("period side equals F0", main_theorem, 600),
        ("semi-infinite VHS axioms", vhs_axioms, 60),
        ("determinism", determinism, 600),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*budget);
        let (verdict, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {budget} s budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("{verdict} {:>2} {name} ({:.2} s): {detail}", i + 1, took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
