//! Stage orchestration and the JSON report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::action::{build_action, cme_residual, leg_names, ActionError, ActionFunctional};
use crate::feynman::{f0_hpl, f0_tree_sum, restrict_to_t0, FeynmanError};
use crate::frobenius::{
    associativity_defect, descendant_comparison, frobenius_data, j_function, lower_index, mc_residuals, mc_solve,
    metric_defect, pi0, tau_element, third_derivatives, vhs_axiom_check, wdvv_residual, FrobeniusData, FrobeniusError,
    JFunction, MCSolution, VhsReport,
};
use crate::hodge::{HodgeData, HodgeError};
use crate::model::{DGBVModel, ModelError};
use crate::scalar::Scalar;
use crate::series::{SuperSeries, TermJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Load,
    Action,
    Cme,
    Hodge,
    Mc,
    J,
    F0,
    Frobenius,
    Equivalence,
    Axioms,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Load,
        Stage::Action,
        Stage::Cme,
        Stage::Hodge,
        Stage::Mc,
        Stage::J,
        Stage::F0,
        Stage::Frobenius,
        Stage::Equivalence,
        Stage::Axioms,
    ];

    /// Stages whose outputs this one reads.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Load => &[],
            Stage::Action => &[Stage::Load],
            Stage::Cme => &[Stage::Action],
            Stage::Hodge => &[Stage::Load],
            Stage::Mc => &[Stage::Hodge],
            Stage::J => &[Stage::Mc],
            Stage::F0 => &[Stage::Action, Stage::Hodge],
            Stage::Frobenius => &[Stage::J],
            Stage::Equivalence => &[Stage::F0, Stage::Frobenius],
            Stage::Axioms => &[Stage::Cme, Stage::Frobenius],
        }
    }

    /// The stage together with everything it depends on.
    pub fn closure(targets: &[Stage]) -> BTreeSet<Stage> {
        let mut out = BTreeSet::new();
        let mut stack = targets.to_vec();
        while let Some(s) = stack.pop() {
            if out.insert(s) {
                stack.extend_from_slice(s.requires());
            }
        }
        out
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        write!(f, "{}", s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hpl,
    Trees,
    Both,
}

impl Method {
    fn hpl(self) -> bool {
        matches!(self, Method::Hpl | Method::Both)
    }

    fn trees(self) -> bool {
        matches!(self, Method::Trees | Method::Both)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineParams {
    pub order: usize,
    /// Highest descendant t-power in the action and in F₀.
    pub tmax: u32,
    pub method: Method,
    pub stages: BTreeSet<Stage>,
    /// Also compare F₀ on the cone point with the period functional over all τ^{a,k}.
    pub descendants: bool,
    /// Full vertex tables instead of counts.
    pub vertex_entries: bool,
    pub timing: bool,
}

impl PipelineParams {
    /// All stages; tmax defaults to order − 3, the largest t-power a vertex can carry.
    pub fn new(order: usize) -> Self {
        PipelineParams {
            order,
            tmax: order.saturating_sub(3) as u32,
            method: Method::Both,
            stages: Stage::ALL.into_iter().collect(),
            descendants: false,
            vertex_entries: false,
            timing: false,
        }
    }

    pub fn until(mut self, targets: &[Stage]) -> Self {
        self.stages = Stage::closure(targets);
        self
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Feynman(#[from] FeynmanError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum PipelineError {
    #[error("parameter error: {0}")]
    ParamError(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: Stage, source: StageError, report: Box<PipelineReport> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: String,
    pub hash: String,
    pub dimension: i64,
    pub basis_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsInfo {
    pub order: usize,
    pub tmax: u32,
    pub method: Method,
    pub descendants: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexEntry {
    pub legs: Vec<String>,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexReport {
    pub n: usize,
    pub nonzero_entries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<VertexEntry>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    pub nmax: usize,
    pub kmax: u32,
    pub vertices: Vec<VertexReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CmeReport {
    pub order: usize,
    pub t_power: u32,
    pub residual: Vec<TermJson>,
    pub zero: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HodgeReport {
    pub harmonic_basis: Vec<String>,
    pub dim_harmonic: usize,
    pub rank_d: usize,
    pub rank_d_star: usize,
    pub projection: bool,
    pub homotopy: bool,
    pub decomposition: bool,
    pub kahler: String,
    pub propagator_symmetric: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub mu: BTreeMap<String, Vec<TermJson>>,
    pub gauge_witnesses: usize,
    pub mc_residual_zero: bool,
    pub del_constraint_zero: bool,
    pub gauge_certificate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JReport {
    pub window: Option<(i32, i32)>,
    pub coefficients: BTreeMap<i32, BTreeMap<String, Vec<TermJson>>>,
    pub pi0_is_tau: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct F0Report {
    pub kmax: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hpl: Option<Vec<TermJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<TermJson>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureEntry {
    pub a: String,
    pub b: String,
    pub c: String,
    pub value: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrobeniusReport {
    pub coordinates: Vec<String>,
    pub metric: Vec<Vec<String>>,
    pub unit: String,
    pub structure_constants: Vec<StructureEntry>,
    pub f0: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffEntry {
    pub monomial: Vec<String>,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees_vs_hpl: Option<Vec<DiffEntry>>,
    pub period_vs_f0_t0: Vec<DiffEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descendants: Option<Vec<DiffEntry>>,
    pub all_zero: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub cme_zero: bool,
    pub hodge_identities: bool,
    pub mc_residual_zero: bool,
    pub del_constraint_zero: bool,
    pub pi0_is_tau: bool,
    pub metric_constant: bool,
    pub structure_residual_zero: bool,
    pub structure_graded_symmetric: bool,
    pub third_derivatives_match: bool,
    pub wdvv_residual: String,
    pub unit_identity: bool,
    pub vhs: VhsReport,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HaltInfo {
    pub stage: Stage,
    pub error: String,
}

/// Everything the pipeline computed, in stage order.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub model: ModelInfo,
    pub params: ParamsInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cme: Option<CmeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hodge: Option<HodgeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<JReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<F0Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<FrobeniusReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted: Option<HaltInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<Stage, u128>>,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Coefficient-wise difference of two series over the same ring; empty iff equal.
pub fn series_diff(left: &SuperSeries, right: &SuperSeries) -> Vec<DiffEntry> {
    let ring = left.ring();
    let keys: BTreeSet<_> = left.terms().keys().chain(right.terms().keys()).cloned().collect();
    keys.into_iter()
        .filter_map(|m| {
            let (l, r) = (left.coefficient(&m), right.coefficient(&m));
            (l != r).then(|| DiffEntry {
                monomial: m.iter().map(|&c| ring.name(c).to_string()).collect(),
                left: l.to_string(),
                right: r.to_string(),
            })
        })
        .collect()
}

struct Run<'a> {
    model: &'a Arc<DGBVModel>,
    params: &'a PipelineParams,
    report: PipelineReport,
    timing: BTreeMap<Stage, u128>,
}

impl Run<'_> {
    fn wants(&self, s: Stage) -> bool {
        self.params.stages.contains(&s)
    }

    fn stage<T>(
        &mut self,
        stage: Stage,
        f: impl FnOnce(&mut Self) -> Result<T, StageError>,
    ) -> Result<T, PipelineError> {
        let start = Instant::now();
        let out = f(self);
        self.timing.insert(stage, start.elapsed().as_millis());
        out.map_err(|source| {
            let mut report = self.report.clone();
            report.halted = Some(HaltInfo { stage, error: source.to_string() });
            PipelineError::Stage { stage, source, report: Box::new(report) }
        })
    }
}

/// Runs the selected stages in order: load, action, CME, Hodge, MC, J, F₀, Frobenius, equivalence, axioms.
pub fn run_pipeline(model: &Arc<DGBVModel>, params: &PipelineParams) -> Result<PipelineReport, PipelineError> {
    if params.order < 3 {
        return Err(PipelineError::ParamError(format!("order must be at least 3, got {}", params.order)));
    }
    let report = PipelineReport {
        model: ModelInfo {
            name: model.name().to_string(),
            hash: model.hash().to_string(),
            dimension: model.dimension(),
            basis_size: model.len(),
        },
        params: ParamsInfo {
            order: params.order,
            tmax: params.tmax,
            method: params.method,
            descendants: params.descendants,
        },
        action: None,
        cme: None,
        hodge: None,
        mc: None,
        j: None,
        f0: None,
        frobenius: None,
        equivalence: None,
        axioms: None,
        halted: None,
        timing_ms: None,
    };
    let mut run = Run { model, params, report, timing: BTreeMap::new() };
    let order = params.order;

    run.stage(Stage::Load, |r| r.model.validate().map_err(|e| StageError::Model(ModelError::Axiom(e))))?;

    let mut action: Option<ActionFunctional> = None;
    if run.wants(Stage::Action) {
        let s = run.stage(Stage::Action, |r| Ok(build_action(r.model, order, r.params.tmax)))?;
        run.report.action = Some(action_report(model, &s, params.vertex_entries));
        action = Some(s);
    }

    if run.wants(Stage::Cme) {
        let s = action.as_ref().expect("action precedes cme");
        let res = run.stage(Stage::Cme, |_| Ok(cme_residual(s, order)?))?;
        run.report.cme = Some(CmeReport { order, t_power: params.tmax, zero: res.is_zero(), residual: res.to_json() });
    }

    let mut hodge: Option<HodgeData> = None;
    if run.wants(Stage::Hodge) {
        let (h, rep) = run.stage(Stage::Hodge, |r| {
            let h = HodgeData::new(r.model)?;
            let rep = hodge_report(r.model, &h);
            Ok((h, rep))
        })?;
        run.report.hodge = Some(rep);
        hodge = Some(h);
    }

    let mut mc: Option<MCSolution> = None;
    if run.wants(Stage::Mc) {
        let h = hodge.as_ref().expect("hodge precedes mc");
        let sol = run.stage(Stage::Mc, |r| Ok(mc_solve(r.model, h, order)?))?;
        let (res, dm, gauge) = mc_residuals(model, h, &sol);
        run.report.mc = Some(McReport {
            mu: sol.mu.to_json(model),
            gauge_witnesses: sol.witnesses.len(),
            mc_residual_zero: res.is_zero(),
            del_constraint_zero: dm.is_zero(),
            gauge_certificate: gauge.is_zero(),
        });
        mc = Some(sol);
    }

    let mut j: Option<JFunction> = None;
    if run.wants(Stage::J) {
        let h = hodge.as_ref().expect("hodge precedes j");
        let sol = mc.as_ref().expect("mc precedes j");
        let jf = run.stage(Stage::J, |r| Ok(j_function(r.model, h, sol)))?;
        run.report.j = Some(JReport {
            window: jf.series.window(),
            coefficients: jf.series.coeffs().iter().map(|(k, v)| (*k, v.to_json(model))).collect(),
            pi0_is_tau: pi0(&jf) == tau_element(h, &sol.ring),
        });
        j = Some(jf);
    }

    let mut f0: Option<SuperSeries> = None;
    let mut f0_pair: (Option<SuperSeries>, Option<SuperSeries>) = (None, None);
    if run.wants(Stage::F0) {
        let s = action.as_ref().expect("action precedes f0");
        let h = hodge.as_ref().expect("hodge precedes f0");
        let tmax = params.tmax;
        let (hpl, trees) = run.stage(Stage::F0, |r| {
            let (a, b) = rayon::join(
                || r.params.method.hpl().then(|| f0_hpl(s, h, order, tmax)).transpose(),
                || r.params.method.trees().then(|| f0_tree_sum(s, h, order, tmax)).transpose(),
            );
            Ok((a?.map(|p| p.series), b?.map(|p| p.series)))
        })?;
        run.report.f0 = Some(F0Report {
            kmax: tmax,
            hpl: hpl.as_ref().map(SuperSeries::to_json),
            trees: trees.as_ref().map(SuperSeries::to_json),
        });
        f0 = hpl.clone().or_else(|| trees.clone());
        f0_pair = (hpl, trees);
    }

    let mut frob: Option<FrobeniusData> = None;
    if run.wants(Stage::Frobenius) {
        let h = hodge.as_ref().expect("hodge precedes frobenius");
        let jf = j.as_ref().expect("j precedes frobenius");
        let fd = run.stage(Stage::Frobenius, |r| Ok(frobenius_data(r.model, h, jf)?))?;
        run.report.frobenius = Some(frobenius_report(model, &fd));
        frob = Some(fd);
    }

    if run.wants(Stage::Equivalence) {
        let fd = frob.as_ref().expect("frobenius precedes equivalence");
        let big = f0.as_ref().expect("f0 precedes equivalence");
        let s = action.as_ref().expect("action precedes equivalence");
        let h = hodge.as_ref().expect("hodge precedes equivalence");
        let eq = run.stage(Stage::Equivalence, |r| {
            let trees_vs_hpl = match &f0_pair {
                (Some(a), Some(b)) => Some(series_diff(b, a)),
                _ => None,
            };
            let period_vs_f0_t0 = series_diff(&fd.f0, &restrict_to_t0(big).restrict_to(fd.f0.ring()));
            let descendants = if r.params.descendants {
                let dc = descendant_comparison(s, h, order, r.params.tmax)?;
                Some(series_diff(&dc.period, &dc.trees))
            } else {
                None
            };
            let all_zero = trees_vs_hpl.as_ref().is_none_or(Vec::is_empty)
                && period_vs_f0_t0.is_empty()
                && descendants.as_ref().is_none_or(Vec::is_empty);
            Ok(EquivalenceReport { trees_vs_hpl, period_vs_f0_t0, descendants, all_zero })
        })?;
        run.report.equivalence = Some(eq);
    }

    if run.wants(Stage::Axioms) {
        let fd = frob.as_ref().expect("frobenius precedes axioms");
        let jf = j.as_ref().expect("j precedes axioms");
        let rep = run.stage(Stage::Axioms, |r| Ok(axiom_report(r.model, &r.report, jf, fd)))?;
        run.report.axioms = Some(rep);
    }

    let mut report = run.report;
    if params.timing {
        report.timing_ms = Some(run.timing);
    }
    Ok(report)
}

fn action_report(model: &DGBVModel, s: &ActionFunctional, entries: bool) -> ActionReport {
    let vertices = s
        .vertices()
        .iter()
        .map(|v| VertexReport {
            n: v.n,
            nonzero_entries: v.entries.len(),
            entries: entries.then(|| {
                v.entries
                    .iter()
                    .map(|(legs, val)| VertexEntry { legs: leg_names(model, legs), value: val.to_string() })
                    .collect()
            }),
        })
        .collect();
    ActionReport { nmax: s.nmax(), kmax: s.kmax(), vertices }
}

fn hodge_report(model: &DGBVModel, h: &HodgeData) -> HodgeReport {
    let (dim_harmonic, rank_d, rank_d_star) = h.rank_counts();
    let kahler = match h.check_kahler(model) {
        Ok(()) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    HodgeReport {
        harmonic_basis: h.harmonic.iter().map(|&i| model.id(i).to_string()).collect(),
        dim_harmonic,
        rank_d,
        rank_d_star,
        projection: h.check_projection(model),
        homotopy: h.check_homotopy(),
        decomposition: h.check_decomposition(),
        propagator_symmetric: h.check_kahler(model).is_ok() && h.propagator(model).is_ok(),
        kahler,
    }
}

fn frobenius_report(model: &DGBVModel, fd: &FrobeniusData) -> FrobeniusReport {
    let ring = fd.f0.ring();
    let coordinates: Vec<String> = (0..ring.len()).map(|c| ring.name(c as u16).to_string()).collect();
    let mut structure_constants = Vec::new();
    for (a, row) in fd.structure.a.iter().enumerate() {
        for (b, col) in row.iter().enumerate() {
            for (c, v) in col.iter().enumerate() {
                if !v.is_zero() {
                    structure_constants.push(StructureEntry {
                        a: coordinates[a].clone(),
                        b: coordinates[b].clone(),
                        c: coordinates[c].clone(),
                        value: v.to_json(),
                    });
                }
            }
        }
    }
    FrobeniusReport {
        unit: model.id(model.unit()).to_string(),
        metric: fd.g.to_strings(),
        coordinates,
        structure_constants,
        f0: fd.f0.to_json(),
    }
}

fn axiom_report(model: &DGBVModel, report: &PipelineReport, j: &JFunction, fd: &FrobeniusData) -> AxiomReport {
    let ring = j.series.ring().clone();
    let model_ok = |f: fn(&McReport) -> bool| report.mc.as_ref().is_some_and(f);
    let h = fd.g.rows();
    let cut = j.order.saturating_sub(3);
    let parity: Vec<bool> = (0..h).map(|c| ring.parity(c as u16)).collect();

    let lowered = lower_index(&fd.structure, &fd.g);
    let mut symmetric = true;
    for a in 0..h {
        for b in 0..h {
            for c in 0..h {
                let x = lowered[a][b][c].truncate(cut);
                let ab = lowered[b][a][c].truncate(cut).scale(&Scalar::one().signed(parity[a] && parity[b]));
                let bc = lowered[a][c][b].truncate(cut).scale(&Scalar::one().signed(parity[b] && parity[c]));
                symmetric &= x == ab && x == bc;
            }
        }
    }
    let third = third_derivatives(&fd.f0);
    let third_match = lowered
        .iter()
        .flatten()
        .flatten()
        .zip(third.iter().flatten().flatten())
        .all(|(x, y)| x.truncate(cut) == y.truncate(cut));
    let wdvv = wdvv_residual(&fd.f0, &fd.g);
    let structure_assoc = associativity_defect(&fd.structure.a, &parity, j.order.saturating_sub(2));
    let u = fd.unit_index;
    let unit_identity = (0..h).all(|b| {
        (0..h).all(|c| {
            let want = if b == c { SuperSeries::constant(&ring, Scalar::one()) } else { SuperSeries::zero(&ring) };
            fd.structure.a[u][b][c] == want
        })
    });
    let vhs = vhs_axiom_check(model, j, &fd.g, &fd.structure);
    let metric_constant = metric_defect(model, j, &fd.g) == 0;
    let hodge_identities =
        report.hodge.as_ref().is_some_and(|x| x.projection && x.homotopy && x.decomposition && x.propagator_symmetric);
    let cme_zero = report.cme.as_ref().is_some_and(|c| c.zero);
    let mc_residual_zero = model_ok(|m| m.mc_residual_zero && m.gauge_certificate);
    let del_constraint_zero = model_ok(|m| m.del_constraint_zero);
    let pi0_is_tau = report.j.as_ref().is_some_and(|x| x.pi0_is_tau);
    let structure_residual_zero = fd.structure.residual_terms == 0 && structure_assoc.is_zero();
    let all_pass = cme_zero
        && hodge_identities
        && mc_residual_zero
        && del_constraint_zero
        && pi0_is_tau
        && metric_constant
        && structure_residual_zero
        && symmetric
        && third_match
        && wdvv.is_zero()
        && unit_identity
        && vhs.all_pass();
    AxiomReport {
        cme_zero,
        hodge_identities,
        mc_residual_zero,
        del_constraint_zero,
        pi0_is_tau,
        metric_constant,
        structure_residual_zero,
        structure_graded_symmetric: symmetric,
        third_derivatives_match: third_match,
        wdvv_residual: wdvv.to_string(),
        unit_identity,
        vhs,
        all_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{generate_model, ZooParams};

    fn zoo(name: &str) -> Arc<DGBVModel> {
        Arc::new(DGBVModel::from_spec(&generate_model(name, &ZooParams::default()).unwrap()).unwrap())
    }

    #[test]
    fn torus_order_three_is_clean() {
        let rep = run_pipeline(&zoo("torus(1)"), &PipelineParams::new(3)).unwrap();
        let eq = rep.equivalence.as_ref().unwrap();
        assert!(eq.all_zero);
        assert!(rep.axioms.as_ref().unwrap().all_pass, "{}", rep.to_json());
    }

    #[test]
    fn order_below_three_is_rejected() {
        assert!(matches!(run_pipeline(&zoo("torus(1)"), &PipelineParams::new(0)), Err(PipelineError::ParamError(_))));
    }

    #[test]
    fn obstructed_model_halts_at_mc() {
        let m = Arc::new(
            crate::model::load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/obstructed.json")).unwrap(),
        );
        match run_pipeline(&m, &PipelineParams::new(4)) {
            Err(PipelineError::Stage {
                stage: Stage::Mc,
                source: StageError::Frobenius(FrobeniusError::ObstructionError { order: 2, .. }),
                report,
            }) => {
                assert_eq!(report.halted.as_ref().unwrap().stage, Stage::Mc);
                assert!(report.hodge.is_some() && report.mc.is_none());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stage_closure_pulls_dependencies() {
        let s = Stage::closure(&[Stage::F0]);
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![Stage::Load, Stage::Action, Stage::Hodge, Stage::F0]);
    }
}
