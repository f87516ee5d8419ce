//! The monomialization driver: the descent loop on ν, and the passes that
//! add one monomial first integral per generator.
//!
//! Everything that happens is recorded in a [`ChartTree`]. Failures of the
//! monomial-times-unit oracle and truncation ambiguities end a branch with a
//! leaf status; broken invariants abort with [`DriverError`].

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::blowup::{normalize_at, pullback_model, BlowupError, ChartTransition, PointCase};
use crate::exact_linear::{in_row_span, rat, ratio, ExponentMatrix, Rat};
use crate::foliation::{
    combinations, determinant, fitting_admissible, FittingVerdict, FoliationError, LocalModel, VarClass, VectorField,
};
use crate::invariant::{
    decompose, scan_decomposition, zero_one_change, InvariantError, Nu, TangencyOrder,
};
use crate::series::{MultiIdx, SeriesError, TruncatedSeries};
use crate::toric::{monomial_times_unit, principalize_monomial, BlowupStep, MonIdeal, PrincipalTree, ToricError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DriverError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal check failed: {0}")]
    Internal(String),
    #[error("chart tree exceeded {0} nodes")]
    TooLarge(usize),
}

macro_rules! internal_from {
    ($($t:ty),*) => {$(
        impl From<$t> for DriverError {
            fn from(e: $t) -> Self {
                DriverError::Internal(e.to_string())
            }
        }
    )*};
}
internal_from!(InvariantError, BlowupError, FoliationError, SeriesError, ToricError);

#[derive(Debug, Clone)]
pub struct DriverConfig {
    /// Off-origin points checked per drop chart.
    pub samples: usize,
    pub seed: u64,
    pub max_nodes: usize,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig { samples: 5, seed: 0, max_nodes: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeafStatus {
    /// End of a descent: ν is 0 or 1.
    Done { nu: u32 },
    /// Every generator is already a first integral.
    Trivial,
    /// All generators are monomial first integrals; `rank` rows in the lattice.
    Monomialized { rank: usize },
    OracleFailure(String),
    TruncationAmbiguous(String),
}

impl LeafStatus {
    pub fn name(&self) -> &'static str {
        match self {
            LeafStatus::Done { .. } => "done",
            LeafStatus::Trivial => "trivial",
            LeafStatus::Monomialized { .. } => "monomialized",
            LeafStatus::OracleFailure(_) => "oracle_failure",
            LeafStatus::TruncationAmbiguous(_) => "truncation_ambiguous",
        }
    }
}

/// Which generator of the drop ideal becomes the principal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropCase {
    VPower,
    Intermediate,
    Beta { eps: u8 },
}

pub fn case_label(point: PointCase, c: DropCase) -> String {
    let p = match point {
        PointCase::Case1 => 1,
        PointCase::Case2 => 2,
    };
    let s = match c {
        DropCase::VPower => "1",
        DropCase::Intermediate => "2",
        DropCase::Beta { eps: 1 } => "3a",
        DropCase::Beta { .. } => "3b",
    };
    format!("{p}.{s}")
}

/// An off-origin point of a drop chart and the invariant found there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub gamma: Vec<Rat>,
    pub case: PointCase,
    pub label: String,
    /// `None` when every generator is a first integral at the point.
    pub nu: Option<Nu>,
}

/// `f_i = g_i + u^δ Σ_j b_{i,j} u^{r_{i,j}} v^j` with the shape the drop step needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedForm {
    pub nu: u32,
    /// Generator whose `v^ν` coefficient is a unit.
    pub witness: usize,
    /// `b[i][j]` for `j < ν`; `b[i][0]` is the raw `v^0` coefficient.
    pub b: Vec<Vec<TruncatedSeries>>,
    pub r: Vec<Vec<Option<MultiIdx>>>,
    pub beta: Option<MultiIdx>,
    pub eps: u8,
    /// Generator with `b_{i,0} = c·u^β w^ε`.
    pub beta_generator: Option<usize>,
    pub w: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ChartNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub label: String,
    pub transition: Option<ChartTransition>,
    pub model: LocalModel,
    pub nu: Option<Nu>,
    /// ν before the drop that produced this chart.
    pub nu_in: Option<Nu>,
    pub status: Option<LeafStatus>,
    pub samples: Vec<Sample>,
    pub children: Vec<usize>,
    /// Exponents of the monomial first integrals built so far (full length).
    pub first_integrals: Vec<Vec<Rat>>,
    pub centers_checked: usize,
    pub prepared: Option<PreparedForm>,
    /// Decisions taken on inexact series.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ChartTree {
    pub nodes: Vec<ChartNode>,
}

impl ChartTree {
    pub fn root(&self) -> &ChartNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ChartNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// `(ν_in, ν_out)` for every chart created by a drop; `ν_out = None` is trivial.
    pub fn drop_boundaries(&self) -> Vec<(Nu, Option<Nu>)> {
        self.nodes.iter().filter_map(|n| n.nu_in.map(|i| (i, n.nu))).collect()
    }

    pub fn count_status(&self, name: &str) -> usize {
        self.leaves().filter(|n| n.status.as_ref().map(|s| s.name()) == Some(name)).count()
    }

    /// Root-to-node path of ids.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut p = vec![id];
        let mut c = id;
        while let Some(q) = self.nodes[c].parent {
            p.push(q);
            c = q;
        }
        p.reverse();
        p
    }
}

enum PrepOutcome {
    Prepared(usize, PreparedForm),
    /// ν dropped during preparation; the chart starts a fresh descent.
    Lower(usize),
    Stopped(usize),
}

struct BetaInfo {
    i0: usize,
    delta_b: MultiIdx,
    eps: u8,
    coeff: Rat,
    w: Option<usize>,
}

fn measure(model: &LocalModel) -> Result<Option<TangencyOrder>, DriverError> {
    match decompose(model) {
        Ok(dec) => Ok(Some(scan_decomposition(model, &dec))),
        Err(InvariantError::Trivial) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn full_exponent(n: usize, vars: &[usize], e: &[u32]) -> MultiIdx {
    let mut out = vec![0u32; n];
    for (k, &i) in vars.iter().enumerate() {
        out[i] = e[k];
    }
    MultiIdx(out)
}

fn freeze(model: &LocalModel, v: usize) -> Result<LocalModel, DriverError> {
    let mut base = model.reclassify(v, VarClass::Frozen)?;
    base.passengers = model.gens.iter().chain(&model.passengers).cloned().collect();
    base.gens = model.gens.iter().map(|g| g.restrict_zero(&[v])).collect();
    Ok(base)
}

fn unfreeze(model: &LocalModel, v: usize, ngens: usize) -> Result<LocalModel, DriverError> {
    let mut m = model.clone();
    if let Some(x) = m.frame.v_slot() {
        m = m.reclassify(x, VarClass::W)?;
    }
    m = m.reclassify(v, VarClass::V)?;
    let all = std::mem::take(&mut m.passengers);
    m.gens = all[..ngens].to_vec();
    m.passengers = all[ngens..].to_vec();
    Ok(m)
}

struct Driver<'a> {
    cfg: &'a DriverConfig,
    nodes: Vec<ChartNode>,
}

impl<'a> Driver<'a> {
    fn new(cfg: &'a DriverConfig) -> Self {
        Driver { cfg, nodes: Vec::new() }
    }

    fn add(
        &mut self,
        parent: Option<usize>,
        label: impl Into<String>,
        transition: Option<ChartTransition>,
        model: LocalModel,
    ) -> Result<usize, DriverError> {
        if self.nodes.len() >= self.cfg.max_nodes {
            return Err(DriverError::TooLarge(self.cfg.max_nodes));
        }
        let id = self.nodes.len();
        let mut first_integrals = Vec::new();
        if let Some(p) = parent {
            first_integrals = self.nodes[p].first_integrals.clone();
            if let Some(t) = &transition {
                let m = t.full_matrix(model.nvars());
                first_integrals = first_integrals.iter().map(|r| m.vec_mul(r)).collect();
            }
            self.nodes[p].children.push(id);
            self.nodes[p].status = None;
        }
        self.nodes.push(ChartNode {
            id,
            parent,
            label: label.into(),
            transition,
            model,
            nu: None,
            nu_in: None,
            status: None,
            samples: Vec::new(),
            children: Vec::new(),
            first_integrals,
            centers_checked: 0,
            prepared: None,
            notes: Vec::new(),
        });
        Ok(id)
    }

    fn note_truncated(&mut self, id: usize) {
        let order = self.nodes[id].model.order;
        self.nodes[id].notes.push(format!("ν taken as infinite at truncation order {order}"));
    }

    fn finish(&mut self, id: usize, status: LeafStatus) {
        self.nodes[id].status = Some(status);
    }

    fn into_tree(self) -> ChartTree {
        ChartTree { nodes: self.nodes }
    }

    /// Drive ν down to 0 or 1 below node `id`; returns the leaves reached.
    fn step(&mut self, id: usize) -> Result<Vec<usize>, DriverError> {
        let model = self.nodes[id].model.clone();
        let Some(to) = measure(&model)? else {
            self.finish(id, LeafStatus::Trivial);
            return Ok(vec![id]);
        };
        self.nodes[id].nu = Some(to.value);
        match to.value {
            Nu::Finite(k) if k <= 1 => {
                self.finish(id, LeafStatus::Done { nu: k });
                Ok(vec![id])
            }
            Nu::Infinite => {
                if !model.is_exact() {
                    self.note_truncated(id);
                }
                let kids = self.resolve_infinite(id, 0)?;
                self.continue_all(kids)
            }
            Nu::Finite(k) => {
                let (b, witness) = self.basic_normal_form(id, k)?;
                let mut out = Vec::new();
                for p in self.prepare(b, k, witness)? {
                    match p {
                        PrepOutcome::Prepared(pid, pf) => {
                            let kids = self.drop_invariant(pid, &pf)?;
                            out.extend(self.continue_all(kids)?);
                        }
                        PrepOutcome::Lower(pid) => out.extend(self.step(pid)?),
                        PrepOutcome::Stopped(pid) => out.push(pid),
                    }
                }
                Ok(out)
            }
        }
    }

    fn continue_all(&mut self, ids: Vec<usize>) -> Result<Vec<usize>, DriverError> {
        let mut out = Vec::new();
        for c in ids {
            if self.nodes[c].status.is_some() {
                out.push(c);
            } else {
                out.extend(self.step(c)?);
            }
        }
        Ok(out)
    }

    /// Principalize a monomial ideal, checking every center on its chart.
    fn principalize(
        &mut self,
        id: usize,
        model: &LocalModel,
        ideal: &MonIdeal,
        v_pos: Option<usize>,
    ) -> Result<PrincipalTree, DriverError> {
        let tree = principalize_monomial(ideal)?;
        let kv = ideal.vars.len();
        let bare = LocalModel { gens: vec![], passengers: vec![], ..model.clone() };
        let mut seen: Vec<Vec<BlowupStep>> = Vec::new();
        for leaf in &tree.leaves {
            for k in 0..leaf.steps.len() {
                let prefix = leaf.steps[..=k].to_vec();
                if seen.contains(&prefix) {
                    continue;
                }
                seen.push(prefix);
                let mut a = ExponentMatrix::identity(kv);
                for s in &leaf.steps[..k] {
                    a = a.mul(&s.matrix(kv)).expect("square");
                }
                let t = ChartTransition::origin(ideal.vars.clone(), a, v_pos);
                let inter = pullback_model(&bare, &t)?;
                let s = leaf.steps[k];
                let center = [ideal.vars[s.center.0], ideal.vars[s.center.1]];
                if let FittingVerdict::NotAdmissible { k, witness } = fitting_admissible(&inter, &center)? {
                    return Err(DriverError::Internal(format!("center is not admissible (k={k}, {witness})")));
                }
            }
        }
        self.nodes[id].centers_checked += seen.len();
        Ok(tree)
    }

    /// Blow up the coefficient ideal of the residuals until ν is finite.
    fn resolve_infinite(&mut self, id: usize, depth: usize) -> Result<Vec<usize>, DriverError> {
        let model = self.nodes[id].model.clone();
        let n = model.nvars();
        let dec = decompose(&model)?;
        let lb = model.log_block();
        let fields: Vec<Vec<Rat>> = model
            .generators()
            .into_iter()
            .filter_map(|g| match g {
                VectorField::Log(c) => Some(c),
                VectorField::Partial(_) => None,
            })
            .collect();
        type Key = (usize, Vec<u32>, Vec<Rat>);
        let mut groups: BTreeMap<Key, Vec<(MultiIdx, Rat)>> = BTreeMap::new();
        for (i, t) in dec.t.iter().enumerate() {
            for (e, c) in t.mul_monomial(&dec.delta).terms() {
                let mut lam = e.0.clone();
                for &j in &lb {
                    lam[j] = 0;
                }
                let eig: Vec<Rat> = fields
                    .iter()
                    .map(|f| f.iter().zip(&e.0).map(|(a, &k)| a * rat(k as i64)).sum())
                    .collect();
                let rest = e.checked_sub(&MultiIdx(lam.clone())).expect("λ divides e");
                groups.entry((i, lam, eig)).or_default().push((rest, c.clone()));
            }
        }
        let mut ms = Vec::new();
        for ((i, _, _), terms) in &groups {
            let h = TruncatedSeries::from_terms(n, model.order, terms.iter().cloned());
            match monomial_times_unit(&h, &lb) {
                Some(m) => ms.push(m),
                None => {
                    let msg = format!("coefficient {} of f{} is not a monomial times a unit", h.display(model.frame.names()), i + 1);
                    self.finish(id, LeafStatus::OracleFailure(msg));
                    return Ok(vec![id]);
                }
            }
        }
        let ideal = MonIdeal::new(lb.clone(), ms);
        let tree = self.principalize(id, &model, &ideal, None)?;
        if tree.blowups == 0 {
            return Err(DriverError::Internal("infinite ν with a principal coefficient ideal".into()));
        }
        let mut kids = Vec::new();
        for (c, leaf) in tree.leaves.iter().enumerate() {
            let t = ChartTransition::origin(lb.clone(), leaf.a.clone(), None);
            let m2 = pullback_model(&model, &t)?;
            let cid = self.add(Some(id), format!("infinite invariant: chart {}", c + 1), Some(t), m2.clone())?;
            let to = measure(&m2)?;
            self.nodes[cid].nu = to.as_ref().map(|t| t.value);
            match to {
                None => kids.push(cid),
                Some(to) if to.value == Nu::Infinite => {
                    if !m2.is_exact() {
                        self.note_truncated(cid);
                    }
                    if depth < 3 {
                        kids.extend(self.resolve_infinite(cid, depth + 1)?);
                    } else if !m2.is_exact() {
                        self.finish(cid, LeafStatus::TruncationAmbiguous("ν stays infinite up to the truncation order".into()));
                        kids.push(cid);
                    } else {
                        return Err(DriverError::Internal("ν stays infinite after principalization".into()));
                    }
                }
                Some(_) => kids.push(cid),
            }
        }
        Ok(kids)
    }

    /// Pick the witness coordinate as v and complete the v-power.
    fn basic_normal_form(&mut self, id: usize, k: u32) -> Result<(usize, usize), DriverError> {
        let mut model = self.nodes[id].model.clone();
        if let Some(v) = model.frame.v_slot() {
            model = model.reclassify(v, VarClass::W)?;
        }
        let n = model.nvars();
        let order = model.order;
        let to = measure(&model)?.ok_or_else(|| DriverError::Precondition("model is trivial".into()))?;
        if to.value != Nu::Finite(k) || k < 2 {
            return Err(DriverError::Precondition(format!("basic normal form needs 1 < ν < ∞, got {}", to.value)));
        }
        let (i, lam) = to.witness.expect("finite ν has a witness");
        let supp = lam.support();
        let a = supp[0];
        if supp.len() > 1 {
            // generic linear change w_b ↦ w_b + t_b w_a so that w_a^ν appears
            let reg = model.regular();
            let dec = decompose(&model)?;
            let top: Vec<(MultiIdx, Rat)> = dec.t[i]
                .terms()
                .filter(|(e, _)| e.degree() == k && e.support().iter().all(|j| reg.contains(j)))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect();
            let others: Vec<usize> = reg.iter().copied().filter(|&b| b != a).collect();
            let mut chosen = None;
            for c in 1..=64i64 {
                let mut point = vec![Rat::zero(); n];
                point[a] = rat(1);
                let mut p = rat(1);
                for &b in &others {
                    p *= rat(c);
                    point[b] = p.clone();
                }
                let val: Rat = top
                    .iter()
                    .map(|(e, co)| {
                        e.0.iter().enumerate().fold(co.clone(), |acc, (j, &x)| acc * num_traits::pow(point[j].clone(), x as usize))
                    })
                    .sum();
                if !val.is_zero() {
                    chosen = Some(point);
                    break;
                }
            }
            let point = chosen.ok_or_else(|| DriverError::Internal("no linear change isolates a pure power".into()))?;
            let mut images = model.identity_images();
            for &b in &others {
                images[b] = TruncatedSeries::var(n, order, b).add(&TruncatedSeries::var(n, order, a).scale(&point[b]));
            }
            model = model.transform(model.frame.clone(), model.b(), &images)?;
        }
        model = model.reclassify(a, VarClass::V)?;
        let dec = decompose(&model)?;
        let (image, _) = dec.t[i].center_shift(a, k)?;
        let mut images = model.identity_images();
        images[a] = image;
        model = model.transform(model.frame.clone(), model.b(), &images)?;
        let to2 = measure(&model)?.ok_or_else(|| DriverError::Internal("model became trivial".into()))?;
        let dec2 = decompose(&model)?;
        let coeff = dec2.t[i].coeff(&{
            let mut e = vec![0u32; n];
            e[a] = k;
            MultiIdx(e)
        });
        if to2.value != Nu::Finite(k) || coeff.is_zero() {
            return Err(DriverError::Internal("basic normal form changed ν".into()));
        }
        let b = self.add(Some(id), "basic normal form", None, model)?;
        self.nodes[b].nu = Some(Nu::Finite(k));
        Ok((b, i))
    }

    fn prepare(&mut self, id: usize, k: u32, witness: usize) -> Result<Vec<PrepOutcome>, DriverError> {
        let model = self.nodes[id].model.clone();
        let v = model.frame.v_slot().ok_or_else(|| DriverError::Precondition("no v variable".into()))?;
        let dec = decompose(&model)?;
        let lb = model.log_block();
        for (i, t) in dec.t.iter().enumerate() {
            let co = t.v_coefficients(v);
            for (j, a) in co.iter().enumerate().take(k as usize).skip(1) {
                if !a.is_zero() && monomial_times_unit(a, &lb).is_none() {
                    let msg = format!("v^{j} coefficient {} of f{} is not a monomial times a unit", a.display(model.frame.names()), i + 1);
                    self.finish(id, LeafStatus::OracleFailure(msg));
                    return Ok(vec![PrepOutcome::Stopped(id)]);
                }
            }
        }
        if dec.t.iter().all(|t| t.v_coefficients(v)[0].is_zero()) {
            return Ok(vec![self.finish_prepared(id, k, witness, None)?]);
        }
        let ngens = model.gens.len();
        let base = freeze(&model, v)?;
        let bid = self.add(Some(id), "prepare: slice v = 0", None, base)?;
        let mut out = Vec::new();
        for l in self.step(bid)? {
            let lm = self.nodes[l].model.clone();
            match self.nodes[l].status.clone() {
                Some(LeafStatus::Done { .. }) => {
                    let zo = zero_one_change(&lm, false)?;
                    let lifted = unfreeze(&zo.model, v, ngens)?;
                    let lid = self.add(Some(l), "prepare: lift", None, lifted)?;
                    let info = BetaInfo { i0: zo.i0, delta_b: zo.beta, eps: zo.eps, coeff: zo.coeff, w: zo.w };
                    out.push(self.finish_prepared(lid, k, witness, Some(info))?);
                }
                Some(LeafStatus::Trivial) => {
                    let lifted = unfreeze(&lm, v, ngens)?;
                    let lid = self.add(Some(l), "prepare: lift", None, lifted)?;
                    out.push(self.finish_prepared(lid, k, witness, None)?);
                }
                _ => out.push(PrepOutcome::Stopped(l)),
            }
        }
        Ok(out)
    }

    fn finish_prepared(&mut self, id: usize, k: u32, witness: usize, info: Option<BetaInfo>) -> Result<PrepOutcome, DriverError> {
        let model = self.nodes[id].model.clone();
        let Some(to) = measure(&model)? else {
            self.finish(id, LeafStatus::Trivial);
            return Ok(PrepOutcome::Stopped(id));
        };
        self.nodes[id].nu = Some(to.value);
        match to.value {
            Nu::Infinite if !model.is_exact() => {
                self.finish(id, LeafStatus::TruncationAmbiguous("ν became infinite up to the truncation order".into()));
                return Ok(PrepOutcome::Stopped(id));
            }
            Nu::Finite(x) if x < k => return Ok(PrepOutcome::Lower(id)),
            Nu::Finite(x) if x == k => {}
            other => return Err(DriverError::Internal(format!("ν increased across preparation: {k} -> {other}"))),
        }
        match prepared_form(&model, k, witness, info)? {
            Ok(pf) => {
                self.nodes[id].prepared = Some(pf.clone());
                Ok(PrepOutcome::Prepared(id, pf))
            }
            Err(msg) => {
                self.finish(id, LeafStatus::OracleFailure(msg));
                Ok(PrepOutcome::Stopped(id))
            }
        }
    }

    fn drop_invariant(&mut self, id: usize, pf: &PreparedForm) -> Result<Vec<usize>, DriverError> {
        let model = self.nodes[id].model.clone();
        let n = model.nvars();
        let k = pf.nu;
        let v = model.frame.v_slot().ok_or_else(|| DriverError::Precondition("no v variable".into()))?;
        let mut vars = model.log_block();
        vars.push(v);
        vars.sort();
        let v_pos = vars.iter().position(|&i| i == v).unwrap();
        let kv = vars.len();
        let restrict = |e: &MultiIdx| -> Vec<u32> { vars.iter().map(|&i| e.0[i]).collect() };
        let mut jgens: Vec<(DropCase, Vec<u32>)> = Vec::new();
        let mut vp = vec![0u32; kv];
        vp[v_pos] = k;
        jgens.push((DropCase::VPower, vp));
        for row in &pf.r {
            for (j, r) in row.iter().enumerate() {
                if let Some(r) = r {
                    let mut g = restrict(r);
                    g[v_pos] = j as u32;
                    jgens.push((DropCase::Intermediate, g));
                }
            }
        }
        if let Some(beta) = &pf.beta {
            jgens.push((DropCase::Beta { eps: pf.eps }, restrict(beta)));
        }
        let ideal = MonIdeal::new(vars.clone(), jgens.iter().map(|g| g.1.clone()).collect());
        let tree = self.principalize(id, &model, &ideal, Some(v_pos))?;
        let mut kids = Vec::new();
        for (c, leaf) in tree.leaves.iter().enumerate() {
            let t = ChartTransition::origin(vars.clone(), leaf.a.clone(), Some(v_pos));
            let pulled: Vec<Vec<Rat>> = jgens
                .iter()
                .map(|(_, g)| leaf.a.vec_mul(&g.iter().map(|&x| rat(x as i64)).collect::<Vec<_>>()))
                .collect();
            let gen: Vec<Rat> = leaf.generator.iter().map(|&x| rat(x as i64)).collect();
            let case = (0..jgens.len())
                .find(|&g| pulled[g] == gen)
                .map(|g| jgens[g].0)
                .ok_or_else(|| DriverError::Internal("no drop generator is principal".into()))?;
            let label = case_label(PointCase::Case2, case);
            let m2 = pullback_model(&model, &t)?;
            let cid = self.add(Some(id), format!("drop {label}: chart {}", c + 1), Some(t.clone()), m2.clone())?;
            self.nodes[cid].nu_in = Some(Nu::Finite(k));
            match measure(&m2)? {
                None => {}
                Some(to) => {
                    self.nodes[cid].nu = Some(to.value);
                    if to.value >= Nu::Finite(k) {
                        if to.value == Nu::Infinite && !m2.is_exact() {
                            self.finish(cid, LeafStatus::TruncationAmbiguous("ν infinite after the drop".into()));
                        } else {
                            return Err(DriverError::Internal(format!("no descent at chart {}: {} -> {}", c + 1, k, to.value)));
                        }
                    }
                }
            }
            self.sample(cid, &model, &t, &jgens, &pulled, k)?;
            let _ = n;
            kids.push(cid);
        }
        Ok(kids)
    }

    /// Check the descent at seeded off-origin points of the chart's exceptional divisor.
    fn sample(
        &mut self,
        cid: usize,
        model: &LocalModel,
        t: &ChartTransition,
        jgens: &[(DropCase, Vec<u32>)],
        pulled: &[Vec<Rat>],
        k: u32,
    ) -> Result<(), DriverError> {
        let kv = t.vars.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (cid as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut tries = 0;
        while self.nodes[cid].samples.len() < self.cfg.samples && tries < 40 * self.cfg.samples.max(1) {
            tries += 1;
            let mask: Vec<bool> = (0..kv).map(|_| rng.gen_bool(0.5)).collect();
            if !mask.iter().any(|&b| b) {
                continue;
            }
            // every old blown-up variable must still vanish
            if (0..kv).any(|r| (0..kv).all(|c| mask[c] || t.a.get(r, c).is_zero())) {
                continue;
            }
            let gamma: Vec<Rat> = mask
                .iter()
                .map(|&b| {
                    if !b {
                        return Rat::zero();
                    }
                    let num = rng.gen_range(1..=3i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
                    ratio(num, rng.gen_range(1..=2i64))
                })
                .collect();
            let tq = t.at_point(gamma.clone());
            let norm = normalize_at(model, &tq)?;
            let nu = measure(&norm.model)?.map(|to| to.value);
            if let Some(x) = nu {
                if x >= Nu::Finite(k) {
                    return Err(DriverError::Internal(format!("no descent at a sampled point: {k} -> {x}")));
                }
            }
            let van = tq.vanishing();
            let res = |p: &Vec<Rat>| -> Vec<Rat> { van.iter().map(|&c| p[c].clone()).collect() };
            let mins: Vec<Vec<Rat>> = pulled.iter().map(res).collect();
            let g = (0..mins.len())
                .find(|&g| mins.iter().all(|m| m.iter().zip(&mins[g]).all(|(a, b)| b <= a)))
                .ok_or_else(|| DriverError::Internal("drop ideal is not principal at a sampled point".into()))?;
            let label = case_label(norm.case, jgens[g].0);
            self.nodes[cid].samples.push(Sample { gamma, case: norm.case, label, nu });
        }
        Ok(())
    }
}

/// Read off the prepared form at a chart, or explain why it does not hold.
fn prepared_form(
    model: &LocalModel,
    k: u32,
    witness: usize,
    info: Option<BetaInfo>,
) -> Result<Result<PreparedForm, String>, DriverError> {
    let n = model.nvars();
    let v = model.frame.v_slot().ok_or_else(|| DriverError::Internal("lost the v variable".into()))?;
    let dec = decompose(model)?;
    let lb = model.log_block();
    let mut b = Vec::new();
    let mut r = Vec::new();
    for (i, t) in dec.t.iter().enumerate() {
        let co = t.v_coefficients(v);
        let at = |j: usize| co.get(j).cloned().unwrap_or_else(|| TruncatedSeries::zero(n, t.order()));
        let mut bi = vec![at(0)];
        let mut ri = vec![None];
        for j in 1..k as usize {
            let a = at(j);
            if a.is_zero() {
                bi.push(a);
                ri.push(None);
                continue;
            }
            let Some(m) = monomial_times_unit(&a, &lb) else {
                return Ok(Err(format!("v^{j} coefficient of f{} is not a monomial times a unit", i + 1)));
            };
            let e = full_exponent(n, &lb, &m);
            if e.is_zero() {
                return Err(DriverError::Internal("intermediate coefficient is a unit".into()));
            }
            bi.push(a.divide_monomial(&e).expect("monomial divides"));
            ri.push(Some(e));
        }
        if i == witness && !at(k as usize).is_unit() {
            return Err(DriverError::Internal("v^ν coefficient is not a unit".into()));
        }
        b.push(bi);
        r.push(ri);
    }
    let (beta, eps, beta_generator, w) = match info {
        None => {
            if b.iter().any(|bi| !bi[0].is_zero()) {
                return Err(DriverError::Internal("v^0 coefficients survived without a base normal form".into()));
            }
            (None, 0, None, None)
        }
        Some(info) => {
            let beta = info
                .delta_b
                .checked_sub(&dec.delta)
                .ok_or_else(|| DriverError::Internal("slice exponent below δ".into()))?;
            for bi in &b {
                if bi[0].divide_monomial(&beta).is_none() {
                    return Err(DriverError::Internal("u^β does not divide every v^0 coefficient".into()));
                }
            }
            let mut e = beta.clone();
            if let Some(w) = info.w {
                e.0[w] += info.eps as u32;
            }
            let want = TruncatedSeries::monomial(n, model.order, e, info.coeff.clone());
            let reach = model.order.saturating_sub(dec.delta.degree());
            if !b[info.i0][0].sub(&want).truncate(reach).is_zero() {
                return Err(DriverError::Internal("v^0 coefficient is not c·u^β w^ε".into()));
            }
            (Some(beta), info.eps, Some(info.i0), info.w)
        }
    };
    Ok(Ok(PreparedForm { nu: k, witness, b, r, beta, eps, beta_generator, w }))
}

/// `df_1 ∧ … ∧ df_n ∧ d log u^{b_1} ∧ … ≠ 0`: the generators are independent
/// of each other and of the monomial first integrals already known.
pub fn generators_independent(model: &LocalModel) -> bool {
    let m = model.nvars();
    let order = model.order;
    let ub = model.frame.u_block();
    let mut jac: Vec<Vec<TruncatedSeries>> = model.gens.iter().map(|f| (0..m).map(|j| f.derivative(j)).collect()).collect();
    // d log u^b scaled by the product of the u's
    for row in model.b().to_rows() {
        let mut r = vec![TruncatedSeries::zero(m, order); m];
        for (p, &j) in ub.iter().enumerate() {
            let mut e = vec![0u32; m];
            for &l in &ub {
                if l != j {
                    e[l] = 1;
                }
            }
            r[j] = TruncatedSeries::monomial(m, order, MultiIdx(e), row[p].clone());
        }
        jac.push(r);
    }
    let n = jac.len();
    if n == 0 {
        return true;
    }
    if n > m {
        return false;
    }
    combinations(m, n).iter().any(|cols| {
        let sub: Vec<Vec<TruncatedSeries>> = jac.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
        !determinant(&sub).is_zero()
    })
}

/// Independent re-check of a monomialized leaf.
pub fn leaf_certificate(node: &ChartNode, initial_rank: usize, n: usize) -> Result<usize, String> {
    let m = &node.model;
    if !m.gens.iter().all(|f| m.is_first_integral(f)) {
        return Err(format!("node {}: a generator is not a first integral", node.id));
    }
    match decompose(m) {
        Err(InvariantError::Trivial) => {}
        _ => return Err(format!("node {}: generators are not monomial first integrals", node.id)),
    }
    let rank = m.b().rank();
    if rank != initial_rank + n {
        return Err(format!("node {}: lattice rank {rank}, expected {}", node.id, initial_rank + n));
    }
    let ub = m.frame.u_block();
    let rows: Vec<Vec<Rat>> = node.first_integrals.clone();
    if rows.len() != n || ExponentMatrix::from_rows(m.nvars(), &rows).rank() != n {
        return Err(format!("node {}: first-integral exponents do not have rank {n}", node.id));
    }
    for row in &rows {
        if (0..m.nvars()).any(|i| !ub.contains(&i) && !row[i].is_zero()) {
            return Err(format!("node {}: first integral involves a non-u variable", node.id));
        }
        let ur: Vec<Rat> = ub.iter().map(|&i| row[i].clone()).collect();
        if !in_row_span(&ur, m.b()) {
            return Err(format!("node {}: recorded first integral is outside the lattice", node.id));
        }
    }
    Ok(rank)
}

fn run_single<F>(model: &LocalModel, cfg: &DriverConfig, f: F) -> Result<ChartTree, DriverError>
where
    F: FnOnce(&mut Driver, usize) -> Result<(), DriverError>,
{
    let mut d = Driver::new(cfg);
    let root = d.add(None, "input", None, model.clone())?;
    f(&mut d, root)?;
    Ok(d.into_tree())
}

pub fn monomialize_step(model: &LocalModel, cfg: &DriverConfig) -> Result<ChartTree, DriverError> {
    run_single(model, cfg, |d, root| d.step(root).map(|_| ()))
}

/// Resolve an infinite invariant; a model with finite ν gives a one-node tree.
pub fn resolve_infinite(model: &LocalModel, cfg: &DriverConfig) -> Result<ChartTree, DriverError> {
    run_single(model, cfg, |d, root| {
        match measure(model)? {
            Some(to) if to.value == Nu::Infinite => {
                d.nodes[root].nu = Some(Nu::Infinite);
                d.resolve_infinite(root, 0)?;
            }
            Some(to) => d.nodes[root].nu = Some(to.value),
            None => d.finish(root, LeafStatus::Trivial),
        }
        Ok(())
    })
}

pub fn basic_normal_form(model: &LocalModel) -> Result<LocalModel, DriverError> {
    let cfg = DriverConfig::default();
    let to = measure(model)?.ok_or_else(|| DriverError::Precondition("model is trivial".into()))?;
    let k = to.value.finite().ok_or_else(|| DriverError::Precondition("ν is infinite".into()))?;
    let tree = run_single(model, &cfg, |d, root| d.basic_normal_form(root, k).map(|_| ()))?;
    Ok(tree.nodes.last().expect("node").model.clone())
}

/// Basic normal form followed by preparation; prepared charts carry their form.
pub fn prepare(model: &LocalModel, cfg: &DriverConfig) -> Result<ChartTree, DriverError> {
    run_single(model, cfg, |d, root| {
        let k = nu_at_least_two(model)?;
        let (b, w) = d.basic_normal_form(root, k)?;
        d.prepare(b, k, w)?;
        Ok(())
    })
}

/// One round of basic normal form, preparation and a single drop.
pub fn drop_invariant(model: &LocalModel, cfg: &DriverConfig) -> Result<ChartTree, DriverError> {
    run_single(model, cfg, |d, root| {
        let k = nu_at_least_two(model)?;
        let (b, w) = d.basic_normal_form(root, k)?;
        for p in d.prepare(b, k, w)? {
            if let PrepOutcome::Prepared(pid, pf) = p {
                d.drop_invariant(pid, &pf)?;
            }
        }
        Ok(())
    })
}

fn nu_at_least_two(model: &LocalModel) -> Result<u32, DriverError> {
    match measure(model)?.map(|t| t.value) {
        Some(Nu::Finite(k)) if k >= 2 => Ok(k),
        other => Err(DriverError::Precondition(format!(
            "needs 1 < ν < ∞, got {}",
            other.map(|x| x.to_string()).unwrap_or_else(|| "trivial".into())
        ))),
    }
}

/// The full algorithm: one descent-and-refine pass per generator.
pub fn monomialize(model: &LocalModel, cfg: &DriverConfig) -> Result<ChartTree, DriverError> {
    if !generators_independent(model) {
        return Err(DriverError::Precondition("generators are not independent".into()));
    }
    let n = model.gens.len();
    let rank0 = model.b().rows();
    let mut d = Driver::new(cfg);
    let root = d.add(None, "input", None, model.clone())?;
    let mut current = vec![root];
    for pass in 0..n {
        let mut next = Vec::new();
        for id in current {
            for l in d.step(id)? {
                if d.nodes[l].status == Some(LeafStatus::Trivial) {
                    // independent generators cannot all be first integrals
                    if d.nodes[l].model.is_exact() {
                        return Err(DriverError::Internal("independent generators became first integrals".into()));
                    }
                    let order = d.nodes[l].model.order;
                    let msg = format!("generators look dependent at truncation order {order}");
                    d.finish(l, LeafStatus::TruncationAmbiguous(msg));
                }
                if let Some(LeafStatus::Done { .. }) = d.nodes[l].status {
                    let lm = d.nodes[l].model.clone();
                    let zo = zero_one_change(&lm, true)?;
                    let mut row = zo.beta.to_rats();
                    if let Some(w) = zo.w {
                        row[w] += rat(zo.eps as i64);
                    }
                    let cid = d.add(Some(l), format!("refine: first integral {}", pass + 1), None, zo.model)?;
                    d.nodes[cid].first_integrals.push(row);
                    next.push(cid);
                }
            }
        }
        current = next;
    }
    for id in current {
        let rank = leaf_certificate(&d.nodes[id], rank0, n).map_err(DriverError::Internal)?;
        d.finish(id, LeafStatus::Monomialized { rank });
    }
    Ok(d.into_tree())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::ChartFrame;

    fn model(spec: &[(&str, VarClass)], b: &[Vec<i64>], gens: &[&[(&[u32], i64)]]) -> LocalModel {
        let frame = ChartFrame::new(spec.iter().map(|s| s.0.to_string()).collect(), spec.iter().map(|s| s.1).collect()).unwrap();
        let n = spec.len();
        let k = frame.u_block().len();
        let gens = gens
            .iter()
            .map(|g| TruncatedSeries::from_terms(n, 12, g.iter().map(|(e, c)| (MultiIdx(e.to_vec()), rat(*c)))))
            .collect();
        LocalModel::new(frame, &ExponentMatrix::from_ints(k, b), gens, 12).unwrap()
    }

    const UD: VarClass = VarClass::U { divisor: true };

    #[test]
    fn n1_single_leaf() {
        let m = model(&[("u1", UD), ("w1", VarClass::W)], &[], &[&[(&[1, 1], 1)]]);
        let t = monomialize(&m, &DriverConfig::default()).unwrap();
        let leaves: Vec<_> = t.leaves().collect();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].status, Some(LeafStatus::Monomialized { rank: 1 }));
    }

    #[test]
    fn n2_two_passes() {
        let m = model(&[("u1", UD), ("w1", VarClass::W)], &[], &[&[(&[1, 0], 1)], &[(&[1, 1], 1)]]);
        let t = monomialize(&m, &DriverConfig::default()).unwrap();
        let leaves: Vec<_> = t.leaves().collect();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].status, Some(LeafStatus::Monomialized { rank: 2 }));
    }

    #[test]
    fn drop_example() {
        // f = u (v^2 + u)
        let m = model(&[("u", UD), ("v", VarClass::W)], &[], &[&[(&[1, 2], 1), (&[2, 0], 1)]]);
        let t = monomialize_step(&m, &DriverConfig::default()).unwrap();
        for (i, o) in t.drop_boundaries() {
            assert!(o.map_or(true, |o| o < i));
        }
        assert!(t.leaves().all(|l| matches!(l.status, Some(LeafStatus::Done { .. }) | Some(LeafStatus::Trivial))));
        let pf = t.nodes.iter().find_map(|n| n.prepared.clone()).unwrap();
        assert_eq!(pf.beta, Some(MultiIdx(vec![1, 0])));
        assert_eq!(pf.eps, 0);
        assert!(t.nodes.iter().all(|n| n.samples.iter().all(|s| s.nu.map_or(true, |x| x < Nu::Finite(2)))));
        let full = monomialize(&m, &DriverConfig::default()).unwrap();
        assert!(full.leaves().all(|l| matches!(l.status, Some(LeafStatus::Monomialized { .. }))));
    }

    #[test]
    fn bnf_examples() {
        let m = model(&[("u", UD), ("v", VarClass::W)], &[], &[&[(&[0, 2], 1), (&[1, 1], 2)]]);
        let b = basic_normal_form(&m).unwrap();
        let want = TruncatedSeries::from_terms(2, 12, [(MultiIdx(vec![0, 2]), rat(1)), (MultiIdx(vec![2, 0]), rat(-1))]);
        assert_eq!(b.gens[0], want);
        assert_eq!(b.frame.v_slot(), Some(1));
    }

    #[test]
    fn infinite_invariant() {
        // f = u1 u2 (u1 + u2) with B empty: ν = ∞ until (u1, u2) is blown up
        let m = model(&[("u1", UD), ("u2", UD), ("w", VarClass::W)], &[], &[&[(&[2, 1, 1], 1), (&[1, 2, 1], 1), (&[1, 1, 0], 1)]]);
        let t = resolve_infinite(&m, &DriverConfig::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        let m = model(&[("u1", UD), ("u2", UD), ("w", VarClass::W)], &[], &[&[(&[2, 1, 1], 1), (&[1, 2, 1], 1)]]);
        let t = resolve_infinite(&m, &DriverConfig::default()).unwrap();
        assert!(t.nodes.len() > 1);
        for l in t.leaves() {
            assert!(matches!(l.nu, Some(Nu::Finite(_))), "{:?}", l.nu);
        }
    }
}
