//! Combinatorial principalization of monomial ideals by codimension-two
//! coordinate blowups, plus the boundary for non-monomial input.
//!
//! Center rule: keep working on one incomparable pair `(a, b)` of minimal
//! generators until it becomes comparable or leaves the minimal set. With
//! `d = a − b`, blow up `x_i = x_j = 0` where `i` maximizes `d` and `j`
//! minimizes it. Per pair, `(max |d|, #entries at the max, size of the
//! opposite side)` drops lexicographically in both charts, and the number of
//! incomparable minimal pairs never grows.

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::exact_linear::{rat, ExponentMatrix};
use crate::foliation::LocalModel;
use crate::series::{MultiIdx, TruncatedSeries};

/// Hard cap on tree size; reaching it is reported, not looped on.
pub const NODE_CAP: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToricError {
    #[error("oracle required: {0}")]
    OracleRequired(String),
    #[error("principalization exceeded {0} nodes")]
    TooLarge(usize),
    #[error("termination measure did not decrease")]
    Measure,
}

/// Monomial ideal over a list of frame variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonIdeal {
    pub vars: Vec<usize>,
    pub gens: Vec<Vec<u32>>,
}

fn leq(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn incomparable(a: &[u32], b: &[u32]) -> bool {
    !leq(a, b) && !leq(b, a)
}

fn minimal(gens: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = gens
        .iter()
        .filter(|g| !gens.iter().any(|h| h != *g && leq(h, g)))
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

impl MonIdeal {
    pub fn new(vars: Vec<usize>, gens: Vec<Vec<u32>>) -> Self {
        assert!(gens.iter().all(|g| g.len() == vars.len()));
        MonIdeal { vars, gens: minimal(&gens) }
    }
}

pub fn is_principal(i: &MonIdeal) -> bool {
    i.gens.len() == 1
}

/// One blowup of `x_i = x_j = 0` (positions in the ideal's variable list),
/// seen in the chart where `exceptional` carries the exceptional divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlowupStep {
    pub center: (usize, usize),
    pub exceptional: usize,
}

impl BlowupStep {
    /// Old variables as monomials in the new ones (rows old, columns new).
    pub fn matrix(&self, k: usize) -> ExponentMatrix {
        let mut m = ExponentMatrix::identity(k);
        let other = if self.center.0 == self.exceptional { self.center.1 } else { self.center.0 };
        m.set(other, self.exceptional, rat(1));
        m
    }

    fn apply(&self, g: &[u32]) -> Vec<u32> {
        let other = if self.center.0 == self.exceptional { self.center.1 } else { self.center.0 };
        let mut h = g.to_vec();
        h[self.exceptional] += g[other];
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalLeaf {
    pub steps: Vec<BlowupStep>,
    /// Composite chart matrix: old variables = x^{𝒜}.
    pub a: ExponentMatrix,
    /// Pullback of every input generator, in input order.
    pub pulled: Vec<Vec<u32>>,
    /// Principal generator in the chart.
    pub generator: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalTree {
    pub vars: Vec<usize>,
    pub leaves: Vec<PrincipalLeaf>,
    pub blowups: usize,
}

fn measure(mins: &[Vec<u32>], a: &[u32], b: &[u32]) -> (usize, i64, usize, usize) {
    let d: Vec<i64> = a.iter().zip(b).map(|(x, y)| *x as i64 - *y as i64).collect();
    let m = d.iter().map(|x| x.abs()).max().unwrap_or(0);
    let cm = d.iter().filter(|x| x.abs() == m).count();
    let pmax = d.iter().copied().max().unwrap_or(0);
    let nmax = -d.iter().copied().min().unwrap_or(0);
    let opposite = if pmax == m && nmax != m {
        d.iter().filter(|x| **x < 0).count()
    } else if nmax == m && pmax != m {
        d.iter().filter(|x| **x > 0).count()
    } else {
        0
    };
    let mut inc = 0;
    for i in 0..mins.len() {
        for j in i + 1..mins.len() {
            if incomparable(&mins[i], &mins[j]) {
                inc += 1;
            }
        }
    }
    (inc, m, cm, opposite)
}

/// Principalize by codimension-two blowups; charts are listed depth first.
pub fn principalize_monomial(ideal: &MonIdeal) -> Result<PrincipalTree, ToricError> {
    let k = ideal.vars.len();
    let mut leaves = Vec::new();
    let mut blowups = 0usize;
    let mut budget = NODE_CAP;
    let tracked: Vec<Vec<u32>> = ideal.gens.clone();
    rec(
        &tracked,
        None,
        Vec::new(),
        ExponentMatrix::identity(k),
        &mut leaves,
        &mut blowups,
        &mut budget,
    )?;
    Ok(PrincipalTree { vars: ideal.vars.clone(), leaves, blowups })
}

#[allow(clippy::too_many_arguments)]
fn rec(
    gens: &[Vec<u32>],
    focus: Option<(Vec<u32>, Vec<u32>)>,
    steps: Vec<BlowupStep>,
    a: ExponentMatrix,
    leaves: &mut Vec<PrincipalLeaf>,
    blowups: &mut usize,
    budget: &mut usize,
) -> Result<(), ToricError> {
    if *budget == 0 {
        return Err(ToricError::TooLarge(NODE_CAP));
    }
    *budget -= 1;
    let mins = minimal(gens);
    if mins.len() <= 1 {
        leaves.push(PrincipalLeaf {
            steps,
            a,
            pulled: gens.to_vec(),
            generator: mins.into_iter().next().unwrap_or_default(),
        });
        return Ok(());
    }
    let (pa, pb) = match focus {
        Some((x, y)) if mins.contains(&x) && mins.contains(&y) && incomparable(&x, &y) => (x, y),
        _ => {
            let mut found = None;
            'outer: for i in 0..mins.len() {
                for j in i + 1..mins.len() {
                    if incomparable(&mins[i], &mins[j]) {
                        found = Some((mins[i].clone(), mins[j].clone()));
                        break 'outer;
                    }
                }
            }
            found.expect("a non-principal minimal set has an incomparable pair")
        }
    };
    let d: Vec<i64> = pa.iter().zip(&pb).map(|(x, y)| *x as i64 - *y as i64).collect();
    // first index attaining the max / min
    let i = (0..d.len()).fold(0, |best, c| if d[c] > d[best] { c } else { best });
    let j = (0..d.len()).fold(0, |best, c| if d[c] < d[best] { c } else { best });
    let m0 = measure(&mins, &pa, &pb);
    *blowups += 1;
    for s in [i, j] {
        let step = BlowupStep { center: (i.min(j), i.max(j)), exceptional: s };
        let ng: Vec<Vec<u32>> = gens.iter().map(|g| step.apply(g)).collect();
        let (na, nb) = (step.apply(&pa), step.apply(&pb));
        let nm = minimal(&ng);
        let m1 = measure(&nm, &na, &nb);
        let ok = if !incomparable(&na, &nb) {
            m1.0 < m0.0
        } else if nm.contains(&na) && nm.contains(&nb) {
            m1 < m0
        } else {
            m1.0 <= m0.0
        };
        if !ok {
            return Err(ToricError::Measure);
        }
        let mut st = steps.clone();
        st.push(step);
        let na_mat = a.mul(&step.matrix(d.len())).expect("square chart matrices");
        rec(&ng, Some((na, nb)), st, na_mat, leaves, blowups, budget)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Centers inside the log block only.
    Invariant,
    /// Centers may also use the distinguished v.
    Admissible,
}

/// Split `h = x^m · unit` with `m` supported on `allowed`, if possible.
pub fn monomial_times_unit(h: &TruncatedSeries, allowed: &[usize]) -> Option<Vec<u32>> {
    let n = h.nvars();
    let all: Vec<usize> = (0..n).collect();
    let m = h.min_exponents(&all)?;
    if h.coeff(&MultiIdx(m.clone())).is_zero() {
        return None;
    }
    if (0..n).any(|i| m[i] > 0 && !allowed.contains(&i)) {
        return None;
    }
    Some(allowed.iter().map(|&i| m[i]).collect())
}

/// Principalize an ideal of series when every generator is a monomial times a
/// unit; anything else needs a general resolution and is reported.
pub fn principalize_oracle(
    ideal: &[TruncatedSeries],
    model: &LocalModel,
    mode: OracleMode,
) -> Result<PrincipalTree, ToricError> {
    let mut vars = model.log_block();
    if mode == OracleMode::Admissible {
        if let Some(v) = model.frame.v_slot() {
            vars.push(v);
            vars.sort();
        }
    }
    let mut gens = Vec::new();
    for h in ideal {
        if h.is_zero() {
            continue;
        }
        match monomial_times_unit(h, &vars) {
            Some(m) => gens.push(m),
            None => return Err(ToricError::OracleRequired(h.display(model.frame.names()))),
        }
    }
    if gens.is_empty() {
        return Ok(PrincipalTree { vars: vars.clone(), leaves: vec![trivial_leaf(vars.len())], blowups: 0 });
    }
    principalize_monomial(&MonIdeal::new(vars, gens))
}

fn trivial_leaf(k: usize) -> PrincipalLeaf {
    PrincipalLeaf { steps: vec![], a: ExponentMatrix::identity(k), pulled: vec![], generator: vec![0; k] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_linear::rat;
    use crate::foliation::{ChartFrame, VarClass};

    #[test]
    fn principal_check() {
        assert!(is_principal(&MonIdeal::new(vec![0, 1], vec![vec![1, 0]])));
        assert!(!is_principal(&MonIdeal::new(vec![0, 1], vec![vec![2, 0], vec![0, 1]])));
        assert!(is_principal(&MonIdeal::new(vec![0, 1], vec![vec![1, 1], vec![2, 1]])));
    }

    #[test]
    fn small_principalizations() {
        let t = principalize_monomial(&MonIdeal::new(vec![0, 1], vec![vec![1, 0], vec![0, 1]])).unwrap();
        assert_eq!(t.blowups, 1);
        assert_eq!(t.leaves.len(), 2);
        let t = principalize_monomial(&MonIdeal::new(vec![0, 1], vec![vec![2, 0], vec![0, 1]])).unwrap();
        assert_eq!(t.blowups, 2);
        let t = principalize_monomial(&MonIdeal::new(vec![0, 1], vec![vec![1, 0]])).unwrap();
        assert_eq!(t.blowups, 0);
        assert_eq!(t.leaves.len(), 1);
        for leaf in &t.leaves {
            assert_eq!(leaf.a, ExponentMatrix::identity(2));
        }
    }

    #[test]
    fn leaves_are_totally_ordered() {
        let t = principalize_monomial(&MonIdeal::new(vec![0, 1, 2], vec![vec![3, 0, 1], vec![0, 2, 0], vec![1, 1, 2]])).unwrap();
        for leaf in &t.leaves {
            for g in &leaf.pulled {
                assert!(leq(&leaf.generator, g));
            }
        }
    }

    #[test]
    fn oracle_cases() {
        let frame = ChartFrame::new(
            vec!["u1".into(), "u2".into(), "w1".into()],
            vec![VarClass::U { divisor: true }, VarClass::U { divisor: true }, VarClass::W],
        )
        .unwrap();
        let m = LocalModel::new(frame, &ExponentMatrix::zeros(0, 2), vec![], 12).unwrap();
        let s = |t: &[(&[u32], i64)]| TruncatedSeries::from_terms(3, 12, t.iter().map(|(e, c)| (MultiIdx(e.to_vec()), rat(*c))));
        let t = principalize_oracle(&[s(&[(&[2, 0, 0], 1), (&[2, 0, 1], 1)])], &m, OracleMode::Invariant).unwrap();
        assert_eq!(t.blowups, 0);
        let t = principalize_oracle(&[s(&[(&[1, 0, 0], 1), (&[1, 1, 0], 1)]), s(&[(&[0, 1, 0], 1)])], &m, OracleMode::Invariant).unwrap();
        assert_eq!(t.blowups, 1);
        let e = principalize_oracle(&[s(&[(&[1, 0, 0], 1), (&[0, 0, 2], 1)])], &m, OracleMode::Invariant);
        assert!(matches!(e, Err(ToricError::OracleRequired(_))));
    }
}
