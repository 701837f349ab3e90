//! Exact inference by variable elimination, and the linear coefficients of
//! network probabilities seen as functions of a single co-varied parameter.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Evidence, NetworkDef, ParameterRef, Query, VarId};

/// Absolute tolerance of the midpoint linearity check in `linear_coeffs`.
pub const LINEARITY_TOL: f64 = 1e-9;

/// A numerator or denominator is treated as constant in the parameter when
/// its slope is below this, relative to the intercept scale.
pub const LINEAR_EPS: f64 = 1e-12;

/// Half-width of the band around [0, 1] inside which an asymptote disables
/// the hyperbolic analysis.
pub const S_BAND_TOL: f64 = 1e-9;

/// A non-negative function over the joint states of a sorted variable scope.
/// Values are laid out with the last scope variable cycling fastest.
#[derive(Debug, Clone)]
struct Factor {
    scope: Vec<VarId>,
    card: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn scalar(v: f64) -> Self {
        Factor {
            scope: Vec::new(),
            card: Vec::new(),
            values: vec![v],
        }
    }

    fn from_cpt(net: &NetworkDef, child: VarId) -> Self {
        let cpt = net.cpt(child);
        let mut scope: Vec<VarId> = cpt.parents.clone();
        scope.push(child);
        scope.sort();
        let card: Vec<usize> = scope.iter().map(|&v| net.var(v).cardinality()).collect();
        let n = card.iter().product();
        let mut values = vec![0.0; n];
        let mut assignment = vec![0usize; scope.len()];
        for (i, value) in values.iter_mut().enumerate() {
            decode(i, &card, &mut assignment);
            let child_state = assignment[scope.iter().position(|&v| v == child).unwrap()];
            let config: Vec<usize> = cpt
                .parents
                .iter()
                .map(|p| assignment[scope.iter().position(|v| v == p).unwrap()])
                .collect();
            let row = net.row_index(child, &config);
            *value = cpt.table[row][child_state];
        }
        Factor {
            scope,
            card,
            values,
        }
    }

    /// Drops every scope variable fixed by the evidence, keeping only the
    /// slice consistent with it.
    fn reduce(&self, e: &Evidence) -> Factor {
        if !self.scope.iter().any(|&v| e.contains(v)) {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.scope.len())
            .filter(|&i| !e.contains(self.scope[i]))
            .collect();
        let scope: Vec<VarId> = keep.iter().map(|&i| self.scope[i]).collect();
        let card: Vec<usize> = keep.iter().map(|&i| self.card[i]).collect();
        let mut values = vec![0.0; card.iter().product()];
        let mut sub = vec![0usize; scope.len()];
        let mut full = vec![0usize; self.scope.len()];
        for (j, value) in values.iter_mut().enumerate() {
            decode(j, &card, &mut sub);
            for (slot, &v) in full.iter_mut().zip(&self.scope) {
                *slot = match e.get(v) {
                    Some(s) => s,
                    None => sub[scope.iter().position(|&w| w == v).unwrap()],
                };
            }
            *value = self.values[encode(&full, &self.card)];
        }
        Factor {
            scope,
            card,
            values,
        }
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        for &v in &other.scope {
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
        scope.sort();
        let card: Vec<usize> = scope
            .iter()
            .map(|v| {
                self.scope
                    .iter()
                    .position(|w| w == v)
                    .map(|i| self.card[i])
                    .unwrap_or_else(|| {
                        other.card[other.scope.iter().position(|w| w == v).unwrap()]
                    })
            })
            .collect();
        let left: Vec<usize> = self
            .scope
            .iter()
            .map(|v| scope.iter().position(|w| w == v).unwrap())
            .collect();
        let right: Vec<usize> = other
            .scope
            .iter()
            .map(|v| scope.iter().position(|w| w == v).unwrap())
            .collect();
        let mut values = vec![0.0; card.iter().product()];
        let mut assignment = vec![0usize; scope.len()];
        for (i, value) in values.iter_mut().enumerate() {
            decode(i, &card, &mut assignment);
            let a = self
                .values
                .get(encode_mapped(&assignment, &left, &self.card))
                .copied()
                .unwrap_or(0.0);
            let b = other
                .values
                .get(encode_mapped(&assignment, &right, &other.card))
                .copied()
                .unwrap_or(0.0);
            *value = a * b;
        }
        Factor {
            scope,
            card,
            values,
        }
    }

    fn sum_out(&self, var: VarId) -> Factor {
        let pos = match self.scope.iter().position(|&v| v == var) {
            Some(p) => p,
            None => return self.clone(),
        };
        let scope: Vec<VarId> = self
            .scope
            .iter()
            .copied()
            .filter(|&v| v != var)
            .collect();
        let card: Vec<usize> = self
            .card
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pos)
            .map(|(_, &c)| c)
            .collect();
        let mut values = vec![0.0; card.iter().product::<usize>().max(1)];
        let mut assignment = vec![0usize; self.scope.len()];
        for (i, &v) in self.values.iter().enumerate() {
            decode(i, &self.card, &mut assignment);
            let mut reduced = Vec::with_capacity(assignment.len() - 1);
            reduced.extend(
                assignment
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != pos)
                    .map(|(_, &s)| s),
            );
            values[encode(&reduced, &card)] += v;
        }
        Factor {
            scope,
            card,
            values,
        }
    }
}

fn decode(mut index: usize, card: &[usize], out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(card).rev() {
        *slot = index % c;
        index /= c;
    }
}

fn encode(assignment: &[usize], card: &[usize]) -> usize {
    let mut index = 0;
    for (&s, &c) in assignment.iter().zip(card) {
        index = index * c + s;
    }
    index
}

fn encode_mapped(assignment: &[usize], positions: &[usize], card: &[usize]) -> usize {
    let mut index = 0;
    for (&p, &c) in positions.iter().zip(card) {
        index = index * c + assignment[p];
    }
    index
}

/// Elimination order by greedy min-fill over the moral graph of the factors;
/// ties break on the smaller variable id.
fn min_fill_order(factors: &[Factor], to_eliminate: &BTreeSet<VarId>) -> Vec<VarId> {
    let mut adjacency: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for &v in to_eliminate {
        adjacency.entry(v).or_default();
    }
    let connect = |a: VarId, b: VarId, adj: &mut BTreeMap<VarId, BTreeSet<VarId>>| {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    };
    for f in factors {
        for (i, &a) in f.scope.iter().enumerate() {
            for &b in &f.scope[i + 1..] {
                connect(a, b, &mut adjacency);
            }
        }
    }
    let mut remaining: BTreeSet<VarId> = to_eliminate.clone();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let best = remaining
            .iter()
            .map(|&v| {
                let neighbors: Vec<VarId> = adjacency
                    .get(&v)
                    .map(|ns| ns.iter().copied().filter(|n| remaining.contains(n)).collect())
                    .unwrap_or_default();
                let mut fill = 0usize;
                for (i, &a) in neighbors.iter().enumerate() {
                    for &b in &neighbors[i + 1..] {
                        if !adjacency[&a].contains(&b) {
                            fill += 1;
                        }
                    }
                }
                (fill, v)
            })
            .min()
            .map(|(_, v)| v)
            .unwrap();
        let neighbors: Vec<VarId> = adjacency
            .get(&best)
            .map(|ns| ns.iter().copied().filter(|n| remaining.contains(n)).collect())
            .unwrap_or_default();
        for (i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[i + 1..] {
                connect(a, b, &mut adjacency);
            }
        }
        remaining.remove(&best);
        order.push(best);
    }
    order
}

/// Probability of one full assignment: the product of one CPT entry per
/// variable.
pub fn joint_prob(net: &NetworkDef, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != net.n_vars() {
        let missing = net.var(VarId(assignment.len().min(net.n_vars() - 1)));
        return Err(Error::IncompleteAssignment(missing.name.clone()));
    }
    let mut prob = 1.0;
    for (i, &state) in assignment.iter().enumerate() {
        let id = VarId(i);
        if state >= net.var(id).cardinality() {
            return Err(Error::UnknownState {
                var: net.var(id).name.clone(),
                state: format!("#{state}"),
            });
        }
        let cpt = net.cpt(id);
        let config: Vec<usize> = cpt.parents.iter().map(|p| assignment[p.0]).collect();
        prob *= cpt.table[net.row_index(id, &config)][state];
    }
    Ok(prob)
}

/// Pr(partial assignment), by variable elimination.
pub fn marginal_prob(net: &NetworkDef, e: &Evidence) -> Result<f64> {
    for (var, state) in e.iter() {
        if var.0 >= net.n_vars() || state >= net.var(var).cardinality() {
            return Err(Error::UnknownState {
                var: format!("#{}", var.0),
                state: format!("#{state}"),
            });
        }
    }
    let mut factors: Vec<Factor> = (0..net.n_vars())
        .map(|i| Factor::from_cpt(net, VarId(i)).reduce(e))
        .collect();
    let hidden: BTreeSet<VarId> = (0..net.n_vars())
        .map(VarId)
        .filter(|v| !e.contains(*v))
        .collect();
    for var in min_fill_order(&factors, &hidden) {
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors
            .into_iter()
            .partition(|f| f.scope.contains(&var));
        factors = rest;
        let mut product = Factor::scalar(1.0);
        for f in &touching {
            product = product.product(f);
        }
        factors.push(product.sum_out(var));
    }
    Ok(factors
        .iter()
        .map(|f| {
            debug_assert!(f.scope.is_empty());
            f.values[0]
        })
        .product())
}

/// Pr(target | evidence). Errors when the evidence has probability zero.
pub fn posterior(net: &NetworkDef, q: &Query) -> Result<f64> {
    let pe = marginal_prob(net, &q.evidence)?;
    if pe <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    let pae = marginal_prob(net, &q.evidence.with(q.target)?)?;
    Ok(pae / pe)
}

/// Which probability a coefficient pair describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffRole {
    /// Pr(evidence)(x), the denominator of the posterior.
    EvidenceDenominator,
    /// Pr(target, evidence)(x), the numerator.
    JointNumerator,
}

/// Coefficients of Pr(event)(x) = slope * x + intercept under proportional
/// co-variation of one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinCoeffs {
    pub slope: f64,
    pub intercept: f64,
    pub role: CoeffRole,
}

/// Fits Pr(event) as an affine function of the parameter by evaluating at the
/// endpoints, and rejects the fit if the midpoint disagrees.
pub fn linear_coeffs(
    net: &NetworkDef,
    p: &ParameterRef,
    event: &Evidence,
    role: CoeffRole,
) -> Result<LinCoeffs> {
    let at = |x: f64| -> Result<f64> { marginal_prob(&net.covary(p, x)?, event) };
    let y0 = at(0.0)?;
    let y1 = at(1.0)?;
    let slope = y1 - y0;
    let mid = at(0.5)?;
    let predicted = 0.5 * slope + y0;
    if (mid - predicted).abs() > LINEARITY_TOL {
        return Err(Error::NotLinear {
            quantity: format!("Pr({})", net.evidence_string(event)),
            detail: format!(
                "midpoint {} differs from affine prediction {}",
                mid, predicted
            ),
        });
    }
    Ok(LinCoeffs {
        slope,
        intercept: y0,
        role,
    })
}

/// Coefficients of the sensitivity quotient
/// Pr(target | evidence)(x) = (c1 x + c2) / (c3 x + c4).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl SensConstants {
    /// Value of the quotient at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        (self.c1 * x + self.c2) / (self.c3 * x + self.c4)
    }
}

/// Both coefficient pairs of the posterior quotient for one parameter.
///
/// The result reproduces the unmodified network at the parameter's current
/// value; that anchor is checked and a mismatch reported as an error.
pub fn sensitivity_constants(
    net: &NetworkDef,
    p: &ParameterRef,
    q: &Query,
) -> Result<SensConstants> {
    let joint = q.evidence.with(q.target)?;
    let num = linear_coeffs(net, p, &joint, CoeffRole::JointNumerator)?;
    let den = linear_coeffs(net, p, &q.evidence, CoeffRole::EvidenceDenominator)?;
    let c = SensConstants {
        c1: num.slope,
        c2: num.intercept,
        c3: den.slope,
        c4: den.intercept,
    };
    let x0 = net.entry(p);
    let direct = posterior(net, q)?;
    if (c.eval(x0) - direct).abs() > LINEARITY_TOL {
        return Err(Error::NotLinear {
            quantity: format!("Pr({} | e)", net.var(q.target.var).name),
            detail: format!(
                "quotient value {} at x0 = {} differs from posterior {}",
                c.eval(x0),
                x0,
                direct
            ),
        });
    }
    Ok(c)
}

/// Asymptote position of one parameter under given evidence, or the marker
/// that Pr(evidence) does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SValue {
    S(f64),
    Linear,
}

/// True when an asymptote sits too close to (or inside) the unit window for
/// the hyperbolic bounds to apply.
pub fn s_in_unit_band(s: f64) -> bool {
    (-S_BAND_TOL..=1.0 + S_BAND_TOL).contains(&s)
}

/// The s-value of every parameter of the network under fixed evidence.
///
/// Needs only the denominator coefficients, so no target is involved; the
/// query's target changes t and r of each sensitivity function but never s.
pub fn s_for_all_parameters(
    net: &NetworkDef,
    e: &Evidence,
) -> Result<Vec<(ParameterRef, SValue)>> {
    let pe = marginal_prob(net, e)?;
    if pe <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    net.enumerate_parameters()
        .into_iter()
        .map(|p| {
            let den = linear_coeffs(net, &p, e, CoeffRole::EvidenceDenominator)?;
            let s = if den.slope.abs() < LINEAR_EPS * den.intercept.abs() {
                SValue::Linear
            } else {
                SValue::S(-den.intercept / den.slope)
            };
            Ok((p, s))
        })
        .collect()
}
