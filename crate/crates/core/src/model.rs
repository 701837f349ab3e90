//! Network representation: variables, CPTs, parameter addressing and the
//! proportional co-variation scheme used when a single entry is moved.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Tolerance for CPT row sums at load time; rows within this of 1 are
/// renormalized exactly, rows further out are rejected.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Index of a variable in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Conditional probability table for one child variable.
///
/// `table[row][k]` is the probability of child state `k` given the parent
/// configuration encoded by `row`; the last listed parent cycles fastest.
#[derive(Debug, Clone)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub table: Vec<Vec<f64>>,
}

/// A single CPT entry: Pr(child = child_state | parents = parent_config).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParameterRef {
    pub child: VarId,
    pub child_state: usize,
    /// One state index per declared parent, in declared order.
    pub parent_config: Vec<usize>,
}

/// A discrete Bayesian network over named variables.
///
/// Construction validates shape, acyclicity and row normalization; instances
/// are immutable afterwards, so every reference into one stays valid.
#[derive(Debug, Clone)]
pub struct NetworkDef {
    variables: Vec<Variable>,
    /// cpts[i] is the table for VarId(i).
    cpts: Vec<Cpt>,
}

impl NetworkDef {
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        let n = variables.len();

        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate variable name `{}`",
                    v.name
                )));
            }
            if v.states.is_empty() {
                return Err(Error::InvalidNetwork(format!(
                    "variable `{}` has no states",
                    v.name
                )));
            }
            let mut states = HashSet::new();
            for s in &v.states {
                if !states.insert(s.as_str()) {
                    return Err(Error::InvalidNetwork(format!(
                        "variable `{}` repeats state `{}`",
                        v.name, s
                    )));
                }
            }
        }

        if cpts.len() != n {
            return Err(Error::InvalidNetwork(format!(
                "{} variables but {} CPTs",
                n,
                cpts.len()
            )));
        }
        let mut ordered: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            let VarId(c) = cpt.child;
            if c >= n {
                return Err(Error::InvalidNetwork(format!(
                    "CPT child id {c} out of range"
                )));
            }
            if ordered[c].is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "variable `{}` has more than one CPT",
                    variables[c].name
                )));
            }
            ordered[c] = Some(cpt);
        }
        let mut cpts: Vec<Cpt> = ordered.into_iter().map(|c| c.unwrap()).collect();

        for cpt in &cpts {
            let child = &variables[cpt.child.0];
            let mut seen = HashSet::new();
            for &p in &cpt.parents {
                if p.0 >= n {
                    return Err(Error::InvalidNetwork(format!(
                        "parent id {} of `{}` out of range",
                        p.0, child.name
                    )));
                }
                if p == cpt.child {
                    return Err(Error::InvalidNetwork(format!(
                        "variable `{}` lists itself as a parent",
                        child.name
                    )));
                }
                if !seen.insert(p) {
                    return Err(Error::InvalidNetwork(format!(
                        "variable `{}` repeats parent `{}`",
                        child.name, variables[p.0].name
                    )));
                }
            }
        }

        // Kahn's algorithm over parent -> child edges.
        let mut indegree: Vec<usize> = cpts.iter().map(|c| c.parents.len()).collect();
        let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cpt in &cpts {
            for &p in &cpt.parents {
                children_of[p.0].push(cpt.child.0);
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(v) = queue.pop() {
            visited += 1;
            for &c in &children_of[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if visited != n {
            return Err(Error::InvalidNetwork("graph has a directed cycle".into()));
        }

        for cpt in &mut cpts {
            let child = &variables[cpt.child.0];
            let rows: usize = cpt
                .parents
                .iter()
                .map(|p| variables[p.0].cardinality())
                .product();
            if cpt.table.len() != rows {
                return Err(Error::InvalidNetwork(format!(
                    "CPT of `{}` has {} rows, expected {}",
                    child.name,
                    cpt.table.len(),
                    rows
                )));
            }
            for (r, row) in cpt.table.iter_mut().enumerate() {
                if row.len() != child.cardinality() {
                    return Err(Error::InvalidNetwork(format!(
                        "CPT of `{}` row {} has {} entries, expected {}",
                        child.name,
                        r,
                        row.len(),
                        child.cardinality()
                    )));
                }
                let mut sum = 0.0;
                for &v in row.iter() {
                    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidNetwork(format!(
                            "CPT of `{}` row {} has entry {} outside [0, 1]",
                            child.name, r, v
                        )));
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::InvalidNetwork(format!(
                        "CPT of `{}` row {} sums to {}, expected 1",
                        child.name, r, sum
                    )));
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }

        Ok(NetworkDef { variables, cpts })
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn cpt(&self, child: VarId) -> &Cpt {
        &self.cpts[child.0]
    }

    pub fn find_var(&self, name: &str) -> Result<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Row index for a parent configuration; the last parent cycles fastest.
    pub fn row_index(&self, child: VarId, parent_config: &[usize]) -> usize {
        let cpt = self.cpt(child);
        debug_assert_eq!(parent_config.len(), cpt.parents.len());
        let mut row = 0;
        for (&p, &state) in cpt.parents.iter().zip(parent_config) {
            row = row * self.var(p).cardinality() + state;
        }
        row
    }

    /// Inverse of `row_index`.
    pub fn decode_row(&self, child: VarId, mut row: usize) -> Vec<usize> {
        let cpt = self.cpt(child);
        let mut config = vec![0; cpt.parents.len()];
        for (slot, &p) in config.iter_mut().zip(&cpt.parents).rev() {
            let card = self.var(p).cardinality();
            *slot = row % card;
            row /= card;
        }
        config
    }

    pub fn validate_parameter(&self, p: &ParameterRef) -> Result<()> {
        if p.child.0 >= self.n_vars() {
            return Err(Error::InvalidArgument(format!(
                "parameter child id {} out of range",
                p.child.0
            )));
        }
        let cpt = self.cpt(p.child);
        if p.child_state >= self.var(p.child).cardinality() {
            return Err(Error::UnknownState {
                var: self.var(p.child).name.clone(),
                state: format!("#{}", p.child_state),
            });
        }
        if p.parent_config.len() != cpt.parents.len() {
            return Err(Error::IncompleteAssignment(self.var(p.child).name.clone()));
        }
        for (&parent, &state) in cpt.parents.iter().zip(&p.parent_config) {
            if state >= self.var(parent).cardinality() {
                return Err(Error::UnknownState {
                    var: self.var(parent).name.clone(),
                    state: format!("#{state}"),
                });
            }
        }
        Ok(())
    }

    /// Current value of a CPT entry.
    pub fn entry(&self, p: &ParameterRef) -> f64 {
        let row = self.row_index(p.child, &p.parent_config);
        self.cpts[p.child.0].table[row][p.child_state]
    }

    /// Every CPT entry of the network as an addressable parameter, in
    /// declaration order: variables, then rows, then child states.
    pub fn enumerate_parameters(&self) -> Vec<ParameterRef> {
        let mut out = Vec::new();
        for cpt in &self.cpts {
            for row in 0..cpt.table.len() {
                let config = self.decode_row(cpt.child, row);
                for state in 0..self.var(cpt.child).cardinality() {
                    out.push(ParameterRef {
                        child: cpt.child,
                        child_state: state,
                        parent_config: config.clone(),
                    });
                }
            }
        }
        out
    }

    /// Returns a copy with parameter `p` set to `x` and its siblings in the
    /// same row scaled proportionally, so the row still sums to one.
    ///
    /// When the entry currently holds the whole mass of its row, proportional
    /// scaling is undefined and the remainder is spread uniformly instead.
    pub fn covary(&self, p: &ParameterRef, x: f64) -> Result<NetworkDef> {
        self.validate_parameter(p)?;
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(Error::ValueOutOfRange(x));
        }
        let mut out = self.clone();
        let row_idx = self.row_index(p.child, &p.parent_config);
        let row = &mut out.cpts[p.child.0].table[row_idx];
        let x0 = row[p.child_state];
        if x == x0 {
            return Ok(out);
        }
        if x0 == 1.0 {
            // Row is a point mass on this state; spread the freed mass evenly.
            let k = row.len() - 1;
            if k == 0 {
                return Err(Error::ValueOutOfRange(x));
            }
            let share = (1.0 - x) / k as f64;
            for v in row.iter_mut() {
                *v = share;
            }
        } else {
            for v in row.iter_mut() {
                *v = *v * (1.0 - x) / (1.0 - x0);
            }
        }
        row[p.child_state] = x;
        Ok(out)
    }

    /// Canonical `Child=state|Parent=state,...` rendering of a parameter.
    pub fn parameter_string(&self, p: &ParameterRef) -> String {
        let cpt = self.cpt(p.child);
        let child = self.var(p.child);
        let parents = cpt
            .parents
            .iter()
            .zip(&p.parent_config)
            .map(|(&parent, &state)| {
                let v = self.var(parent);
                format!("{}={}", v.name, v.states[state])
            })
            .collect::<Vec<_>>()
            .join(",");
        format!("{}={}|{}", child.name, child.states[p.child_state], parents)
    }

    pub fn evidence_string(&self, e: &Evidence) -> String {
        e.iter()
            .map(|(var, state)| {
                let v = self.var(var);
                format!("{}={}", v.name, v.states[state])
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// One variable pinned to one of its states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarState {
    pub var: VarId,
    pub state: usize,
}

/// A partial assignment of states to distinct variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = VarState>,
    {
        let mut e = Evidence::new();
        for vs in pairs {
            e.insert(vs)?;
        }
        Ok(e)
    }

    pub fn insert(&mut self, vs: VarState) -> Result<()> {
        if self.assignments.insert(vs.var, vs.state).is_some() {
            return Err(Error::DuplicateAssignment(format!("#{}", vs.var.0)));
        }
        Ok(())
    }

    /// Copy of this assignment extended by one more variable.
    pub fn with(&self, vs: VarState) -> Result<Self> {
        let mut e = self.clone();
        e.insert(vs)?;
        Ok(e)
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.assignments.contains_key(&var)
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.assignments.iter().map(|(&v, &s)| (v, s))
    }
}

/// A posterior query Pr(target | evidence).
#[derive(Debug, Clone)]
pub struct Query {
    pub target: VarState,
    pub evidence: Evidence,
}

impl Query {
    pub fn new(target: VarState, evidence: Evidence) -> Result<Self> {
        if evidence.contains(target.var) {
            return Err(Error::DuplicateAssignment(format!("#{}", target.var.0)));
        }
        Ok(Query { target, evidence })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    variables: Vec<VariableDoc>,
    cpts: Vec<CptDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    states: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CptDoc {
    child: String,
    parents: Vec<String>,
    table: Vec<Vec<f64>>,
}

/// Parses the JSON network format and validates it.
pub fn load_network(text: &str) -> Result<NetworkDef> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let variables: Vec<Variable> = doc
        .variables
        .into_iter()
        .map(|v| Variable {
            name: v.name,
            states: v.states,
        })
        .collect();
    let name_to_id: HashMap<&str, VarId> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), VarId(i)))
        .collect();
    let lookup = |name: &str| -> Result<VarId> {
        name_to_id
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    };
    let mut cpts = Vec::with_capacity(doc.cpts.len());
    for c in doc.cpts {
        let child = lookup(&c.child)?;
        let parents = c
            .parents
            .iter()
            .map(|p| lookup(p))
            .collect::<Result<Vec<_>>>()?;
        cpts.push(Cpt {
            child,
            parents,
            table: c.table,
        });
    }
    NetworkDef::new(variables, cpts)
}

/// Parses `Var=state` against the network's declarations.
pub fn parse_state_ref(net: &NetworkDef, text: &str) -> Result<VarState> {
    let (var, state) = text.split_once('=').ok_or_else(|| Error::BadReference {
        text: text.to_string(),
        reason: "expected `Var=state`".into(),
    })?;
    let var = var.trim();
    let state = state.trim();
    let id = net.find_var(var)?;
    let idx = net
        .var(id)
        .state_index(state)
        .ok_or_else(|| Error::UnknownState {
            var: var.to_string(),
            state: state.to_string(),
        })?;
    Ok(VarState {
        var: id,
        state: idx,
    })
}

/// Parses a comma-separated list of `Var=state` pairs; empty text means no
/// evidence.
pub fn parse_evidence(net: &NetworkDef, text: &str) -> Result<Evidence> {
    let mut e = Evidence::new();
    if text.trim().is_empty() {
        return Ok(e);
    }
    for piece in text.split(',') {
        let vs = parse_state_ref(net, piece)?;
        if e.contains(vs.var) {
            return Err(Error::DuplicateAssignment(net.var(vs.var).name.clone()));
        }
        e.insert(vs)?;
    }
    Ok(e)
}

/// Parses `Child=state|Parent=state,...`; a root parameter ends in a bare `|`.
///
/// The parent side must assign exactly the child's declared parents, in any
/// order.
pub fn parse_parameter(net: &NetworkDef, text: &str) -> Result<ParameterRef> {
    let (head, tail) = text.split_once('|').ok_or_else(|| Error::BadReference {
        text: text.to_string(),
        reason: "expected `Child=state|parents`".into(),
    })?;
    let child = parse_state_ref(net, head)?;
    let cpt = net.cpt(child.var);

    let mut assigned: BTreeMap<VarId, usize> = BTreeMap::new();
    if !tail.trim().is_empty() {
        for piece in tail.split(',') {
            let vs = parse_state_ref(net, piece)?;
            if !cpt.parents.contains(&vs.var) {
                return Err(Error::BadReference {
                    text: text.to_string(),
                    reason: format!(
                        "`{}` is not a parent of `{}`",
                        net.var(vs.var).name,
                        net.var(child.var).name
                    ),
                });
            }
            if assigned.insert(vs.var, vs.state).is_some() {
                return Err(Error::DuplicateAssignment(net.var(vs.var).name.clone()));
            }
        }
    }
    let parent_config = cpt
        .parents
        .iter()
        .map(|&p| {
            assigned
                .remove(&p)
                .ok_or_else(|| Error::IncompleteAssignment(net.var(p).name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParameterRef {
        child: child.var,
        child_state: child.state,
        parent_config,
    })
}
