//! Two-layer causal DAG: an initial-state layer for t = 1 and a time-homogeneous
//! transition layer whose parents are split into same-time and previous-time
//! sets. Queries run on the graph unrolled lazily up to the outcome time.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared parents of one variable.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VariableEdges {
    pub name: String,
    #[serde(default)]
    pub initial: Vec<String>,
    #[serde(default)]
    pub curr: Vec<String>,
    #[serde(default)]
    pub prev: Vec<String>,
}

impl VariableEdges {
    fn new(name: &str, initial: &[&str], curr: &[&str], prev: &[&str]) -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            name: name.to_string(),
            initial: own(initial),
            curr: own(curr),
            prev: own(prev),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub variables: Vec<VariableEdges>,
}

impl EdgeSpec {
    /// The income-simulator edge list exactly as published: initial-state
    /// causes and transition causes for all 13 variables.
    pub fn reference() -> Self {
        const DEMO: [&str; 4] = ["age", "race", "sex", "native-country"];
        let v = VariableEdges::new;
        Self {
            variables: vec![
                v("age", &[], &[], &["age"]),
                v("sex", &[], &[], &["sex"]),
                v("race", &[], &[], &["race"]),
                v("native-country", &[], &[], &["native-country"]),
                v("education", &DEMO, &[], &["education", "studies"]),
                v(
                    "workclass",
                    &["age", "education", "race", "sex", "native-country"],
                    &[],
                    &["workclass"],
                ),
                v(
                    "marital-status",
                    &["age", "education", "workclass", "race", "native-country"],
                    &["age"],
                    &["marital-status", "studies"],
                ),
                v(
                    "occupation",
                    &["age", "education", "workclass", "race", "sex", "native-country"],
                    &["age", "education", "workclass", "race", "sex", "native-country"],
                    &["occupation", "studies"],
                ),
                v(
                    "relationship",
                    &["age", "education", "workclass", "marital-status", "race", "sex"],
                    &["age", "education", "workclass", "marital-status", "race", "sex"],
                    &["relationship"],
                ),
                v(
                    "hours-per-week",
                    &[
                        "age", "education", "workclass", "marital-status", "occupation", "race",
                        "relationship", "sex",
                    ],
                    &[
                        "age", "education", "workclass", "marital-status", "occupation", "race",
                        "relationship", "sex",
                    ],
                    &["hours-per-week"],
                ),
                v(
                    "capital-net",
                    &[
                        "age", "education", "workclass", "occupation", "marital-status", "race",
                        "relationship", "sex",
                    ],
                    &[
                        "age", "education", "workclass", "occupation", "marital-status", "race",
                        "relationship", "sex",
                    ],
                    &["capital-net"],
                ),
                v(
                    "studies",
                    &["age", "sex", "education", "relationship"],
                    &["age", "sex", "education", "relationship"],
                    &["income", "studies"],
                ),
                v(
                    "income",
                    &[
                        "age", "education", "workclass", "occupation", "marital-status", "race",
                        "sex", "hours-per-week", "capital-net", "studies",
                    ],
                    &[
                        "age", "education", "workclass", "occupation", "marital-status",
                        "hours-per-week", "race", "sex", "capital-net", "studies",
                    ],
                    &["income", "studies"],
                ),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Initial,
    Transition,
}

/// A variable at a time step (1-based) in the unrolled graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimedVar {
    pub t: usize,
    pub variable: String,
}

impl TimedVar {
    pub fn new(variable: impl Into<String>, t: usize) -> Self {
        Self {
            t,
            variable: variable.into(),
        }
    }
}

impl std::fmt::Display for TimedVar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}", self.variable, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentMode {
    /// Direct causes of the treatment node.
    Minimal,
    /// Every non-descendant node at or before the treatment time.
    FullPretreatment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustmentSet {
    pub treatment: TimedVar,
    pub outcome: TimedVar,
    pub members: BTreeSet<TimedVar>,
}

/// Validated two-layer DAG. Parent lists are stored as indices into
/// `variables`, in declaration order of the spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScmGraph {
    variables: Vec<String>,
    initial_parents: Vec<Vec<usize>>,
    trans_parents_curr: Vec<Vec<usize>>,
    trans_parents_prev: Vec<Vec<usize>>,
}

pub fn build_graph(spec: &EdgeSpec) -> Result<ScmGraph> {
    let variables: Vec<String> = spec.variables.iter().map(|v| v.name.clone()).collect();
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    if index.len() != variables.len() {
        return Err(Error::config("duplicate variable in edge specification"));
    }
    let resolve = |names: &[String]| -> Result<Vec<usize>> {
        let mut out: Vec<usize> = Vec::with_capacity(names.len());
        for n in names {
            let i = *index
                .get(n.as_str())
                .ok_or_else(|| Error::UnknownVariable(n.clone()))?;
            if !out.contains(&i) {
                out.push(i);
            }
        }
        Ok(out)
    };
    let mut initial_parents = Vec::new();
    let mut trans_parents_curr = Vec::new();
    let mut trans_parents_prev = Vec::new();
    for v in &spec.variables {
        initial_parents.push(resolve(&v.initial)?);
        trans_parents_curr.push(resolve(&v.curr)?);
        trans_parents_prev.push(resolve(&v.prev)?);
    }
    let g = ScmGraph {
        variables,
        initial_parents,
        trans_parents_curr,
        trans_parents_prev,
    };
    for parents in [&g.initial_parents, &g.trans_parents_curr] {
        if let Some(cycle) = find_cycle(parents) {
            return Err(Error::Cycle(
                cycle.into_iter().map(|i| g.variables[i].clone()).collect(),
            ));
        }
    }
    Ok(g)
}

/// Returns one cycle (as a closed walk, first node repeated at the end) if the
/// parent relation has any.
fn find_cycle(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(v: usize, parents: &[Vec<usize>], mark: &mut [Mark], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        mark[v] = Mark::Active;
        stack.push(v);
        for &p in &parents[v] {
            match mark[p] {
                Mark::Active => {
                    let start = stack.iter().position(|&s| s == p).expect("on stack");
                    let mut cyc: Vec<usize> = stack[start..].to_vec();
                    cyc.reverse();
                    cyc.insert(0, *cyc.last().expect("nonempty"));
                    // parent -> child direction
                    return Some(cyc);
                }
                Mark::New => {
                    if let Some(c) = visit(p, parents, mark, stack) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        mark[v] = Mark::Done;
        None
    }
    let mut mark = vec![Mark::New; parents.len()];
    let mut stack = Vec::new();
    for v in 0..parents.len() {
        if mark[v] == Mark::New {
            if let Some(c) = visit(v, parents, &mut mark, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

impl ScmGraph {
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn initial_parents(&self, v: usize) -> &[usize] {
        &self.initial_parents[v]
    }

    pub fn trans_parents_curr(&self, v: usize) -> &[usize] {
        &self.trans_parents_curr[v]
    }

    pub fn trans_parents_prev(&self, v: usize) -> &[usize] {
        &self.trans_parents_prev[v]
    }

    pub fn names(&self, idx: &[usize]) -> Vec<&str> {
        idx.iter().map(|&i| self.variables[i].as_str()).collect()
    }

    /// Kahn's algorithm over the same-time edges of a layer; ties go to the
    /// earliest-declared variable.
    pub fn topological_order(&self, layer: Layer) -> Vec<usize> {
        let parents = match layer {
            Layer::Initial => &self.initial_parents,
            Layer::Transition => &self.trans_parents_curr,
        };
        let n = self.variables.len();
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), n, "validated graphs are acyclic");
        order
    }

    pub fn topological_names(&self, layer: Layer) -> Vec<String> {
        self.topological_order(layer)
            .into_iter()
            .map(|i| self.variables[i].clone())
            .collect()
    }

    /// The DAG unrolled over time steps 1..=horizon.
    pub fn unroll(&self, horizon: usize) -> Unrolled {
        let v = self.variables.len();
        let n = v * horizon;
        let mut parents = vec![Vec::new(); n];
        for t in 1..=horizon {
            for var in 0..v {
                let id = (t - 1) * v + var;
                if t == 1 {
                    parents[id].extend(self.initial_parents[var].iter().copied());
                } else {
                    parents[id].extend(self.trans_parents_curr[var].iter().map(|&p| (t - 1) * v + p));
                    parents[id].extend(self.trans_parents_prev[var].iter().map(|&p| (t - 2) * v + p));
                }
            }
        }
        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        Unrolled {
            n_vars: v,
            horizon,
            parents,
            children,
        }
    }

    fn node(&self, tv: &TimedVar) -> Result<(usize, usize)> {
        if tv.t == 0 {
            return Err(Error::config(format!("time index of {tv} must be >= 1")));
        }
        Ok((self.index_of(&tv.variable)?, tv.t))
    }

    /// Adjustment set for the effect of `treatment` on `outcome`, checked
    /// against the backdoor criterion on the unrolled graph.
    pub fn adjustment_set(
        &self,
        treatment: &TimedVar,
        outcome: &TimedVar,
        mode: AdjustmentMode,
    ) -> Result<AdjustmentSet> {
        let (tv, tt) = self.node(treatment)?;
        let (ov, ot) = self.node(outcome)?;
        if tt >= ot {
            return Err(Error::config(format!(
                "treatment {treatment} must precede outcome {outcome}"
            )));
        }
        let un = self.unroll(ot);
        let x = un.id(tv, tt);
        let members: Vec<usize> = match mode {
            AdjustmentMode::Minimal => un.parents[x].clone(),
            AdjustmentMode::FullPretreatment => {
                let desc = un.descendants(x);
                (0..tt * self.len())
                    .filter(|&id| id != x && !desc.contains(&id))
                    .collect()
            }
        };
        let y = un.id(ov, ot);
        if !un.is_backdoor_set(x, y, &members) {
            return Err(Error::numeric(format!(
                "{mode:?} set for {treatment} -> {outcome} fails the backdoor check"
            )));
        }
        Ok(AdjustmentSet {
            treatment: treatment.clone(),
            outcome: outcome.clone(),
            members: members.into_iter().map(|id| self.timed(&un, id)).collect(),
        })
    }

    /// Whether `set` satisfies the backdoor criterion for treatment → outcome.
    pub fn is_backdoor_set(&self, treatment: &TimedVar, outcome: &TimedVar, set: &[TimedVar]) -> Result<bool> {
        let (tv, tt) = self.node(treatment)?;
        let (ov, ot) = self.node(outcome)?;
        let horizon = set.iter().map(|m| m.t).chain([tt, ot]).max().unwrap_or(1);
        let un = self.unroll(horizon);
        let z = set
            .iter()
            .map(|m| self.node(m).map(|(v, t)| un.id(v, t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(un.is_backdoor_set(un.id(tv, tt), un.id(ov, ot), &z))
    }

    fn timed(&self, un: &Unrolled, id: usize) -> TimedVar {
        let (v, t) = un.split(id);
        TimedVar::new(self.variables[v].clone(), t)
    }

    /// Edge list as CSV: child, parent, layer, lag.
    pub fn write_edge_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["child", "parent", "layer", "lag"])?;
        for (c, name) in self.variables.iter().enumerate() {
            for &p in &self.initial_parents[c] {
                w.write_record([name, &self.variables[p], "initial", "0"])?;
            }
            for &p in &self.trans_parents_curr[c] {
                w.write_record([name, &self.variables[p], "transition", "0"])?;
            }
            for &p in &self.trans_parents_prev[c] {
                w.write_record([name, &self.variables[p], "transition", "1"])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Materialized unrolled DAG. Node id = (t - 1) * n_vars + variable.
#[derive(Debug, Clone)]
pub struct Unrolled {
    n_vars: usize,
    horizon: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Unrolled {
    pub fn id(&self, var: usize, t: usize) -> usize {
        (t - 1) * self.n_vars + var
    }

    pub fn split(&self, id: usize) -> (usize, usize) {
        (id % self.n_vars, id / self.n_vars + 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn descendants(&self, id: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.children[id].iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            if seen.insert(c) {
                queue.extend(self.children[c].iter().copied());
            }
        }
        seen
    }

    /// Nodes reachable from `x` by an active trail given `z` (Bayes-ball).
    /// `skip_out_of` removes that node's outgoing edges, which turns the
    /// reachability into a backdoor-path search.
    fn reachable(&self, x: usize, z: &[usize], skip_out_of: Option<usize>) -> Vec<bool> {
        let n = self.n_nodes();
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }
        // Ancestors of Z (including Z).
        let mut anc = vec![false; n];
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(v) = stack.pop() {
            if !anc[v] {
                anc[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        let children = |v: usize| -> &[usize] {
            if Some(v) == skip_out_of {
                &[]
            } else {
                &self.children[v]
            }
        };
        let parents_of = |v: usize| -> Vec<usize> {
            self.parents[v]
                .iter()
                .copied()
                .filter(|&p| Some(p) != skip_out_of)
                .collect()
        };
        // (node, arrived_from_child)
        let mut visited_up = vec![false; n];
        let mut visited_down = vec![false; n];
        let mut reach = vec![false; n];
        let mut todo: Vec<(usize, bool)> = vec![(x, true)];
        while let Some((v, up)) = todo.pop() {
            let seen = if up { &mut visited_up[v] } else { &mut visited_down[v] };
            if *seen {
                continue;
            }
            *seen = true;
            if !in_z[v] {
                reach[v] = true;
            }
            if up {
                if !in_z[v] {
                    todo.extend(parents_of(v).into_iter().map(|p| (p, true)));
                    todo.extend(children(v).iter().map(|&c| (c, false)));
                }
            } else {
                if !in_z[v] {
                    todo.extend(children(v).iter().map(|&c| (c, false)));
                }
                if anc[v] {
                    todo.extend(parents_of(v).into_iter().map(|p| (p, true)));
                }
            }
        }
        reach
    }

    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> bool {
        !self.reachable(x, z, None)[y]
    }

    /// Backdoor criterion: no member of `z` descends from `x`, and `z` blocks
    /// every path from `x` to `y` that starts with an edge into `x`.
    pub fn is_backdoor_set(&self, x: usize, y: usize, z: &[usize]) -> bool {
        if z.contains(&x) || z.contains(&y) {
            return false;
        }
        let desc = self.descendants(x);
        if z.iter().any(|m| desc.contains(m)) {
            return false;
        }
        !self.reachable(x, z, Some(x))[y]
    }
}
