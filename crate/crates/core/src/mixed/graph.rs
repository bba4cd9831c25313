use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::lang::ConstraintFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentClass {
    PureSymbolic,
    PureNeural,
    Mixed,
}

impl ComponentClass {
    pub fn name(self) -> &'static str {
        match self {
            ComponentClass::PureSymbolic => "pure-symbolic",
            ComponentClass::PureNeural => "pure-neural",
            ComponentClass::Mixed => "mixed",
        }
    }
}

/// Connected set of constraints; indices refer to `ConstraintFile::symbolic`
/// and `ConstraintFile::neural`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub symbolic: Vec<usize>,
    pub neural: Vec<usize>,
    pub vars: BTreeSet<String>,
    pub class: ComponentClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGraph {
    pub components: Vec<Component>,
}

impl ConstraintGraph {
    pub fn of_class(&self, class: ComponentClass) -> impl Iterator<Item = (usize, &Component)> {
        self.components.iter().enumerate().filter(move |(_, c)| c.class == class)
    }
}

/// Bipartite constraint–variable graph split into connected components by
/// breadth-first search, in order of each component's first constraint.
pub fn build_graph(cf: &ConstraintFile) -> ConstraintGraph {
    let ns = cf.symbolic.len();
    let node_vars: Vec<BTreeSet<String>> = cf
        .symbolic
        .iter()
        .map(|c| c.free_vars())
        .chain(cf.neural.iter().map(|n| n.vars()))
        .collect();
    let mut by_var: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, vs) in node_vars.iter().enumerate() {
        for v in vs {
            by_var.entry(v).or_default().push(i);
        }
    }
    let mut seen = vec![false; node_vars.len()];
    let mut components = Vec::new();
    for start in 0..node_vars.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        let mut vars = BTreeSet::new();
        let mut done_vars = BTreeSet::new();
        while let Some(n) = queue.pop_front() {
            members.push(n);
            for v in &node_vars[n] {
                vars.insert(v.clone());
                if !done_vars.insert(v.as_str()) {
                    continue;
                }
                for &m in &by_var[v.as_str()] {
                    if !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        members.sort_unstable();
        let symbolic: Vec<usize> = members.iter().copied().filter(|&m| m < ns).collect();
        let neural: Vec<usize> = members.iter().filter(|&&m| m >= ns).map(|m| m - ns).collect();
        let class = match (symbolic.is_empty(), neural.is_empty()) {
            (false, true) => ComponentClass::PureSymbolic,
            (true, false) => ComponentClass::PureNeural,
            _ => ComponentClass::Mixed,
        };
        components.push(Component { symbolic, neural, vars, class });
    }
    ConstraintGraph { components }
}
