use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::SpectralError;
use crate::map::apply_u64;
use crate::params::CollatzParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureBudget {
    /// Map applications allowed per window orbit.
    pub max_steps: u64,
    pub max_value: u64,
}

impl Default for ClosureBudget {
    fn default() -> Self {
        Self { max_steps: 100_000, max_value: u64::MAX / 4 }
    }
}

/// Position of a frequency relative to the cycle its orbit falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbitMeta {
    /// Steps until the orbit first lands on the cycle (0 on the cycle).
    pub ell: usize,
    pub cycle_length: usize,
    /// Index into [`FlowClosure::cycles`].
    pub cycle_index: usize,
    /// Position in the cycle of `C^ell(n)`.
    pub cycle_phase: usize,
}

/// The window together with every frequency its forward orbits visit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowClosure {
    pub params: CollatzParams,
    pub window: BTreeSet<u64>,
    pub closure: BTreeSet<u64>,
    pub edges: BTreeMap<u64, u64>,
    pub orbit_meta: BTreeMap<u64, OrbitMeta>,
    /// Each cycle starts at its smallest element; `cycles[i][p+1] = C(cycles[i][p])`.
    pub cycles: Vec<Vec<u64>>,
}

impl FlowClosure {
    pub fn len(&self) -> usize {
        self.closure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closure.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.closure.contains(&n)
    }

    /// `n, C(n), ..., C^ell(n)`, ending on the cycle.
    pub fn path_to_cycle(&self, n: u64) -> Result<Vec<u64>, SpectralError> {
        let meta = self.orbit_meta.get(&n).ok_or(SpectralError::MissingOrbitMeta(n))?;
        let mut path = Vec::with_capacity(meta.ell + 1);
        let mut x = n;
        path.push(x);
        for _ in 0..meta.ell {
            x = *self.edges.get(&x).ok_or(SpectralError::NotForwardClosed(x))?;
            path.push(x);
        }
        Ok(path)
    }

    /// Checks `n ∈ closure ⇒ C(n) ∈ closure` and that every edge is the map.
    pub fn check_forward_closed(&self) -> Result<(), SpectralError> {
        for &n in &self.closure {
            let image = apply_u64(self.params, n).ok_or(SpectralError::FrequencyOverflow(n))?;
            if self.edges.get(&n) != Some(&image) || !self.closure.contains(&image) {
                return Err(SpectralError::NotForwardClosed(n));
            }
        }
        Ok(())
    }
}

/// Follows every window orbit until it closes into a cycle.
///
/// Fails with [`SpectralError::BudgetExhausted`] for the first window
/// frequency whose orbit outruns the budget; no partial closure is returned.
pub fn build_flow_closure(
    params: CollatzParams,
    window: impl IntoIterator<Item = u64>,
    budget: ClosureBudget,
) -> Result<FlowClosure, SpectralError> {
    let window: BTreeSet<u64> = window.into_iter().collect();
    if window.is_empty() {
        return Err(SpectralError::EmptyWindow);
    }
    if window.contains(&0) {
        return Err(SpectralError::ZeroFrequency);
    }

    let mut meta: BTreeMap<u64, OrbitMeta> = BTreeMap::new();
    let mut edges: BTreeMap<u64, u64> = BTreeMap::new();
    let mut cycles: Vec<Vec<u64>> = Vec::new();

    for &start in &window {
        if meta.contains_key(&start) {
            continue;
        }
        let mut path: Vec<u64> = Vec::new();
        let mut position: HashMap<u64, usize> = HashMap::new();
        let mut x = start;
        let mut steps = 0u64;
        // Stops on a known frequency or on a repeat inside `path`.
        loop {
            if meta.contains_key(&x) {
                break;
            }
            if let Some(&at) = position.get(&x) {
                let cycle_nodes = &path[at..];
                let min_at = cycle_nodes
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &v)| v)
                    .map(|(i, _)| i)
                    .expect("cycle is nonempty");
                let mut cycle = cycle_nodes[min_at..].to_vec();
                cycle.extend_from_slice(&cycle_nodes[..min_at]);
                let index = cycles.len();
                for (phase, &node) in cycle.iter().enumerate() {
                    meta.insert(
                        node,
                        OrbitMeta { ell: 0, cycle_length: cycle.len(), cycle_index: index, cycle_phase: phase },
                    );
                }
                cycles.push(cycle);
                path.truncate(at);
                break;
            }
            if steps >= budget.max_steps || x > budget.max_value {
                return Err(SpectralError::BudgetExhausted { frequency: start });
            }
            let next = apply_u64(params, x).ok_or(SpectralError::BudgetExhausted { frequency: start })?;
            position.insert(x, path.len());
            path.push(x);
            edges.insert(x, next);
            x = next;
            steps += 1;
        }

        // Tail nodes inherit the cycle and phase of their successor.
        for &node in path.iter().rev() {
            let next = edges[&node];
            let succ = meta[&next];
            meta.entry(node).or_insert(OrbitMeta { ell: succ.ell + 1, ..succ });
        }
    }

    // Cycle edges were inserted during the walk; complete them anyway.
    for cycle in &cycles {
        for (i, &node) in cycle.iter().enumerate() {
            edges.insert(node, cycle[(i + 1) % cycle.len()]);
        }
    }

    let closure: BTreeSet<u64> = meta.keys().copied().collect();
    Ok(FlowClosure { params, window, closure, edges, orbit_meta: meta, cycles })
}
