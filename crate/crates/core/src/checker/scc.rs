//! Iterative Tarjan over an implicit subgraph.
//!
//! The graph is given as a vertex count, a vertex filter and a successor
//! callback, so callers can restrict the transition graph without copying it.
//! An explicit stack replaces recursion; instance size is bounded by memory,
//! not by the thread's stack.

const UNVISITED: u32 = u32::MAX;

/// Component id of every vertex (`u32::MAX` for vertices outside the
/// subgraph) and, per component, whether it contains a cycle.
#[derive(Debug, Clone)]
pub struct Components {
    pub component: Vec<u32>,
    pub cyclic: Vec<bool>,
}

impl Components {
    pub fn on_cycle(&self, v: usize) -> bool {
        let c = self.component[v];
        c != UNVISITED && self.cyclic[c as usize]
    }
}

pub fn tarjan<F, S>(len: usize, include: F, mut successors: S) -> Components
where
    F: Fn(usize) -> bool,
    S: FnMut(usize, &mut Vec<usize>),
{
    let mut index = vec![UNVISITED; len];
    let mut lowlink = vec![0u32; len];
    let mut on_stack = vec![false; len];
    let mut component = vec![UNVISITED; len];
    let mut cyclic = Vec::new();

    let mut scc_stack: Vec<usize> = Vec::new();
    // (vertex, successors, next successor position)
    let mut call_stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    let mut next_index = 0u32;

    for root in 0..len {
        if !include(root) || index[root] != UNVISITED {
            continue;
        }
        let mut succ = Vec::new();
        successors(root, &mut succ);
        succ.retain(|&w| include(w));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        scc_stack.push(root);
        on_stack[root] = true;
        call_stack.push((root, succ, 0));

        while let Some(frame) = call_stack.last_mut() {
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if index[w] == UNVISITED {
                    let mut succ = Vec::new();
                    successors(w, &mut succ);
                    succ.retain(|&x| include(x));
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    scc_stack.push(w);
                    on_stack[w] = true;
                    call_stack.push((w, succ, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }

            let (v, succ, _) = call_stack.pop().expect("frame present");
            if lowlink[v] == index[v] {
                let id = cyclic.len() as u32;
                let mut size = 0usize;
                loop {
                    let w = scc_stack.pop().expect("scc stack holds v");
                    on_stack[w] = false;
                    component[w] = id;
                    size += 1;
                    if w == v {
                        break;
                    }
                }
                cyclic.push(size > 1 || succ.contains(&v));
            }
            if let Some(parent) = call_stack.last() {
                let p = parent.0;
                lowlink[p] = lowlink[p].min(lowlink[v]);
            }
        }
    }

    Components { component, cyclic }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(adj: &[Vec<usize>]) -> Components {
        tarjan(adj.len(), |_| true, |v, out| out.extend_from_slice(&adj[v]))
    }

    #[test]
    fn detects_cycles_and_self_loops() {
        // 0 -> 1 -> 2 -> 0, 2 -> 3, 3 -> 3, 4 -> 3
        let adj = vec![vec![1], vec![2], vec![0, 3], vec![3], vec![3]];
        let c = run(&adj);
        assert!(c.on_cycle(0) && c.on_cycle(1) && c.on_cycle(2));
        assert_eq!(c.component[0], c.component[1]);
        assert!(c.on_cycle(3));
        assert!(!c.on_cycle(4));
    }

    #[test]
    fn filter_removes_vertices() {
        let adj = [vec![1], vec![2], vec![0]];
        let c = tarjan(3, |v| v != 2, |v, out| out.extend_from_slice(&adj[v]));
        assert!(!c.on_cycle(0) && !c.on_cycle(1));
        assert_eq!(c.component[2], u32::MAX);
    }

    #[test]
    fn long_chain_does_not_recurse() {
        let n = 200_000;
        let adj: Vec<Vec<usize>> = (0..n).map(|v| vec![(v + 1) % n]).collect();
        let c = run(&adj);
        assert!((0..n).all(|v| c.on_cycle(v)));
        assert_eq!(c.cyclic.len(), 1);
    }
}
