//! FIFO push–relabel with periodic global relabelling.
//!
//! The algorithm runs until no node other than the terminals carries excess,
//! so the final preflow is a genuine flow and the residual network supports
//! the canonical source-side cut. Global relabelling sets exact residual
//! distances to the sink and, for nodes cut off from it, `n` plus the
//! distance back to the source.

use std::collections::VecDeque;

use super::{MaxFlowSolver, Residual, SINK, SOURCE};

#[derive(Clone, Copy, Debug, Default)]
pub struct PushRelabel;

impl MaxFlowSolver for PushRelabel {
    fn name(&self) -> &'static str {
        "push-relabel"
    }

    fn max_flow(&self, g: &mut Residual) -> i64 {
        let n = g.node_count();
        let mut st = State {
            height: vec![0; n],
            excess: vec![0; n],
            current: g.first[..n].to_vec(),
            queue: VecDeque::new(),
            bfs: VecDeque::new(),
        };
        for a in g.arcs(SOURCE) {
            let c = g.cap[a];
            if c > 0 {
                let v = g.head[a] as usize;
                g.cap[a] = 0;
                g.cap[g.rev[a] as usize] += c;
                if st.excess[v] == 0 && v != SINK && v != SOURCE {
                    st.queue.push_back(v);
                }
                st.excess[v] += c;
            }
        }
        st.global_relabel(g);
        let mut work = 0usize;
        while let Some(u) = st.queue.pop_front() {
            work += st.discharge(g, u);
            if work > n {
                st.global_relabel(g);
                work = 0;
            }
        }
        st.excess[SINK]
    }
}

struct State {
    height: Vec<usize>,
    excess: Vec<i64>,
    current: Vec<usize>,
    queue: VecDeque<usize>,
    bfs: VecDeque<usize>,
}

impl State {
    fn global_relabel(&mut self, g: &Residual) {
        let n = g.node_count();
        let unset = 2 * n;
        self.height.fill(unset);
        for (root, base) in [(SINK, 0), (SOURCE, n)] {
            self.height[root] = base;
            self.bfs.push_back(root);
            while let Some(u) = self.bfs.pop_front() {
                for a in g.arcs(u) {
                    let v = g.head[a] as usize;
                    if self.height[v] == unset && g.cap[g.rev[a] as usize] > 0 {
                        self.height[v] = self.height[u] + 1;
                        self.bfs.push_back(v);
                    }
                }
            }
        }
        self.current.copy_from_slice(&g.first[..n]);
    }

    /// Pushes out all excess of `u`; returns the number of relabels.
    fn discharge(&mut self, g: &mut Residual, u: usize) -> usize {
        let mut relabels = 0;
        let end = g.first[u + 1];
        while self.excess[u] > 0 {
            if self.current[u] == end {
                let mut h = usize::MAX;
                for a in g.arcs(u) {
                    if g.cap[a] > 0 {
                        h = h.min(self.height[g.head[a] as usize]);
                    }
                }
                debug_assert!(h != usize::MAX, "node with excess and no residual arc");
                self.height[u] = h + 1;
                self.current[u] = g.first[u];
                relabels += 1;
                continue;
            }
            let a = self.current[u];
            let v = g.head[a] as usize;
            if g.cap[a] > 0 && self.height[u] == self.height[v] + 1 {
                let d = self.excess[u].min(g.cap[a]);
                g.cap[a] -= d;
                g.cap[g.rev[a] as usize] += d;
                self.excess[u] -= d;
                if self.excess[v] == 0 && v != SOURCE && v != SINK {
                    self.queue.push_back(v);
                }
                self.excess[v] += d;
            } else {
                self.current[u] += 1;
            }
        }
        relabels
    }
}
