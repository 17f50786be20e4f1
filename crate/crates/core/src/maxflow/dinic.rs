//! Dinic's blocking-flow algorithm.

use std::collections::VecDeque;

use super::{MaxFlowSolver, Residual, SINK, SOURCE};

const UNSEEN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default)]
pub struct Dinic;

impl MaxFlowSolver for Dinic {
    fn name(&self) -> &'static str {
        "dinic"
    }

    fn max_flow(&self, g: &mut Residual) -> i64 {
        let n = g.node_count();
        let mut level = vec![UNSEEN; n];
        let mut it = vec![0usize; n];
        let mut queue = VecDeque::new();
        let mut path: Vec<usize> = Vec::new();
        let mut flow = 0i64;
        loop {
            level.fill(UNSEEN);
            level[SOURCE] = 0;
            queue.push_back(SOURCE);
            while let Some(u) = queue.pop_front() {
                for a in g.arcs(u) {
                    let v = g.head[a] as usize;
                    if g.cap[a] > 0 && level[v] == UNSEEN {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[SINK] == UNSEEN {
                return flow;
            }
            for u in 0..n {
                it[u] = g.first[u];
            }
            path.clear();
            let mut u = SOURCE;
            loop {
                if u == SINK {
                    let b = path.iter().map(|&a| g.cap[a]).min().unwrap();
                    let mut cut_at = path.len();
                    for (i, &a) in path.iter().enumerate() {
                        g.cap[a] -= b;
                        g.cap[g.rev[a] as usize] += b;
                        if g.cap[a] == 0 && cut_at == path.len() {
                            cut_at = i;
                        }
                    }
                    flow += b;
                    path.truncate(cut_at);
                    u = path.last().map_or(SOURCE, |&a| g.head[a] as usize);
                    continue;
                }
                let end = g.first[u + 1];
                while it[u] < end {
                    let a = it[u];
                    let v = g.head[a] as usize;
                    if g.cap[a] > 0 && level[v] == level[u] + 1 {
                        break;
                    }
                    it[u] += 1;
                }
                if it[u] < end {
                    let a = it[u];
                    path.push(a);
                    u = g.head[a] as usize;
                } else {
                    if u == SOURCE {
                        break;
                    }
                    level[u] = UNSEEN;
                    let a = path.pop().unwrap();
                    u = g.head[g.rev[a] as usize] as usize;
                    it[u] += 1;
                }
            }
        }
    }
}
