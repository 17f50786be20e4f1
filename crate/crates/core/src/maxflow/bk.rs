//! Boykov–Kolmogorov augmenting paths with persistent search trees.
//!
//! Two trees grow from the source and the sink over residual arcs. When they
//! touch, the connecting path is augmented; nodes whose parent arc saturates
//! become orphans and either adopt a new parent of the same tree with a valid
//! root path or are released. Root-path validity uses the usual timestamp and
//! distance marks, so adoption stays cheap on large grids.

use std::collections::VecDeque;

use super::{MaxFlowSolver, Residual, SINK, SOURCE};

const FREE: u8 = 0;
const S_TREE: u8 = 1;
const T_TREE: u8 = 2;

const ROOT: u32 = u32::MAX;
const ORPHAN: u32 = u32::MAX - 1;

#[derive(Clone, Copy, Debug, Default)]
pub struct BoykovKolmogorov;

impl MaxFlowSolver for BoykovKolmogorov {
    fn name(&self) -> &'static str {
        "bk"
    }

    fn max_flow(&self, g: &mut Residual) -> i64 {
        Search::new(g).run()
    }
}

struct Search<'a> {
    g: &'a mut Residual,
    tree: Vec<u8>,
    // arc from the node to its parent
    parent: Vec<u32>,
    ts: Vec<u32>,
    dist: Vec<u32>,
    active: VecDeque<u32>,
    queued: Vec<bool>,
    orphans: VecDeque<u32>,
    time: u32,
}

impl<'a> Search<'a> {
    fn new(g: &'a mut Residual) -> Self {
        let n = g.node_count();
        let mut s = Self {
            g,
            tree: vec![FREE; n],
            parent: vec![ORPHAN; n],
            ts: vec![0; n],
            dist: vec![0; n],
            active: VecDeque::new(),
            queued: vec![false; n],
            orphans: VecDeque::new(),
            time: 0,
        };
        for (root, t) in [(SOURCE, S_TREE), (SINK, T_TREE)] {
            s.tree[root] = t;
            s.parent[root] = ROOT;
            s.activate(root);
        }
        s
    }

    fn activate(&mut self, u: usize) {
        if !self.queued[u] {
            self.queued[u] = true;
            self.active.push_back(u as u32);
        }
    }

    /// Residual capacity in the direction of flow for a tree arc `a` leaving `p`.
    #[inline]
    fn open(&self, p_tree: u8, a: usize) -> bool {
        if p_tree == S_TREE {
            self.g.cap[a] > 0
        } else {
            self.g.cap[self.g.rev[a] as usize] > 0
        }
    }

    fn run(mut self) -> i64 {
        let mut flow = 0i64;
        while let Some(p) = self.active.pop_front() {
            let p = p as usize;
            self.queued[p] = false;
            if self.tree[p] == FREE {
                continue;
            }
            if let Some(meet) = self.grow(p) {
                // p may still have unexplored arcs
                self.queued[p] = true;
                self.active.push_front(p as u32);
                self.time += 1;
                flow += self.augment(meet);
                self.adopt();
            }
        }
        flow
    }

    /// Expands `p`; returns an arc from the source tree to the sink tree if found.
    fn grow(&mut self, p: usize) -> Option<usize> {
        let pt = self.tree[p];
        for a in self.g.arcs(p) {
            if !self.open(pt, a) {
                continue;
            }
            let q = self.g.head[a] as usize;
            let qt = self.tree[q];
            if qt == FREE {
                self.tree[q] = pt;
                self.parent[q] = self.g.rev[a];
                self.ts[q] = self.ts[p];
                self.dist[q] = self.dist[p] + 1;
                self.activate(q);
            } else if qt != pt {
                return Some(if pt == S_TREE { a } else { self.g.rev[a] as usize });
            } else if self.parent[q] != ROOT && self.ts[q] <= self.ts[p] && self.dist[q] > self.dist[p] {
                self.parent[q] = self.g.rev[a];
                self.ts[q] = self.ts[p];
                self.dist[q] = self.dist[p] + 1;
            }
        }
        None
    }

    fn augment(&mut self, meet: usize) -> i64 {
        let g = &*self.g;
        let mut b = g.cap[meet];
        let mut u = g.head[g.rev[meet] as usize] as usize;
        while self.parent[u] != ROOT {
            let e = self.parent[u] as usize;
            b = b.min(g.cap[g.rev[e] as usize]);
            u = g.head[e] as usize;
        }
        let mut u = g.head[meet] as usize;
        while self.parent[u] != ROOT {
            let e = self.parent[u] as usize;
            b = b.min(g.cap[e]);
            u = g.head[e] as usize;
        }
        debug_assert!(b > 0);

        let r = self.g.rev[meet] as usize;
        self.g.cap[meet] -= b;
        self.g.cap[r] += b;
        let mut u = self.g.head[r] as usize;
        while self.parent[u] != ROOT {
            let e = self.parent[u] as usize;
            let down = self.g.rev[e] as usize;
            self.g.cap[down] -= b;
            self.g.cap[e] += b;
            let next = self.g.head[e] as usize;
            if self.g.cap[down] == 0 {
                self.parent[u] = ORPHAN;
                self.orphans.push_back(u as u32);
            }
            u = next;
        }
        let mut u = self.g.head[meet] as usize;
        while self.parent[u] != ROOT {
            let e = self.parent[u] as usize;
            let up = self.g.rev[e] as usize;
            self.g.cap[e] -= b;
            self.g.cap[up] += b;
            let next = self.g.head[e] as usize;
            if self.g.cap[e] == 0 {
                self.parent[u] = ORPHAN;
                self.orphans.push_back(u as u32);
            }
            u = next;
        }
        b
    }

    /// Length of the valid root path from `j`, or `None` if it ends in an orphan.
    fn root_distance(&mut self, mut j: usize) -> Option<u32> {
        let start = j;
        let mut d = 0u32;
        loop {
            if self.ts[j] == self.time {
                d += self.dist[j];
                break;
            }
            match self.parent[j] {
                ROOT => {
                    self.ts[j] = self.time;
                    self.dist[j] = 0;
                    break;
                }
                ORPHAN => return None,
                e => {
                    d += 1;
                    j = self.g.head[e as usize] as usize;
                }
            }
        }
        // cache distances along the verified path
        let mut j = start;
        let mut dd = d;
        while self.ts[j] != self.time {
            self.ts[j] = self.time;
            self.dist[j] = dd;
            dd -= 1;
            j = self.g.head[self.parent[j] as usize] as usize;
        }
        Some(d)
    }

    fn adopt(&mut self) {
        while let Some(u) = self.orphans.pop_front() {
            let u = u as usize;
            let ut = self.tree[u];
            let mut best: Option<(u32, usize)> = None;
            for a in self.g.arcs(u) {
                let q = self.g.head[a] as usize;
                if self.tree[q] != ut {
                    continue;
                }
                // flow must be able to travel parent → child in S, child → parent in T
                let ok = if ut == S_TREE {
                    self.g.cap[self.g.rev[a] as usize] > 0
                } else {
                    self.g.cap[a] > 0
                };
                if !ok {
                    continue;
                }
                if let Some(d) = self.root_distance(q) {
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, a));
                    }
                }
            }
            if let Some((d, a)) = best {
                self.parent[u] = a as u32;
                self.ts[u] = self.time;
                self.dist[u] = d + 1;
                continue;
            }
            // release u; children become orphans, neighbours may regrow into it
            for a in self.g.arcs(u) {
                let q = self.g.head[a] as usize;
                if self.tree[q] != ut {
                    continue;
                }
                let pq = self.parent[q];
                if pq != ROOT && pq != ORPHAN && self.g.head[pq as usize] as usize == u {
                    self.parent[q] = ORPHAN;
                    self.orphans.push_back(q as u32);
                }
                let can_grow = if ut == S_TREE {
                    self.g.cap[self.g.rev[a] as usize] > 0
                } else {
                    self.g.cap[a] > 0
                };
                if can_grow {
                    self.activate(q);
                }
            }
            self.tree[u] = FREE;
            self.parent[u] = ORPHAN;
        }
    }
}
