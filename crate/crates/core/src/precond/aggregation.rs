//! Aggregation of fine dofs into coarse dofs.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::sparse::SparseMatrix;

/// Disjoint aggregates covering every dof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMap {
    pub aggregate: Vec<usize>,
    pub count: usize,
}

impl AggregationMap {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.count];
        for &a in &self.aggregate {
            s[a] += 1;
        }
        s
    }

    /// Piecewise-constant prolongator: `P[i, aggregate(i)] = 1`.
    pub fn tentative_prolongator(&self) -> SparseMatrix {
        let n = self.aggregate.len();
        let t: Vec<(usize, usize, f64)> = self.aggregate.iter().enumerate().map(|(i, &a)| (i, a, 1.0)).collect();
        SparseMatrix::from_triplets(n, self.count, &t).expect("aggregate ids in range")
    }
}

/// Symmetric strength graph: `j` is a strong neighbour of `i` when
/// `|a_ij| > theta sqrt(|a_ii a_jj|)` in either direction.
fn strength_graph(a: &SparseMatrix, theta: f64) -> Vec<Vec<(usize, f64)>> {
    let n = a.nrows();
    let d = a.diagonal();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v.abs() > theta * sqrt((d[i] * d[j]).abs()) {
                adj[i].push((j, v.abs()));
                adj[j].push((i, v.abs()));
            }
        }
    }
    for list in &mut adj {
        list.sort_by(|x, y| x.0.cmp(&y.0));
        // Keep the larger weight when both directions are strong.
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
        for &(j, w) in list.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 = last.1.max(w),
                _ => merged.push((j, w)),
            }
        }
        *list = merged;
    }
    adj
}

/// Greedy three-pass aggregation over the strength graph.
///
/// Pass 1 visits candidate roots by decreasing strong degree (ties by index)
/// and forms root-plus-neighbours aggregates when the whole neighbourhood is
/// free. Pass 2 attaches leftovers to the most strongly connected pass-1
/// aggregate. Pass 3 turns the rest into singletons.
pub fn vmb_aggregate(a: &SparseMatrix, theta: f64) -> AggregationMap {
    let n = a.nrows();
    let adj = strength_graph(a, theta);
    const FREE: usize = usize::MAX;
    let mut agg = vec![FREE; n];
    let mut count = 0;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| adj[y].len().cmp(&adj[x].len()).then(x.cmp(&y)));
    for &i in &order {
        if agg[i] != FREE || adj[i].is_empty() || adj[i].iter().any(|&(j, _)| agg[j] != FREE) {
            continue;
        }
        agg[i] = count;
        for &(j, _) in &adj[i] {
            agg[j] = count;
        }
        count += 1;
    }

    let pass1 = agg.clone();
    for i in 0..n {
        if agg[i] != FREE {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for &(j, w) in &adj[i] {
            if pass1[j] != FREE && best.is_none_or(|(bw, _)| w > bw) {
                best = Some((w, pass1[j]));
            }
        }
        if let Some((_, g)) = best {
            agg[i] = g;
        }
    }

    for slot in agg.iter_mut() {
        if *slot == FREE {
            *slot = count;
            count += 1;
        }
    }
    AggregationMap { aggregate: agg, count }
}

/// Three rounds of greedy pairwise matching on a weighted graph derived
/// from `a`; aggregates hold at most `2^3 = 8` dofs.
///
/// Weights are `|a_ij| / sqrt(|a_ii a_jj|)` (averaged over both directions);
/// each round sorts edges by decreasing weight and pairs free endpoints.
pub fn matching_aggregate(a: &SparseMatrix) -> AggregationMap {
    const ROUNDS: usize = 3;
    let n = a.nrows();
    let d = a.diagonal();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                let s = sqrt((d[i] * d[j]).abs());
                let w = if s > 0.0 { 0.5 * v.abs() / s } else { 0.0 };
                edges.push((i.min(j), i.max(j), w));
            }
        }
    }
    let mut map: Vec<usize> = (0..n).collect();
    let mut nodes = n;
    for _ in 0..ROUNDS {
        edges = merge_edges(edges);
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by(|&x, &y| {
            edges[y].2.total_cmp(&edges[x].2).then((edges[x].0, edges[x].1).cmp(&(edges[y].0, edges[y].1)))
        });
        let mut mate = vec![usize::MAX; nodes];
        for &e in &order {
            let (u, v, w) = edges[e];
            if w > 0.0 && mate[u] == usize::MAX && mate[v] == usize::MAX {
                mate[u] = v;
                mate[v] = u;
            }
        }
        let mut relabel = vec![usize::MAX; nodes];
        let mut next = 0;
        for u in 0..nodes {
            if relabel[u] != usize::MAX {
                continue;
            }
            relabel[u] = next;
            if mate[u] != usize::MAX {
                relabel[mate[u]] = next;
            }
            next += 1;
        }
        for m in map.iter_mut() {
            *m = relabel[*m];
        }
        edges = edges
            .into_iter()
            .filter_map(|(u, v, w)| {
                let (a, b) = (relabel[u], relabel[v]);
                (a != b).then(|| (a.min(b), a.max(b), w))
            })
            .collect();
        if next == nodes {
            break;
        }
        nodes = next;
    }
    let count = map.iter().copied().max().map_or(0, |m| m + 1);
    AggregationMap { aggregate: map, count }
}

/// Sums parallel edges.
fn merge_edges(mut edges: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
    for e in edges {
        match out.last_mut() {
            Some(last) if (last.0, last.1) == (e.0, e.1) => last.2 += e.2,
            _ => out.push(e),
        }
    }
    out
}
