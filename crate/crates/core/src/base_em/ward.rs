//! Ward-linkage agglomerative clustering via nearest-neighbour chains.

use crate::linalg::Matrix;

/// One agglomeration step: the two merged clusters (identified by a member
/// row) and the Ward cost of merging them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub cost: f64,
    pub left: usize,
    pub right: usize,
}

fn ward_cost(centroids: &[f64], sizes: &[f64], d: usize, a: usize, b: usize) -> f64 {
    let ca = &centroids[a * d..(a + 1) * d];
    let cb = &centroids[b * d..(b + 1) * d];
    let sq: f64 = ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum();
    sizes[a] * sizes[b] / (sizes[a] + sizes[b]) * sq
}

/// All `n - 1` merges of the Ward dendrogram over the rows of `points`,
/// sorted by increasing cost.
pub fn ward_merges(points: &Matrix) -> Vec<Merge> {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = points.as_slice().to_vec();
    let mut sizes = vec![1.0; n];
    // Sorted, so ties still resolve to the smallest index.
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::with_capacity(n);

    while active.len() > 1 {
        if chain.is_empty() {
            chain.push(active[0]);
        }
        let (a, b, cost) = loop {
            let a = *chain.last().expect("non-empty chain");
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            // Nearest active neighbour. The previous chain element wins ties so
            // the chain terminates; otherwise the smallest index does.
            let mut best = match prev {
                Some(p) => (ward_cost(&centroids, &sizes, d, a, p), p),
                None => (f64::INFINITY, usize::MAX),
            };
            for &c in &active {
                if c == a || Some(c) == prev {
                    continue;
                }
                let cost = ward_cost(&centroids, &sizes, d, a, c);
                if cost < best.0 {
                    best = (cost, c);
                }
            }
            let (cost, b) = best;
            if Some(b) == prev {
                break (a, b, cost);
            }
            chain.push(b);
        };
        chain.pop();
        chain.pop();

        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let (sk, sg) = (sizes[keep], sizes[gone]);
        for j in 0..d {
            let merged = (sk * centroids[keep * d + j] + sg * centroids[gone * d + j]) / (sk + sg);
            centroids[keep * d + j] = merged;
        }
        sizes[keep] = sk + sg;
        if let Ok(pos) = active.binary_search(&gone) {
            active.remove(pos);
        }
        merges.push(Merge {
            cost,
            left: keep,
            right: gone,
        });
    }
    // Stable: merges of equal cost keep their discovery order.
    merges.sort_by(|x, y| x.cost.total_cmp(&y.cost));
    merges
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Cuts the Ward dendrogram into `k` clusters. Cluster ids are `0..k`,
/// numbered in order of each cluster's first row.
pub fn ward_clusters(points: &Matrix, k: usize) -> Vec<usize> {
    let n = points.rows();
    let k = k.clamp(1, n.max(1));
    let merges = ward_merges(points);
    let mut parent: Vec<usize> = (0..n).collect();
    for m in merges.iter().take(n - k) {
        let ra = find(&mut parent, m.left);
        let rb = find(&mut parent, m.right);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut out = vec![0; n];
    let mut next = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        if ids[r] == usize::MAX {
            ids[r] = next;
            next += 1;
        }
        out[i] = ids[r];
    }
    out
}
