use serde::Serialize;

use crate::channel::{sample_csi, ChannelState, CsiTrace, LinkId, RadioParams};
use crate::error::{Error, Result};

/// Dense row-major n×n matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> SquareMatrix<T> {
    pub fn new(n: usize) -> Self {
        SquareMatrix { n, data: vec![T::default(); n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n.max(1))
    }
}

/// Vehicles as nodes; `adjacency[i][j] = 1` means i can transmit to j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommGraph {
    pub adjacency: SquareMatrix<u8>,
    /// bits/second, zero exactly where `adjacency` is zero.
    pub capacity: SquareMatrix<f64>,
    pub ego_index: usize,
}

impl CommGraph {
    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Config(format!("communication graph needs at least 2 vehicles, got {n}")));
        }
        if self.ego_index >= n || self.capacity.n() != n {
            return Err(Error::Format("graph dimensions inconsistent with ego index".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let a = self.adjacency.get(i, j);
                let c = self.capacity.get(i, j);
                if a > 1 || (i == j && a != 0) || ((a == 1) != (c > 0.0)) {
                    return Err(Error::Format(format!("invalid graph entry at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Build the communication graph from vehicle positions.
///
/// `link_state(i, j, distance)` supplies the channel state of the directed
/// link i→j; it is only queried for in-range pairs. A pair is linked iff it
/// is within `max_range` and its capacity is positive.
pub fn build_graph<F>(positions: &[[f64; 2]], ego_index: usize, max_range: f64, mut link_state: F) -> Result<CommGraph>
where
    F: FnMut(usize, usize, f64) -> Result<ChannelState>,
{
    let n = positions.len();
    if n < 2 {
        return Err(Error::Config(format!("communication graph needs at least 2 vehicles, got {n}")));
    }
    if ego_index >= n {
        return Err(Error::Config(format!("ego index {ego_index} out of range for {n} vehicles")));
    }
    if !(max_range > 0.0) {
        return Err(Error::Config(format!("max_range must be > 0, got {max_range}")));
    }
    let mut adjacency = SquareMatrix::new(n);
    let mut capacity = SquareMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = distance(positions[i], positions[j]);
            if d == 0.0 {
                return Err(Error::Config(format!("vehicles {i} and {j} share a position")));
            }
            if d <= max_range {
                let c = link_state(i, j, d)?.capacity;
                if c > 0.0 {
                    adjacency.set(i, j, 1);
                    capacity.set(i, j, c);
                }
            }
        }
    }
    Ok(CommGraph { adjacency, capacity, ego_index })
}

/// [`build_graph`] with deterministic path-loss capacities (no fading).
pub fn build_graph_static(positions: &[[f64; 2]], ego_index: usize, radio: &RadioParams, max_range: f64) -> Result<CommGraph> {
    let trace = CsiTrace::default();
    build_graph(positions, ego_index, max_range, |i, j, d| {
        sample_csi(&trace, LinkId { from: i as u64, to: j as u64 }, d, radio, 0.0)
    })
}

/// Per-vehicle routing toward the ego. Entries for the ego itself are
/// `reachable = true`, zero delay and zero hops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSelection {
    pub link_matrix: SquareMatrix<u8>,
    /// Σ 1/C over the hops of the selected path, seconds/bit; infinite when unreachable.
    pub path_delay_per_bit: Vec<f64>,
    pub reachable: Vec<bool>,
    pub next_hop: Vec<Option<usize>>,
    pub hops: Vec<usize>,
    pub ego_index: usize,
}

impl LinkSelection {
    /// Reachable helper indices in ascending order.
    pub fn helpers(&self) -> Vec<usize> {
        (0..self.reachable.len()).filter(|&i| i != self.ego_index && self.reachable[i]).collect()
    }
}

/// Minimum per-bit-delay path from every helper to the ego (Dijkstra with
/// edge cost 1/capacity, ties broken toward the lowest next-hop index).
/// The link matrix is the union of edges on the selected paths.
pub fn select_links(graph: &CommGraph) -> Result<LinkSelection> {
    graph.validate()?;
    let n = graph.n();
    let ego = graph.ego_index;
    let mut cost = vec![f64::INFINITY; n];
    let mut next_hop: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    cost[ego] = 0.0;

    // Dense O(n²) Dijkstra on the reversed graph; n is a handful of vehicles.
    for _ in 0..n {
        let u = match (0..n).filter(|&v| !settled[v] && cost[v].is_finite()).min_by(|&a, &b| {
            cost[a].total_cmp(&cost[b]).then(a.cmp(&b))
        }) {
            Some(u) => u,
            None => break,
        };
        settled[u] = true;
        for v in 0..n {
            if settled[v] || graph.adjacency.get(v, u) == 0 {
                continue;
            }
            let cand = cost[u] + 1.0 / graph.capacity.get(v, u);
            let better = cand < cost[v] || (cand == cost[v] && next_hop[v].is_some_and(|h| u < h));
            if better {
                cost[v] = cand;
                next_hop[v] = Some(u);
            }
        }
    }

    let mut link_matrix = SquareMatrix::new(n);
    let mut hops = vec![0usize; n];
    let mut reachable = vec![false; n];
    reachable[ego] = true;
    for v in 0..n {
        if v == ego || !cost[v].is_finite() {
            continue;
        }
        reachable[v] = true;
        let mut cur = v;
        while let Some(h) = next_hop[cur] {
            link_matrix.set(cur, h, 1);
            hops[v] += 1;
            cur = h;
        }
    }
    Ok(LinkSelection { link_matrix, path_delay_per_bit: cost, reachable, next_hop, hops, ego_index: ego })
}

/// Baseline without relaying: each helper uses its direct link to the ego,
/// if one exists.
pub fn direct_links(graph: &CommGraph) -> Result<LinkSelection> {
    graph.validate()?;
    let n = graph.n();
    let ego = graph.ego_index;
    let mut sel = LinkSelection {
        link_matrix: SquareMatrix::new(n),
        path_delay_per_bit: vec![f64::INFINITY; n],
        reachable: vec![false; n],
        next_hop: vec![None; n],
        hops: vec![0; n],
        ego_index: ego,
    };
    sel.path_delay_per_bit[ego] = 0.0;
    sel.reachable[ego] = true;
    for v in (0..n).filter(|&v| v != ego && graph.adjacency.get(v, ego) == 1) {
        sel.link_matrix.set(v, ego, 1);
        sel.path_delay_per_bit[v] = 1.0 / graph.capacity.get(v, ego);
        sel.reachable[v] = true;
        sel.next_hop[v] = Some(ego);
        sel.hops[v] = 1;
    }
    Ok(sel)
}
