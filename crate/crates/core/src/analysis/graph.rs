use std::collections::VecDeque;

use serde::Serialize;

use crate::measure::GifsSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub strongly_connected: bool,
    /// Closed walk through every vertex (1-based), when strongly connected.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
    /// Vertices (1-based) unreachable from vertex 1 or unable to reach it.
    pub disconnected: Vec<usize>,
}

/// Shortest path `from → to` (0-based, both ends included), if any.
fn bfs_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = u;
                queue.push_back(v);
            }
            if v == to {
                let mut path = vec![to];
                let mut x = u;
                while x != from {
                    path.push(x);
                    x = prev[x];
                }
                path.push(from);
                path.reverse();
                return Some(path);
            }
        }
    }
    None
}

fn reachable(adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Strong connectivity of a directed graph given by 0-based adjacency lists.
///
/// The witness chains shortest paths `1 → 2 → … → n → 1`.
pub fn strongly_connected(adj: &[Vec<usize>]) -> Connectivity {
    let n = adj.len();
    if n == 0 {
        return Connectivity {
            strongly_connected: false,
            witness: None,
            disconnected: Vec::new(),
        };
    }
    let mut rev = vec![Vec::new(); n];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            rev[v].push(u);
        }
    }
    let fwd = reachable(adj, 0);
    let bwd = reachable(&rev, 0);
    let disconnected: Vec<usize> = (0..n)
        .filter(|&v| !(fwd[v] && bwd[v]))
        .map(|v| v + 1)
        .collect();
    if !disconnected.is_empty() {
        return Connectivity {
            strongly_connected: false,
            witness: None,
            disconnected,
        };
    }
    // a lone vertex without a self-loop is strongly connected but has no closed walk
    let mut walk = Some(vec![0]);
    for k in 0..n {
        match (walk.as_mut(), bfs_path(adj, k, (k + 1) % n)) {
            (Some(w), Some(path)) => w.extend(path.into_iter().skip(1)),
            _ => walk = None,
        }
    }
    Connectivity {
        strongly_connected: true,
        witness: walk.map(|w| w.into_iter().map(|v| v + 1).collect()),
        disconnected,
    }
}

/// True if `walk` (1-based) follows edges, returns to its start and visits
/// every vertex.
pub fn is_closed_walk(adj: &[Vec<usize>], walk: &[usize]) -> bool {
    let n = adj.len();
    if walk.len() < 2 || walk.first() != walk.last() || walk.iter().any(|&v| v == 0 || v > n) {
        return false;
    }
    let follows = walk.windows(2).all(|w| adj[w[0] - 1].contains(&(w[1] - 1)));
    let mut seen = vec![false; n];
    for &v in walk {
        seen[v - 1] = true;
    }
    follows && seen.iter().all(|&s| s)
}

pub fn gifs_strongly_connected(spec: &GifsSpec) -> Connectivity {
    strongly_connected(&spec.adjacency())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_graphs() {
        let c = strongly_connected(&[vec![1], vec![]]);
        assert!(!c.strongly_connected);
        assert_eq!(c.disconnected, vec![2]);
        let c = strongly_connected(&[vec![0]]);
        assert!(c.strongly_connected);
        assert_eq!(c.witness, Some(vec![1, 1]));
        let c = strongly_connected(&[vec![1], vec![2], vec![0]]);
        assert_eq!(c.witness, Some(vec![1, 2, 3, 1]));
    }

    #[test]
    fn torus_table_connected() {
        let spec = GifsSpec::torus_table();
        let c = gifs_strongly_connected(&spec);
        assert!(c.strongly_connected);
        let adj = spec.adjacency();
        assert!(is_closed_walk(&adj, c.witness.as_ref().unwrap()));
        let tabulated = [1, 8, 12, 2, 9, 11, 3, 4, 5, 6, 2, 9, 7, 8, 10, 12, 5, 1];
        assert!(is_closed_walk(&adj, &tabulated));
    }

    fn closure(adj: &[Vec<usize>]) -> bool {
        let n = adj.len();
        let mut r = vec![vec![false; n]; n];
        for (u, out) in adj.iter().enumerate() {
            r[u][u] = true;
            for &v in out {
                r[u][v] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r.iter().all(|row| row.iter().all(|&x| x))
    }

    proptest! {
        #[test]
        fn matches_transitive_closure(n in 1usize..=8, bits in prop::collection::vec(any::<bool>(), 64)) {
            let adj: Vec<Vec<usize>> = (0..n)
                .map(|u| (0..n).filter(|&v| bits[u * 8 + v]).collect())
                .collect();
            let c = strongly_connected(&adj);
            prop_assert_eq!(c.strongly_connected, closure(&adj));
            if let Some(w) = &c.witness {
                prop_assert!(is_closed_walk(&adj, w));
            }
        }
    }
}
