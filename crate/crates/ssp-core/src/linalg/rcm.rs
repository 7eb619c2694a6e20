//! Reverse Cuthill–McKee ordering on a CSR sparsity pattern.

use super::{CsrMatrix, Permutation};

/// Computes a reverse Cuthill–McKee permutation of the symmetrised pattern
/// of `a`. Each connected component is traversed breadth-first from a
/// minimum-degree vertex, neighbours visited in increasing degree; the
/// concatenated order is reversed. Deterministic for a fixed input.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Permutation {
    let n = a.n();
    // Symmetrised adjacency (exclude the diagonal).
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        let (cols, _) = a.row(r);
        for &c in cols {
            if c != r {
                neighbors[r].push(c);
                neighbors[c].push(r);
            }
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = neighbors.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    let mut scratch: Vec<usize> = Vec::new();
    loop {
        // Next component: unvisited vertex of smallest degree (lowest id
        // breaks ties).
        let start = match (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
        {
            Some(s) => s,
            None => break,
        };
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            scratch.clear();
            scratch.extend(neighbors[v].iter().copied().filter(|&w| !visited[w]));
            scratch.sort_unstable_by_key(|&w| (degree[w], w));
            for &w in &scratch {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    Permutation::from_new_to_old(order)
}
