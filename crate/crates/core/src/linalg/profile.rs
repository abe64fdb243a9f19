use std::collections::VecDeque;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity graph.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| degree[v]);

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn symmetric_adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Repeated BFS from the farthest, lowest-degree node of the last level.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(start, adj);
        let depth = levels.len();
        let candidate = *levels.last().unwrap().iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        if depth <= ecc {
            break;
        }
        ecc = depth;
        start = candidate;
    }
    start
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

/// LU factorization without pivoting in skyline (variable band) storage.
///
/// The profile is that of the symmetrized pattern after reverse
/// Cuthill–McKee renumbering. Intended for the nonsingular block systems
/// arising from finite-element discretizations (positive definite or with a
/// positive definite symmetric part), where pivoting is not required.
#[derive(Debug, Clone)]
pub struct ProfileLu {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    /// Row `i` of the strict lower factor, columns `first[i]..i`.
    lower: Vec<f64>,
    /// Column `i` of the strict upper factor, rows `first[i]..i`.
    upper: Vec<f64>,
    diag: Vec<f64>,
}

impl ProfileLu {
    pub fn factor(a: &CsrMatrix) -> Result<ProfileLu> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("profile LU needs a square matrix".into()));
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let ni = inv[i];
            for &j in a.row(i).0 {
                let nj = inv[j];
                let (hi, lo) = if ni > nj { (ni, nj) } else { (nj, ni) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let size = start[n];
        let mut lower = vec![0.0; size];
        let mut upper = vec![0.0; size];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let ni = inv[i];
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let nj = inv[j];
                if ni == nj {
                    diag[ni] = v;
                } else if nj < ni {
                    lower[start[ni] + nj - first[ni]] = v;
                } else {
                    upper[start[nj] + ni - first[nj]] = v;
                }
            }
        }
        let scale = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);

        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = start[j];
                let k0 = fi.max(fj);
                let len = j - k0;
                let li = &lower[si + k0 - fi..si + k0 - fi + len];
                let uj = &upper[sj + k0 - fj..sj + k0 - fj + len];
                let s: f64 = li.iter().zip(uj).map(|(x, y)| x * y).sum();
                let lj = &lower[sj + k0 - fj..sj + k0 - fj + len];
                let ui = &upper[si + k0 - fi..si + k0 - fi + len];
                let s2: f64 = lj.iter().zip(ui).map(|(x, y)| x * y).sum();
                lower[si + j - fi] = (lower[si + j - fi] - s) / diag[j];
                upper[si + j - fi] -= s2;
            }
            let len = i - fi;
            let s: f64 = lower[si..si + len].iter().zip(&upper[si..si + len]).map(|(x, y)| x * y).sum();
            diag[i] -= s;
            if !(diag[i].abs() > 1e-14 * scale) {
                return Err(Error::SingularMatrix { row: perm[i] });
            }
        }
        Ok(ProfileLu {
            n,
            perm,
            first,
            start,
            lower,
            upper,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of both triangular factors.
    pub fn profile_size(&self) -> usize {
        2 * self.lower.len() + self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let (fi, si) = (self.first[i], self.start[i]);
            let row = &self.lower[si..si + i - fi];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..self.n).rev() {
            let xi = y[i] / self.diag[i];
            y[i] = xi;
            let (fi, si) = (self.first[i], self.start[i]);
            let col = &self.upper[si..si + i - fi];
            for (yk, u) in y[fi..i].iter_mut().zip(col) {
                *yk -= u * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
