//! Difference-bound matrices over the integers.
//!
//! Entry `(i, j)` bounds `x_i - x_j <= c`. Node 0 is the constant zero.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dbm {
    n: usize,
    m: Vec<Option<i64>>,
}

fn add(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.saturating_add(y)),
        _ => None,
    }
}

fn tighter(a: Option<i64>, b: Option<i64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

impl Dbm {
    /// `n` nodes including the zero node.
    pub fn new(n: usize) -> Self {
        let mut m = vec![None; n * n];
        for i in 0..n {
            m[i * n + i] = Some(0);
        }
        Dbm { n, m }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Option<i64> {
        self.m[i * self.n + j]
    }

    /// Adds `x_i - x_j <= c`.
    pub fn constrain(&mut self, i: usize, j: usize, c: i64) {
        let k = i * self.n + j;
        if tighter(Some(c), self.m[k]) {
            self.m[k] = Some(c);
        }
    }

    /// Floyd-Warshall closure. Returns false on a negative cycle.
    pub fn close(&mut self) -> bool {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik.is_none() {
                    continue;
                }
                for j in 0..n {
                    let via = add(ik, self.m[k * n + j]);
                    if tighter(via, self.m[i * n + j]) {
                        self.m[i * n + j] = via;
                    }
                }
            }
        }
        (0..n).all(|i| self.m[i * n + i].is_some_and(|d| d >= 0))
    }

    /// The closed matrix restricted to `nodes` (in the given order).
    pub fn restrict(&self, nodes: &[usize]) -> Dbm {
        let k = nodes.len();
        let mut out = Dbm::new(k);
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                out.m[a * k + b] = self.get(i, j);
            }
        }
        out
    }

    /// A small set of edges whose closure equals this (closed) matrix.
    /// Edges are tried for removal in the given order, so the result is a
    /// function of the matrix alone.
    pub fn reduced_edges(&self) -> Vec<(usize, usize, i64)> {
        let n = self.n;
        let mut edges: Vec<(usize, usize, i64)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    if let Some(c) = self.get(i, j) {
                        edges.push((i, j, c));
                    }
                }
            }
        }
        let mut keep = vec![true; edges.len()];
        for e in 0..edges.len() {
            keep[e] = false;
            let mut g = Dbm::new(n);
            for (k, &(i, j, c)) in edges.iter().enumerate() {
                if keep[k] {
                    g.constrain(i, j, c);
                }
            }
            g.close();
            let (i, j, c) = edges[e];
            if g.get(i, j).is_none_or(|d| d > c) {
                keep[e] = true;
            }
        }
        edges.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect()
    }
}
