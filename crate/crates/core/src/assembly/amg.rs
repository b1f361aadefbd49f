//! Smoothed-aggregation algebraic multigrid, used as a CG preconditioner.
//!
//! Unknowns are grouped in blocks of `block` consecutive dofs (one block
//! per mesh node). Aggregates are formed on the block graph and the
//! tentative prolongator carries one constant vector per block component.

use super::sparse::CsrMatrix;

const STRENGTH: f64 = 0.08;
const COARSE_SIZE: usize = 400;
const MAX_LEVELS: usize = 20;

/// Rectangular CSR matrix.
#[derive(Debug, Clone)]
struct Csr {
    rows: usize,
    cols: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_square(a: &CsrMatrix) -> Self {
        Self {
            rows: a.n,
            cols: a.n,
            ptr: a.row_ptr.clone(),
            idx: a.col_idx.clone(),
            val: a.values.clone(),
        }
    }

    fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.ptr[i]..self.ptr[i + 1] {
                s += self.val[k] * x[self.idx[k]];
            }
            *yi = s;
        }
    }

    /// `y += self * x`
    fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.ptr[i]..self.ptr[i + 1] {
                s += self.val[k] * x[self.idx[k]];
            }
            *yi += s;
        }
    }

    fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.cols + 1];
        for &j in &self.idx {
            count[j + 1] += 1;
        }
        for j in 0..self.cols {
            count[j + 1] += count[j];
        }
        let ptr = count.clone();
        let mut next = count;
        let mut idx = vec![0; self.idx.len()];
        let mut val = vec![0.0; self.val.len()];
        for i in 0..self.rows {
            for k in self.ptr[i]..self.ptr[i + 1] {
                let j = self.idx[k];
                idx[next[j]] = i;
                val[next[j]] = self.val[k];
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            ptr,
            idx,
            val,
        }
    }

    /// Sparse product with sorted column indices.
    fn matmul(&self, b: &Csr) -> Csr {
        let mut ptr = Vec::with_capacity(self.rows + 1);
        ptr.push(0);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        let mut acc = vec![0.0; b.cols];
        let mut seen = vec![usize::MAX; b.cols];
        let mut cols: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            cols.clear();
            for k in self.ptr[i]..self.ptr[i + 1] {
                let (j, a) = (self.idx[k], self.val[k]);
                for q in b.ptr[j]..b.ptr[j + 1] {
                    let c = b.idx[q];
                    if seen[c] != i {
                        seen[c] = i;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * b.val[q];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                idx.push(c);
                val.push(acc[c]);
            }
            ptr.push(idx.len());
        }
        Csr {
            rows: self.rows,
            cols: b.cols,
            ptr,
            idx,
            val,
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                (self.ptr[i]..self.ptr[i + 1])
                    .find(|&k| self.idx[k] == i)
                    .map_or(0.0, |k| self.val[k])
            })
            .collect()
    }
}

/// Strongly connected block neighbours of every block.
fn strength_graph(a: &Csr, block: usize) -> Vec<Vec<usize>> {
    let nb = a.rows / block;
    let mut norm2 = vec![0.0; nb];
    let mut seen = vec![usize::MAX; nb];
    let mut touched: Vec<usize> = Vec::new();
    let mut blocks: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nb);
    for bi in 0..nb {
        touched.clear();
        for i in bi * block..(bi + 1) * block {
            for k in a.ptr[i]..a.ptr[i + 1] {
                let bj = a.idx[k] / block;
                if seen[bj] != bi {
                    seen[bj] = bi;
                    norm2[bj] = 0.0;
                    touched.push(bj);
                }
                norm2[bj] += a.val[k] * a.val[k];
            }
        }
        blocks.push(touched.iter().map(|&bj| (bj, norm2[bj])).collect());
    }
    let diag: Vec<f64> = blocks
        .iter()
        .enumerate()
        .map(|(bi, r)| r.iter().find(|e| e.0 == bi).map_or(0.0, |e| e.1))
        .collect();
    blocks
        .iter()
        .enumerate()
        .map(|(bi, r)| {
            r.iter()
                .filter(|&&(bj, s)| {
                    bj != bi && s > STRENGTH * STRENGTH * (diag[bi] * diag[bj]).sqrt()
                })
                .map(|e| e.0)
                .collect()
        })
        .collect()
}

/// Standard three-pass aggregation; isolated blocks stay unaggregated.
fn aggregate(graph: &[Vec<usize>]) -> (Vec<Option<usize>>, usize) {
    let n = graph.len();
    let mut agg: Vec<Option<usize>> = vec![None; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i].is_some() || graph[i].is_empty() || graph[i].iter().any(|&j| agg[j].is_some()) {
            continue;
        }
        agg[i] = Some(count);
        for &j in &graph[i] {
            agg[j] = Some(count);
        }
        count += 1;
    }
    let first = agg.clone();
    for i in 0..n {
        if agg[i].is_none() && !graph[i].is_empty() {
            agg[i] = graph[i].iter().find_map(|&j| first[j]);
        }
    }
    for i in 0..n {
        if agg[i].is_some() || graph[i].is_empty() {
            continue;
        }
        agg[i] = Some(count);
        for &j in &graph[i] {
            if agg[j].is_none() {
                agg[j] = Some(count);
            }
        }
        count += 1;
    }
    (agg, count)
}

/// Largest eigenvalue of `D^-1 A` by power iteration.
fn spectral_radius(a: &Csr, dinv: &[f64]) -> f64 {
    let n = a.rows;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
    let mut y = vec![0.0; n];
    let mut rho = 1.0;
    for _ in 0..15 {
        a.mul_vec(&x, &mut y);
        for (yi, d) in y.iter_mut().zip(dinv) {
            *yi *= d;
        }
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ny == 0.0 || nx == 0.0 {
            break;
        }
        rho = ny / nx;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    rho
}

/// Smoothed prolongator `(I - w D^-1 A) P_tent`.
fn prolongator(a: &Csr, block: usize) -> Option<Csr> {
    let nb = a.rows / block;
    let (agg, n_agg) = aggregate(&strength_graph(a, block));
    if n_agg == 0 || n_agg == nb {
        return None;
    }
    // decoupled dofs (identity rows from constraints) stay out of the coarse space
    let decoupled: Vec<bool> = (0..a.rows)
        .map(|i| (a.ptr[i]..a.ptr[i + 1]).all(|k| a.idx[k] == i))
        .collect();
    let mut size = vec![0usize; n_agg * block];
    for i in 0..a.rows {
        if let Some(g) = agg[i / block] {
            if !decoupled[i] {
                size[g * block + i % block] += 1;
            }
        }
    }
    // empty columns are kept so every coarse block has `block` dofs
    let n_cols = n_agg * block;
    let mut ptr = vec![0];
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for i in 0..a.rows {
        if let Some(g) = agg[i / block] {
            let c = g * block + i % block;
            if !decoupled[i] {
                idx.push(c);
                val.push(1.0 / (size[c] as f64).sqrt());
            }
        }
        ptr.push(idx.len());
    }
    let tent = Csr {
        rows: a.rows,
        cols: n_cols,
        ptr,
        idx,
        val,
    };
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let omega = 4.0 / 3.0 / spectral_radius(a, &dinv);
    let mut s = a.clone();
    for i in 0..s.rows {
        for k in s.ptr[i]..s.ptr[i + 1] {
            s.val[k] *= -omega * dinv[i];
            if s.idx[k] == i {
                s.val[k] += 1.0;
            }
        }
    }
    Some(s.matmul(&tent))
}

struct Level {
    a: Csr,
    p: Csr,
    r: Csr,
    diag: Vec<f64>,
}

/// Dense Cholesky factor of the coarsest matrix.
struct Dense {
    n: usize,
    l: Vec<f64>,
}

impl Dense {
    fn new(a: &Csr) -> Self {
        let n = a.rows;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for k in a.ptr[i]..a.ptr[i + 1] {
                m[i * n + a.idx[k]] = a.val[k];
            }
        }
        for i in 0..n {
            if (0..n).all(|j| m[i * n + j] == 0.0) {
                m[i * n + i] = 1.0;
            }
        }
        let scale = (0..n)
            .map(|i| m[i * n + i].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        loop {
            if let Some(l) = Self::factor(&m, n, shift) {
                return Self { n, l };
            }
            shift = if shift == 0.0 {
                1e-12 * scale
            } else {
                shift * 100.0
            };
        }
    }

    fn factor(m: &[f64], n: usize, shift: f64) -> Option<Vec<f64>> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let d = m[j * n + j] + shift - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let s = m[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                l[i * n + j] = s / d;
            }
        }
        Some(l)
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let s = b[i] - (0..i).map(|k| self.l[i * n + k] * x[k]).sum::<f64>();
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s = x[i] - (i + 1..n).map(|k| self.l[k * n + i] * x[k]).sum::<f64>();
            x[i] = s / self.l[i * n + i];
        }
    }
}

pub(crate) struct Amg {
    levels: Vec<Level>,
    coarse: Dense,
}

impl Amg {
    /// Builds the hierarchy; `block` must divide the matrix size.
    pub(crate) fn new(a: &CsrMatrix, block: usize) -> Self {
        assert!(
            block > 0 && a.n % block == 0,
            "block size {block} does not divide {}",
            a.n
        );
        let mut levels = Vec::new();
        let mut current = Csr::from_square(a);
        while current.rows > COARSE_SIZE && levels.len() < MAX_LEVELS {
            let Some(p) = prolongator(&current, block) else {
                break;
            };
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p));
            let diag = current.diagonal();
            levels.push(Level {
                a: current,
                p,
                r,
                diag,
            });
            current = coarse;
        }
        Self {
            levels,
            coarse: Dense::new(&current),
        }
    }

    fn gauss_seidel(a: &Csr, diag: &[f64], b: &[f64], x: &mut [f64], forward: bool) {
        let sweep = |i: usize, x: &mut [f64]| {
            if diag[i] == 0.0 {
                return;
            }
            let mut s = b[i];
            for k in a.ptr[i]..a.ptr[i + 1] {
                let j = a.idx[k];
                if j != i {
                    s -= a.val[k] * x[j];
                }
            }
            x[i] = s / diag[i];
        };
        if forward {
            (0..a.rows).for_each(|i| sweep(i, x));
        } else {
            (0..a.rows).rev().for_each(|i| sweep(i, x));
        }
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        let Some(l) = self.levels.get(level) else {
            self.coarse.solve(b, x);
            return;
        };
        x.iter_mut().for_each(|v| *v = 0.0);
        Self::gauss_seidel(&l.a, &l.diag, b, x, true);
        let mut r = vec![0.0; l.a.rows];
        l.a.mul_vec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut rc = vec![0.0; l.r.rows];
        l.r.mul_vec(&r, &mut rc);
        let mut xc = vec![0.0; l.r.rows];
        self.cycle(level + 1, &rc, &mut xc);
        l.p.mul_vec_add(&xc, x);
        Self::gauss_seidel(&l.a, &l.diag, b, x, false);
    }

    #[cfg(test)]
    pub(crate) fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }
}

impl super::solver::Preconditioner for Amg {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn transpose_and_product() {
        let a = Csr::from_square(&laplace_1d(5));
        let at = a.transpose();
        assert_eq!(at.ptr, a.ptr);
        assert_eq!(at.val, a.val);
        let a2 = a.matmul(&a);
        // (A^2)_{2,2} = 1 + 4 + 1
        let k = (a2.ptr[2]..a2.ptr[3]).find(|&k| a2.idx[k] == 2).unwrap();
        assert_eq!(a2.val[k], 6.0);
        assert_eq!(a2.ptr[3] - a2.ptr[2], 5);
    }

    #[test]
    fn hierarchy_coarsens() {
        let amg = Amg::new(&laplace_1d(5000), 1);
        assert!(amg.n_levels() >= 3);
        assert!(amg.coarse.n <= COARSE_SIZE);
    }

    #[test]
    fn aggregates_cover_connected_nodes() {
        let graph: Vec<Vec<usize>> = (0..10usize)
            .map(|i| {
                [i.wrapping_sub(1), i + 1]
                    .into_iter()
                    .filter(|&j| j < 10)
                    .collect()
            })
            .collect();
        let (agg, n) = aggregate(&graph);
        assert!(agg.iter().all(Option::is_some));
        assert!(n >= 3 && n <= 5);
    }
}
