//! Krylov solvers: preconditioned CG with incomplete Cholesky or algebraic
//! multigrid for SPD systems, restarted GMRES with ILU(k) for general ones.
//! The incomplete factorizations run on a reverse Cuthill-McKee reordering
//! of the matrix.

use std::collections::VecDeque;

use super::amg::Amg;
use super::sparse::{dot, norm, CsrMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// CG with incomplete Cholesky.
    Spd,
    /// CG with a smoothed-aggregation multigrid V-cycle; `block` dofs per node.
    SpdMultigrid {
        block: usize,
    },
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `|Ax - b| / |b|`.
    pub tol: f64,
    pub max_iter: usize,
    /// GMRES restart length.
    pub restart: usize,
    /// Level of fill of the incomplete LU used by GMRES.
    pub fill: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            restart: 150,
            fill: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b`. `x0` is an optional initial guess.
pub fn solve(
    a: &CsrMatrix,
    b: &[f64],
    kind: SolverKind,
    opts: &SolverOptions,
    x0: Option<&[f64]>,
) -> Result<SolveStats> {
    if b.len() != a.n || x0.is_some_and(|x| x.len() != a.n) {
        return Err(Error::Input(format!(
            "vector length does not match a {0}x{0} matrix",
            a.n
        )));
    }
    let bnorm = norm(b);
    if a.n == 0 || bnorm == 0.0 {
        return Ok(SolveStats {
            x: vec![0.0; a.n],
            iterations: 0,
            residual: 0.0,
        });
    }
    if let SolverKind::SpdMultigrid { block } = kind {
        if block == 0 || a.n % block != 0 {
            return Err(Error::Input(format!(
                "block size {block} does not divide {}",
                a.n
            )));
        }
        let x = x0.map_or_else(|| vec![0.0; a.n], <[f64]>::to_vec);
        return pcg(a, b, x, &Amg::new(a, block), opts);
    }
    let perm = rcm(a);
    let pa = a.permute(&perm);
    let pb: Vec<f64> = perm.iter().map(|&o| b[o]).collect();
    let px: Vec<f64> = match x0 {
        Some(x) => perm.iter().map(|&o| x[o]).collect(),
        None => vec![0.0; a.n],
    };
    let stats = match kind {
        SolverKind::Spd => pcg(&pa, &pb, px, &Ic0::new(&pa), opts)?,
        SolverKind::General => gmres(&pa, &pb, px, &Ilu::new(&pa, opts.fill), opts)?,
        SolverKind::SpdMultigrid { .. } => unreachable!("handled above"),
    };
    let mut x = vec![0.0; a.n];
    for (new, &old) in perm.iter().enumerate() {
        x[old] = stats.x[new];
    }
    Ok(SolveStats { x, ..stats })
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern; `perm[new] = old`.
pub fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    let bfs_levels = |start: usize, seen: &mut Vec<bool>| -> (usize, usize) {
        // returns (depth, a minimum-degree node on the last level)
        let mut level = vec![start];
        seen[start] = true;
        let mut touched = vec![start];
        let mut depth = 0;
        loop {
            let mut next = Vec::new();
            for &u in &level {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        touched.push(v);
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                let far = *level.iter().min_by_key(|&&u| (degree[u], u)).unwrap();
                for t in touched {
                    seen[t] = false;
                }
                return (depth, far);
            }
            depth += 1;
            level = next;
        }
    };

    let mut scratch = vec![false; n];
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut depth, mut far) = bfs_levels(start, &mut scratch);
        for _ in 0..8 {
            let (d2, f2) = bfs_levels(far, &mut scratch);
            if d2 <= depth {
                break;
            }
            start = far;
            depth = d2;
            far = f2;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

pub(crate) trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Zero fill-in incomplete Cholesky, `A ~ L L^T`, with a diagonal shift
/// retried until all pivots are positive.
struct Ic0 {
    l: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ic0 {
    fn new(a: &CsrMatrix) -> Self {
        let mut rows = Vec::with_capacity(a.n);
        for i in 0..a.n {
            let mut r: Vec<usize> = a.row(i).0.iter().copied().filter(|&j| j <= i).collect();
            if r.last() != Some(&i) {
                r.push(i);
            }
            rows.push(r);
        }
        let mut l = CsrMatrix::from_pattern(a.n, rows).expect("lower pattern of a valid matrix");
        let diag_pos: Vec<usize> = (0..a.n).map(|i| l.row_ptr[i + 1] - 1).collect();
        let mut shift = 0.0;
        loop {
            if Self::factor(a, &mut l, &diag_pos, shift) {
                return Self { l, diag_pos };
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 4.0 };
            if shift > 1e3 {
                // give up on the factorization; fall back to Jacobi
                for i in 0..a.n {
                    let lo = l.row_ptr[i];
                    l.values[lo..diag_pos[i]].iter_mut().for_each(|v| *v = 0.0);
                    let d = a.get(i, i).abs();
                    l.values[diag_pos[i]] = if d > 0.0 { d.sqrt() } else { 1.0 };
                }
                return Self { l, diag_pos };
            }
        }
    }

    fn factor(a: &CsrMatrix, l: &mut CsrMatrix, diag_pos: &[usize], shift: f64) -> bool {
        for i in 0..a.n {
            let lo = l.row_ptr[i];
            for k in lo..l.row_ptr[i + 1] {
                let j = l.col_idx[k];
                let mut v = a.get(i, j);
                if i == j {
                    v *= 1.0 + shift;
                }
                // sparse dot of rows i and j over columns < j
                let (mut p, mut q) = (lo, l.row_ptr[j]);
                while p < k && q < diag_pos[j] {
                    let (cp, cq) = (l.col_idx[p], l.col_idx[q]);
                    if cp == cq {
                        v -= l.values[p] * l.values[q];
                        p += 1;
                        q += 1;
                    } else if cp < cq {
                        p += 1;
                    } else {
                        q += 1;
                    }
                }
                if i == j {
                    if v <= 0.0 || !v.is_finite() {
                        return false;
                    }
                    l.values[k] = v.sqrt();
                } else {
                    l.values[k] = v / l.values[diag_pos[j]];
                }
            }
        }
        true
    }
}

impl Preconditioner for Ic0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let l = &self.l;
        for i in 0..l.n {
            let mut s = r[i];
            for k in l.row_ptr[i]..self.diag_pos[i] {
                s -= l.values[k] * z[l.col_idx[k]];
            }
            z[i] = s / l.values[self.diag_pos[i]];
        }
        for i in (0..l.n).rev() {
            z[i] /= l.values[self.diag_pos[i]];
            let zi = z[i];
            for k in l.row_ptr[i]..self.diag_pos[i] {
                z[l.col_idx[k]] -= l.values[k] * zi;
            }
        }
    }
}

/// Incomplete LU with level-of-fill `k` stored in one matrix (unit lower part implied).
struct Ilu {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

/// Pattern of ILU(k): entries whose fill level does not exceed `k`.
fn fill_pattern(a: &CsrMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = a.n;
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n);
    // fill levels of the upper part of each finished row
    let mut upper: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    for i in 0..n {
        let mut cols: Vec<usize> = a.row(i).0.to_vec();
        if cols.binary_search(&i).is_err() {
            cols.push(i);
        }
        for &c in &cols {
            level[c] = 0;
        }
        if k > 0 {
            let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = cols
                .iter()
                .filter(|&&c| c < i)
                .map(|&c| std::cmp::Reverse(c))
                .collect();
            let mut last = usize::MAX;
            while let Some(std::cmp::Reverse(c)) = heap.pop() {
                if c == last {
                    continue;
                }
                last = c;
                let lc = level[c];
                for &(j, lj) in &upper[c] {
                    let l = lc + lj + 1;
                    if l > k {
                        continue;
                    }
                    if level[j] == usize::MAX {
                        cols.push(j);
                        if j < i {
                            heap.push(std::cmp::Reverse(j));
                        }
                    }
                    level[j] = level[j].min(l);
                }
            }
        }
        cols.sort_unstable();
        cols.dedup();
        upper.push(
            cols.iter()
                .filter(|&&c| c > i)
                .map(|&c| (c, level[c]))
                .collect(),
        );
        for &c in &cols {
            level[c] = usize::MAX;
        }
        rows.push(cols);
    }
    rows
}

impl Ilu {
    fn new(a: &CsrMatrix, k: usize) -> Self {
        let n = a.n;
        let mut lu =
            CsrMatrix::from_pattern(n, fill_pattern(a, k)).expect("pattern of a valid matrix");
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                *lu.entry_mut(i, j).unwrap() = v;
            }
        }
        let diag_pos: Vec<usize> = (0..n).map(|i| lu.find(i, i).unwrap()).collect();
        let scale = a
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut pos_in_row = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in lo..hi {
                pos_in_row[lu.col_idx[k]] = k;
            }
            for k in lo..diag_pos[i] {
                let c = lu.col_idx[k];
                let f = lu.values[k] / lu.values[diag_pos[c]];
                lu.values[k] = f;
                for m in diag_pos[c] + 1..lu.row_ptr[c + 1] {
                    let p = pos_in_row[lu.col_idx[m]];
                    if p != usize::MAX {
                        lu.values[p] -= f * lu.values[m];
                    }
                }
            }
            let d = &mut lu.values[diag_pos[i]];
            if d.abs() < 1e-14 * scale {
                *d = if *d < 0.0 {
                    -1e-14 * scale
                } else {
                    1e-14 * scale
                };
            }
            for k in lo..hi {
                pos_in_row[lu.col_idx[k]] = usize::MAX;
            }
        }
        Self { lu, diag_pos }
    }
}

impl Preconditioner for Ilu {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let m = &self.lu;
        for i in 0..m.n {
            let mut s = r[i];
            for k in m.row_ptr[i]..self.diag_pos[i] {
                s -= m.values[k] * z[m.col_idx[k]];
            }
            z[i] = s;
        }
        for i in (0..m.n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..m.row_ptr[i + 1] {
                s -= m.values[k] * z[m.col_idx[k]];
            }
            z[i] = s / m.values[self.diag_pos[i]];
        }
    }
}

fn residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    m: &impl Preconditioner,
    opts: &SolverOptions,
) -> Result<SolveStats> {
    let n = a.n;
    let bnorm = norm(b);
    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    for it in 0..opts.max_iter {
        if rel <= opts.tol {
            return Ok(SolveStats {
                x,
                iterations: it,
                residual: rel,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            break;
        }
        if rel <= opts.tol {
            // confirm against the true residual to guard against drift
            residual(a, b, &x, &mut r);
            rel = norm(&r) / bnorm;
            if rel <= opts.tol {
                return Ok(SolveStats {
                    x,
                    iterations: it + 1,
                    residual: rel,
                });
            }
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    residual(a, b, &x, &mut r);
    Err(Error::SolverDivergence {
        iterations: opts.max_iter,
        residual: norm(&r) / bnorm,
    })
}

/// Right-preconditioned restarted GMRES, so the monitored residual is the
/// residual of the original system.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    m: &impl Preconditioner,
    opts: &SolverOptions,
) -> Result<SolveStats> {
    let n = a.n;
    let restart = opts.restart.max(1);
    let bnorm = norm(b);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut h = vec![vec![0.0; restart]; restart + 1];
    let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
    let mut g = vec![0.0; restart + 1];

    loop {
        residual(a, b, &x, &mut r);
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(SolveStats {
                x,
                iterations: total,
                residual: rel,
            });
        }
        if total >= opts.max_iter || !rel.is_finite() {
            return Err(Error::SolverDivergence {
                iterations: total,
                residual: rel,
            });
        }
        v.clear();
        v.push(r.iter().map(|ri| ri / beta).collect());
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            m.apply(&v[k], &mut z);
            a.mul_vec_into(&z, &mut w);
            for (j, vj) in v.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            let est = g[k + 1].abs() / bnorm;
            if est <= opts.tol * 0.5 || hn == 0.0 || total >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        if k_used == 0 {
            return Err(Error::SolverDivergence {
                iterations: total,
                residual: rel,
            });
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (u, vj) in update.iter_mut().zip(&v[j]) {
                *u += yj * vj;
            }
        }
        m.apply(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}
