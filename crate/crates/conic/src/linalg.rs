//! Sparse LDLᵀ factorization for symmetric quasi-definite systems.
//!
//! The matrix is stored as a full symmetric CSC pattern. A minimum-degree
//! ordering is computed once per pattern, followed by an elimination-tree
//! symbolic pass; numeric refactorization reuses both.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

/// Full (both triangles) symmetric matrix in compressed sparse column form.
#[derive(Debug, Clone)]
pub(crate) struct SymCsc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymCsc {
    /// Builds from upper-or-lower triplets; each off-diagonal entry is
    /// mirrored. Duplicates are summed. Returns the matrix and, for every
    /// input triplet, the positions of its stored copies (one for diagonal,
    /// two for off-diagonal entries).
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> (Self, Vec<[usize; 2]>) {
        let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(2 * triplets.len() + n);
        for (t, &(i, j, _)) in triplets.iter().enumerate() {
            entries.push((j, i, t));
            if i != j {
                entries.push((i, j, t));
            }
        }
        // Always keep a structural diagonal.
        for d in 0..n {
            entries.push((d, d, usize::MAX));
        }
        entries.sort_unstable_by_key(|&(c, r, _)| (c, r));
        let mut colptr = vec![0usize; n + 1];
        let mut rowidx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut slots = vec![[usize::MAX; 2]; triplets.len()];
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, t) in &entries {
            if last != Some((c, r)) {
                rowidx.push(r);
                values.push(0.0);
                colptr[c + 1] += 1;
                last = Some((c, r));
            }
            let pos = rowidx.len() - 1;
            if t != usize::MAX {
                let slot = &mut slots[t];
                if slot[0] == usize::MAX {
                    slot[0] = pos;
                } else {
                    slot[1] = pos;
                }
                values[pos] += triplets[t].2;
            }
        }
        for c in 0..n {
            colptr[c + 1] += colptr[c];
        }
        (
            SymCsc {
                n,
                colptr,
                rowidx,
                values,
            },
            slots,
        )
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            let xc = x[c];
            for p in self.colptr[c]..self.colptr[c + 1] {
                y[self.rowidx[p]] += self.values[p] * xc;
            }
        }
    }
}

/// Minimum-degree ordering of the adjacency graph of `m`.
pub(crate) fn minimum_degree(m: &SymCsc) -> Vec<usize> {
    let n = m.n;
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for c in 0..n {
        for p in m.colptr[c]..m.colptr[c + 1] {
            let r = m.rowidx[p];
            if r != c {
                adj[c].insert(r);
                adj[r].insert(c);
            }
        }
    }
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (a, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                if adj[u].insert(w) {
                    adj[w].insert(u);
                }
            }
        }
        for &u in &nbrs {
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    order
}

#[derive(Debug, Clone)]
pub(crate) struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    // workspace
    lnz: Vec<usize>,
    flag: Vec<usize>,
    pattern: Vec<usize>,
    y: Vec<f64>,
    /// Number of pivots replaced by the dynamic regularization in the last
    /// numeric factorization.
    pub bumped: usize,
}

const NONE: usize = usize::MAX;

impl LdlFactor {
    /// Ordering and symbolic analysis for the pattern of `m`.
    pub fn analyze(m: &SymCsc) -> Self {
        let n = m.n;
        let perm = minimum_degree(m);
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        let mut parent = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k];
            for p in m.colptr[kk]..m.colptr[kk + 1] {
                let mut i = iperm[m.rowidx[p]];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        LdlFactor {
            n,
            perm,
            iperm,
            parent,
            lp,
            li: vec![0; nnz],
            lx: vec![0.0; nnz],
            d: vec![0.0; n],
            lnz: vec![0; n],
            flag: vec![NONE; n],
            pattern: vec![0; n],
            y: vec![0.0; n],
            bumped: 0,
        }
    }

    /// Numeric factorization. `signs[i]` is the expected pivot sign of
    /// original index `i`; pivots with the wrong sign or magnitude below
    /// `eps` are replaced by `signs[i] * delta`.
    pub fn factor(&mut self, m: &SymCsc, signs: &[f64], eps: f64, delta: f64) {
        let n = self.n;
        self.bumped = 0;
        for k in 0..n {
            self.y[k] = 0.0;
            let mut top = n;
            self.flag[k] = k;
            self.lnz[k] = 0;
            let kk = self.perm[k];
            for p in m.colptr[kk]..m.colptr[kk + 1] {
                let mut i = self.iperm[m.rowidx[p]];
                if i <= k {
                    self.y[i] += m.values[p];
                    let mut len = 0;
                    while self.flag[i] != k {
                        self.pattern[len] = i;
                        len += 1;
                        self.flag[i] = k;
                        i = self.parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        self.pattern[top] = self.pattern[len];
                    }
                }
            }
            let mut dk = self.y[k];
            self.y[k] = 0.0;
            while top < n {
                let i = self.pattern[top];
                top += 1;
                let yi = self.y[i];
                self.y[i] = 0.0;
                let start = self.lp[i];
                let end = start + self.lnz[i];
                for p in start..end {
                    self.y[self.li[p]] -= self.lx[p] * yi;
                }
                let l_ki = yi / self.d[i];
                dk -= l_ki * yi;
                self.li[end] = k;
                self.lx[end] = l_ki;
                self.lnz[i] += 1;
            }
            let sign = signs[kk];
            if dk * sign <= eps {
                dk = sign * delta;
                self.bumped += 1;
            }
            self.d[k] = dk;
        }
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                xj -= self.lx[p] * x[self.li[p]];
            }
            x[j] = xj;
        }
        for k in 0..n {
            b[self.perm[k]] = x[k];
        }
    }
}
