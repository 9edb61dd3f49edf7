//! Dense symmetric derivative tensors of order 3 and 4.
//!
//! Dimensions stay tiny (d ≤ 5 in practice), so full dense storage wins over
//! any packed scheme.

use nalgebra::DMatrix;

/// Dense order-3 tensor, `d^3` entries, row-major `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub d: usize,
    pub v: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            v: vec![0.0; d * d * d],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.v[(i * self.d + j) * self.d + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, x: f64) {
        self.v[(i * self.d + j) * self.d + k] = x;
    }

    /// Fills all index permutations of `(i, j, k)` with `x`.
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, x: f64) {
        for (a, b, c) in [
            (i, j, k),
            (i, k, j),
            (j, i, k),
            (j, k, i),
            (k, i, j),
            (k, j, i),
        ] {
            self.set(a, b, c, x);
        }
    }

    /// Vector `u_k = T(a, b, e_k)`.
    pub fn contract2(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut out = vec![0.0; d];
        for i in 0..d {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += ab * self.get(i, j, k);
                }
            }
        }
        out
    }

    /// Scalar `T(a, b, c)`.
    pub fn contract3(&self, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
        self.contract2(a, b)
            .iter()
            .zip(c)
            .map(|(u, ci)| u * ci)
            .sum()
    }

    /// Matrix slice `M_ij = Σ_k T_ijk c_k` (the directional derivative of the
    /// Hessian along `c`).
    pub fn contract_last(&self, c: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|k| self.get(i, j, k) * c[k]).sum()
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            d: self.d,
            v: self.v.iter().map(|x| s * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            d: self.d,
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest asymmetry over index permutations, for invariant checks.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.d;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let x = self.get(i, j, k);
                    worst = worst.max((x - self.get(j, i, k)).abs());
                    worst = worst.max((x - self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }
}

/// Dense order-4 tensor, `d^4` entries, row-major `(i, j, k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub d: usize,
    pub v: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            v: vec![0.0; d * d * d * d],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.v[((i * self.d + j) * self.d + k) * self.d + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, x: f64) {
        self.v[((i * self.d + j) * self.d + k) * self.d + l] = x;
    }

    /// Fills all 24 index permutations of `(i, j, k, l)` with `x`.
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, l: usize, x: f64) {
        let mut idx = [i, j, k, l];
        // Heap's algorithm unrolled is overkill; permutations of 4 indices.
        let perms = [
            [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
            [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
            [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
            [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
        ];
        let orig = idx;
        for p in perms {
            idx = [orig[p[0]], orig[p[1]], orig[p[2]], orig[p[3]]];
            self.set(idx[0], idx[1], idx[2], idx[3], x);
        }
    }

    /// Scalar `T(a, b, c, e)`.
    pub fn contract4(&self, a: &[f64], b: &[f64], c: &[f64], e: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for i in 0..d {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let abc = ab * c[k];
                    if abc == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        acc += abc * e[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        acc
    }

    /// Matrix `M_ij = T(e_i, e_j, c, e)`.
    pub fn contract_last2(&self, c: &[f64], e: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_fn(d, d, |i, j| {
            let mut acc = 0.0;
            for k in 0..d {
                if c[k] == 0.0 {
                    continue;
                }
                for l in 0..d {
                    acc += c[k] * e[l] * self.get(i, j, k, l);
                }
            }
            acc
        })
    }

    /// Congruence transform on every index: `out_{ijkl} = T_{abcd} M_{ai} M_{bj} M_{ck} M_{dl}`
    /// (columns of `M` act on each slot). Done one slot at a time.
    pub fn congruence(&self, m: &DMatrix<f64>) -> Tensor4 {
        let d = self.d;
        let mut cur = self.v.clone();
        // Transform the last index, then rotate indices (i,j,k,l) -> (l,i,j,k)
        // four times; after four passes the layout is back to (i,j,k,l).
        for _ in 0..4 {
            let mut next = vec![0.0; cur.len()];
            for base in 0..d * d * d {
                let row = &cur[base * d..(base + 1) * d];
                for new_l in 0..d {
                    let mut acc = 0.0;
                    for old_l in 0..d {
                        acc += row[old_l] * m[(old_l, new_l)];
                    }
                    // rotate: position of (i,j,k,new_l) in the rotated layout
                    // (new_l, i, j, k)
                    next[new_l * d * d * d + base] = acc;
                }
            }
            cur = next;
        }
        Tensor4 { d, v: cur }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            d: self.d,
            v: self.v.iter().map(|x| s * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            d: self.d,
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        let d = self.d;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let x = self.get(i, j, k, l);
                        worst = worst.max((x - self.get(j, i, k, l)).abs());
                        worst = worst.max((x - self.get(i, j, l, k)).abs());
                        worst = worst.max((x - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}
