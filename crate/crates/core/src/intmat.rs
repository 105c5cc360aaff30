//! Dense integer matrices: Smith normal form, determinants, kernels.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        IntMat {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scaled(&self, k: i64) -> IntMat {
        IntMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    /// Columns `idx` of `self`, in order.
    pub fn select_cols(&self, idx: &[usize]) -> IntMat {
        let mut out = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_alternating(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                self[(i, i)] == 0 && (0..i).all(|j| self[(i, j)] == -self[(j, i)])
            })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: i64) {
        if k != 0 {
            for j in 0..self.cols {
                let v = self[(src, j)];
                self[(dst, j)] += k * v;
            }
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, k: i64) {
        if k != 0 {
            for i in 0..self.rows {
                let v = self[(i, src)];
                self[(i, dst)] += k * v;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            self[(i, j)] = -self[(i, j)];
        }
    }

    /// Determinant by fraction-free elimination; panics on non-square input.
    pub fn det(&self) -> i64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return 1;
        }
        let mut m: Vec<Vec<i128>> = (0..n)
            .map(|i| self.row(i).iter().map(|&x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if m[k][k] == 0 {
                match (k + 1..n).find(|&i| m[i][k] != 0) {
                    Some(p) => {
                        m.swap(k, p);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
                m[i][k] = 0;
            }
            prev = m[k][k];
        }
        i64::try_from(sign * m[n - 1][n - 1]).expect("determinant overflows i64")
    }

    pub fn smith(&self) -> Smith {
        Smith::compute(self)
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        self.smith().rank()
    }

    /// A basis of the integer kernel `{x : A x = 0}` as the columns of the result.
    /// The kernel of an integer matrix is always a saturated sublattice.
    pub fn kernel(&self) -> IntMat {
        let s = self.smith();
        let r = s.rank();
        let idx: Vec<usize> = (r..self.cols).collect();
        s.v.select_cols(&idx)
    }

    /// Inverse of a unimodular matrix, `None` otherwise.
    pub fn unimodular_inverse(&self) -> Option<IntMat> {
        if self.rows != self.cols {
            return None;
        }
        let s = self.smith();
        if s.diagonal.iter().any(|&d| d != 1) {
            return None;
        }
        // U A V = I  =>  A^{-1} = V U
        Some(s.v.mul(&s.u))
    }

    /// Elementary divisors `d₁ | d₂ | …` of a nondegenerate alternating form.
    /// The Smith diagonal of such a form lists each divisor twice.
    pub fn symplectic_divisors(&self) -> Vec<i64> {
        assert!(self.is_alternating(), "form is not alternating");
        let s = self.smith();
        s.diagonal.iter().step_by(2).copied().collect()
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = i64;

    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `U · A · V = D` with `U`, `V` unimodular and `D` diagonal, `d₁ | d₂ | …`.
#[derive(Debug, Clone)]
pub struct Smith {
    /// Length `min(rows, cols)`; nonnegative, zeros trailing.
    pub diagonal: Vec<i64>,
    pub u: IntMat,
    pub v: IntMat,
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().take_while(|&&d| d != 0).count()
    }

    fn compute(a: &IntMat) -> Smith {
        let (m, n) = (a.rows, a.cols);
        let mut d = a.clone();
        let mut u = IntMat::identity(m);
        let mut v = IntMat::identity(n);
        let steps = m.min(n);
        for t in 0..steps {
            // smallest nonzero entry of the trailing block becomes the pivot
            let pivot = (t..m)
                .flat_map(|i| (t..n).map(move |j| (i, j)))
                .filter(|&(i, j)| d[(i, j)] != 0)
                .min_by_key(|&(i, j)| d[(i, j)].abs());
            let Some((pi, pj)) = pivot else { break };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            loop {
                let mut dirty = false;
                for i in t + 1..m {
                    let q = d[(i, t)].div_euclid(d[(t, t)]);
                    d.add_row(i, t, -q);
                    u.add_row(i, t, -q);
                    if d[(i, t)] != 0 {
                        dirty = true;
                    }
                }
                for j in t + 1..n {
                    let q = d[(t, j)].div_euclid(d[(t, t)]);
                    d.add_col(j, t, -q);
                    v.add_col(j, t, -q);
                    if d[(t, j)] != 0 {
                        dirty = true;
                    }
                }
                if !dirty {
                    // pivot must divide the rest of the block
                    let p = d[(t, t)];
                    let bad = (t + 1..m)
                        .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                        .find(|&(i, j)| d[(i, j)] % p != 0);
                    match bad {
                        None => break,
                        Some((i, _)) => {
                            d.add_row(t, i, 1);
                            u.add_row(t, i, 1);
                        }
                    }
                }
                // re-pivot on the smallest entry in row t / column t
                let best = (t..m)
                    .map(|i| (i, t))
                    .chain((t..n).map(|j| (t, j)))
                    .filter(|&(i, j)| d[(i, j)] != 0)
                    .min_by_key(|&(i, j)| d[(i, j)].abs())
                    .expect("pivot row and column cannot both vanish");
                if best.0 != t {
                    d.swap_rows(t, best.0);
                    u.swap_rows(t, best.0);
                } else if best.1 != t {
                    d.swap_cols(t, best.1);
                    v.swap_cols(t, best.1);
                }
            }
            if d[(t, t)] < 0 {
                d.negate_row(t);
                u.negate_row(t);
            }
        }
        let diagonal = (0..steps).map(|i| d[(i, i)]).collect();
        Smith { diagonal, u, v }
    }
}
