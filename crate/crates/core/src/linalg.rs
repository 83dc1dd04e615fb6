//! Small dense linear algebra over symbolic entries.

use std::fmt;

use nalgebra::DMatrix;

use crate::symexpr::{symbols_of, Expr, ExprError, Sym, ZeroTest};

#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl SymMatrix {
    pub fn zeros(rows: usize, cols: usize) -> SymMatrix {
        SymMatrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> SymMatrix {
        SymMatrix::from_fn(n, n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Expr) -> SymMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        SymMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn transpose(&self) -> SymMatrix {
        SymMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.cols, other.rows);
        SymMatrix::from_fn(self.rows, other.cols, |i, j| {
            Expr::add_all((0..self.cols).map(|k| self.get(i, k) * other.get(k, j)))
        })
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| Expr::add_all((0..self.cols).map(|k| self.get(i, k) * &v[k])))
            .collect()
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> SymMatrix {
        SymMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.data.iter().all(Expr::is_constant)
    }

    /// Exact determinant by cofactor expansion over column subsets (no
    /// division, so no rational-function swell).
    pub fn det(&self) -> Expr {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Expr::one();
        }
        let mut memo: Vec<Option<Expr>> = vec![None; 1 << n];
        memo[0] = Some(Expr::one());
        for mask in 1usize..(1 << n) {
            let k = mask.count_ones() as usize;
            let row = k - 1;
            let mut terms = Vec::new();
            let mut pos = 0;
            for j in 0..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let a = self.get(row, j);
                if !a.is_zero_structural() {
                    let sub = memo[mask & !(1 << j)].as_ref().unwrap();
                    if !sub.is_zero_structural() {
                        let t = a * sub;
                        terms.push(if (row + pos) % 2 == 1 { -t } else { t });
                    }
                }
                pos += 1;
            }
            memo[mask] = Some(Expr::add_all(terms));
        }
        memo[(1 << n) - 1].take().unwrap()
    }

    /// Numeric value with symbols supplied by `lookup`.
    pub fn eval(&self, lookup: &dyn Fn(Sym) -> Option<f64>) -> Result<DMatrix<f64>, ExprError> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).eval_raw(lookup)?;
            }
        }
        Ok(m)
    }

    /// Numeric ranks at seeded sample points (non-finite points skipped).
    pub fn sampled_ranks(&self, zt: &ZeroTest, points: usize) -> Result<Vec<usize>, ExprError> {
        let syms = symbols_of(&self.data);
        let mut out = Vec::new();
        for pt in zt.points(&syms, points) {
            let m = self.eval(&|s| syms.iter().position(|t| *t == s).map(|i| pt[i]))?;
            if m.iter().all(|v| v.is_finite()) {
                out.push(numeric_rank(&m, 1e-9));
            }
        }
        Ok(out)
    }

    /// Inverse by elimination; `None` when the matrix is singular.
    pub fn inverse(&self, zt: &ZeroTest) -> Result<Option<SymMatrix>, ExprError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut inv = SymMatrix::zeros(n, n);
        for j in 0..n {
            let e: Vec<Expr> = (0..n)
                .map(|i| if i == j { Expr::one() } else { Expr::zero() })
                .collect();
            let sol = solve(self, &e, zt)?;
            if sol.rank < n {
                return Ok(None);
            }
            for i in 0..n {
                inv.set(i, j, sol.particular[i].clone());
            }
        }
        Ok(Some(inv))
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

/// Rank from singular values above `rel_tol · σ_max`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Solution set of `A x = b`: `particular + span(kernel)`, valid where the
/// `obstructions` vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub particular: Vec<Expr>,
    pub kernel: Vec<Vec<Expr>>,
    pub obstructions: Vec<Expr>,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl LinearSolution {
    pub fn consistent(&self) -> bool {
        self.obstructions.is_empty()
    }
}

/// Gauss–Jordan elimination. Pivots are decided with `zt` (constant pivots
/// preferred); free variables are set to zero in the particular solution.
#[allow(clippy::needless_range_loop)]
pub fn solve(a: &SymMatrix, b: &[Expr], zt: &ZeroTest) -> Result<LinearSolution, ExprError> {
    assert_eq!(a.rows, b.len());
    let (rows, cols) = (a.rows, a.cols);
    let mut m: Vec<Vec<Expr>> = (0..rows)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut choice = None;
        for i in r..rows {
            if m[i][c].as_num().is_some_and(|q| !num_traits::Zero::is_zero(q)) {
                choice = Some(i);
                break;
            }
        }
        if choice.is_none() {
            for i in r..rows {
                if m[i][c].is_zero_structural() {
                    continue;
                }
                if zt.is_zero(&m[i][c])?.zero {
                    m[i][c] = Expr::zero();
                } else {
                    choice = Some(i);
                    break;
                }
            }
        }
        let Some(p) = choice else { continue };
        m.swap(r, p);
        let inv = m[r][c].powi(-1);
        for k in c..=cols {
            m[r][k] = &m[r][k] * &inv;
        }
        m[r][c] = Expr::one();
        for i in 0..rows {
            if i == r || m[i][c].is_zero_structural() {
                continue;
            }
            let f = m[i][c].clone();
            for k in c..=cols {
                let t = &m[r][k] * &f;
                m[i][k] = &m[i][k] - t;
            }
            m[i][c] = Expr::zero();
        }
        pivots.push(c);
        r += 1;
    }
    let rank = r;
    let mut obstructions = Vec::new();
    for row in m.iter().skip(rank) {
        let rhs = &row[cols];
        if !rhs.is_zero_structural() && !zt.is_zero(rhs)?.zero {
            obstructions.push(rhs.clone());
        }
    }
    let mut particular = vec![Expr::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        particular[c] = m[i][cols].clone();
    }
    let mut kernel = Vec::new();
    for f in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Expr::zero(); cols];
        v[f] = Expr::one();
        for (i, &c) in pivots.iter().enumerate() {
            v[c] = -&m[i][f];
        }
        kernel.push(v);
    }
    Ok(LinearSolution {
        particular,
        kernel,
        obstructions,
        rank,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: Sym) -> Expr {
        Expr::sym(x)
    }

    #[test]
    fn determinant_by_cofactors() {
        let m = SymMatrix::from_fn(2, 2, |i, j| if i == j { Expr::int([1, -1][i]) } else { Expr::zero() });
        assert_eq!(m.det(), Expr::int(-1));
        let ones = SymMatrix::from_fn(2, 2, |_, _| Expr::one());
        assert!(ones.det().is_zero_structural());
        let y = s(Sym::Y(1));
        let g = SymMatrix::from_fn(3, 3, |i, j| {
            Expr::int((i * 3 + j) as i64 % 4) + if i == j { y.clone() } else { Expr::zero() }
        });
        // spot-check against the numeric determinant
        let v = g.det().eval_with(&|_| Some(0.7)).unwrap();
        let n = g.eval(&|_| Some(0.7)).unwrap().determinant();
        assert!((v - n).abs() < 1e-12);
    }

    #[test]
    fn solve_reports_kernel_and_obstructions() {
        let zt = ZeroTest::default();
        // x + y = 1 (one equation, two unknowns)
        let a = SymMatrix::from_fn(1, 2, |_, _| Expr::one());
        let sol = solve(&a, &[Expr::one()], &zt).unwrap();
        assert_eq!(sol.rank, 1);
        assert_eq!(sol.kernel.len(), 1);
        assert!(sol.consistent());
        // x + y = 1, 2x + 2y = 3
        let a = SymMatrix::from_fn(2, 2, |i, _| Expr::int(i as i64 + 1));
        let sol = solve(&a, &[Expr::one(), Expr::int(3)], &zt).unwrap();
        assert_eq!(sol.obstructions, vec![Expr::one()]);
    }

    #[test]
    fn symbolic_inverse() {
        let zt = ZeroTest::default();
        let y = s(Sym::Y(1));
        let a = SymMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => y.clone(),
            (0, 1) => Expr::one(),
            (1, 0) => Expr::one(),
            _ => Expr::int(2),
        });
        let inv = a.inverse(&zt).unwrap().unwrap();
        let prod = a.mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { Expr::one() } else { Expr::zero() };
                assert!(zt.equal(prod.get(i, j), &target));
            }
        }
        let ones = SymMatrix::from_fn(2, 2, |_, _| Expr::one());
        assert!(ones.inverse(&zt).unwrap().is_none());
    }
}
