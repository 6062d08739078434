//! Exact linear algebra over the rationals.
//!
//! Homology ranks, cycle independence and the kernel of the cycle coefficient
//! matrix are decided here without floating point. The sparse eliminator
//! favours rows with a single remaining target column (a face sweep, in
//! mesh terms), which keeps fill-in confined to the few columns that are never
//! pivoted.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Sparse row-reduction state.
#[derive(Debug, Clone)]
pub struct SparseEliminator {
    rows: Vec<BTreeMap<usize, Rational>>,
    live: Vec<bool>,
    col_rows: Vec<BTreeSet<usize>>,
}

/// Result of eliminating a set of target columns.
#[derive(Debug, Clone, Default)]
pub struct Elimination {
    /// `(column, row)` pairs in pivot order.
    pub pivots: Vec<(usize, usize)>,
    /// Target columns that no remaining row could eliminate.
    pub free: Vec<usize>,
}

impl SparseEliminator {
    pub fn new(ncols: usize, rows: Vec<Vec<(usize, Rational)>>) -> Self {
        let mut col_rows = vec![BTreeSet::new(); ncols];
        let rows: Vec<BTreeMap<usize, Rational>> = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let mut m = BTreeMap::new();
                for (c, v) in r {
                    let e = m.entry(c).or_insert_with(Rational::zero);
                    *e += v;
                }
                m.retain(|_, v: &mut Rational| !v.is_zero());
                for &c in m.keys() {
                    col_rows[c].insert(i);
                }
                m
            })
            .collect();
        let live = vec![true; rows.len()];
        Self {
            rows,
            live,
            col_rows,
        }
    }

    /// Convenience constructor for small integer matrices.
    pub fn from_integer_rows(ncols: usize, rows: &[Vec<(usize, i64)>]) -> Self {
        Self::new(
            ncols,
            rows.iter()
                .map(|r| r.iter().map(|&(c, v)| (c, rat(v))).collect())
                .collect(),
        )
    }

    pub fn ncols(&self) -> usize {
        self.col_rows.len()
    }

    /// Row-reduces until every column of `targets` is either a pivot or has
    /// no nonzero in any live row.
    pub fn eliminate(&mut self, targets: &[usize]) -> Elimination {
        let mut is_target = vec![false; self.ncols()];
        for &c in targets {
            is_target[c] = true;
        }
        let mut remaining: BTreeSet<usize> = targets.iter().copied().collect();
        let mut tcount: Vec<usize> = self
            .rows
            .iter()
            .map(|r| r.keys().filter(|&&c| is_target[c]).count())
            .collect();
        let mut singles: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.live[r] && tcount[r] == 1)
            .rev()
            .collect();
        let mut out = Elimination::default();

        loop {
            let mut choice = None;
            while let Some(r) = singles.pop() {
                if self.live[r] && tcount[r] == 1 {
                    let c = *self.rows[r].keys().find(|&&c| is_target[c]).unwrap();
                    choice = Some((r, c));
                    break;
                }
            }
            if choice.is_none() {
                // no singleton row: take the sparsest target column
                let mut best: Option<(usize, usize)> = None;
                let mut empty = Vec::new();
                for &c in &remaining {
                    let n = self.col_rows[c].len();
                    if n == 0 {
                        empty.push(c);
                    } else if best.is_none_or(|(bn, _)| n < bn) {
                        best = Some((n, c));
                    }
                }
                for c in empty {
                    remaining.remove(&c);
                    is_target[c] = false;
                    out.free.push(c);
                }
                let Some((_, c)) = best else { break };
                let r = *self.col_rows[c]
                    .iter()
                    .min_by_key(|&&r| (self.rows[r].len(), r))
                    .unwrap();
                choice = Some((r, c));
            }
            let (r, c) = choice.unwrap();
            self.pivot(r, c, &is_target, &mut tcount, &mut singles);
            remaining.remove(&c);
            is_target[c] = false;
            out.pivots.push((c, r));
        }
        out.free.sort_unstable();
        out
    }

    fn pivot(
        &mut self,
        r: usize,
        c: usize,
        is_target: &[bool],
        tcount: &mut [usize],
        singles: &mut Vec<usize>,
    ) {
        self.live[r] = false;
        let prow = std::mem::take(&mut self.rows[r]);
        for &j in prow.keys() {
            self.col_rows[j].remove(&r);
        }
        let pv = prow[&c].clone();
        let others: Vec<usize> = self.col_rows[c].iter().copied().collect();
        for k in others {
            let factor = &self.rows[k][&c] / &pv;
            for (&j, v) in &prow {
                let delta = &factor * v;
                let row = &mut self.rows[k];
                let was_present = row.contains_key(&j);
                let new = match row.get(&j) {
                    Some(old) => old - &delta,
                    None => -delta,
                };
                if new.is_zero() {
                    if was_present {
                        row.remove(&j);
                        self.col_rows[j].remove(&k);
                        if is_target[j] {
                            tcount[k] -= 1;
                        }
                    }
                } else {
                    row.insert(j, new);
                    if !was_present {
                        self.col_rows[j].insert(k);
                        if is_target[j] {
                            tcount[k] += 1;
                        }
                    }
                }
            }
            if tcount[k] == 1 {
                singles.push(k);
            }
        }
        // the pivot row keeps its values for back-substitution by callers
        self.rows[r] = prow;
    }

    /// Rows that have not been used as pivots and are not identically zero.
    pub fn live_rows(&self) -> impl Iterator<Item = (usize, &BTreeMap<usize, Rational>)> {
        self.rows
            .iter()
            .enumerate()
            .filter(move |(i, r)| self.live[*i] && !r.is_empty())
    }
}

/// Rank of a sparse matrix given by rows.
pub fn sparse_rank(ncols: usize, rows: Vec<Vec<(usize, Rational)>>) -> usize {
    let mut el = SparseEliminator::new(ncols, rows);
    let all: Vec<usize> = (0..ncols).collect();
    el.eliminate(&all).pivots.len()
}

/// Rank of an integer CSR matrix.
pub fn integer_rank(m: &crate::sparse::CsrMatrix<i32>) -> usize {
    let rows = (0..m.nrows())
        .map(|i| {
            let (c, v) = m.row(i);
            c.iter().zip(v).map(|(&c, &v)| (c, rat(v as i64))).collect()
        })
        .collect();
    sparse_rank(m.ncols(), rows)
}

/// Reduced row echelon form of a dense matrix; returns the pivot columns.
pub fn rref(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let nrows = m.len();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = &*x / &pv;
        }
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..ncols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn dense_rank(m: &[Vec<Rational>]) -> usize {
    let mut w = m.to_vec();
    rref(&mut w).len()
}

/// Basis of the right kernel `{x : M x = 0}` of an `nrows x ncols` matrix.
pub fn nullspace(m: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut w = m.to_vec();
    let pivots = rref(&mut w);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut x = vec![Rational::zero(); ncols];
            x[fc] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = -w[row][fc].clone();
            }
            x
        })
        .collect()
}

/// Scales a rational vector to the primitive integer vector along it.
pub fn primitive_integer(v: &[Rational]) -> Vec<BigInt> {
    use num_integer::Integer;
    let lcm = v.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| (q * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &gcd).collect()
}

pub fn is_zero_vector(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn abs_max(v: &[Rational]) -> Rational {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}
