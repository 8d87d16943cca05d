//! Integer kernels of rational matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::basis::Rational;

/// A basis of `{k ∈ Z^n : Σ_j k_j * columns[j] = 0}` where each column is a
/// rational vector of common length.
///
/// Column-style Hermite reduction: unimodular column operations bring the
/// matrix to echelon form, and the transform columns beyond the rank span
/// the kernel. The result is size-reduced so vectors stay short.
pub fn integer_kernel(columns: &[Vec<Rational>]) -> Vec<Vec<i64>> {
    let n = columns.len();
    if n == 0 {
        return Vec::new();
    }
    let rows = columns[0].len();
    // Scale each row to integers.
    let mut m: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            let l = columns.iter().fold(1i64, |acc, c| acc.lcm(c[i].denom()));
            columns.iter().map(|c| BigInt::from(*c[i].numer() * (l / *c[i].denom()))).collect()
        })
        .collect();
    let mut u: Vec<Vec<BigInt>> =
        (0..n).map(|j| (0..n).map(|k| if j == k { BigInt::one() } else { BigInt::zero() }).collect()).collect(); // u[col] = column of the transform

    let mut pivot = 0;
    for i in 0..rows {
        if pivot == n {
            break;
        }
        loop {
            // Smallest nonzero |entry| among the active columns of row i.
            let best = (pivot..n).filter(|&j| !m[i][j].is_zero()).min_by(|&a, &b| m[i][a].abs().cmp(&m[i][b].abs()));
            let Some(b) = best else { break };
            swap_cols(&mut m, &mut u, pivot, b);
            let mut done = true;
            for j in pivot + 1..n {
                if m[i][j].is_zero() {
                    continue;
                }
                let q = m[i][j].div_floor(&m[i][pivot]);
                sub_col(&mut m, &mut u, j, pivot, &q);
                if !m[i][j].is_zero() {
                    done = false;
                }
            }
            if done {
                pivot += 1;
                break;
            }
        }
    }

    let mut kernel: Vec<Vec<BigInt>> = u[pivot..].to_vec();
    size_reduce(&mut kernel);
    kernel.into_iter().map(|v| v.iter().map(|x| x.to_i64().expect("kernel entry overflow")).collect()).collect()
}

fn swap_cols(m: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in m.iter_mut() {
        row.swap(a, b);
    }
    u.swap(a, b);
}

/// column[j] -= q * column[p]
fn sub_col(m: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], j: usize, p: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let d = &row[p] * q;
        row[j] -= d;
    }
    let (pc, jc) = if p < j {
        let (lo, hi) = u.split_at_mut(j);
        (&lo[p], &mut hi[0])
    } else {
        let (lo, hi) = u.split_at_mut(p);
        (&hi[0], &mut lo[j])
    };
    for (x, y) in jc.iter_mut().zip(pc) {
        *x -= y * q;
    }
}

fn l1(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).sum()
}

/// Greedy pairwise reduction: replace `v_i` by `v_i ± v_j` while that
/// shortens it in the l1 norm. Preserves the lattice.
fn size_reduce(vs: &mut [Vec<BigInt>]) {
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 1000 {
        changed = false;
        rounds += 1;
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                if i == j {
                    continue;
                }
                for sign in [1, -1] {
                    let cand: Vec<BigInt> = vs[i].iter().zip(&vs[j]).map(|(a, b)| a - b * BigInt::from(sign)).collect();
                    if l1(&cand) < l1(&vs[i]) {
                        vs[i] = cand;
                        changed = true;
                    }
                }
            }
        }
    }
    for v in vs.iter_mut() {
        // Leading nonzero entry positive.
        if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            for x in v.iter_mut() {
                *x = -x.clone();
            }
        }
    }
}
