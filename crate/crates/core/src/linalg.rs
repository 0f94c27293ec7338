//! Gaussian elimination over the symbol field.
//!
//! Matrices whose entries all lie in `F_q` stay in `F_q` under elimination, so
//! the same routines serve both levels of the tower.

use crate::galois::{FieldTower, Symbol};

pub type Matrix = Vec<Vec<Symbol>>;

/// Reduces `m` to reduced row echelon form in place and returns the pivot
/// columns.
pub fn rref(f: &FieldTower, m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pivot) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pivot);
        let inv = f.inv(m[r][c]).expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c];
            for (x, &y) in row.iter_mut().zip(&pivot_row) {
                *x = f.sub(*x, f.mul(factor, y));
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(f: &FieldTower, mut m: Matrix) -> usize {
    rref(f, &mut m).len()
}

pub fn inverse(f: &FieldTower, m: Matrix) -> Option<Matrix> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return None;
    }
    let mut aug: Matrix = m
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| if i == j { Symbol::ONE } else { Symbol::ZERO }));
            row
        })
        .collect();
    let pivots = rref(f, &mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Basis of `{x : m·x = 0}`, one vector per free column in increasing order.
pub fn nullspace(f: &FieldTower, mut m: Matrix) -> Vec<Vec<Symbol>> {
    let cols = m.first().map_or(0, Vec::len);
    let pivots = rref(f, &mut m);
    free_columns(cols, &pivots)
        .map(|free| {
            let mut v = vec![Symbol::ZERO; cols];
            v[free] = Symbol::ONE;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(m[row][free]);
            }
            v
        })
        .collect()
}

fn free_columns(cols: usize, pivots: &[usize]) -> impl Iterator<Item = usize> + '_ {
    (0..cols).filter(move |c| !pivots.contains(c))
}

/// Solution set of `m·x = rhs`: a particular solution plus a nullspace basis.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    pub particular: Vec<Symbol>,
    pub nullspace: Vec<Vec<Symbol>>,
}

/// Returns `None` when the system is inconsistent.
pub fn solve_affine(f: &FieldTower, m: &Matrix, rhs: &[Symbol]) -> Option<AffineSolution> {
    let cols = m.first().map_or(0, Vec::len);
    let mut aug: Matrix = m
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut row = row.clone();
            row.push(b);
            row
        })
        .collect();
    let pivots = rref(f, &mut aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut particular = vec![Symbol::ZERO; cols];
    for (row, &pc) in pivots.iter().enumerate() {
        particular[pc] = aug[row][cols];
    }
    let nullspace = free_columns(cols, &pivots)
        .map(|free| {
            let mut v = vec![Symbol::ZERO; cols];
            v[free] = Symbol::ONE;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(aug[row][free]);
            }
            v
        })
        .collect();
    Some(AffineSolution {
        particular,
        nullspace,
    })
}

pub fn mat_vec(f: &FieldTower, m: &Matrix, v: &[Symbol]) -> Vec<Symbol> {
    m.iter()
        .map(|row| f.sum(row.iter().zip(v).map(|(&a, &b)| f.mul(a, b))))
        .collect()
}
