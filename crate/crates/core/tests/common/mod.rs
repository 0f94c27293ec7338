//! Test-side reference arithmetic, written without the library's tables.
#![allow(dead_code)]

use rmrepair::{FieldTower, Symbol};

/// `F_p[x]/(modulus)` on plain coefficient vectors, for prime-base towers.
/// Element `i` has coefficients given by the base-`p` digits of `i`, lowest
/// first, which is the index convention the library promises.
pub struct PolyField {
    pub p: u32,
    pub t: usize,
    /// Monic, constant coefficient first.
    pub modulus: Vec<u32>,
}

impl PolyField {
    pub fn new(p: u32, modulus: Vec<u32>) -> Self {
        let t = modulus.len() - 1;
        assert_eq!(modulus[t], 1);
        Self { p, t, modulus }
    }

    pub fn order(&self) -> u32 {
        self.p.pow(self.t as u32)
    }

    pub fn coeffs(&self, x: u32) -> Vec<u32> {
        let mut x = x;
        (0..self.t)
            .map(|_| {
                let c = x % self.p;
                x /= self.p;
                c
            })
            .collect()
    }

    pub fn index(&self, coeffs: &[u32]) -> u32 {
        coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn add(&self, x: u32, y: u32) -> u32 {
        let (a, b) = (self.coeffs(x), self.coeffs(y));
        self.index(
            &a.iter()
                .zip(&b)
                .map(|(u, v)| (u + v) % self.p)
                .collect::<Vec<_>>(),
        )
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        let (a, b) = (self.coeffs(x), self.coeffs(y));
        let mut prod = vec![0u32; 2 * self.t];
        for (i, &u) in a.iter().enumerate() {
            for (j, &v) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + u * v) % self.p;
            }
        }
        for deg in (self.t..prod.len()).rev() {
            let lead = prod[deg];
            if lead == 0 {
                continue;
            }
            for k in 0..=self.t {
                let sub = lead * self.modulus[k] % self.p;
                let slot = deg - self.t + k;
                prod[slot] = (prod[slot] + self.p - sub) % self.p;
            }
        }
        self.index(&prod[..self.t])
    }

    pub fn pow(&self, x: u32, e: u64) -> u32 {
        (0..e).fold(1, |acc, _| self.mul(acc, x))
    }

    /// `x + x^p + … + x^(p^(t−1))`, valid when the base field is `F_p`.
    pub fn trace(&self, x: u32) -> u32 {
        let mut acc = 0;
        let mut y = x;
        for _ in 0..self.t {
            acc = self.add(acc, y);
            y = self.pow(y, self.p as u64);
        }
        acc
    }

    /// Every nonzero element has an inverse, i.e. the modulus is irreducible.
    pub fn is_field(&self) -> bool {
        let n = self.order();
        (1..n).all(|x| (1..n).any(|y| self.mul(x, y) == 1))
    }
}

/// The smallest monic irreducible of degree `t` over `F_p`, comparing
/// coefficient tuples constant coefficient first.
pub fn smallest_irreducible(p: u32, t: usize) -> Vec<u32> {
    for rank in 0..p.pow(t as u32) {
        // Rank digits, most significant first, give the constant-first tuple.
        let mut coeffs: Vec<u32> = (0..t)
            .map(|k| rank / p.pow((t - 1 - k) as u32) % p)
            .collect();
        coeffs.push(1);
        if PolyField::new(p, coeffs.clone()).is_field() {
            return coeffs;
        }
    }
    panic!("no irreducible of degree {t} over F_{p}");
}

/// Point coordinates with the first coordinate most significant.
pub fn point_coords(order: usize, m: usize, index: usize) -> Vec<usize> {
    (0..m)
        .map(|j| index / order.pow((m - 1 - j) as u32) % order)
        .collect()
}

/// The multi-erasure condition checked from scratch: some coordinate on
/// which every pair of erased points differs by a nonzero base-field
/// element. Assumes a prime base field, so `F_q^*` is indices `1..p` after
/// subtracting in the reference field.
pub fn satisfies_condition(field: &PolyField, m: usize, erased: &[usize]) -> bool {
    let order = field.order() as usize;
    let coords: Vec<Vec<usize>> = erased.iter().map(|&e| point_coords(order, m, e)).collect();
    (0..m).any(|j| {
        coords.iter().enumerate().all(|(i, a)| {
            coords[i + 1..].iter().all(|b| {
                let neg_b = field.mul(b[j] as u32, field.p - 1);
                let diff = field.add(a[j] as u32, neg_b);
                diff != 0 && diff < field.p
            })
        })
    })
}

/// Reference field matching `tower` (prime base only).
pub fn reference(tower: &FieldTower) -> PolyField {
    assert_eq!(tower.a(), 1);
    PolyField::new(tower.p(), tower.ext_modulus().to_vec())
}

pub fn sym(tower: &FieldTower, i: u32) -> Symbol {
    tower.symbol(i as u64).unwrap()
}
