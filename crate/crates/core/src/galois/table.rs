//! Log/antilog backed arithmetic for one level of the tower.
//!
//! Every level encodes an element as a base-`p` integer: the element
//! `Σ c_k y^k` over a subfield of order `r` has index `Σ idx(c_k)·r^k`.
//! Because the subfield index is itself base-`p`, addition at every level is
//! carry-free digit-wise addition mod `p`.

use super::FieldError;

#[derive(Debug, Clone)]
pub(crate) struct TableField {
    p: u32,
    digits: u32,
    order: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl TableField {
    pub(crate) fn prime(p: u32) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let mul = |x: u32, y: u32| ((x as u64 * y as u64) % p as u64) as u32;
        // 1 is primitive only in F_2.
        let candidates = 1..p;
        Self::from_walk(p, 1, p, candidates, mul)
    }

    /// Extends `base` by a monic `modulus` (coefficients constant first, the
    /// leading 1 included). The modulus must already be known irreducible.
    pub(crate) fn extend(base: &TableField, modulus: &[u32]) -> Result<Self, FieldError> {
        let degree = modulus.len() - 1;
        let order = (base.order as u64).pow(degree as u32);
        let order = u32::try_from(order).map_err(|_| FieldError::CapExceeded {
            order,
            cap: u32::MAX as u64,
        })?;
        let ring = PolyMod {
            base,
            modulus,
            degree,
        };
        let mul = |x: u32, y: u32| ring.mul(x, y);
        // The generator of the extension is tried first; it is usually primitive.
        let start = if degree >= 2 { base.order } else { 1 };
        let candidates = std::iter::once(start).chain((1..order).filter(move |&c| c != start));
        Self::from_walk(base.p, base.digits * degree as u32, order, candidates, mul)
    }

    fn from_walk(
        p: u32,
        digits: u32,
        order: u32,
        candidates: impl Iterator<Item = u32>,
        mul: impl Fn(u32, u32) -> u32,
    ) -> Result<Self, FieldError> {
        let cycle = (order - 1) as usize;
        'candidate: for g in candidates {
            let mut exp = Vec::with_capacity(2 * cycle);
            let mut cur = 1u32;
            for step in 0..cycle {
                if step > 0 && cur == 1 {
                    continue 'candidate;
                }
                exp.push(cur);
                cur = mul(cur, g);
            }
            if cur != 1 {
                continue;
            }
            let mut log = vec![0u32; order as usize];
            for (e, &x) in exp.iter().enumerate() {
                log[x as usize] = e as u32;
            }
            exp.extend_from_within(..);
            return Ok(Self {
                p,
                digits,
                order,
                exp,
                log,
            });
        }
        Err(FieldError::NoPrimitiveElement { order })
    }

    #[inline]
    pub(crate) fn order(&self) -> u32 {
        self.order
    }

    #[inline]
    pub(crate) fn add(&self, x: u32, y: u32) -> u32 {
        if self.p == 2 {
            return x ^ y;
        }
        let (mut x, mut y) = (x, y);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.digits {
            let d = (x % self.p + y % self.p) % self.p;
            out += d * place;
            place *= self.p;
            x /= self.p;
            y /= self.p;
        }
        out
    }

    #[inline]
    pub(crate) fn neg(&self, x: u32) -> u32 {
        if self.p == 2 {
            return x;
        }
        let mut x = x;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.digits {
            let d = (self.p - x % self.p) % self.p;
            out += d * place;
            place *= self.p;
            x /= self.p;
        }
        out
    }

    #[inline]
    pub(crate) fn sub(&self, x: u32, y: u32) -> u32 {
        self.add(x, self.neg(y))
    }

    #[inline]
    pub(crate) fn mul(&self, x: u32, y: u32) -> u32 {
        if x == 0 || y == 0 {
            return 0;
        }
        self.exp[(self.log[x as usize] + self.log[y as usize]) as usize]
    }

    #[inline]
    pub(crate) fn inv(&self, x: u32) -> Option<u32> {
        if x == 0 {
            return None;
        }
        let cycle = self.order - 1;
        Some(self.exp[((cycle - self.log[x as usize]) % cycle) as usize])
    }

    pub(crate) fn pow(&self, x: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if x == 0 {
            return 0;
        }
        let cycle = (self.order - 1) as u64;
        let l = (self.log[x as usize] as u64 * (e % cycle)) % cycle;
        self.exp[l as usize]
    }

    /// Elements ordered by their coordinate tuple read constant coordinate first.
    pub(crate) fn lex_order(&self) -> Vec<u32> {
        (0..self.order)
            .map(|rank| reverse_digits(rank, self.p, self.digits))
            .collect()
    }
}

fn reverse_digits(mut x: u32, p: u32, digits: u32) -> u32 {
    let mut out = 0;
    for _ in 0..digits {
        out = out * p + x % p;
        x /= p;
    }
    out
}

pub(crate) fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

struct PolyMod<'a> {
    base: &'a TableField,
    modulus: &'a [u32],
    degree: usize,
}

impl PolyMod<'_> {
    fn unpack(&self, mut x: u32) -> Vec<u32> {
        let r = self.base.order;
        (0..self.degree)
            .map(|_| {
                let c = x % r;
                x /= r;
                c
            })
            .collect()
    }

    fn pack(&self, coeffs: &[u32]) -> u32 {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.base.order + c)
    }

    fn mul(&self, x: u32, y: u32) -> u32 {
        let b = self.base;
        let xs = self.unpack(x);
        let ys = self.unpack(y);
        let mut prod = vec![0u32; 2 * self.degree];
        for (i, &xi) in xs.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            for (j, &yj) in ys.iter().enumerate() {
                prod[i + j] = b.add(prod[i + j], b.mul(xi, yj));
            }
        }
        poly_rem_monic(b, &mut prod, self.modulus);
        self.pack(&prod[..self.degree])
    }
}

/// Reduces `poly` in place modulo a monic `modulus`; the low `deg(modulus)`
/// coefficients hold the remainder afterwards.
pub(crate) fn poly_rem_monic(base: &TableField, poly: &mut [u32], modulus: &[u32]) {
    let n = modulus.len() - 1;
    for top in (n..poly.len()).rev() {
        let lead = poly[top];
        if lead == 0 {
            continue;
        }
        for k in 0..=n {
            let term = base.mul(lead, modulus[k]);
            poly[top - n + k] = base.sub(poly[top - n + k], term);
        }
    }
}

/// Exhaustive irreducibility test: no monic factor of degree `1..=deg/2`.
pub(crate) fn is_irreducible(base: &TableField, poly: &[u32]) -> bool {
    let n = poly.len() - 1;
    if n <= 1 {
        return n == 1;
    }
    // Degree one factors are roots.
    for x in 0..base.order {
        let mut acc = 0;
        for &c in poly.iter().rev() {
            acc = base.add(base.mul(acc, x), c);
        }
        if acc == 0 {
            return false;
        }
    }
    let r = base.order as u64;
    for k in 2..=n / 2 {
        for rank in 0..r.pow(k as u32) {
            let mut divisor = Vec::with_capacity(k + 1);
            let mut x = rank;
            for _ in 0..k {
                divisor.push((x % r) as u32);
                x /= r;
            }
            divisor.push(1);
            let mut rem = poly.to_vec();
            poly_rem_monic(base, &mut rem, &divisor);
            if rem[..k].iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of the given degree; tuples
/// are compared constant coefficient first, each coefficient by
/// [`TableField::lex_order`].
pub(crate) fn smallest_irreducible(
    base: &TableField,
    degree: usize,
) -> Result<Vec<u32>, FieldError> {
    let order = base.lex_order();
    let r = base.order as u64;
    for rank in 0..r.pow(degree as u32) {
        let mut coeffs = vec![0u32; degree + 1];
        let mut x = rank;
        for slot in (0..degree).rev() {
            coeffs[slot] = order[(x % r) as usize];
            x /= r;
        }
        coeffs[degree] = 1;
        if is_irreducible(base, &coeffs) {
            return Ok(coeffs);
        }
    }
    Err(FieldError::NoIrreducible { degree })
}
