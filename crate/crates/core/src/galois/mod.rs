//! The field tower `F_p ⊂ F_q ⊂ F_{q^t}`.
//!
//! Symbols (elements of `F_{q^t}`) and subsymbols (elements of `F_q`) are
//! plain indices. A symbol `Σ c_k v^k` has index `Σ idx(c_k)·q^k`, where `v`
//! is a root of the extension modulus and `idx` on `F_q` is the same base-`p`
//! rule one level down. The subfield `F_q` therefore sits inside `F_{q^t}` as
//! exactly the indices below `q`.

mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use table::TableField;

/// Default bound on `q^t` so exhaustive checks stay cheap.
pub const DEFAULT_FIELD_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("exponents must be at least 1 (a = {a}, t = {t})")]
    ZeroExponent { a: u32, t: u32 },
    #[error("field of order {order} exceeds the cap of {cap} elements")]
    CapExceeded { order: u64, cap: u64 },
    #[error("no monic irreducible polynomial of degree {degree} found")]
    NoIrreducible { degree: usize },
    #[error("no primitive element found in field of order {order}")]
    NoPrimitiveElement { order: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expected {expected} basis elements, got {got}")]
    BasisLength { expected: usize, got: usize },
    #[error("basis elements are linearly dependent over the base field")]
    DependentBasis,
    #[error("trace kernel is trivial for a degree-1 extension")]
    TrivialTraceKernel,
    #[error("index {index} out of range for a field of order {order}")]
    IndexOutOfRange { index: u64, order: u64 },
}

/// An element of the extension field `F_{q^t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(u32);

/// An element of the base field `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubSymbol(u32);

impl Symbol {
    pub const ZERO: Symbol = Symbol(0);
    pub const ONE: Symbol = Symbol(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl SubSymbol {
    pub const ZERO: SubSymbol = SubSymbol(0);
    pub const ONE: SubSymbol = SubSymbol(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SubSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Serializable tower description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerParams {
    pub p: u32,
    pub a: u32,
    pub t: u32,
    pub base_modulus: Vec<u32>,
    pub ext_modulus: Vec<u32>,
}

/// `F_q ⊂ F_{q^t}` with `q = p^a`, built deterministically from `(p, a, t)`.
///
/// Both moduli are the lexicographically smallest monic irreducibles of their
/// degree, comparing coefficient tuples constant term first. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct FieldTower {
    p: u32,
    a: u32,
    t: u32,
    base_modulus: Vec<u32>,
    ext_modulus: Vec<u32>,
    base: TableField,
    ext: TableField,
    basis: Vec<Symbol>,
}

impl FieldTower {
    pub fn new(p: u32, a: u32, t: u32) -> Result<Self, FieldError> {
        Self::with_cap(p, a, t, DEFAULT_FIELD_CAP)
    }

    pub fn with_cap(p: u32, a: u32, t: u32, cap: u64) -> Result<Self, FieldError> {
        if !table::is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if a == 0 || t == 0 {
            return Err(FieldError::ZeroExponent { a, t });
        }
        let order = (p as u64)
            .checked_pow(a.saturating_mul(t))
            .unwrap_or(u64::MAX);
        if order > cap || order > u32::MAX as u64 {
            return Err(FieldError::CapExceeded { order, cap });
        }

        let prime = TableField::prime(p)?;
        let base_modulus = table::smallest_irreducible(&prime, a as usize)?;
        let base = TableField::extend(&prime, &base_modulus)?;
        let ext_modulus = table::smallest_irreducible(&base, t as usize)?;
        let ext = TableField::extend(&base, &ext_modulus)?;

        let q = base.order();
        let basis = (0..t).map(|k| Symbol(q.pow(k))).collect();
        Ok(Self {
            p,
            a,
            t,
            base_modulus,
            ext_modulus,
            base,
            ext,
            basis,
        })
    }

    /// Replaces the default power basis `{1, v, …, v^(t−1)}`.
    pub fn with_basis(mut self, basis: Vec<Symbol>) -> Result<Self, FieldError> {
        self.check_basis(&basis)?;
        self.basis = basis;
        Ok(self)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Order of the base field.
    pub fn q(&self) -> u32 {
        self.base.order()
    }

    /// Order of the symbol field, `q^t`.
    pub fn order(&self) -> u32 {
        self.ext.order()
    }

    pub fn base_modulus(&self) -> &[u32] {
        &self.base_modulus
    }

    pub fn ext_modulus(&self) -> &[u32] {
        &self.ext_modulus
    }

    pub fn basis(&self) -> &[Symbol] {
        &self.basis
    }

    pub fn params(&self) -> TowerParams {
        TowerParams {
            p: self.p,
            a: self.a,
            t: self.t,
            base_modulus: self.base_modulus.clone(),
            ext_modulus: self.ext_modulus.clone(),
        }
    }

    /// Root of the extension modulus (the power-basis generator).
    pub fn generator(&self) -> Symbol {
        if self.t == 1 {
            // the degree-1 modulus is x itself
            Symbol(0)
        } else {
            Symbol(self.q())
        }
    }

    pub fn symbol(&self, index: u64) -> Result<Symbol, FieldError> {
        if index < self.order() as u64 {
            Ok(Symbol(index as u32))
        } else {
            Err(FieldError::IndexOutOfRange {
                index,
                order: self.order() as u64,
            })
        }
    }

    pub fn subsymbol(&self, index: u64) -> Result<SubSymbol, FieldError> {
        if index < self.q() as u64 {
            Ok(SubSymbol(index as u32))
        } else {
            Err(FieldError::IndexOutOfRange {
                index,
                order: self.q() as u64,
            })
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Symbol> {
        (0..self.order()).map(Symbol)
    }

    pub fn base_elements(&self) -> impl Iterator<Item = SubSymbol> {
        (0..self.q()).map(SubSymbol)
    }

    pub fn add(&self, x: Symbol, y: Symbol) -> Symbol {
        Symbol(self.ext.add(x.0, y.0))
    }

    pub fn sub(&self, x: Symbol, y: Symbol) -> Symbol {
        Symbol(self.ext.sub(x.0, y.0))
    }

    pub fn neg(&self, x: Symbol) -> Symbol {
        Symbol(self.ext.neg(x.0))
    }

    pub fn mul(&self, x: Symbol, y: Symbol) -> Symbol {
        Symbol(self.ext.mul(x.0, y.0))
    }

    pub fn inv(&self, x: Symbol) -> Result<Symbol, FieldError> {
        self.ext
            .inv(x.0)
            .map(Symbol)
            .ok_or(FieldError::DivisionByZero)
    }

    pub fn div(&self, x: Symbol, y: Symbol) -> Result<Symbol, FieldError> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn pow(&self, x: Symbol, e: u64) -> Symbol {
        Symbol(self.ext.pow(x.0, e))
    }

    pub fn sum(&self, xs: impl IntoIterator<Item = Symbol>) -> Symbol {
        xs.into_iter().fold(Symbol::ZERO, |acc, x| self.add(acc, x))
    }

    /// `x^(q^i)`.
    pub fn frobenius(&self, x: Symbol, i: u32) -> Symbol {
        let q = self.q() as u64;
        let cycle = self.order() as u64 - 1;
        if cycle == 0 {
            return x;
        }
        // q^i reduced mod q^t - 1 keeps the exponent small
        let mut e = 1u64;
        for _ in 0..i {
            e = (e * q) % cycle;
        }
        if e == 0 {
            e = cycle;
        }
        self.pow(x, e)
    }

    /// `Tr(x) = x + x^q + … + x^(q^(t−1))`.
    ///
    /// Panics if the sum leaves `F_q`, which can only mean broken arithmetic.
    pub fn trace(&self, x: Symbol) -> SubSymbol {
        let mut acc = Symbol::ZERO;
        let mut cur = x;
        for _ in 0..self.t {
            acc = self.add(acc, cur);
            cur = self.pow(cur, self.q() as u64);
        }
        self.extract_base(acc)
            .unwrap_or_else(|| panic!("trace of {x} left the base field: {acc}"))
    }

    pub fn is_in_base(&self, x: Symbol) -> bool {
        x.0 < self.q()
    }

    pub fn embed_base(&self, c: SubSymbol) -> Symbol {
        Symbol(c.0)
    }

    pub fn extract_base(&self, x: Symbol) -> Option<SubSymbol> {
        self.is_in_base(x).then_some(SubSymbol(x.0))
    }

    pub fn base_add(&self, x: SubSymbol, y: SubSymbol) -> SubSymbol {
        SubSymbol(self.base.add(x.0, y.0))
    }

    pub fn base_sub(&self, x: SubSymbol, y: SubSymbol) -> SubSymbol {
        SubSymbol(self.base.sub(x.0, y.0))
    }

    pub fn base_neg(&self, x: SubSymbol) -> SubSymbol {
        SubSymbol(self.base.neg(x.0))
    }

    pub fn base_mul(&self, x: SubSymbol, y: SubSymbol) -> SubSymbol {
        SubSymbol(self.base.mul(x.0, y.0))
    }

    pub fn base_inv(&self, x: SubSymbol) -> Result<SubSymbol, FieldError> {
        self.base
            .inv(x.0)
            .map(SubSymbol)
            .ok_or(FieldError::DivisionByZero)
    }

    /// The `t` power-basis coordinates of `x` in `F_q`.
    pub fn coords(&self, x: Symbol) -> Vec<SubSymbol> {
        let q = self.q();
        let mut x = x.0;
        (0..self.t)
            .map(|_| {
                let c = x % q;
                x /= q;
                SubSymbol(c)
            })
            .collect()
    }

    pub fn from_coords(&self, coords: &[SubSymbol]) -> Symbol {
        let q = self.q();
        Symbol(coords.iter().rev().fold(0, |acc, c| acc * q + c.0))
    }

    /// The `a` coordinates of a subsymbol in `F_p`.
    pub fn base_digits(&self, c: SubSymbol) -> Vec<u32> {
        let mut x = c.0;
        (0..self.a)
            .map(|_| {
                let d = x % self.p;
                x /= self.p;
                d
            })
            .collect()
    }

    fn check_basis(&self, basis: &[Symbol]) -> Result<(), FieldError> {
        let t = self.t as usize;
        if basis.len() != t {
            return Err(FieldError::BasisLength {
                expected: t,
                got: basis.len(),
            });
        }
        let rows: Vec<Vec<Symbol>> = basis
            .iter()
            .map(|&z| {
                self.coords(z)
                    .into_iter()
                    .map(|c| self.embed_base(c))
                    .collect()
            })
            .collect();
        if linalg::rank(self, rows) == t {
            Ok(())
        } else {
            Err(FieldError::DependentBasis)
        }
    }

    /// The basis `B′` with `Tr(z_i z′_j) = δ_ij`.
    ///
    /// Writing `z′_j = Σ_k w_jk v^k`, the conditions read `T·w_j = e_j` with
    /// `T_ik = Tr(z_i v^k)`, so the coefficient vectors are the columns of `T⁻¹`.
    pub fn dual_basis(&self, basis: &[Symbol]) -> Result<Vec<Symbol>, FieldError> {
        self.check_basis(basis)?;
        let powers: Vec<Symbol> = (0..self.t).map(|k| Symbol(self.q().pow(k))).collect();
        let pairing: Vec<Vec<Symbol>> = basis
            .iter()
            .map(|&z| {
                powers
                    .iter()
                    .map(|&v| self.embed_base(self.trace(self.mul(z, v))))
                    .collect()
            })
            .collect();
        let inverse = linalg::inverse(self, pairing).ok_or(FieldError::DependentBasis)?;
        let t = self.t as usize;
        Ok((0..t)
            .map(|j| {
                let coords: Vec<SubSymbol> = (0..t)
                    .map(|k| self.extract_base(inverse[k][j]).expect("inverse over F_q"))
                    .collect();
                self.from_coords(&coords)
            })
            .collect())
    }

    /// Rebuilds `x` from its traces against `basis` as `Σ Tr(x z_i) z′_i`.
    pub fn expand_in_dual(&self, x: Symbol, basis: &[Symbol], dual: &[Symbol]) -> Symbol {
        let traces: Vec<SubSymbol> = basis.iter().map(|&z| self.trace(self.mul(x, z))).collect();
        self.combine(&traces, dual)
    }

    /// `Σ c_i y_i` for subsymbol coefficients.
    pub fn combine(&self, coeffs: &[SubSymbol], elems: &[Symbol]) -> Symbol {
        self.sum(
            coeffs
                .iter()
                .zip(elems)
                .map(|(&c, &y)| self.mul(self.embed_base(c), y)),
        )
    }

    /// An `F_q`-basis of `ker Tr`, read off the reduced row echelon form of
    /// the trace functional in power-basis coordinates.
    pub fn kernel_trace_basis(&self) -> Result<Vec<Symbol>, FieldError> {
        if self.t == 1 {
            return Err(FieldError::TrivialTraceKernel);
        }
        let functional: Vec<Symbol> = (0..self.t)
            .map(|k| self.embed_base(self.trace(Symbol(self.q().pow(k)))))
            .collect();
        let kernel = linalg::nullspace(self, vec![functional]);
        Ok(kernel
            .iter()
            .map(|v| {
                let coords: Vec<SubSymbol> = v
                    .iter()
                    .map(|&c| self.extract_base(c).expect("nullspace over F_q"))
                    .collect();
                self.from_coords(&coords)
            })
            .collect())
    }

    /// Polynomial rendering in the generator `v`, with `F_q` coefficients
    /// written in `u` when `a > 1`.
    pub fn render(&self, x: Symbol) -> String {
        let var = if self.t > 1 { "v" } else { "" };
        let terms: Vec<String> = self
            .coords(x)
            .into_iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let coeff = self.render_base(c);
                let power = match k {
                    0 => String::new(),
                    1 => var.to_string(),
                    _ => format!("{var}^{k}"),
                };
                match (k, coeff.as_str()) {
                    (0, _) => coeff,
                    (_, "1") => power,
                    _ if coeff.contains('+') => format!("({coeff}){power}"),
                    _ => format!("{coeff}{power}"),
                }
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join("+")
        }
    }

    fn render_base(&self, c: SubSymbol) -> String {
        if self.a == 1 {
            return c.0.to_string();
        }
        let terms: Vec<String> = self
            .base_digits(c)
            .into_iter()
            .enumerate()
            .rev()
            .filter(|&(_, d)| d != 0)
            .map(|(k, d)| match (k, d) {
                (0, d) => d.to_string(),
                (1, 1) => "u".to_string(),
                (1, d) => format!("{d}u"),
                (k, 1) => format!("u^{k}"),
                (k, d) => format!("{d}u^{k}"),
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join("+")
        }
    }
}
