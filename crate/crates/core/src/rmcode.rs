//! Reed-Muller codes `RM(F_{q^t}^m, d)`: evaluations of all `m`-variate
//! polynomials of total degree at most `d` at every point of `F_{q^t}^m`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{FieldError, FieldTower, Symbol};
use crate::linalg::{self, Matrix};

/// Default bound on the code length `n = q^(tm)`.
pub const DEFAULT_MAX_CODE_LEN: usize = 1 << 14;
/// Bound on `k·n`, the number of generator entries held in memory.
pub const MAX_GENERATOR_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("a Reed-Muller code needs at least one variable")]
    NoVariables,
    #[error("degree {d} outside 0..={max}")]
    DegreeOutOfRange { d: i64, max: i64 },
    #[error("code of length {n} (k = {k}) exceeds the configured cap")]
    CapExceeded { n: u64, k: u64 },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point index {index} out of range for code length {n}")]
    PointOutOfRange { index: usize, n: usize },
    #[error("observed values are not the restriction of any codeword")]
    Inconsistent,
    #[error("erased positions {positions:?} are not uniquely determined")]
    Ambiguous { positions: Vec<usize> },
    #[error("code parameters {found:?} do not match {expected:?}")]
    ParamsMismatch {
        expected: CodeParams,
        found: CodeParams,
    },
}

/// `(p, a, t, m, d)`, enough to rebuild a code deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    pub p: u32,
    pub a: u32,
    pub t: u32,
    pub m: usize,
    pub d: usize,
}

impl CodeParams {
    pub fn build(&self) -> Result<RMCode, CodeError> {
        let tower = FieldTower::new(self.p, self.a, self.t)?;
        RMCode::new(Arc::new(tower), self.m, self.d)
    }
}

/// A polynomial in `m` variables with every exponent reduced below `q^t`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    m: usize,
    terms: BTreeMap<Vec<u32>, Symbol>,
}

impl MultiPoly {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            terms: BTreeMap::new(),
        }
    }

    /// Collects terms, applying `x^(q^t) = x` per variable and merging
    /// coefficients of equal reduced monomials.
    pub fn from_terms(
        f: &FieldTower,
        m: usize,
        terms: impl IntoIterator<Item = (Vec<u64>, Symbol)>,
    ) -> Result<Self, CodeError> {
        let mut poly = Self::zero(m);
        for (exps, coeff) in terms {
            if exps.len() != m {
                return Err(CodeError::LengthMismatch {
                    expected: m,
                    got: exps.len(),
                });
            }
            let reduced: Vec<u32> = exps.iter().map(|&e| reduce_exponent(f, e)).collect();
            poly.add_term(f, reduced, coeff);
        }
        Ok(poly)
    }

    fn add_term(&mut self, f: &FieldTower, exps: Vec<u32>, coeff: Symbol) {
        let entry = self.terms.entry(exps).or_insert(Symbol::ZERO);
        *entry = f.add(*entry, coeff);
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Symbol)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn eval(&self, f: &FieldTower, point: &[Symbol]) -> Symbol {
        f.sum(
            self.terms()
                .map(|(exps, c)| f.mul(c, eval_monomial(f, exps, point))),
        )
    }
}

/// `x^e` as a function on `F_{q^t}` equals `x^e'` with `e'` in `0..q^t`.
pub fn reduce_exponent(f: &FieldTower, e: u64) -> u32 {
    if e == 0 {
        return 0;
    }
    let cycle = f.order() as u64 - 1;
    (((e - 1) % cycle) + 1) as u32
}

pub fn eval_monomial(f: &FieldTower, exps: &[u32], point: &[Symbol]) -> Symbol {
    exps.iter()
        .zip(point)
        .fold(Symbol::ONE, |acc, (&e, &x)| f.mul(acc, f.pow(x, e as u64)))
}

/// A received word: `None` marks an erased position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    values: Vec<Option<Symbol>>,
}

impl Codeword {
    pub fn new(values: Vec<Option<Symbol>>) -> Self {
        Self { values }
    }

    pub fn complete(values: Vec<Symbol>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<Symbol>] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<Symbol> {
        self.values.get(i).copied().flatten()
    }

    pub fn erase(&mut self, i: usize) {
        self.values[i] = None;
    }

    pub fn with_erasures(mut self, erased: &[usize]) -> Self {
        for &i in erased {
            self.erase(i);
        }
        self
    }

    pub fn erased(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_none())
            .collect()
    }

    /// All symbols, if nothing is erased.
    pub fn symbols(&self) -> Option<Vec<Symbol>> {
        self.values.iter().copied().collect()
    }
}

/// Wire form of a codeword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodewordJson {
    pub code: CodeParams,
    pub values: Vec<Option<u32>>,
}

/// `RM(F_{q^t}^m, d)` with its point order, monomial basis and generator.
///
/// Points are ordered mixed-radix by symbol index with the first coordinate
/// most significant. Monomials have per-variable exponents below `q^t` and are
/// ordered by total degree, then descending lexicographically.
#[derive(Debug, Clone)]
pub struct RMCode {
    tower: Arc<FieldTower>,
    m: usize,
    d: usize,
    points: Vec<Vec<Symbol>>,
    monomials: Vec<Vec<u32>>,
    generator: Matrix,
}

impl RMCode {
    pub fn new(tower: Arc<FieldTower>, m: usize, d: usize) -> Result<Self, CodeError> {
        Self::with_cap(tower, m, d, DEFAULT_MAX_CODE_LEN)
    }

    pub fn with_cap(
        tower: Arc<FieldTower>,
        m: usize,
        d: usize,
        max_len: usize,
    ) -> Result<Self, CodeError> {
        if m == 0 {
            return Err(CodeError::NoVariables);
        }
        let order = tower.order() as u64;
        let max_degree = m as i64 * (order as i64 - 1);
        if d as i64 > max_degree {
            return Err(CodeError::DegreeOutOfRange {
                d: d as i64,
                max: max_degree,
            });
        }
        let n = order.checked_pow(m as u32).unwrap_or(u64::MAX);
        if n > max_len as u64 {
            return Err(CodeError::CapExceeded { n, k: 0 });
        }
        let n = n as usize;

        let monomials = graded_monomials(m, d, tower.order() - 1);
        let k = monomials.len();
        if k.saturating_mul(n) > MAX_GENERATOR_ENTRIES {
            return Err(CodeError::CapExceeded {
                n: n as u64,
                k: k as u64,
            });
        }

        let points: Vec<Vec<Symbol>> = (0..n).map(|i| point_coords(&tower, m, i)).collect();
        let generator = monomials
            .iter()
            .map(|exps| {
                points
                    .iter()
                    .map(|pt| eval_monomial(&tower, exps, pt))
                    .collect()
            })
            .collect();
        Ok(Self {
            tower,
            m,
            d,
            points,
            monomials,
            generator,
        })
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn tower_arc(&self) -> Arc<FieldTower> {
        Arc::clone(&self.tower)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn k(&self) -> usize {
        self.monomials.len()
    }

    pub fn params(&self) -> CodeParams {
        CodeParams {
            p: self.tower.p(),
            a: self.tower.a(),
            t: self.tower.t(),
            m: self.m,
            d: self.d,
        }
    }

    pub fn points(&self) -> &[Vec<Symbol>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[Symbol] {
        &self.points[i]
    }

    pub fn point_index(&self, coords: &[Symbol]) -> usize {
        let order = self.tower.order() as usize;
        coords
            .iter()
            .fold(0, |acc, x| acc * order + x.index() as usize)
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// `m(q^t − 1) − d − 1`; negative means the dual is the zero code.
    pub fn dual_degree(&self) -> i64 {
        self.m as i64 * (self.tower.order() as i64 - 1) - self.d as i64 - 1
    }

    pub fn message_poly(&self, message: &[Symbol]) -> Result<MultiPoly, CodeError> {
        self.check_len(message.len(), self.k())?;
        let mut poly = MultiPoly::zero(self.m);
        for (exps, &c) in self.monomials.iter().zip(message) {
            poly.add_term(&self.tower, exps.clone(), c);
        }
        Ok(poly)
    }

    pub fn encode(&self, message: &[Symbol]) -> Result<Codeword, CodeError> {
        self.check_len(message.len(), self.k())?;
        let f = &self.tower;
        let values = (0..self.n())
            .map(|j| {
                f.sum(
                    self.generator
                        .iter()
                        .zip(message)
                        .map(|(row, &c)| f.mul(c, row[j])),
                )
            })
            .collect();
        Ok(Codeword::complete(values))
    }

    pub fn eval_poly(&self, poly: &MultiPoly, point: &[Symbol]) -> Symbol {
        poly.eval(&self.tower, point)
    }

    /// True iff `vec` is orthogonal to every generator row.
    pub fn is_dual_member(&self, vec: &[Symbol]) -> Result<bool, CodeError> {
        self.check_len(vec.len(), self.n())?;
        Ok(linalg::mat_vec(&self.tower, &self.generator, vec)
            .iter()
            .all(|x| x.is_zero()))
    }

    /// Completes an erased codeword by solving for a message that matches
    /// every surviving position.
    ///
    /// Reports [`CodeError::Ambiguous`] instead of guessing when the survivors
    /// leave an erased value undetermined.
    pub fn oracle_erasure_decode(&self, word: &Codeword) -> Result<Codeword, CodeError> {
        self.check_len(word.len(), self.n())?;
        let f = &self.tower;
        let survivors: Vec<usize> = (0..self.n()).filter(|&j| word.get(j).is_some()).collect();
        let system: Matrix = survivors
            .iter()
            .map(|&j| self.generator.iter().map(|row| row[j]).collect())
            .collect();
        let rhs: Vec<Symbol> = survivors.iter().map(|&j| word.get(j).unwrap()).collect();
        let solution = if survivors.is_empty() {
            linalg::AffineSolution {
                particular: vec![Symbol::ZERO; self.k()],
                nullspace: (0..self.k())
                    .map(|i| {
                        (0..self.k())
                            .map(|j| if i == j { Symbol::ONE } else { Symbol::ZERO })
                            .collect()
                    })
                    .collect(),
            }
        } else {
            linalg::solve_affine(f, &system, &rhs).ok_or(CodeError::Inconsistent)?
        };

        let column_dot = |v: &[Symbol], j: usize| {
            f.sum(
                self.generator
                    .iter()
                    .zip(v)
                    .map(|(row, &c)| f.mul(c, row[j])),
            )
        };
        let erased = word.erased();
        let ambiguous: Vec<usize> = erased
            .iter()
            .copied()
            .filter(|&j| {
                solution
                    .nullspace
                    .iter()
                    .any(|v| !column_dot(v, j).is_zero())
            })
            .collect();
        if !ambiguous.is_empty() {
            return Err(CodeError::Ambiguous {
                positions: ambiguous,
            });
        }
        let mut values = word.values().to_vec();
        for j in erased {
            values[j] = Some(column_dot(&solution.particular, j));
        }
        Ok(Codeword::new(values))
    }

    pub fn codeword_to_json(&self, word: &Codeword) -> CodewordJson {
        CodewordJson {
            code: self.params(),
            values: word.values().iter().map(|v| v.map(Symbol::index)).collect(),
        }
    }

    pub fn codeword_from_json(&self, json: &CodewordJson) -> Result<Codeword, CodeError> {
        if json.code != self.params() {
            return Err(CodeError::ParamsMismatch {
                expected: self.params(),
                found: json.code,
            });
        }
        self.check_len(json.values.len(), self.n())?;
        let values = json
            .values
            .iter()
            .map(|v| v.map(|i| self.tower.symbol(i as u64)).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Codeword::new(values))
    }

    pub fn check_point(&self, index: usize) -> Result<(), CodeError> {
        if index < self.n() {
            Ok(())
        } else {
            Err(CodeError::PointOutOfRange { index, n: self.n() })
        }
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<(), CodeError> {
        if got == expected {
            Ok(())
        } else {
            Err(CodeError::LengthMismatch { expected, got })
        }
    }
}

fn point_coords(f: &FieldTower, m: usize, index: usize) -> Vec<Symbol> {
    let order = f.order() as usize;
    let mut coords = vec![Symbol::ZERO; m];
    let mut x = index;
    for slot in coords.iter_mut().rev() {
        *slot = f
            .symbol((x % order) as u64)
            .expect("digit below field order");
        x /= order;
    }
    coords
}

/// Exponent vectors with total degree `≤ d` and entries `≤ max_exp`, by
/// degree and then descending lexicographically.
fn graded_monomials(m: usize, d: usize, max_exp: u32) -> Vec<Vec<u32>> {
    fn fill(
        prefix: &mut Vec<u32>,
        left: usize,
        remaining: u32,
        max_exp: u32,
        out: &mut Vec<Vec<u32>>,
    ) {
        if left == 1 {
            if remaining <= max_exp {
                prefix.push(remaining);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for e in (0..=remaining.min(max_exp)).rev() {
            prefix.push(e);
            fill(prefix, left - 1, remaining - e, max_exp, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=d as u32 {
        fill(&mut Vec::with_capacity(m), m, degree, max_exp, &mut out);
    }
    out
}
