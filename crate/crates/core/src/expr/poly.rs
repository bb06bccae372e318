//! Normal form for the polynomial subclass.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ScalarExpr;

/// Exponent map, one entry per variable with a positive exponent.
pub type Monomial = BTreeMap<String, u32>;

/// Sorted sum of monomials with collected rational coefficients; zero
/// coefficients are never stored, so `==` is exact polynomial equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    pub fn variable(name: &str) -> Self {
        let mut m = Monomial::new();
        m.insert(name.to_string(), 1);
        let mut p = Poly::zero();
        p.terms.insert(m, BigRational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = out.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                out.remove(m);
            }
        }
        Poly { terms: out }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (v, e) in mb {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                let entry = out.entry(m).or_insert_with(BigRational::zero);
                *entry += ca * cb;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Poly { terms: out }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(BigRational::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// `None` when the expression uses unary functions or negative powers
    /// of non-constant bases.
    pub fn from_expr(e: &ScalarExpr) -> Option<Poly> {
        match e {
            ScalarExpr::Const(c) => Some(Poly::constant(c.clone())),
            ScalarExpr::Var(v) => Some(Poly::variable(v)),
            ScalarExpr::Sum(ts) => {
                let mut acc = Poly::zero();
                for t in ts {
                    acc = acc.add(&Poly::from_expr(t)?);
                }
                Some(acc)
            }
            ScalarExpr::Prod(fs) => {
                let mut acc = Poly::constant(BigRational::one());
                for f in fs {
                    acc = acc.mul(&Poly::from_expr(f)?);
                }
                Some(acc)
            }
            ScalarExpr::Pow(b, e) => {
                if *e < 0 {
                    // only constant bases stay in the class
                    match b.as_ref() {
                        ScalarExpr::Const(c) if !c.is_zero() => {
                            Some(Poly::constant(super::rational_pow(c, *e)))
                        }
                        _ => None,
                    }
                } else {
                    Some(Poly::from_expr(b)?.pow(*e as u32))
                }
            }
            ScalarExpr::Func(_, _) => None,
        }
    }

    pub fn to_expr(&self) -> ScalarExpr {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let mut factors = vec![ScalarExpr::Const(c.clone())];
            for (v, e) in m {
                factors.push(ScalarExpr::Pow(
                    Box::new(ScalarExpr::Var(v.clone())),
                    *e as i64,
                ));
            }
            terms.push(ScalarExpr::Prod(factors));
        }
        ScalarExpr::Sum(terms).simplify()
    }

    pub fn eval_exact(&self, env: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in m {
                let x = env.get(v)?;
                term *= num_traits::pow::pow(x.clone(), *e as usize);
            }
            acc += term;
        }
        Some(acc)
    }

    /// Random dense-ish polynomial with small integer coefficients, for
    /// property tests.
    pub fn random(rng: &mut ChaCha8Rng, vars: &[&str], max_degree: u32) -> Poly {
        let n_terms = rng.gen_range(1..=5);
        let mut p = Poly::zero();
        for _ in 0..n_terms {
            let c = BigRational::from_integer(BigInt::from(rng.gen_range(-4i64..=4)));
            let mut m = Monomial::new();
            for v in vars {
                let e = rng.gen_range(0..=max_degree.min(2));
                if e > 0 {
                    m.insert(v.to_string(), e);
                }
            }
            let mut t = Poly::zero();
            if !c.is_zero() {
                t.terms.insert(m, c);
            }
            p = p.add(&t);
        }
        p
    }
}
