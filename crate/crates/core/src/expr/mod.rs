//! Symbolic scalar expressions on a coordinate chart.
//!
//! Expressions are immutable trees over exact rational constants, chart
//! coordinates, the time symbol `t`, sums, products, integer powers and the
//! unary functions `sin`, `cos`, `exp`, `ln`. The polynomial subclass (no
//! unary functions, nonnegative exponents) has a unique normal form, which
//! gives exact equality; everything else falls back to seeded sampling.

mod parse;
mod poly;

pub use parse::{parse, ParseError};
pub use poly::Poly;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::chart::TIME;
use crate::sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryFunc {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl UnaryFunc {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFunc::Sin => "sin",
            UnaryFunc::Cos => "cos",
            UnaryFunc::Exp => "exp",
            UnaryFunc::Ln => "ln",
        }
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        match self {
            UnaryFunc::Sin => Ok(x.sin()),
            UnaryFunc::Cos => Ok(x.cos()),
            UnaryFunc::Exp => Ok(x.exp()),
            UnaryFunc::Ln => {
                if x <= 0.0 {
                    Err(EvalError::Domain(format!("ln of nonpositive value {x}")))
                } else {
                    Ok(x.ln())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScalarExpr {
    Const(BigRational),
    Var(String),
    Sum(Vec<ScalarExpr>),
    Prod(Vec<ScalarExpr>),
    Pow(Box<ScalarExpr>, i64),
    Func(UnaryFunc, Box<ScalarExpr>),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

use ScalarExpr::*;

impl ScalarExpr {
    pub fn zero() -> Self {
        Const(BigRational::zero())
    }

    pub fn one() -> Self {
        Const(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Const(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn var(name: &str) -> Self {
        Var(name.to_string())
    }

    pub fn time() -> Self {
        Var(TIME.to_string())
    }

    pub fn func(f: UnaryFunc, arg: ScalarExpr) -> Self {
        Func(f, Box::new(arg)).simplify()
    }

    pub fn pow(self, e: i64) -> Self {
        Pow(Box::new(self), e).simplify()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Const(c) if c.is_one())
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self {
            Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Const(_) => {}
            Var(v) => {
                out.insert(v.clone());
            }
            Sum(ts) | Prod(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Pow(b, _) => b.collect_vars(out),
            Func(_, a) => a.collect_vars(out),
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    /// Flatten, fold constants, collect like terms and factors. Idempotent;
    /// a full normal form only on the polynomial subclass (see [`Poly`]).
    pub fn simplify(&self) -> ScalarExpr {
        match self {
            Const(_) | Var(_) => self.clone(),
            Sum(terms) => {
                // coefficient per non-constant core
                let mut constant = BigRational::zero();
                let mut collected: BTreeMap<ScalarExpr, BigRational> = BTreeMap::new();
                let mut stack: Vec<ScalarExpr> = terms.iter().map(|t| t.simplify()).collect();
                stack.reverse();
                while let Some(t) = stack.pop() {
                    match t {
                        Sum(inner) => {
                            for x in inner.into_iter().rev() {
                                stack.push(x);
                            }
                        }
                        Const(c) => constant += c,
                        other => {
                            let (c, core) = split_coeff(other);
                            *collected.entry(core).or_insert_with(BigRational::zero) += c;
                        }
                    }
                }
                let mut out: Vec<ScalarExpr> = Vec::new();
                for (core, c) in collected {
                    if c.is_zero() {
                        continue;
                    }
                    if c.is_one() {
                        out.push(core);
                    } else {
                        out.push(Prod(vec![Const(c), core]).simplify());
                    }
                }
                if !constant.is_zero() {
                    out.push(Const(constant));
                }
                match out.len() {
                    0 => ScalarExpr::zero(),
                    1 => out.pop().unwrap(),
                    _ => Sum(out),
                }
            }
            Prod(factors) => {
                let mut constant = BigRational::one();
                let mut powers: BTreeMap<ScalarExpr, i64> = BTreeMap::new();
                let mut stack: Vec<ScalarExpr> = factors.iter().map(|f| f.simplify()).collect();
                stack.reverse();
                while let Some(f) = stack.pop() {
                    match f {
                        Prod(inner) => {
                            for x in inner.into_iter().rev() {
                                stack.push(x);
                            }
                        }
                        Const(c) => {
                            if c.is_zero() {
                                return ScalarExpr::zero();
                            }
                            constant *= c;
                        }
                        Pow(b, e) => *powers.entry((*b).clone()).or_insert(0) += e,
                        other => *powers.entry(other).or_insert(0) += 1,
                    }
                }
                let mut out: Vec<ScalarExpr> = Vec::new();
                if !constant.is_one() {
                    out.push(Const(constant));
                }
                for (base, e) in powers {
                    match e {
                        0 => {}
                        1 => out.push(base),
                        _ => out.push(Pow(Box::new(base), e).simplify()),
                    }
                }
                match out.len() {
                    0 => ScalarExpr::one(),
                    1 => out.pop().unwrap(),
                    _ => Prod(out),
                }
            }
            Pow(base, e) => {
                let base = base.simplify();
                match (*e, &base) {
                    (0, _) => ScalarExpr::one(),
                    (1, _) => base,
                    (e, Const(c)) => {
                        if c.is_zero() {
                            if e > 0 {
                                ScalarExpr::zero()
                            } else {
                                Pow(Box::new(base), e) // left as-is; evaluation errors
                            }
                        } else {
                            Const(rational_pow(c, e))
                        }
                    }
                    (e, Pow(inner, ei)) => Pow(inner.clone(), ei * e).simplify(),
                    (e, _) => Pow(Box::new(base), e),
                }
            }
            Func(f, arg) => {
                let arg = arg.simplify();
                if let Const(c) = &arg {
                    match f {
                        UnaryFunc::Sin if c.is_zero() => return ScalarExpr::zero(),
                        UnaryFunc::Cos if c.is_zero() => return ScalarExpr::one(),
                        UnaryFunc::Exp if c.is_zero() => return ScalarExpr::one(),
                        UnaryFunc::Ln if c.is_one() => return ScalarExpr::zero(),
                        _ => {}
                    }
                }
                Func(*f, Box::new(arg))
            }
        }
    }

    /// Exact symbolic partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> ScalarExpr {
        self.diff_raw(var).simplify()
    }

    fn diff_raw(&self, var: &str) -> ScalarExpr {
        match self {
            Const(_) => ScalarExpr::zero(),
            Var(v) => {
                if v == var {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            Sum(ts) => Sum(ts.iter().map(|t| t.diff_raw(var)).collect()),
            Prod(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let mut factors = fs.clone();
                    factors[i] = f.diff_raw(var);
                    terms.push(Prod(factors));
                }
                Sum(terms)
            }
            Pow(b, e) => Prod(vec![
                ScalarExpr::int(*e),
                Pow(b.clone(), e - 1),
                b.diff_raw(var),
            ]),
            Func(f, a) => {
                let outer = match f {
                    UnaryFunc::Sin => Func(UnaryFunc::Cos, a.clone()),
                    UnaryFunc::Cos => Prod(vec![
                        ScalarExpr::int(-1),
                        Func(UnaryFunc::Sin, a.clone()),
                    ]),
                    UnaryFunc::Exp => Func(UnaryFunc::Exp, a.clone()),
                    UnaryFunc::Ln => Pow(a.clone(), -1),
                };
                Prod(vec![outer, a.diff_raw(var)])
            }
        }
    }

    /// Replace variables by expressions; variables absent from `map` are
    /// left in place.
    pub fn substitute(&self, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
        self.subst_raw(map).simplify()
    }

    fn subst_raw(&self, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
        match self {
            Const(_) => self.clone(),
            Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Sum(ts) => Sum(ts.iter().map(|t| t.subst_raw(map)).collect()),
            Prod(fs) => Prod(fs.iter().map(|f| f.subst_raw(map)).collect()),
            Pow(b, e) => Pow(Box::new(b.subst_raw(map)), *e),
            Func(f, a) => Func(*f, Box::new(a.subst_raw(map))),
        }
    }

    /// Floating-point evaluation under a variable binding.
    pub fn eval_f64(&self, env: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        match self {
            Const(c) => Ok(c.to_f64().expect("rational out of f64 range")),
            Var(v) => env
                .get(v)
                .copied()
                .ok_or_else(|| EvalError::Unbound(v.clone())),
            Sum(ts) => ts.iter().map(|t| t.eval_f64(env)).sum(),
            Prod(fs) => fs.iter().map(|f| f.eval_f64(env)).product(),
            Pow(b, e) => {
                let b = b.eval_f64(env)?;
                if *e < 0 && b == 0.0 {
                    return Err(EvalError::Domain("zero to a negative power".into()));
                }
                Ok(b.powi(*e as i32))
            }
            Func(f, a) => f.apply(a.eval_f64(env)?),
        }
    }

    /// Exact rational evaluation; `None` when the expression leaves the
    /// polynomial-with-constant-denominator class.
    pub fn eval_exact(
        &self,
        env: &BTreeMap<String, BigRational>,
    ) -> Result<Option<BigRational>, EvalError> {
        match self {
            Const(c) => Ok(Some(c.clone())),
            Var(v) => match env.get(v) {
                Some(x) => Ok(Some(x.clone())),
                None => Err(EvalError::Unbound(v.clone())),
            },
            Sum(ts) => {
                let mut acc = BigRational::zero();
                for t in ts {
                    match t.eval_exact(env)? {
                        Some(x) => acc += x,
                        None => return Ok(None),
                    }
                }
                Ok(Some(acc))
            }
            Prod(fs) => {
                let mut acc = BigRational::one();
                for f in fs {
                    match f.eval_exact(env)? {
                        Some(x) => acc *= x,
                        None => return Ok(None),
                    }
                }
                Ok(Some(acc))
            }
            Pow(b, e) => match b.eval_exact(env)? {
                Some(x) => {
                    if x.is_zero() && *e < 0 {
                        Err(EvalError::Domain("zero to a negative power".into()))
                    } else {
                        Ok(Some(rational_pow(&x, *e)))
                    }
                }
                None => Ok(None),
            },
            Func(_, _) => Ok(None),
        }
    }

    /// Normal form of the polynomial subclass, or `None` when the
    /// expression contains unary functions or negative powers of
    /// non-constant bases.
    pub fn to_poly(&self) -> Option<Poly> {
        Poly::from_expr(self)
    }

    /// Exact zero test on the polynomial path; `None` when not polynomial.
    pub fn is_zero_poly(&self) -> Option<bool> {
        self.to_poly().map(|p| p.is_zero())
    }
}

fn split_coeff(e: ScalarExpr) -> (BigRational, ScalarExpr) {
    match e {
        Prod(fs) => {
            let mut c = BigRational::one();
            let mut rest = Vec::new();
            for f in fs {
                match f {
                    Const(k) => c *= k,
                    other => rest.push(other),
                }
            }
            let core = match rest.len() {
                0 => ScalarExpr::one(),
                1 => rest.pop().unwrap(),
                _ => Prod(rest),
            };
            (c, core)
        }
        Const(c) => (c, ScalarExpr::one()),
        other => (BigRational::one(), other),
    }
}

fn rational_pow(c: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow::pow(c.clone(), e as usize)
    } else {
        num_traits::pow::pow(c.recip(), (-e) as usize)
    }
}

// ---------------------------------------------------------------------------
// operators

impl std::ops::Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        Sum(vec![self, rhs]).simplify()
    }
}

impl std::ops::Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        Sum(vec![self, -rhs]).simplify()
    }
}

impl std::ops::Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        Prod(vec![self, rhs]).simplify()
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        Prod(vec![ScalarExpr::int(-1), self]).simplify()
    }
}

// ---------------------------------------------------------------------------
// equality

/// Which route decided an equality query.
#[derive(Debug, Clone, PartialEq)]
pub enum EqualityPath {
    /// Polynomial normal forms compared exactly.
    Exact,
    /// Sampled at `samples` seeded random points in `[-2, 2]^k`.
    Sampled {
        seed: u64,
        samples: usize,
        max_deviation: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualityVerdict {
    pub equal: bool,
    pub path: EqualityPath,
}

pub const EQUALITY_SAMPLES: usize = 32;
pub const EQUALITY_TOL: f64 = 1e-10;

/// Exact equality on the polynomial subclass, seeded sampling otherwise.
pub fn expr_equal(a: &ScalarExpr, b: &ScalarExpr) -> EqualityVerdict {
    expr_equal_seeded(a, b, sample::DEFAULT_SEED)
}

pub fn expr_equal_seeded(a: &ScalarExpr, b: &ScalarExpr, seed: u64) -> EqualityVerdict {
    if let (Some(pa), Some(pb)) = (a.to_poly(), b.to_poly()) {
        return EqualityVerdict {
            equal: pa == pb,
            path: EqualityPath::Exact,
        };
    }
    let diff = a.clone() - b.clone();
    let vars: Vec<String> = diff.free_vars().into_iter().collect();
    let mut rng = sample::rng(seed);
    let mut max_dev: f64 = 0.0;
    let mut evaluated = 0usize;
    let mut attempts = 0usize;
    while evaluated < EQUALITY_SAMPLES && attempts < EQUALITY_SAMPLES * 64 {
        attempts += 1;
        let pt = sample::point_in_box(&mut rng, vars.len());
        let env: BTreeMap<String, f64> =
            vars.iter().cloned().zip(pt.iter().copied()).collect();
        match diff.eval_f64(&env) {
            Ok(v) => {
                max_dev = max_dev.max(v.abs());
                evaluated += 1;
            }
            Err(EvalError::Domain(_)) => continue, // resample outside the domain
            Err(e) => panic!("expr_equal on unbound expression: {e}"),
        }
    }
    EqualityVerdict {
        equal: evaluated > 0 && max_dev <= EQUALITY_TOL,
        path: EqualityPath::Sampled {
            seed,
            samples: evaluated,
            max_deviation: max_dev,
        },
    }
}

// ---------------------------------------------------------------------------
// printing (round-trip safe with the parser)

fn needs_parens_in_prod(e: &ScalarExpr) -> bool {
    matches!(e, Sum(_)) || matches!(e, Const(c) if c.is_negative())
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => {
                if c.is_integer() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())
                }
            }
            Var(v) => write!(f, "{v}"),
            Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i == 0 {
                        write!(f, "{t}")?;
                    } else {
                        let (c, core) = split_coeff(t.clone());
                        if c.is_negative() {
                            let pos = Prod(vec![Const(-c), core]).simplify();
                            write!(f, " - {pos}")?;
                        } else {
                            write!(f, " + {t}")?;
                        }
                    }
                }
                Ok(())
            }
            Prod(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if needs_parens_in_prod(x) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            Pow(b, e) => {
                match **b {
                    Var(_) | Func(_, _) => write!(f, "{b}")?,
                    _ => write!(f, "({b})")?,
                }
                if *e < 0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Func(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn x(i: usize) -> ScalarExpr {
        ScalarExpr::var(&format!("x{i}"))
    }

    #[test]
    fn power_rule() {
        let e = x(1).pow(2);
        let d = e.differentiate("x1");
        assert_eq!(d, ScalarExpr::int(2) * x(1));
    }

    #[test]
    fn time_is_independent_of_coordinates() {
        assert!(x(1).differentiate("t").is_zero());
    }

    #[test]
    fn derivative_of_mixed_term() {
        // d/dx2 (x2*x3 + sin(t)) = x3
        let e = x(2) * x(3) + ScalarExpr::func(UnaryFunc::Sin, ScalarExpr::time());
        assert_eq!(e.differentiate("x2"), x(3));
    }

    #[test]
    fn evaluation_by_substitution() {
        let e = x(2) * x(3);
        let env: BTreeMap<String, f64> = [("x2".to_string(), 1.0), ("x3".to_string(), 2.0)]
            .into_iter()
            .collect();
        assert_eq!(e.eval_f64(&env).unwrap(), 2.0);
    }

    #[test]
    fn exp_and_sin_special_values() {
        assert!(ScalarExpr::func(UnaryFunc::Exp, ScalarExpr::zero()).is_one());
        assert!(ScalarExpr::func(UnaryFunc::Sin, ScalarExpr::zero()).is_zero());
        let env: BTreeMap<String, f64> = [("t".to_string(), 0.0)].into_iter().collect();
        let s = ScalarExpr::func(UnaryFunc::Sin, ScalarExpr::time());
        assert_eq!(s.eval_f64(&env).unwrap(), 0.0);
    }

    #[test]
    fn ln_domain_error() {
        let e = ScalarExpr::func(UnaryFunc::Ln, x(1));
        let env: BTreeMap<String, f64> = [("x1".to_string(), -1.0)].into_iter().collect();
        assert!(matches!(e.eval_f64(&env), Err(EvalError::Domain(_))));
    }

    #[test]
    fn commutativity_is_exact() {
        let v = expr_equal(&(x(1) * x(2)), &(x(2) * x(1)));
        assert!(v.equal);
        assert_eq!(v.path, EqualityPath::Exact);
    }

    #[test]
    fn collection_is_exact() {
        let v = expr_equal(&(x(1) + x(1)), &(ScalarExpr::int(2) * x(1)));
        assert!(v.equal);
        assert_eq!(v.path, EqualityPath::Exact);
    }

    #[test]
    fn pythagorean_identity_is_probabilistic() {
        let t = ScalarExpr::time();
        let lhs = ScalarExpr::func(UnaryFunc::Sin, t.clone()).pow(2)
            + ScalarExpr::func(UnaryFunc::Cos, t).pow(2);
        let v = expr_equal(&lhs, &ScalarExpr::one());
        assert!(v.equal);
        assert!(matches!(v.path, EqualityPath::Sampled { .. }));
    }

    #[test]
    fn differentiation_is_linear() {
        let mut rng = crate::sample::rng(7);
        for _ in 0..20 {
            let e1 = Poly::random(&mut rng, &["x1", "x2"], 3).to_expr();
            let e2 = Poly::random(&mut rng, &["x1", "x2"], 3).to_expr();
            let a = ScalarExpr::int(3);
            let b = ScalarExpr::rational(-1, 2);
            let lhs = (a.clone() * e1.clone() + b.clone() * e2.clone()).differentiate("x1");
            let rhs = a * e1.differentiate("x1") + b * e2.differentiate("x1");
            assert!(expr_equal(&lhs, &rhs).equal);
        }
    }

    #[test]
    fn mixed_partials_commute() {
        let mut rng = crate::sample::rng(11);
        for _ in 0..20 {
            let e = Poly::random(&mut rng, &["x1", "x2", "x3"], 4).to_expr();
            let d12 = e.differentiate("x1").differentiate("x2");
            let d21 = e.differentiate("x2").differentiate("x1");
            assert!(expr_equal(&d12, &d21).equal);
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let chart = Chart::standard(3);
        let mut rng = crate::sample::rng(13);
        for _ in 0..20 {
            let e = Poly::random(&mut rng, &["x1", "x2", "x3"], 3).to_expr();
            let printed = e.to_string();
            let back = parse(&printed, &chart, true).unwrap();
            assert!(expr_equal(&e, &back).equal, "round trip failed on {printed}");
        }
        // non-polynomial round trip
        let e = ScalarExpr::func(UnaryFunc::Exp, x(1) * x(2)) * x(3).pow(-2);
        let back = parse(&e.to_string(), &chart, false).unwrap();
        assert!(expr_equal(&e, &back).equal);
    }
}
