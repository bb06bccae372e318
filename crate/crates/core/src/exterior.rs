//! Differential forms and vector fields with symbolic coefficients.
//!
//! Forms store coefficients only on strictly increasing index tuples;
//! antisymmetry is canonicalized at insertion with the permutation sign.
//! A degree-0 form is a single scalar coefficient on the empty tuple.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;
use thiserror::Error;

use crate::chart::Chart;
use crate::expr::{expr_equal, EqualityPath, EqualityVerdict, EvalError, ScalarExpr};

#[derive(Debug, Error)]
pub enum ExteriorError {
    #[error("chart mismatch: `{0:?}` vs `{1:?}`")]
    ChartMismatch(Vec<String>, Vec<String>),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("cannot contract a degree-0 form")]
    DegreeZeroContraction,
    #[error("map has {got} components but target chart has dimension {expected}")]
    ComponentCount { expected: usize, got: usize },
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
}

/// Sort `indices` ascending; `None` on a repeated index, otherwise the
/// permutation sign.
pub fn canonicalize_indices(indices: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut idx = indices.to_vec();
    let mut sign = 1;
    // insertion sort, counting swaps
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in idx.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((idx, sign))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<Vec<usize>, ScalarExpr>,
}

impl DifferentialForm {
    pub fn zero(chart: &Chart, degree: usize) -> Self {
        DifferentialForm {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_scalar(chart: &Chart, e: ScalarExpr) -> Self {
        let mut f = DifferentialForm::zero(chart, 0);
        f.add_term(&[], e);
        f
    }

    /// The coordinate one-form `dx_i`.
    pub fn basis_one_form(chart: &Chart, i: usize) -> Self {
        let mut f = DifferentialForm::zero(chart, 1);
        f.add_term(&[i], ScalarExpr::one());
        f
    }

    pub fn one_form(chart: &Chart, coeffs: Vec<ScalarExpr>) -> Self {
        assert_eq!(coeffs.len(), chart.dim());
        let mut f = DifferentialForm::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            f.add_term(&[i], c);
        }
        f
    }

    /// Add `coeff` on the (not necessarily sorted) tuple `indices`,
    /// canonicalizing sign; repeated indices contribute nothing. A
    /// degree-overflow tuple (len > chart dim cannot happen since indices
    /// repeat) is handled by the caller choosing the degree.
    pub fn add_term(&mut self, indices: &[usize], coeff: ScalarExpr) {
        assert_eq!(indices.len(), self.degree, "term arity must match degree");
        let Some((idx, sign)) = canonicalize_indices(indices) else {
            return;
        };
        let coeff = if sign < 0 { -coeff } else { coeff };
        let entry = self
            .terms
            .entry(idx.clone())
            .or_insert_with(ScalarExpr::zero);
        *entry = entry.clone() + coeff;
        if entry.is_zero() {
            self.terms.remove(&idx);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &ScalarExpr)> {
        self.terms.iter()
    }

    /// Coefficient on the sorted tuple `indices` (zero when absent).
    pub fn coeff(&self, indices: &[usize]) -> ScalarExpr {
        let Some((idx, sign)) = canonicalize_indices(indices) else {
            return ScalarExpr::zero();
        };
        let c = self.terms.get(&idx).cloned().unwrap_or_else(ScalarExpr::zero);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    pub fn scalar(&self) -> ScalarExpr {
        assert_eq!(self.degree, 0);
        self.coeff(&[])
    }

    fn check_chart(&self, other: &DifferentialForm) -> Result<(), ExteriorError> {
        if self.chart != other.chart {
            return Err(ExteriorError::ChartMismatch(
                self.chart.coords().to_vec(),
                other.chart.coords().to_vec(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.check_chart(other)?;
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        self.scale_expr(&ScalarExpr::int(-1))
    }

    pub fn scale(&self, c: &BigRational) -> DifferentialForm {
        self.scale_expr(&ScalarExpr::Const(c.clone()))
    }

    pub fn scale_expr(&self, e: &ScalarExpr) -> DifferentialForm {
        let mut out = DifferentialForm::zero(&self.chart, self.degree);
        for (idx, c) in &self.terms {
            out.add_term(idx, e.clone() * c.clone());
        }
        out
    }

    /// Graded-antisymmetric product. Degrees beyond the chart dimension
    /// collapse to the canonical zero form of that degree (capped at n).
    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.check_chart(other)?;
        let n = self.chart.dim();
        let degree = self.degree + other.degree;
        if degree > n {
            return Ok(DifferentialForm::zero(&self.chart, n));
        }
        let mut out = DifferentialForm::zero(&self.chart, degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let mut idx = ia.clone();
                idx.extend_from_slice(ib);
                out.add_term(&idx, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// Exterior derivative over the chart coordinates. Coefficients may
    /// mention `t` on non-extended charts; it is treated as a parameter.
    pub fn d(&self) -> DifferentialForm {
        let n = self.chart.dim();
        if self.degree >= n {
            return DifferentialForm::zero(&self.chart, n.min(self.degree + 1));
        }
        let mut out = DifferentialForm::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for i in 0..n {
                let dc = c.differentiate(self.chart.coord(i));
                if dc.is_zero() {
                    continue;
                }
                let mut new_idx = vec![i];
                new_idx.extend_from_slice(idx);
                out.add_term(&new_idx, dc);
            }
        }
        out
    }

    /// The Lichnerowicz-deRham differential `d β − θ∧β`.
    pub fn ldr(&self, theta: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.check_chart(theta)?;
        if theta.degree != 1 {
            return Err(ExteriorError::DegreeMismatch {
                expected: 1,
                got: theta.degree,
            });
        }
        self.d().sub(&theta.wedge(self)?)
    }

    /// First-slot contraction `ι_X`.
    pub fn interior(&self, field: &VectorFieldExpr) -> Result<DifferentialForm, ExteriorError> {
        if self.chart != field.chart {
            return Err(ExteriorError::ChartMismatch(
                self.chart.coords().to_vec(),
                field.chart.coords().to_vec(),
            ));
        }
        if self.degree == 0 {
            return Err(ExteriorError::DegreeZeroContraction);
        }
        let mut out = DifferentialForm::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (slot, &i) in idx.iter().enumerate() {
                let comp = &field.components[i];
                if comp.is_zero() {
                    continue;
                }
                let mut rest: Vec<usize> = idx.clone();
                rest.remove(slot);
                let sign = if slot % 2 == 0 {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::int(-1)
                };
                out.add_term(&rest, sign * comp.clone() * c.clone());
            }
        }
        Ok(out)
    }

    /// Pullback `φ*a` by substitution and chain rule.
    pub fn pullback(&self, map: &ChartMap) -> Result<DifferentialForm, ExteriorError> {
        if map.target != self.chart {
            return Err(ExteriorError::ChartMismatch(
                map.target.coords().to_vec(),
                self.chart.coords().to_vec(),
            ));
        }
        let subs = map.substitution();
        let n_src = map.source.dim();
        let mut out = DifferentialForm::zero(&map.source, self.degree.min(n_src));
        if self.degree > n_src {
            return Ok(out);
        }
        // d(φ^i) as rows of the symbolic Jacobian
        let dphi: Vec<Vec<ScalarExpr>> = map
            .components
            .iter()
            .map(|comp| {
                (0..n_src)
                    .map(|j| comp.differentiate(map.source.coord(j)))
                    .collect()
            })
            .collect();
        for (idx, c) in &self.terms {
            let c_pulled = c.substitute(&subs);
            if c_pulled.is_zero() {
                continue;
            }
            // expand dφ^{i1} ∧ ... ∧ dφ^{ik}
            let mut expansion: Vec<(Vec<usize>, ScalarExpr)> =
                vec![(Vec::new(), c_pulled)];
            for &i in idx {
                let mut next = Vec::new();
                for (prefix, coeff) in &expansion {
                    for (j, dj) in dphi[i].iter().enumerate() {
                        if dj.is_zero() {
                            continue;
                        }
                        let mut ids = prefix.clone();
                        ids.push(j);
                        next.push((ids, coeff.clone() * dj.clone()));
                    }
                }
                expansion = next;
            }
            for (ids, coeff) in expansion {
                out.add_term(&ids, coeff);
            }
        }
        Ok(out)
    }

    /// Pointwise antisymmetric matrix of a 2-form: `M[i][j] = a(∂i, ∂j)`.
    pub fn matrix_at(&self, point: &BTreeMap<String, f64>) -> Result<DMatrix<f64>, ExteriorError> {
        assert_eq!(self.degree, 2, "matrix_at needs a degree-2 form");
        let n = self.chart.dim();
        let mut m = DMatrix::zeros(n, n);
        for (idx, c) in &self.terms {
            let v = c.eval_f64(point)?;
            m[(idx[0], idx[1])] = v;
            m[(idx[1], idx[0])] = -v;
        }
        Ok(m)
    }

    /// Symbolic antisymmetric matrix of a 2-form.
    pub fn matrix_symbolic(&self) -> Vec<Vec<ScalarExpr>> {
        assert_eq!(self.degree, 2);
        let n = self.chart.dim();
        let mut m = vec![vec![ScalarExpr::zero(); n]; n];
        for (idx, c) in &self.terms {
            m[idx[0]][idx[1]] = c.clone();
            m[idx[1]][idx[0]] = -c.clone();
        }
        m
    }

    /// One-form components `(a_1, ..., a_n)`.
    pub fn components(&self) -> Vec<ScalarExpr> {
        assert_eq!(self.degree, 1);
        (0..self.chart.dim()).map(|i| self.coeff(&[i])).collect()
    }

    /// Pair a one-form with a vector field: `⟨a, X⟩`.
    pub fn pair(&self, field: &VectorFieldExpr) -> Result<ScalarExpr, ExteriorError> {
        let contracted = self.interior(field)?;
        Ok(contracted.scalar())
    }

    /// Zero verdict: exact where every coefficient is polynomial, sampled
    /// otherwise. Also reports the largest deviation seen on sampled paths.
    pub fn is_zero_verdict(&self) -> EqualityVerdict {
        let zero = ScalarExpr::zero();
        let mut exact = true;
        let mut max_dev: f64 = 0.0;
        let mut seed = crate::sample::DEFAULT_SEED;
        let mut samples = 0;
        for c in self.terms.values() {
            let v = expr_equal(c, &zero);
            match v.path {
                EqualityPath::Exact => {
                    if !v.equal {
                        return v;
                    }
                }
                EqualityPath::Sampled {
                    seed: s,
                    samples: k,
                    max_deviation,
                } => {
                    exact = false;
                    seed = s;
                    samples = samples.max(k);
                    max_dev = max_dev.max(max_deviation);
                    if !v.equal {
                        return v;
                    }
                }
            }
        }
        EqualityVerdict {
            equal: true,
            path: if exact {
                EqualityPath::Exact
            } else {
                EqualityPath::Sampled {
                    seed,
                    samples,
                    max_deviation: max_dev,
                }
            },
        }
    }

    /// Form equality through coefficient-wise [`expr_equal`].
    pub fn equals(&self, other: &DifferentialForm) -> Result<EqualityVerdict, ExteriorError> {
        Ok(self.sub(other)?.is_zero_verdict())
    }

    /// Maximum absolute coefficient value at a point (residual norm).
    pub fn max_abs_at(&self, point: &BTreeMap<String, f64>) -> Result<f64, ExteriorError> {
        let mut m: f64 = 0.0;
        for c in self.terms.values() {
            m = m.max(c.eval_f64(point)?.abs());
        }
        Ok(m)
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if idx.is_empty() {
                write!(f, "{c}")?;
                continue;
            }
            if !c.is_one() {
                write!(f, "({c})·")?;
            }
            let names: Vec<String> = idx
                .iter()
                .map(|&i| format!("d{}", self.chart.coord(i)))
                .collect();
            write!(f, "{}", names.join("∧"))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// vector fields

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldExpr {
    chart: Chart,
    components: Vec<ScalarExpr>,
}

impl VectorFieldExpr {
    pub fn new(chart: &Chart, components: Vec<ScalarExpr>) -> Self {
        assert_eq!(components.len(), chart.dim());
        VectorFieldExpr {
            chart: chart.clone(),
            components: components.into_iter().map(|c| c.simplify()).collect(),
        }
    }

    pub fn zero(chart: &Chart) -> Self {
        VectorFieldExpr::new(chart, vec![ScalarExpr::zero(); chart.dim()])
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn basis(chart: &Chart, i: usize) -> Self {
        let mut comps = vec![ScalarExpr::zero(); chart.dim()];
        comps[i] = ScalarExpr::one();
        VectorFieldExpr::new(chart, comps)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarExpr {
        &self.components[i]
    }

    pub fn add(&self, other: &VectorFieldExpr) -> VectorFieldExpr {
        assert_eq!(self.chart, other.chart);
        VectorFieldExpr::new(
            &self.chart,
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }

    pub fn scale_expr(&self, e: &ScalarExpr) -> VectorFieldExpr {
        VectorFieldExpr::new(
            &self.chart,
            self.components
                .iter()
                .map(|c| e.clone() * c.clone())
                .collect(),
        )
    }

    pub fn neg(&self) -> VectorFieldExpr {
        self.scale_expr(&ScalarExpr::int(-1))
    }

    /// Is any component time-dependent?
    pub fn is_time_dependent(&self) -> bool {
        self.components.iter().any(|c| c.depends_on("t"))
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &ScalarExpr) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for (i, comp) in self.components.iter().enumerate() {
            acc = acc + comp.clone() * f.differentiate(self.chart.coord(i));
        }
        acc
    }

    /// Lie bracket `[X, Y]`.
    pub fn bracket(&self, other: &VectorFieldExpr) -> VectorFieldExpr {
        assert_eq!(self.chart, other.chart);
        let comps = (0..self.chart.dim())
            .map(|k| self.apply(&other.components[k]) - other.apply(&self.components[k]))
            .collect();
        VectorFieldExpr::new(&self.chart, comps)
    }

    /// Cartan formula: `ℒ_X a = d(ι_X a) + ι_X(d a)`.
    pub fn lie_derivative(
        &self,
        form: &DifferentialForm,
    ) -> Result<DifferentialForm, ExteriorError> {
        if form.degree() == 0 {
            return Ok(DifferentialForm::from_scalar(
                &self.chart,
                self.apply(&form.scalar()),
            ));
        }
        let a = form.interior(self)?.d();
        let b = form.d().interior(self)?;
        a.add(&b)
    }

    pub fn eval_at(&self, point: &BTreeMap<String, f64>) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.components {
            out.extend(c.free_vars());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// chart maps

/// A smooth map between charts, given componentwise as expressions in the
/// source coordinates. Time-aware maps on extended charts must carry `t`
/// itself as the last component.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartMap {
    pub source: Chart,
    pub target: Chart,
    pub components: Vec<ScalarExpr>,
}

impl ChartMap {
    pub fn new(
        source: &Chart,
        target: &Chart,
        components: Vec<ScalarExpr>,
    ) -> Result<Self, ExteriorError> {
        if components.len() != target.dim() {
            return Err(ExteriorError::ComponentCount {
                expected: target.dim(),
                got: components.len(),
            });
        }
        Ok(ChartMap {
            source: source.clone(),
            target: target.clone(),
            components: components.into_iter().map(|c| c.simplify()).collect(),
        })
    }

    pub fn identity(chart: &Chart) -> Self {
        ChartMap {
            source: chart.clone(),
            target: chart.clone(),
            components: chart
                .coords()
                .iter()
                .map(|c| ScalarExpr::var(c))
                .collect(),
        }
    }

    /// Does the map preserve time? (Both charts extended, `t ↦ t`.)
    pub fn preserves_time(&self) -> bool {
        match (self.source.time_index(), self.target.time_index()) {
            (Some(_), Some(ti)) => self.components[ti] == ScalarExpr::time(),
            _ => false,
        }
    }

    /// Substitution map target-coordinate → component expression.
    pub fn substitution(&self) -> BTreeMap<String, ScalarExpr> {
        self.target
            .coords()
            .iter()
            .cloned()
            .zip(self.components.iter().cloned())
            .collect()
    }

    /// Apply to a function on the target: `f ∘ φ`.
    pub fn pullback_scalar(&self, f: &ScalarExpr) -> ScalarExpr {
        f.substitute(&self.substitution())
    }

    pub fn eval_at(&self, point: &BTreeMap<String, f64>) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }

    pub fn jacobian_at(&self, point: &BTreeMap<String, f64>) -> Result<DMatrix<f64>, EvalError> {
        let rows = self.target.dim();
        let cols = self.source.dim();
        let mut j = DMatrix::zeros(rows, cols);
        for (r, comp) in self.components.iter().enumerate() {
            for c in 0..cols {
                j[(r, c)] = comp
                    .differentiate(self.source.coord(c))
                    .eval_f64(point)?;
            }
        }
        Ok(j)
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &ChartMap) -> Result<ChartMap, ExteriorError> {
        if other.target != self.source {
            return Err(ExteriorError::ChartMismatch(
                other.target.coords().to_vec(),
                self.source.coords().to_vec(),
            ));
        }
        let subs = other.substitution();
        ChartMap::new(
            &other.source,
            &self.target,
            self.components
                .iter()
                .map(|c| c.substitute(&subs))
                .collect(),
        )
    }
}

/// Helper: bind chart coordinates to a point, optionally with time.
pub fn bind_point(chart: &Chart, x: &[f64], t: Option<f64>) -> BTreeMap<String, f64> {
    let mut env: BTreeMap<String, f64> = chart
        .coords()
        .iter()
        .cloned()
        .zip(x.iter().copied())
        .collect();
    if let Some(t) = t {
        env.insert("t".to_string(), t);
    }
    env
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{expr_equal, parse, Poly};

    fn chart4() -> Chart {
        Chart::standard(4)
    }

    fn dx(chart: &Chart, i: usize) -> DifferentialForm {
        DifferentialForm::basis_one_form(chart, i)
    }

    #[test]
    fn wedge_antisymmetry_and_sign() {
        let c = chart4();
        let a = dx(&c, 0).wedge(&dx(&c, 0)).unwrap();
        assert!(a.is_zero_verdict().equal);
        // dx3 ∧ dx1 = −(dx1 ∧ dx3)
        let lhs = dx(&c, 2).wedge(&dx(&c, 0)).unwrap();
        let rhs = dx(&c, 0).wedge(&dx(&c, 2)).unwrap().neg();
        assert!(lhs.equals(&rhs).unwrap().equal);
    }

    #[test]
    fn wedge_distributes() {
        // (dx1 − x2 dx4) ∧ dx3 = dx1∧dx3 − x2 dx4∧dx3
        let c = chart4();
        let eta2 = dx(&c, 0).sub(&dx(&c, 3).scale_expr(&ScalarExpr::var("x2"))).unwrap();
        let w = eta2.wedge(&dx(&c, 2)).unwrap();
        let mut expected = DifferentialForm::zero(&c, 2);
        expected.add_term(&[0, 2], ScalarExpr::one());
        expected.add_term(&[3, 2], -ScalarExpr::var("x2"));
        assert!(w.equals(&expected).unwrap().equal);
    }

    #[test]
    fn exterior_derivative_basics() {
        let c = chart4();
        // d of a constant 0-form
        let f = DifferentialForm::from_scalar(&c, ScalarExpr::int(5));
        assert!(f.d().is_zero_verdict().equal);
        // d(x2·dx4∧dx3) = dx2∧dx4∧dx3
        let mut a = DifferentialForm::zero(&c, 2);
        a.add_term(&[3, 2], ScalarExpr::var("x2"));
        let da = a.d();
        let mut expected = DifferentialForm::zero(&c, 3);
        expected.add_term(&[1, 3, 2], ScalarExpr::one());
        assert!(da.equals(&expected).unwrap().equal);
        // d(dx1 − x2 dx4) = −dx2∧dx4
        let eta2 = dx(&c, 0).sub(&dx(&c, 3).scale_expr(&ScalarExpr::var("x2"))).unwrap();
        let mut expected2 = DifferentialForm::zero(&c, 2);
        expected2.add_term(&[1, 3], ScalarExpr::int(-1));
        assert!(eta2.d().equals(&expected2).unwrap().equal);
    }

    #[test]
    fn ldr_reduces_to_de_rham_for_zero_theta() {
        let c = chart4();
        let theta0 = DifferentialForm::zero(&c, 1);
        let mut a = DifferentialForm::zero(&c, 1);
        a.add_term(&[0], ScalarExpr::var("x2") * ScalarExpr::var("x3"));
        assert!(a.ldr(&theta0).unwrap().equals(&a.d()).unwrap().equal);
    }

    #[test]
    fn ldr_squares_to_zero_for_closed_theta() {
        let c = chart4();
        let theta = dx(&c, 2); // dx3, closed
        let f = DifferentialForm::from_scalar(
            &c,
            parse("x1^2*x2 - 3*x4", &c, false).unwrap(),
        );
        let once = f.ldr(&theta).unwrap();
        let twice = once.ldr(&theta).unwrap();
        assert!(twice.is_zero_verdict().equal);
    }

    #[test]
    fn interior_product_cases() {
        let c = chart4();
        let dq_dp = dx(&c, 0).wedge(&dx(&c, 2)).unwrap(); // dx1∧dx3
        let e1 = VectorFieldExpr::basis(&c, 0);
        let contracted = dq_dp.interior(&e1).unwrap();
        assert!(contracted.equals(&dx(&c, 2)).unwrap().equal);
        let e2 = VectorFieldExpr::basis(&c, 1);
        assert!(dq_dp.interior(&e2).unwrap().is_zero_verdict().equal);
    }

    #[test]
    fn interior_two_term_expansion() {
        // ι_Z (dq∧dp) with Z = a∂q + b∂p = a·dp − b·dq
        let c = Chart::cotangent(1);
        let omega = dx(&c, 0).wedge(&dx(&c, 1)).unwrap();
        let z = VectorFieldExpr::new(&c, vec![ScalarExpr::var("q1"), ScalarExpr::var("p1")]);
        let got = omega.interior(&z).unwrap();
        let expected = dx(&c, 1)
            .scale_expr(&ScalarExpr::var("q1"))
            .sub(&dx(&c, 0).scale_expr(&ScalarExpr::var("p1")))
            .unwrap();
        assert!(got.equals(&expected).unwrap().equal);
    }

    #[test]
    fn pullback_identity_and_section() {
        let c = chart4();
        let id = ChartMap::identity(&c);
        let mut a = DifferentialForm::zero(&c, 2);
        a.add_term(&[0, 1], ScalarExpr::var("x3"));
        assert!(a.pullback(&id).unwrap().equals(&a).unwrap().equal);

        // section gamma(q) = (q, gamma(q)) on T*R^2: gamma*(dp_i) = dgamma_i
        let cot = Chart::cotangent(2);
        let base = cot.base_chart().unwrap();
        let g1 = parse("q1*q2", &base, false).unwrap();
        let g2 = parse("q2^2", &base, false).unwrap();
        let sec = ChartMap::new(
            &base,
            &cot,
            vec![
                ScalarExpr::var("q1"),
                ScalarExpr::var("q2"),
                g1.clone(),
                g2.clone(),
            ],
        )
        .unwrap();
        let dp1 = dx(&cot, 2);
        let pulled = dp1.pullback(&sec).unwrap();
        let expected = DifferentialForm::one_form(
            &base,
            vec![g1.differentiate("q1"), g1.differentiate("q2")],
        );
        assert!(pulled.equals(&expected).unwrap().equal);
    }

    #[test]
    fn matrix_at_canonical_block() {
        let c = Chart::cotangent(1);
        let omega = dx(&c, 0).wedge(&dx(&c, 1)).unwrap();
        let pt = bind_point(&c, &[0.3, -1.2], None);
        let m = omega.matrix_at(&pt).unwrap();
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(1, 0)], -1.0);
        // antisymmetry
        assert!((m.clone() + m.transpose()).norm() == 0.0);
    }

    fn random_form(
        rng: &mut rand_chacha::ChaCha8Rng,
        chart: &Chart,
        degree: usize,
    ) -> DifferentialForm {
        let vars: Vec<&str> = chart.coords().iter().map(|s| s.as_str()).collect();
        let mut f = DifferentialForm::zero(chart, degree);
        let n = chart.dim();
        let tuples: Vec<Vec<usize>> = increasing_tuples(n, degree);
        for t in tuples {
            f.add_term(&t, Poly::random(rng, &vars, 2).to_expr());
        }
        f
    }

    fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k - 1, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn d_squared_is_zero() {
        let c = chart4();
        let mut rng = crate::sample::rng(3);
        for degree in 0..3 {
            for _ in 0..5 {
                let f = random_form(&mut rng, &c, degree);
                assert!(f.d().d().is_zero_verdict().equal);
            }
        }
    }

    #[test]
    fn leibniz_rule() {
        let c = chart4();
        let mut rng = crate::sample::rng(5);
        for (da, db) in [(0usize, 1usize), (1, 1), (1, 2)] {
            let a = random_form(&mut rng, &c, da);
            let b = random_form(&mut rng, &c, db);
            let lhs = a.wedge(&b).unwrap().d();
            let sign = if da % 2 == 0 {
                ScalarExpr::one()
            } else {
                ScalarExpr::int(-1)
            };
            let rhs = a
                .d()
                .wedge(&b)
                .unwrap()
                .add(&a.wedge(&b.d()).unwrap().scale_expr(&sign))
                .unwrap();
            assert!(lhs.equals(&rhs).unwrap().equal, "failed at degrees {da},{db}");
        }
    }

    #[test]
    fn pullback_commutes_with_d() {
        let src = Chart::standard(3);
        let dst = chart4();
        let mut rng = crate::sample::rng(9);
        let comps: Vec<ScalarExpr> = (0..4)
            .map(|_| Poly::random(&mut rng, &["x1", "x2", "x3"], 2).to_expr())
            .collect();
        let phi = ChartMap::new(&src, &dst, comps).unwrap();
        for degree in 0..3 {
            let a = random_form(&mut rng, &dst, degree);
            let lhs = a.d().pullback(&phi).unwrap();
            let rhs = a.pullback(&phi).unwrap().d();
            assert!(lhs.equals(&rhs).unwrap().equal, "degree {degree}");
        }
    }

    #[test]
    fn interior_antiderivation() {
        let c = chart4();
        let mut rng = crate::sample::rng(17);
        let x = VectorFieldExpr::new(
            &c,
            (0..4)
                .map(|_| Poly::random(&mut rng, &["x1", "x2", "x3", "x4"], 1).to_expr())
                .collect(),
        );
        for (da, db) in [(1usize, 1usize), (1, 2), (2, 1)] {
            let a = random_form(&mut rng, &c, da);
            let b = random_form(&mut rng, &c, db);
            let lhs = a.wedge(&b).unwrap().interior(&x).unwrap();
            let sign = if da % 2 == 0 {
                ScalarExpr::one()
            } else {
                ScalarExpr::int(-1)
            };
            let rhs = a
                .interior(&x)
                .unwrap()
                .wedge(&b)
                .unwrap()
                .add(&a.wedge(&b.interior(&x).unwrap()).unwrap().scale_expr(&sign))
                .unwrap();
            assert!(lhs.equals(&rhs).unwrap().equal, "degrees {da},{db}");
        }
    }

    #[test]
    fn bracket_of_coordinate_fields_vanishes() {
        let c = chart4();
        let b = VectorFieldExpr::basis(&c, 0).bracket(&VectorFieldExpr::basis(&c, 2));
        assert!(b.components().iter().all(|x| x.is_zero()));
    }

    #[test]
    fn expr_equal_form_coefficients() {
        let c = chart4();
        let mut a = DifferentialForm::zero(&c, 1);
        a.add_term(&[0], parse("x1 + x1", &c, false).unwrap());
        let mut b = DifferentialForm::zero(&c, 1);
        b.add_term(&[0], parse("2*x1", &c, false).unwrap());
        let v = a.equals(&b).unwrap();
        assert!(v.equal);
        assert!(expr_equal(&a.coeff(&[0]), &b.coeff(&[0])).equal);
    }
}
