//! Hamilton-Jacobi machinery on cotangent lcs structures: time-dependent
//! sections, the `d_θγ = 0` condition, vertical lifts, the lcs HJ
//! residual, and the relatedness test behind the HJ theorem.

use thiserror::Error;

use crate::chart::{Chart, TIME};
use crate::expr::{expr_equal, EvalError, ScalarExpr};
use crate::exterior::{bind_point, DifferentialForm, ExteriorError, VectorFieldExpr};
use crate::lcs::{CotangentLcs, LcsError};
use crate::sample;

#[derive(Debug, Error)]
pub enum HamJacError {
    #[error("section has {got} components, base dimension is {expected}")]
    ComponentCount { expected: usize, got: usize },
    #[error("section uses symbols outside the base chart: {0:?}")]
    UnboundSymbols(Vec<String>),
    #[error("vertical lift needs a symbolic inverse of the bundle two-form")]
    NoSymbolicInverse,
    #[error("{0}")]
    Lcs(#[from] LcsError),
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

/// A time-dependent section `γ(t, q) = (q, γⁱ(t, q))` of the cotangent
/// bundle, stored by its fiber components.
#[derive(Debug, Clone)]
pub struct TimeSection {
    base: Chart,
    components: Vec<ScalarExpr>,
}

impl TimeSection {
    pub fn new(base: &Chart, components: Vec<ScalarExpr>) -> Result<Self, HamJacError> {
        if components.len() != base.dim() {
            return Err(HamJacError::ComponentCount {
                expected: base.dim(),
                got: components.len(),
            });
        }
        let mut stray: Vec<String> = components
            .iter()
            .flat_map(|c| c.free_vars())
            .filter(|v| v != TIME && base.index_of(v).is_none())
            .collect();
        if !stray.is_empty() {
            stray.sort();
            stray.dedup();
            return Err(HamJacError::UnboundSymbols(stray));
        }
        Ok(TimeSection {
            base: base.clone(),
            components,
        })
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    /// Substitution `p_i ↦ γⁱ(t, q)` into an expression on the bundle
    /// chart (q and t pass through).
    pub fn pull_scalar(&self, s: &CotangentLcs, e: &ScalarExpr) -> ScalarExpr {
        let n = self.base.dim();
        let bundle = s.structure.chart();
        let map = (0..n)
            .map(|i| (bundle.coord(n + i).to_string(), self.components[i].clone()))
            .collect();
        e.substitute(&map).simplify()
    }

    /// Fiber values at `(t, q)`.
    pub fn eval_at(&self, t: f64, q: &[f64]) -> Result<Vec<f64>, EvalError> {
        let env = bind_point(&self.base, q, Some(t));
        self.components.iter().map(|c| c.eval_f64(&env)).collect()
    }
}

/// Residual matrix and verdict for the condition `d_θ γ = 0`,
/// i.e. `∂γⁱ/∂q^j = θ_j γⁱ` for all i, j.
#[derive(Debug, Clone)]
pub struct ThetaClosedReport {
    pub closed: bool,
    /// `residual[i][j] = ∂γⁱ/∂q^j − θ_j γⁱ`.
    pub residual: Vec<Vec<ScalarExpr>>,
}

pub fn check_theta_closed(gamma: &TimeSection, s: &CotangentLcs) -> ThetaClosedReport {
    let n = gamma.base.dim();
    let theta = s.vartheta_components();
    let mut closed = true;
    let mut residual = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let r = (gamma.components[i].differentiate(gamma.base.coord(j))
                - theta[j].clone() * gamma.components[i].clone())
            .simplify();
            if !expr_equal(&r, &ScalarExpr::zero()).equal {
                closed = false;
            }
            row.push(r);
        }
        residual.push(row);
    }
    ThetaClosedReport { closed, residual }
}

/// The unique vertical field with `ι_{α^V} Ω_θ = α`; for semi-basic α
/// this is `−α_i ∂/∂p_i`.
pub fn vertical_lift(
    alpha: &DifferentialForm,
    s: &CotangentLcs,
) -> Result<VectorFieldExpr, HamJacError> {
    assert_eq!(alpha.chart(), s.structure.chart(), "α must live on the bundle chart");
    assert_eq!(alpha.degree(), 1, "α must be a one-form");
    s.structure
        .sharp_symbolic(&alpha.components())
        .ok_or(HamJacError::NoSymbolicInverse)
}

/// The lcs Hamilton-Jacobi residual
/// `Rⁱ = ∂γⁱ/∂t + ∂H/∂qⁱ∘γ + (∂H/∂p_j∘γ)·∂γ^j/∂qⁱ − θ_i·(H∘γ)`;
/// γ solves the HJ equation iff all `Rⁱ ≡ 0`.
pub fn hj_residual(s: &CotangentLcs, h: &ScalarExpr, gamma: &TimeSection) -> Vec<ScalarExpr> {
    let n = gamma.base.dim();
    let bundle = s.structure.chart();
    let theta = s.vartheta_components();
    let h_gamma = gamma.pull_scalar(s, h);
    (0..n)
        .map(|i| {
            let mut r = gamma.components[i].differentiate(TIME)
                + gamma.pull_scalar(s, &h.differentiate(bundle.coord(i)));
            for j in 0..n {
                r = r + gamma.pull_scalar(s, &h.differentiate(bundle.coord(n + j)))
                    * gamma.components[j].differentiate(gamma.base.coord(i));
            }
            (r - theta[i].clone() * h_gamma.clone()).simplify()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SampleIndicators {
    pub t: f64,
    pub q: Vec<f64>,
    /// max component mismatch of `Tγ(X̃^γ_H) − X̃_H∘γ`.
    pub mismatch: f64,
    /// max component of the HJ residual at `(t, q)`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RelatednessReport {
    pub theta_closed: bool,
    pub seed: u64,
    pub samples: Vec<SampleIndicators>,
    pub max_mismatch: f64,
    pub max_residual: f64,
    /// True when the two indicators never disagree (one vanishing while
    /// the other is clearly nonzero) at any sample.
    pub equivalence_consistent: bool,
}

const INDICATOR_ZERO: f64 = 1e-9;
const INDICATOR_NONZERO: f64 = 1e-6;

/// Sample the two sides of the HJ theorem: γ-relatedness of the
/// suspended fields versus the HJ residual.
pub fn gamma_relatedness(
    s: &CotangentLcs,
    h: &ScalarExpr,
    gamma: &TimeSection,
    samples: usize,
) -> Result<RelatednessReport, HamJacError> {
    gamma_relatedness_seeded(s, h, gamma, samples, sample::DEFAULT_SEED)
}

pub fn gamma_relatedness_seeded(
    s: &CotangentLcs,
    h: &ScalarExpr,
    gamma: &TimeSection,
    samples: usize,
    seed: u64,
) -> Result<RelatednessReport, HamJacError> {
    let n = gamma.base.dim();
    let theta_closed = check_theta_closed(gamma, s).closed;
    let residual_exprs = hj_residual(s, h, gamma);
    let sys = crate::dynamics::HamiltonianSystem::new(s.structure.clone(), h.clone())
        .expect("Hamiltonian over bundle chart");

    let mut rng = sample::rng(seed);
    let mut out = Vec::with_capacity(samples);
    let mut max_mismatch = 0.0f64;
    let mut max_residual = 0.0f64;
    let mut consistent = true;
    for _ in 0..samples {
        let mut tq = sample::point_in_box(&mut rng, n + 1);
        let t = tq.pop().unwrap();
        let q = tq;
        let p = gamma.eval_at(t, &q)?;
        let x: Vec<f64> = [q.clone(), p].concat();
        let v = crate::dynamics::field_at(&sys, t, &x).map_err(|e| match e {
            crate::dynamics::DynamicsError::Lcs(l) => HamJacError::Lcs(l),
            crate::dynamics::DynamicsError::SingularAtPoint { point, .. } => {
                HamJacError::Lcs(LcsError::SingularAtPoint { point })
            }
            other => panic!("unexpected dynamics error: {other}"),
        })?;
        // Tγ applied to the projected suspension (v_q, 1): the fiber part
        // is ∂γⁱ/∂t + ∂γⁱ/∂q^j v_q^j; compare against v_p.
        let env = bind_point(&gamma.base, &q, Some(t));
        let mut mismatch = 0.0f64;
        for i in 0..n {
            let mut lifted = gamma.components[i].differentiate(TIME).eval_f64(&env)?;
            for j in 0..n {
                lifted += gamma.components[i]
                    .differentiate(gamma.base.coord(j))
                    .eval_f64(&env)?
                    * v[j];
            }
            mismatch = mismatch.max((lifted - v[n + i]).abs());
        }
        let mut residual = 0.0f64;
        for r in &residual_exprs {
            residual = residual.max(r.eval_f64(&env)?.abs());
        }
        if (mismatch <= INDICATOR_ZERO && residual > INDICATOR_NONZERO)
            || (residual <= INDICATOR_ZERO && mismatch > INDICATOR_NONZERO)
        {
            consistent = false;
        }
        max_mismatch = max_mismatch.max(mismatch);
        max_residual = max_residual.max(residual);
        out.push(SampleIndicators {
            t,
            q,
            mismatch,
            residual,
        });
    }
    Ok(RelatednessReport {
        theta_closed,
        seed,
        samples: out,
        max_mismatch,
        max_residual,
        equivalence_consistent: consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, UnaryFunc};
    use crate::lcs::cotangent_lcs;

    fn flat_bundle(n: usize) -> CotangentLcs {
        let base = Chart::new((1..=n).map(|i| format!("q{i}")).collect::<Vec<_>>()).unwrap();
        cotangent_lcs(n, &DifferentialForm::zero(&base, 1)).unwrap()
    }

    fn dq1_bundle() -> CotangentLcs {
        let base = Chart::new(vec!["q1", "q2"]).unwrap();
        let mut vt = DifferentialForm::zero(&base, 1);
        vt.add_term(&[0], ScalarExpr::one());
        cotangent_lcs(2, &vt).unwrap()
    }

    /// γ_i = c_i·e^{q1}, θ-closed for θ = dq¹.
    fn exp_section(s: &CotangentLcs, c: &[i64]) -> TimeSection {
        let base = Chart::new(vec!["q1", "q2"]).unwrap();
        let e = ScalarExpr::func(UnaryFunc::Exp, ScalarExpr::var("q1"));
        let _ = s;
        TimeSection::new(
            &base,
            c.iter().map(|k| ScalarExpr::int(*k) * e.clone()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn closedness_cases() {
        let s0 = flat_bundle(2);
        // constant section, θ=0: closed
        let g = TimeSection::new(&s0.base, vec![ScalarExpr::int(3), ScalarExpr::int(-1)]).unwrap();
        assert!(check_theta_closed(&g, &s0).closed);
        // γ¹ = q2: asymmetric Jacobian, not closed
        let g = TimeSection::new(&s0.base, vec![ScalarExpr::var("q2"), ScalarExpr::zero()])
            .unwrap();
        assert!(!check_theta_closed(&g, &s0).closed);
        // θ = dq¹, γ_i = c_i·e^{q1}: closed
        let s1 = dq1_bundle();
        let g = exp_section(&s1, &[2, -5]);
        assert!(check_theta_closed(&g, &s1).closed);
        // the same section fails against θ = 0
        assert!(!check_theta_closed(&g, &s0).closed);
    }

    #[test]
    fn section_validation() {
        let s = flat_bundle(2);
        assert!(matches!(
            TimeSection::new(&s.base, vec![ScalarExpr::zero()]),
            Err(HamJacError::ComponentCount { .. })
        ));
        assert!(matches!(
            TimeSection::new(&s.base, vec![ScalarExpr::var("w"), ScalarExpr::zero()]),
            Err(HamJacError::UnboundSymbols(_))
        ));
        // time is allowed
        assert!(TimeSection::new(&s.base, vec![ScalarExpr::time(), ScalarExpr::zero()]).is_ok());
    }

    #[test]
    fn vertical_lift_semibasic() {
        let s = flat_bundle(2);
        let chart = s.structure.chart();
        // α = dq¹ → −∂/∂p₁
        let alpha = DifferentialForm::basis_one_form(chart, 0);
        let v = vertical_lift(&alpha, &s).unwrap();
        let expected = VectorFieldExpr::basis(chart, 2).neg();
        for (a, b) in v.components().iter().zip(expected.components()) {
            assert!(expr_equal(a, b).equal);
        }
        // zero lifts to zero
        let z = vertical_lift(&DifferentialForm::zero(chart, 1), &s).unwrap();
        assert!(z.components().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn vertical_lift_round_trip_and_linearity() {
        let s = dq1_bundle();
        let chart = s.structure.chart();
        let mut alpha = DifferentialForm::zero(chart, 1);
        alpha.add_term(&[0], parse("q2*p1", chart, false).unwrap());
        alpha.add_term(&[3], parse("q1^2", chart, false).unwrap());
        let v = vertical_lift(&alpha, &s).unwrap();
        let back = s.structure.flat(&v).unwrap();
        assert!(back.equals(&alpha).unwrap().equal);

        // linearity: lift(2α + β) = 2·lift(α) + lift(β)
        let mut beta = DifferentialForm::zero(chart, 1);
        beta.add_term(&[1], ScalarExpr::var("p2"));
        let lhs = vertical_lift(
            &alpha.scale_expr(&ScalarExpr::int(2)).add(&beta).unwrap(),
            &s,
        )
        .unwrap();
        let rhs = vertical_lift(&alpha, &s)
            .unwrap()
            .scale_expr(&ScalarExpr::int(2))
            .add(&vertical_lift(&beta, &s).unwrap());
        for (a, b) in lhs.components().iter().zip(rhs.components()) {
            assert!(expr_equal(a, b).equal);
        }
    }

    #[test]
    fn free_particle_constant_section() {
        let s = flat_bundle(1);
        let h = parse("p1^2/2", s.structure.chart(), false).unwrap();
        let g = TimeSection::new(&s.base, vec![ScalarExpr::rational(7, 3)]).unwrap();
        let r = hj_residual(&s, &h, &g);
        assert!(r.iter().all(|e| e.is_zero()));
        let rep = gamma_relatedness(&s, &h, &g, 50).unwrap();
        assert!(rep.theta_closed);
        assert!(rep.max_mismatch < 1e-9 && rep.max_residual < 1e-12);
    }

    #[test]
    fn classical_hj_solution() {
        // H = p²/2 − q, W = qt − t³/6 solves the classical HJ equation;
        // γ = ∂W/∂q = t
        let s = flat_bundle(1);
        let h = parse("p1^2/2 - q1", s.structure.chart(), false).unwrap();
        let g = TimeSection::new(&s.base, vec![ScalarExpr::time()]).unwrap();
        let r = hj_residual(&s, &h, &g);
        assert!(r.iter().all(|e| e.is_zero()), "{r:?}");
    }

    #[test]
    fn nonsolution_flags_both_indicators() {
        // θ-closed γ that does not solve HJ: both indicators nonzero
        let s = flat_bundle(1);
        let h = parse("p1^2/2 + q1^2/2", s.structure.chart(), false).unwrap();
        let g = TimeSection::new(&s.base, vec![ScalarExpr::one()]).unwrap();
        let rep = gamma_relatedness(&s, &h, &g, 50).unwrap();
        assert!(rep.theta_closed);
        assert!(rep.max_mismatch > 1e-3 && rep.max_residual > 1e-3);
        assert!(rep.equivalence_consistent);
    }

    #[test]
    fn equivalence_identity_under_closedness() {
        // for θ-closed sections the mismatch equals the residual sample
        // by sample
        let s = dq1_bundle();
        let h = parse("p1^2/2 + p2^2/2 + q2*p1", s.structure.chart(), false).unwrap();
        let g = exp_section(&s, &[1, 2]);
        let rep = gamma_relatedness_seeded(&s, &h, &g, 200, 99).unwrap();
        assert!(rep.theta_closed);
        assert!(rep.equivalence_consistent);
        for ind in &rep.samples {
            assert!(
                (ind.mismatch - ind.residual).abs() <= 1e-7 * (1.0 + ind.residual),
                "mismatch {} vs residual {}",
                ind.mismatch,
                ind.residual
            );
        }
    }

    #[test]
    fn non_closed_section_still_reported() {
        let s = flat_bundle(2);
        let g = TimeSection::new(&s.base, vec![ScalarExpr::var("q2"), ScalarExpr::zero()])
            .unwrap();
        let h = parse("p1^2/2 + p2^2/2", s.structure.chart(), false).unwrap();
        let rep = gamma_relatedness(&s, &h, &g, 20).unwrap();
        assert!(!rep.theta_closed);
    }
}
