//! Canonical transformations between time-extended lcs structures: the
//! defining conditions, the equivalence theorem, and generating-function
//! relations.

use nalgebra::DVector;
use thiserror::Error;

use crate::chart::Chart;
use crate::dynamics::{field_at, lift_form, DynamicsError, HamiltonianSystem};
use crate::expr::{EqualityVerdict, EvalError, ScalarExpr};
use crate::exterior::{bind_point, ChartMap, DifferentialForm, ExteriorError};
use crate::lcs::LcsStructure;
use crate::sample;

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("structures have different dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("map charts do not match the extended structure charts")]
    ChartMismatch,
    #[error("K_F is required but was not supplied and could not be extracted: {0}")]
    MissingKf(String),
    #[error("map is not invertible on the sampled domain (max round-trip error {0:e})")]
    NotInvertible(f64),
    #[error("candidate failed check_canonical; see the report")]
    NotCanonical,
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Dynamics(#[from] DynamicsError),
}

/// A candidate canonical transformation `F: ℝ×M₁ → ℝ×M₂` between the
/// time extensions of two lcs structures, with an optional counterterm
/// `K_F` on the source.
#[derive(Debug, Clone)]
pub struct CanonicalCandidate {
    pub map: ChartMap,
    pub inverse: Option<ChartMap>,
    pub s1: LcsStructure,
    pub s2: LcsStructure,
    pub k_f: Option<ScalarExpr>,
}

impl CanonicalCandidate {
    pub fn new(
        map: ChartMap,
        s1: LcsStructure,
        s2: LcsStructure,
        k_f: Option<ScalarExpr>,
    ) -> Result<Self, CanonicalError> {
        if s1.chart().dim() != s2.chart().dim() {
            return Err(CanonicalError::DimensionMismatch(
                s1.chart().dim(),
                s2.chart().dim(),
            ));
        }
        let e1 = s1.chart().clone().extend();
        let e2 = s2.chart().clone().extend();
        if map.source != e1 || map.target != e2 {
            return Err(CanonicalError::ChartMismatch);
        }
        Ok(CanonicalCandidate {
            map,
            inverse: None,
            s1,
            s2,
            k_f,
        })
    }

    pub fn with_inverse(mut self, inverse: ChartMap) -> Self {
        self.inverse = Some(inverse);
        self
    }

    pub fn ext1(&self) -> &Chart {
        &self.map.source
    }

    pub fn ext2(&self) -> &Chart {
        &self.map.target
    }

    fn theta1_ext(&self) -> DifferentialForm {
        lift_form(self.s1.theta(), self.ext1())
    }

    fn theta2_ext(&self) -> DifferentialForm {
        lift_form(self.s2.theta(), self.ext2())
    }
}

/// Per-condition outcome of [`check_canonical`].
#[derive(Debug, Clone)]
pub struct CanonicalReport {
    /// (ii) the `t`-component of `F` is `t`, checked symbolically.
    pub preserves_time: bool,
    /// (iii) `F*θ̃₂ = θ̃₁`.
    pub theta_matches: EqualityVerdict,
    pub theta_residual: DifferentialForm,
    /// (iv) `F*Ω̃₂ = Ω̃₁ + d_θ̃₁K_F∧dt`.
    pub omega_matches: EqualityVerdict,
    pub omega_residual: DifferentialForm,
    /// (i) max round-trip error of the sampled invertibility check.
    pub max_roundtrip: f64,
    pub seed: u64,
    pub samples: usize,
    pub canonical: bool,
}

/// A candidate that passed [`check_canonical`], with its report.
#[derive(Debug, Clone)]
pub struct VerifiedCanonical {
    pub candidate: CanonicalCandidate,
    pub report: CanonicalReport,
}

const NEWTON_TOL: f64 = 1e-12;
const ROUNDTRIP_TOL: f64 = 1e-8;

/// Newton inversion of `F` near `y = F(x)`: recover `x` starting from a
/// perturbed guess; used when no inverse map is supplied.
fn newton_invert(map: &ChartMap, y: &[f64], guess: &[f64]) -> Option<Vec<f64>> {
    let mut x = guess.to_vec();
    for _ in 0..60 {
        let env = bind_point(&map.source, &x, None);
        let fx = map.eval_at(&env).ok()?;
        let r = DVector::from_iterator(y.len(), fx.iter().zip(y).map(|(a, b)| a - b));
        if r.amax() < NEWTON_TOL {
            return Some(x);
        }
        let j = map.jacobian_at(&env).ok()?;
        let dx = j.lu().solve(&r)?;
        for (xi, di) in x.iter_mut().zip(dx.iter()) {
            *xi -= di;
        }
    }
    None
}

pub fn check_canonical(
    c: CanonicalCandidate,
    samples: usize,
) -> Result<VerifiedCanonical, CanonicalError> {
    check_canonical_seeded(c, samples, sample::DEFAULT_SEED)
}

pub fn check_canonical_seeded(
    c: CanonicalCandidate,
    samples: usize,
    seed: u64,
) -> Result<VerifiedCanonical, CanonicalError> {
    let k_f = match &c.k_f {
        Some(k) => k.clone(),
        None => extract_kf(&c)?,
    };
    let c = CanonicalCandidate {
        k_f: Some(k_f.clone()),
        ..c
    };
    let ext1 = c.ext1().clone();
    let n1 = ext1.dim();

    // (ii) time preservation, symbolic
    let preserves_time = c.map.preserves_time();

    // (iii) θ residual
    let theta_residual = c.theta2_ext().pullback(&c.map)?.sub(&c.theta1_ext())?;
    let theta_matches = theta_residual.is_zero_verdict();

    // (iv) Ω residual
    let omega_residual = omega_condition_residual(&c, &k_f)?;
    let omega_matches = omega_residual.is_zero_verdict();

    // (i) sampled invertibility
    let mut rng = sample::rng(seed);
    let mut max_roundtrip = 0.0f64;
    for _ in 0..samples {
        let x = sample::point_in_box(&mut rng, n1);
        let env = bind_point(&ext1, &x, None);
        let y = c.map.eval_at(&env)?;
        let back = match &c.inverse {
            Some(inv) => {
                let env_y = bind_point(&c.map.target, &y, None);
                Some(inv.eval_at(&env_y)?)
            }
            None => {
                // nudge the start so Newton does real work
                let guess: Vec<f64> = x.iter().map(|v| v + 0.05).collect();
                newton_invert(&c.map, &y, &guess)
            }
        };
        let Some(back) = back else {
            return Err(CanonicalError::NotInvertible(f64::INFINITY));
        };
        let err = back
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_roundtrip = max_roundtrip.max(err);
    }
    if max_roundtrip > ROUNDTRIP_TOL {
        return Err(CanonicalError::NotInvertible(max_roundtrip));
    }

    let canonical = preserves_time && theta_matches.equal && omega_matches.equal;
    let report = CanonicalReport {
        preserves_time,
        theta_matches,
        theta_residual,
        omega_matches,
        omega_residual,
        max_roundtrip,
        seed,
        samples,
        canonical,
    };
    Ok(VerifiedCanonical {
        candidate: c,
        report,
    })
}

/// `F*Ω̃₂ − Ω̃₁ − d_θ̃₁K_F∧dt`.
fn omega_condition_residual(
    c: &CanonicalCandidate,
    k_f: &ScalarExpr,
) -> Result<DifferentialForm, CanonicalError> {
    let ext1 = c.ext1();
    let t_idx = ext1.time_index().expect("extended chart");
    let dt = DifferentialForm::basis_one_form(ext1, t_idx);
    let omega1 = lift_form(c.s1.omega(), ext1);
    let omega2 = lift_form(c.s2.omega(), c.ext2());
    let kf_form = DifferentialForm::from_scalar(ext1, k_f.clone());
    let dk = kf_form.ldr(&c.theta1_ext())?;
    Ok(omega2
        .pullback(&c.map)?
        .sub(&omega1)?
        .sub(&dk.wedge(&dt)?)?)
}

/// Best-effort extraction of `K_F` from `F*Ω̃₂ − Ω̃₁ = dK_F∧dt` when
/// `θ₁ = 0` and the residual is polynomial; errors otherwise.
fn extract_kf(c: &CanonicalCandidate) -> Result<ScalarExpr, CanonicalError> {
    if !c.s1.theta().is_zero_verdict().equal {
        return Err(CanonicalError::MissingKf(
            "extraction is only supported for θ₁ = 0".into(),
        ));
    }
    let ext1 = c.ext1();
    let t_idx = ext1.time_index().expect("extended chart");
    let omega1 = lift_form(c.s1.omega(), ext1);
    let r = lift_form(c.s2.omega(), c.ext2())
        .pullback(&c.map)?
        .sub(&omega1)?;
    // read g_i from r = Σ g_i dx_i∧dt + (remainder); K must satisfy
    // ∂K/∂x_i = g_i, recovered monomial by monomial
    let mut k = ScalarExpr::zero();
    for i in 0..t_idx {
        let g = r.coeff(&[i, t_idx]);
        let Some(p) = g.to_poly() else {
            return Err(CanonicalError::MissingKf(format!(
                "dt-component `{g}` is not polynomial"
            )));
        };
        let xi = ScalarExpr::var(ext1.coord(i));
        for (m, coeff) in p.terms() {
            // homotopy formula: x_i·m picks up 1/(spatial degree + 1)
            let spatial_deg: u32 = m
                .iter()
                .filter(|(v, _)| *v != "t")
                .map(|(_, e)| *e)
                .sum();
            let mut term = ScalarExpr::Const(
                coeff.clone()
                    / num_rational::BigRational::from_integer((spatial_deg as i64 + 1).into()),
            ) * xi.clone();
            for (v, e) in m {
                term = term * ScalarExpr::var(v).pow(*e as i64);
            }
            k = k + term;
        }
    }
    let k = k.simplify();
    // verify: the full residual must be exactly dK∧dt
    let check = omega_condition_residual(
        &CanonicalCandidate {
            k_f: Some(k.clone()),
            ..c.clone()
        },
        &k,
    )?;
    if !check.is_zero_verdict().equal {
        return Err(CanonicalError::MissingKf(format!(
            "residual is not of the form dK∧dt (remainder {check})"
        )));
    }
    Ok(k)
}

/// `K = H∘F + K_F` on the source extension.
pub fn transported_hamiltonian(
    vc: &VerifiedCanonical,
    h: &ScalarExpr,
) -> Result<ScalarExpr, CanonicalError> {
    if !vc.report.canonical {
        return Err(CanonicalError::NotCanonical);
    }
    let k_f = vc.candidate.k_f.as_ref().expect("verified candidate has K_F");
    Ok((vc.candidate.map.pullback_scalar(h) + k_f.clone()).simplify())
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Condition 1: `F*Ω_H = Ω_K` with `K = H∘F + K_F`.
    pub condition1: EqualityVerdict,
    pub condition1_residual: DifferentialForm,
    /// Condition 2: max mismatch of `TF∘X̃_K − X̃_H∘F` over the samples.
    pub condition2_max_mismatch: f64,
    /// Condition 3 residual (`None` when potentials were not supplied).
    pub condition3: Option<EqualityVerdict>,
    pub seed: u64,
    pub samples: usize,
}

/// Check the equivalent conditions of the canonical-transformation
/// theorem for a verified candidate and a Hamiltonian on the target.
/// `potentials` are `(Θ₁, Θ₂)` with `Ωᵢ = d_θᵢΘᵢ`; condition 3 is
/// skipped without them.
pub fn verify_equivalences(
    vc: &VerifiedCanonical,
    h: &ScalarExpr,
    samples: usize,
    potentials: Option<(&DifferentialForm, &DifferentialForm)>,
) -> Result<EquivalenceReport, CanonicalError> {
    verify_equivalences_seeded(vc, h, samples, potentials, sample::DEFAULT_SEED)
}

pub fn verify_equivalences_seeded(
    vc: &VerifiedCanonical,
    h: &ScalarExpr,
    samples: usize,
    potentials: Option<(&DifferentialForm, &DifferentialForm)>,
    seed: u64,
) -> Result<EquivalenceReport, CanonicalError> {
    let c = &vc.candidate;
    let k = transported_hamiltonian(vc, h)?;
    let ext1 = c.ext1();
    let ext2 = c.ext2();
    let t1 = ext1.time_index().unwrap();
    let t2 = ext2.time_index().unwrap();
    let dt1 = DifferentialForm::basis_one_form(ext1, t1);
    let dt2 = DifferentialForm::basis_one_form(ext2, t2);

    // condition 1: F*Ω_H − Ω_K
    let omega_h = lift_form(c.s2.omega(), ext2).add(
        &DifferentialForm::from_scalar(ext2, h.clone())
            .ldr(&c.theta2_ext())?
            .wedge(&dt2)?,
    )?;
    let omega_k = lift_form(c.s1.omega(), ext1).add(
        &DifferentialForm::from_scalar(ext1, k.clone())
            .ldr(&c.theta1_ext())?
            .wedge(&dt1)?,
    )?;
    let condition1_residual = omega_h.pullback(&c.map)?.sub(&omega_k)?;
    let condition1 = condition1_residual.is_zero_verdict();

    // condition 2: TF∘X̃_K = X̃_H∘F at samples
    let n = c.s1.chart().dim();
    let sys_k = HamiltonianSystem::new(c.s1.clone(), k.clone())?;
    let sys_h = HamiltonianSystem::new(c.s2.clone(), h.clone())?;
    let mut rng = sample::rng(seed);
    let mut max_mismatch = 0.0f64;
    for _ in 0..samples {
        let xt = sample::point_in_box(&mut rng, n + 1);
        let (x, t) = (&xt[..n], xt[n]);
        let mut vk = field_at(&sys_k, t, x)?;
        vk.push(1.0);
        let env = bind_point(ext1, &xt, None);
        let j = c.map.jacobian_at(&env)?;
        let pushed = j * DVector::from_column_slice(&vk);
        let y_ext = c.map.eval_at(&env)?;
        let mut vh = field_at(&sys_h, y_ext[t2], &y_ext[..n])?;
        vh.push(1.0);
        let mismatch = pushed
            .iter()
            .zip(&vh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_mismatch = max_mismatch.max(mismatch);
    }

    // condition 3: d_θ̃₁(F*Θ̃₂ − Θ_{K_F}) = 0 with Θ_{K_F} = Θ̃₁ + K_F·dt
    let condition3 = match potentials {
        None => None,
        Some((p1, p2)) => {
            let k_f = c.k_f.as_ref().unwrap();
            let theta_tilde1 = lift_form(p1, ext1).add(&dt1)?;
            let theta_tilde2 = lift_form(p2, ext2).add(&dt2)?;
            let inner = theta_tilde2
                .pullback(&c.map)?
                .sub(&theta_tilde1)?
                .sub(&dt1.scale_expr(k_f))?;
            Some(inner.ldr(&c.theta1_ext())?.is_zero_verdict())
        }
    };

    Ok(EquivalenceReport {
        condition1,
        condition1_residual,
        condition2_max_mismatch: max_mismatch,
        condition3,
        seed,
        samples,
    })
}

/// `F*Θ̃₂ − Θ̃₁ − K_F·dt − d_θ̃₁W`: zero iff `W` generates `F` with the
/// candidate's `K_F`.
pub fn generating_residual(
    c: &CanonicalCandidate,
    w: &ScalarExpr,
    theta1_pot: &DifferentialForm,
    theta2_pot: &DifferentialForm,
) -> Result<DifferentialForm, CanonicalError> {
    let k_f = c
        .k_f
        .as_ref()
        .ok_or_else(|| CanonicalError::MissingKf("generating_residual needs K_F".into()))?;
    let ext1 = c.ext1();
    let t1 = ext1.time_index().unwrap();
    let t2 = c.ext2().time_index().unwrap();
    let dt1 = DifferentialForm::basis_one_form(ext1, t1);
    let dt2 = DifferentialForm::basis_one_form(c.ext2(), t2);
    let theta_tilde1 = lift_form(theta1_pot, ext1).add(&dt1)?;
    let theta_tilde2 = lift_form(theta2_pot, c.ext2()).add(&dt2)?;
    let dw = DifferentialForm::from_scalar(ext1, w.clone()).ldr(&c.theta1_ext())?;
    Ok(theta_tilde2
        .pullback(&c.map)?
        .sub(&theta_tilde1)?
        .sub(&dt1.scale_expr(k_f))?
        .sub(&dw)?)
}

/// Composition of two verified candidates: `K_{F∘G} = K_G + K_F∘G`.
pub fn compose(
    outer: &VerifiedCanonical,
    inner: &VerifiedCanonical,
) -> Result<CanonicalCandidate, CanonicalError> {
    let f = &outer.candidate;
    let g = &inner.candidate;
    let map = f.map.compose(&g.map)?;
    let k_g = g.candidate_kf();
    let k_f = f.candidate_kf();
    let k = (k_g + g.map.pullback_scalar(&k_f)).simplify();
    CanonicalCandidate::new(map, g.s1.clone(), f.s2.clone(), Some(k))
}

impl CanonicalCandidate {
    fn candidate_kf(&self) -> ScalarExpr {
        self.k_f.clone().unwrap_or_else(ScalarExpr::zero)
    }
}

/// A convenience: the identity candidate on a structure with `K_F = 0`.
pub fn identity_candidate(s: &LcsStructure) -> CanonicalCandidate {
    let ext = s.chart().clone().extend();
    CanonicalCandidate::new(
        ChartMap::identity(&ext),
        s.clone(),
        s.clone(),
        Some(ScalarExpr::zero()),
    )
    .expect("identity candidate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::expr_equal;
    use crate::expr::parse;
    use crate::lcs::{cotangent_lcs, liouville_form, validate_lcs};

    fn symplectic_2d() -> LcsStructure {
        let c = Chart::cotangent(1);
        let omega = DifferentialForm::basis_one_form(&c, 0)
            .wedge(&DifferentialForm::basis_one_form(&c, 1))
            .unwrap();
        validate_lcs(omega, DifferentialForm::zero(&c, 1), 20).unwrap()
    }

    /// F(t,q,p) = (t, q, p + c·t): F*(dq∧dp) = dq∧dp + c·dq∧dt, so the
    /// defining condition fixes K_F = c·q.
    fn fiber_translation(cv: i64) -> CanonicalCandidate {
        let s = symplectic_2d();
        let ext = s.chart().clone().extend();
        let map = ChartMap::new(
            &ext,
            &ext,
            vec![
                ScalarExpr::var("q1"),
                ScalarExpr::var("p1") + ScalarExpr::int(cv) * ScalarExpr::time(),
                ScalarExpr::time(),
            ],
        )
        .unwrap();
        let k_f = ScalarExpr::int(cv) * ScalarExpr::var("q1");
        CanonicalCandidate::new(map, s.clone(), s, Some(k_f)).unwrap()
    }

    #[test]
    fn identity_is_canonical() {
        let s = symplectic_2d();
        let vc = check_canonical(identity_candidate(&s), 20).unwrap();
        assert!(vc.report.canonical);
        assert!(matches!(
            vc.report.theta_matches.path,
            crate::expr::EqualityPath::Exact
        ));
    }

    #[test]
    fn fiber_translation_is_canonical() {
        let vc = check_canonical(fiber_translation(3), 30).unwrap();
        assert!(vc.report.canonical);
        assert!(vc.report.max_roundtrip < 1e-9);
    }

    #[test]
    fn kf_extraction_matches_oracle() {
        // omit K_F; extraction must recover c·q up to a function of t
        let mut c = fiber_translation(3);
        c.k_f = None;
        let vc = check_canonical(c, 20).unwrap();
        let k = vc.candidate.k_f.as_ref().unwrap();
        let expected = parse("3*q1", vc.candidate.ext1(), true).unwrap();
        let d = (k.clone() - expected).simplify();
        // any leftover must be spatial-gradient-free
        assert!(d.differentiate("q1").is_zero() && d.differentiate("p1").is_zero());
        assert!(vc.report.canonical);
    }

    #[test]
    fn wrong_kf_rejected() {
        let mut c = fiber_translation(3);
        c.k_f = Some(ScalarExpr::var("q1"));
        let vc = check_canonical(c, 10).unwrap();
        assert!(!vc.report.canonical);
        assert!(!vc.report.omega_matches.equal);
    }

    #[test]
    fn theta_violation_rejected() {
        // lcs structures with θ ≠ 0: a map scaling x3 breaks F*θ̃₂ = θ̃₁
        let rep = crate::contact::representation("g41-rep1").unwrap();
        let s = rep.lcs().unwrap();
        let ext = s.chart().clone().extend();
        let map = ChartMap::new(
            &ext,
            &ext,
            vec![
                ScalarExpr::var("x1"),
                ScalarExpr::var("x2"),
                ScalarExpr::int(2) * ScalarExpr::var("x3"),
                ScalarExpr::var("x4"),
                ScalarExpr::time(),
            ],
        )
        .unwrap();
        let c = CanonicalCandidate::new(map, s.clone(), s, Some(ScalarExpr::zero())).unwrap();
        let vc = check_canonical(c, 10).unwrap();
        assert!(!vc.report.theta_matches.equal);
        assert!(!vc.report.canonical);
    }

    #[test]
    fn transported_hamiltonian_cases() {
        // identity: K = H
        let s = symplectic_2d();
        let vc = check_canonical(identity_candidate(&s), 10).unwrap();
        let h = parse("p1^2/2 + q1", vc.candidate.ext1(), true).unwrap();
        let k = transported_hamiltonian(&vc, &h).unwrap();
        assert!(expr_equal(&k, &h).equal);
        // H = 0: K = K_F
        let vc = check_canonical(fiber_translation(2), 10).unwrap();
        let k = transported_hamiltonian(&vc, &ScalarExpr::zero()).unwrap();
        assert!(expr_equal(&k, &parse("2*q1", vc.candidate.ext1(), true).unwrap()).equal);
        // H = p²/2: K = (p + c·t)²/2 + c·q
        let h = parse("p1^2/2", vc.candidate.ext2(), true).unwrap();
        let k = transported_hamiltonian(&vc, &h).unwrap();
        let expected = parse("(p1 + 2*t)^2/2 + 2*q1", vc.candidate.ext1(), true).unwrap();
        assert!(expr_equal(&k, &expected).equal, "{k}");
    }

    #[test]
    fn equivalence_conditions() {
        let vc = check_canonical(fiber_translation(2), 20).unwrap();
        let h = parse("p1^2/2", vc.candidate.ext2(), true).unwrap();
        let rep = verify_equivalences(&vc, &h, 100, None).unwrap();
        assert!(rep.condition1.equal);
        assert!(rep.condition2_max_mismatch < 1e-9);

        // identity on a cotangent lcs: condition 3 exact with Θ = −Θ_Q
        // (Ω_θ = −d_θΘ_Q, so −Θ_Q is the d_θ-potential)
        let base = Chart::new(vec!["q1", "q2"]).unwrap();
        let mut vt = DifferentialForm::zero(&base, 1);
        vt.add_term(&[0], ScalarExpr::one());
        let s = cotangent_lcs(2, &vt).unwrap();
        let pot = liouville_form(s.structure.chart()).neg();
        let vc = check_canonical(identity_candidate(&s.structure), 10).unwrap();
        let h = parse("p1*p2", vc.candidate.ext2(), true).unwrap();
        let rep = verify_equivalences(&vc, &h, 50, Some((&pot, &pot))).unwrap();
        assert!(rep.condition1.equal);
        assert!(rep.condition2_max_mismatch < 1e-9);
        assert!(rep.condition3.as_ref().unwrap().equal);
        // skipped without potentials
        let rep = verify_equivalences(&vc, &h, 10, None).unwrap();
        assert!(rep.condition3.is_none());
    }

    #[test]
    fn equivalence_random_polynomial_h() {
        let vc = check_canonical(fiber_translation(1), 10).unwrap();
        for h_src in ["p1^2/2 + q1^2", "q1*p1", "p1^3/3 - q1"] {
            let h = parse(h_src, vc.candidate.ext2(), true).unwrap();
            let rep = verify_equivalences(&vc, &h, 50, None).unwrap();
            assert!(rep.condition1.equal, "{h_src}");
            assert!(rep.condition2_max_mismatch < 1e-8, "{h_src}");
        }
    }

    #[test]
    fn generating_function_residual() {
        // identity with W = 0 and potentials Θ = −p dq: exact zero
        let s = symplectic_2d();
        let c = identity_candidate(&s);
        let pot = liouville_form(s.chart()).neg();
        let r = generating_residual(&c, &ScalarExpr::zero(), &pot, &pot).unwrap();
        assert!(r.is_zero_verdict().equal);
        // perturbing W produces a nonzero residual
        let w = parse("q1^2", c.ext1(), true).unwrap();
        let r = generating_residual(&c, &w, &pot, &pot).unwrap();
        assert!(!r.is_zero_verdict().equal);
    }

    #[test]
    fn fiber_translation_generating_function() {
        // F(q,p) = (q, p+ct) with Θ = −p·dq and K_F = c·q:
        // F*Θ̃₂ − Θ̃₁ − K_F·dt = −c·t·dq − c·q·dt = d(−c·q·t)
        let c = fiber_translation(1);
        let pot = liouville_form(c.s1.chart()).neg();
        let w = parse("-q1*t", c.ext1(), true).unwrap();
        let r = generating_residual(&c, &w, &pot, &pot).unwrap();
        assert!(r.is_zero_verdict().equal, "residual {r}");
    }

    #[test]
    fn composition_of_canonical_maps() {
        let vc1 = check_canonical(fiber_translation(1), 10).unwrap();
        let vc2 = check_canonical(fiber_translation(2), 10).unwrap();
        let comp = compose(&vc2, &vc1).unwrap();
        let vc = check_canonical(comp, 30).unwrap();
        assert!(vc.report.canonical);
        let k = vc.candidate.k_f.as_ref().unwrap();
        assert!(expr_equal(k, &parse("3*q1", vc.candidate.ext1(), true).unwrap()).equal);
    }
}
