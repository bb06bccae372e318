//! Locally conformal symplectic structures: validation, musical maps, the
//! Lee vector field, cotangent-bundle constructor, Lagrangian-section and
//! morphism checks.

use nalgebra::DVector;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::chart::Chart;
use crate::expr::{EqualityVerdict, EvalError, ScalarExpr};
use crate::exterior::{bind_point, ChartMap, DifferentialForm, ExteriorError, VectorFieldExpr};
use crate::sample;

#[derive(Debug, Error)]
pub enum LcsError {
    #[error("chart dimension {0} is odd")]
    OddDimension(usize),
    #[error("closedness violation: {which} has nonzero residual {residual}")]
    ClosednessViolation {
        which: &'static str,
        residual: String,
    },
    #[error("degeneracy detected at {point:?}: |det| = {det:e}")]
    DegeneracyDetected { point: Vec<f64>, det: f64 },
    #[error("two-form is singular at {point:?}")]
    SingularAtPoint { point: Vec<f64> },
    #[error("base one-form is not closed")]
    NonClosedBaseForm,
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

/// Record of the nondegeneracy sampling performed by [`validate_lcs`].
#[derive(Debug, Clone)]
pub struct NondegeneracyReport {
    pub seed: u64,
    pub samples: usize,
    pub min_abs_det: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub theta_closed: EqualityVerdict,
    pub ldr_omega_zero: EqualityVerdict,
    pub nondegeneracy: NondegeneracyReport,
}

/// A validated lcs structure `(chart, Ω, θ)` with `dθ = 0`,
/// `dΩ = θ∧Ω` and Ω nondegenerate at the sampled points.
#[derive(Debug, Clone)]
pub struct LcsStructure {
    chart: Chart,
    omega: DifferentialForm,
    theta: DifferentialForm,
    report: ValidationReport,
}

pub const DEFAULT_NONDEGENERACY_SAMPLES: usize = 100;
const DEGENERACY_TOL: f64 = 1e-12;

/// Validate `(Ω, θ)` as an lcs structure.
pub fn validate_lcs(
    omega: DifferentialForm,
    theta: DifferentialForm,
    sample_count: usize,
) -> Result<LcsStructure, LcsError> {
    validate_lcs_seeded(omega, theta, sample_count, sample::DEFAULT_SEED)
}

pub fn validate_lcs_seeded(
    omega: DifferentialForm,
    theta: DifferentialForm,
    sample_count: usize,
    seed: u64,
) -> Result<LcsStructure, LcsError> {
    let chart = omega.chart().clone();
    let n = chart.dim();
    if n % 2 != 0 {
        return Err(LcsError::OddDimension(n));
    }
    let dtheta = theta.d();
    let theta_closed = dtheta.is_zero_verdict();
    if !theta_closed.equal {
        return Err(LcsError::ClosednessViolation {
            which: "dθ",
            residual: dtheta.to_string(),
        });
    }
    let residual = omega.ldr(&theta)?;
    let ldr_omega_zero = residual.is_zero_verdict();
    if !ldr_omega_zero.equal {
        return Err(LcsError::ClosednessViolation {
            which: "dΩ − θ∧Ω",
            residual: residual.to_string(),
        });
    }
    let mut rng = sample::rng(seed);
    let mut min_abs_det = f64::INFINITY;
    for _ in 0..sample_count {
        let x = sample::point_in_box(&mut rng, n);
        let env = bind_point(&chart, &x, None);
        let m = omega.matrix_at(&env)?;
        let det = m.determinant().abs();
        if det <= DEGENERACY_TOL {
            return Err(LcsError::DegeneracyDetected { point: x, det });
        }
        min_abs_det = min_abs_det.min(det);
    }
    Ok(LcsStructure {
        chart,
        omega,
        theta,
        report: ValidationReport {
            theta_closed,
            ldr_omega_zero,
            nondegeneracy: NondegeneracyReport {
                seed,
                samples: sample_count,
                min_abs_det,
            },
        },
    })
}

impl LcsStructure {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn omega(&self) -> &DifferentialForm {
        &self.omega
    }

    pub fn theta(&self) -> &DifferentialForm {
        &self.theta
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    /// Musical flat: `X ↦ ι_X Ω`.
    pub fn flat(&self, field: &VectorFieldExpr) -> Result<DifferentialForm, LcsError> {
        Ok(self.omega.interior(field)?)
    }

    /// Musical sharp at a point: the tangent vector `v` with
    /// `ι_v Ω = α` pointwise.
    pub fn sharp_at(&self, alpha: &[f64], x: &[f64], t: Option<f64>) -> Result<Vec<f64>, LcsError> {
        let env = bind_point(&self.chart, x, t);
        let m = self.omega.matrix_at(&env)?;
        // (ι_v Ω)_j = Σ_i v^i Ω(∂i, ∂j)  ⇔  Mᵀ v = α
        let lu = m.transpose().lu();
        let rhs = DVector::from_column_slice(alpha);
        match lu.solve(&rhs) {
            Some(v) => Ok(v.iter().copied().collect()),
            None => Err(LcsError::SingularAtPoint { point: x.to_vec() }),
        }
    }

    /// Solve `ι_v Ω = α` symbolically. Succeeds when the determinant of
    /// the Ω matrix reduces to a nonzero rational constant, which keeps
    /// the cofactor inverse inside the polynomial class.
    pub fn sharp_symbolic(&self, alpha: &[ScalarExpr]) -> Option<VectorFieldExpr> {
        let m = self.omega.matrix_symbolic();
        let mt = transpose(&m);
        let v = solve_symbolic(&mt, alpha)?;
        Some(VectorFieldExpr::new(&self.chart, v))
    }

    /// The Lee vector field, normalized so that the Hamiltonian vector
    /// field of the constant function 1 is the Lee field: `ι_{Z_θ}Ω = −θ`.
    pub fn lee_field(&self) -> LeeField {
        let theta_comps: Vec<ScalarExpr> =
            self.theta.components().iter().map(|c| -c.clone()).collect();
        match self.sharp_symbolic(&theta_comps) {
            Some(f) => LeeField::Symbolic(f),
            None => LeeField::Pointwise,
        }
    }

    /// Pointwise Lee vector value.
    pub fn lee_at(&self, x: &[f64]) -> Result<Vec<f64>, LcsError> {
        let env = bind_point(&self.chart, x, None);
        let theta_vals: Vec<f64> = self
            .theta
            .components()
            .iter()
            .map(|c| c.eval_f64(&env).map(|v| -v))
            .collect::<Result<_, _>>()?;
        self.sharp_at(&theta_vals, x, None)
    }
}

/// Lee vector field: symbolic when the Ω matrix has a polynomial inverse,
/// pointwise otherwise (use [`LcsStructure::lee_at`]).
#[derive(Debug, Clone)]
pub enum LeeField {
    Symbolic(VectorFieldExpr),
    Pointwise,
}

// ---------------------------------------------------------------------------
// symbolic linear algebra (cofactor route)

fn transpose(m: &[Vec<ScalarExpr>]) -> Vec<Vec<ScalarExpr>> {
    let n = m.len();
    (0..n)
        .map(|i| (0..n).map(|j| m[j][i].clone()).collect())
        .collect()
}

fn minor(m: &[Vec<ScalarExpr>], row: usize, col: usize) -> Vec<Vec<ScalarExpr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

pub(crate) fn det_symbolic(m: &[Vec<ScalarExpr>]) -> ScalarExpr {
    let n = m.len();
    if n == 0 {
        return ScalarExpr::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = ScalarExpr::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let cof = det_symbolic(&minor(m, 0, j));
        let signed = if j % 2 == 0 { cof } else { -cof };
        acc = acc + m[0][j].clone() * signed;
    }
    acc
}

/// Solve `M v = b` by Cramer's rule when `det M` reduces to a nonzero
/// rational constant.
fn solve_symbolic(m: &[Vec<ScalarExpr>], b: &[ScalarExpr]) -> Option<Vec<ScalarExpr>> {
    let n = m.len();
    let det = det_symbolic(m).to_poly()?.to_expr();
    let det_const = det.as_const()?.clone();
    if det_const.to_f64()? == 0.0 {
        return None;
    }
    let inv = ScalarExpr::Const(det_const.recip());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut mk: Vec<Vec<ScalarExpr>> = m.to_vec();
        for (row, bv) in mk.iter_mut().zip(b) {
            row[k] = bv.clone();
        }
        out.push(inv.clone() * det_symbolic(&mk));
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// cotangent-bundle lcs structures

/// A cotangent lcs structure `T*_θ Q` built by [`cotangent_lcs`], keeping
/// the base data needed by sections and the Hamilton-Jacobi machinery.
#[derive(Debug, Clone)]
pub struct CotangentLcs {
    pub structure: LcsStructure,
    pub base: Chart,
    /// ϑ on the base (its pullback to the bundle is the Lee form).
    pub vartheta: DifferentialForm,
}

impl CotangentLcs {
    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// Components ϑ_i as functions of the base coordinates.
    pub fn vartheta_components(&self) -> Vec<ScalarExpr> {
        self.vartheta.components()
    }

    /// The Liouville one-form `Θ_Q = p_i dq^i` on the bundle chart.
    pub fn liouville(&self) -> DifferentialForm {
        liouville_form(self.structure.chart())
    }
}

pub fn liouville_form(chart: &Chart) -> DifferentialForm {
    let n = chart.base_dim().expect("cotangent chart required");
    let mut theta_q = DifferentialForm::zero(chart, 1);
    for i in 0..n {
        theta_q.add_term(&[i], ScalarExpr::var(chart.coord(n + i)));
    }
    theta_q
}

/// Build `T*_θ Q` from a closed one-form ϑ on the base `q1..qn`:
/// `Ω_θ = −d_θ Θ_Q = ω_Q + θ∧Θ_Q` with `θ` the pullback of ϑ.
pub fn cotangent_lcs(
    base_dim: usize,
    vartheta: &DifferentialForm,
) -> Result<CotangentLcs, LcsError> {
    let base = Chart::new(
        (1..=base_dim)
            .map(|i| format!("q{i}"))
            .collect::<Vec<String>>(),
    )
    .expect("base chart");
    assert_eq!(vartheta.chart(), &base, "ϑ must live on the base chart");
    if !vartheta.d().is_zero_verdict().equal {
        return Err(LcsError::NonClosedBaseForm);
    }
    let chart = Chart::cotangent(base_dim);
    // pull ϑ back along the bundle projection (same coefficient exprs)
    let mut theta = DifferentialForm::zero(&chart, 1);
    for (idx, c) in vartheta.terms() {
        theta.add_term(idx, c.clone());
    }
    let theta_q = liouville_form(&chart);
    let omega = theta_q.ldr(&theta)?.neg();
    let structure = validate_lcs(omega, theta, DEFAULT_NONDEGENERACY_SAMPLES)?;
    Ok(CotangentLcs {
        structure,
        base,
        vartheta: vartheta.clone(),
    })
}

/// Verdict carrying a residual form.
#[derive(Debug, Clone)]
pub struct ResidualVerdict {
    pub holds: bool,
    pub verdict: EqualityVerdict,
    pub residual: DifferentialForm,
}

/// Is the image of the one-form γ on the base a Lagrangian submanifold of
/// `T*_θ Q`? Holds iff `d_ϑ γ = 0`; cross-checked against `γ*Ω_θ = −d_ϑγ`.
pub fn is_lagrangian_section(
    s: &CotangentLcs,
    gamma: &DifferentialForm,
) -> Result<ResidualVerdict, LcsError> {
    let residual = gamma.ldr(&s.vartheta)?;
    let verdict = residual.is_zero_verdict();
    // cross-check the pullback identity for any section
    let section = section_map(s, gamma);
    let pulled = s.structure.omega().pullback(&section)?;
    let check = pulled.equals(&residual.neg())?;
    assert!(
        check.equal,
        "pullback identity γ*Ω_θ = −d_ϑγ violated; section {gamma}"
    );
    Ok(ResidualVerdict {
        holds: verdict.equal,
        verdict,
        residual,
    })
}

/// The section map `q ↦ (q, γ(q))` into the bundle chart.
pub fn section_map(s: &CotangentLcs, gamma: &DifferentialForm) -> ChartMap {
    let n = s.base_dim();
    let mut comps: Vec<ScalarExpr> = (0..n)
        .map(|i| ScalarExpr::var(s.base.coord(i)))
        .collect();
    comps.extend(gamma.components());
    ChartMap::new(&s.base, s.structure.chart(), comps).expect("section map")
}

/// Morphism verdict for `F: (M₁,Ω₁,θ₁) → (M₂,Ω₂,θ₂)`.
#[derive(Debug, Clone)]
pub struct MorphismReport {
    pub omega_matches: EqualityVerdict,
    pub theta_matches: EqualityVerdict,
    pub omega_residual: DifferentialForm,
    pub theta_residual: DifferentialForm,
    pub is_morphism: bool,
}

/// Check `F*Ω₂ = Ω₁` (the defining condition) and the derived consequence
/// `F*θ₂ = θ₁`.
pub fn verify_lcs_morphism(
    f: &ChartMap,
    s1: &LcsStructure,
    s2: &LcsStructure,
) -> Result<MorphismReport, LcsError> {
    if s1.chart().dim() != s2.chart().dim() {
        return Err(LcsError::Exterior(ExteriorError::ComponentCount {
            expected: s2.chart().dim(),
            got: s1.chart().dim(),
        }));
    }
    let omega_residual = s2.omega().pullback(f)?.sub(s1.omega())?;
    let theta_residual = s2.theta().pullback(f)?.sub(s1.theta())?;
    let omega_matches = omega_residual.is_zero_verdict();
    let theta_matches = theta_residual.is_zero_verdict();
    let is_morphism = omega_matches.equal;
    Ok(MorphismReport {
        omega_matches,
        theta_matches,
        omega_residual,
        theta_residual,
        is_morphism,
    })
}

/// Is `X` a locally conformal Hamiltonian field, i.e. `d_θ(ι_X Ω) = 0`?
pub fn is_locally_hamiltonian(
    s: &LcsStructure,
    field: &VectorFieldExpr,
) -> Result<ResidualVerdict, LcsError> {
    let residual = s.flat(field)?.ldr(s.theta())?;
    let verdict = residual.is_zero_verdict();
    Ok(ResidualVerdict {
        holds: verdict.equal,
        verdict,
        residual,
    })
}
