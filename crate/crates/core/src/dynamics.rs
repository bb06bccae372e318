//! Time-dependent Hamiltonian vector fields, suspensions, and fixed-step
//! integration of phase trajectories.

use nalgebra::DVector;
use thiserror::Error;

use crate::chart::{Chart, TIME};
use crate::expr::{EvalError, ScalarExpr};
use crate::exterior::{bind_point, DifferentialForm, ExteriorError, VectorFieldExpr};
use crate::lcs::{LcsError, LcsStructure};
use crate::sample;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("Hamiltonian uses symbols outside the chart: {0:?}")]
    UnboundSymbols(Vec<String>),
    #[error("two-form is singular at t={t}, x={point:?}")]
    SingularAtPoint { t: f64, point: Vec<f64> },
    #[error("chart is not a cotangent chart")]
    NotCotangent,
    #[error("{0}")]
    Lcs(#[from] LcsError),
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

/// A validated lcs structure together with a (possibly time-dependent)
/// Hamiltonian function on its chart.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    lcs: LcsStructure,
    h: ScalarExpr,
}

impl HamiltonianSystem {
    pub fn new(lcs: LcsStructure, h: ScalarExpr) -> Result<Self, DynamicsError> {
        let mut stray: Vec<String> = h
            .free_vars()
            .into_iter()
            .filter(|v| v != TIME && lcs.chart().index_of(v).is_none())
            .collect();
        if !stray.is_empty() {
            stray.sort();
            return Err(DynamicsError::UnboundSymbols(stray));
        }
        Ok(HamiltonianSystem { lcs, h })
    }

    pub fn lcs(&self) -> &LcsStructure {
        &self.lcs
    }

    pub fn hamiltonian(&self) -> &ScalarExpr {
        &self.h
    }

    /// Components of `d_θ H = dH − Hθ` (spatial differential; `t` is a
    /// parameter here).
    pub fn dtheta_h(&self) -> Vec<ScalarExpr> {
        let chart = self.lcs.chart();
        let theta = self.lcs.theta().components();
        (0..chart.dim())
            .map(|i| {
                (self.h.differentiate(chart.coord(i)) - self.h.clone() * theta[i].clone())
                    .simplify()
            })
            .collect()
    }
}

/// Hamiltonian vector field: closed-form when the Ω matrix admits a
/// polynomial inverse, pointwise (via [`field_at`]) otherwise.
#[derive(Debug, Clone)]
pub enum HamiltonianField {
    Symbolic(VectorFieldExpr),
    Pointwise,
}

/// Solve `ι_X Ω = d_θ H` for `X`.
pub fn hamiltonian_field(sys: &HamiltonianSystem) -> HamiltonianField {
    match sys.lcs.sharp_symbolic(&sys.dtheta_h()) {
        Some(f) => HamiltonianField::Symbolic(f),
        None => HamiltonianField::Pointwise,
    }
}

/// Pointwise value of the Hamiltonian field at `(t, x)`.
pub fn field_at(sys: &HamiltonianSystem, t: f64, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let env = bind_point(sys.lcs.chart(), x, Some(t));
    let rhs: Vec<f64> = sys
        .dtheta_h()
        .iter()
        .map(|c| c.eval_f64(&env))
        .collect::<Result<_, _>>()?;
    sys.lcs
        .sharp_at(&rhs, x, Some(t))
        .map_err(|e| match e {
            LcsError::SingularAtPoint { point } => DynamicsError::SingularAtPoint { t, point },
            other => DynamicsError::Lcs(other),
        })
}

/// Residual `‖ι_X Ω − d_θ H‖` of the defining equation at `(t, x)` for a
/// given field value; guards the linear-solve path.
pub fn defining_residual(
    sys: &HamiltonianSystem,
    t: f64,
    x: &[f64],
    field_value: &[f64],
) -> Result<f64, DynamicsError> {
    let env = bind_point(sys.lcs.chart(), x, Some(t));
    let m = sys.lcs.omega().matrix_at(&env)?;
    let rhs: Vec<f64> = sys
        .dtheta_h()
        .iter()
        .map(|c| c.eval_f64(&env))
        .collect::<Result<_, _>>()?;
    let v = DVector::from_column_slice(field_value);
    let r = m.transpose() * v - DVector::from_column_slice(&rhs);
    Ok(r.amax())
}

// ---------------------------------------------------------------------------
// suspension

/// Re-express a form on the time-extended chart (same index terms; the
/// new `t` slot never appears).
pub(crate) fn lift_form(form: &DifferentialForm, ext: &Chart) -> DifferentialForm {
    let mut out = DifferentialForm::zero(ext, form.degree());
    for (idx, c) in form.terms() {
        out.add_term(idx, c.clone());
    }
    out
}

#[derive(Debug, Clone)]
pub struct SuspensionReport {
    pub seed: u64,
    pub samples: usize,
    pub max_omega_contraction: f64,
    pub max_dt_deviation: f64,
}

/// The suspension `∂/∂t + X_H` on the extended chart, together with
/// `Ω_H = Ω̃ + d_θ̃H ∧ dt` and sampled checks of the defining
/// contractions `ι_{X̃}Ω_H = 0`, `ι_{X̃}dt = 1`.
#[derive(Debug, Clone)]
pub struct Suspension {
    pub chart: Chart,
    pub omega_h: DifferentialForm,
    /// Present when the Hamiltonian field is symbolic.
    pub field: Option<VectorFieldExpr>,
    pub report: SuspensionReport,
}

pub fn suspension(sys: &HamiltonianSystem) -> Result<Suspension, DynamicsError> {
    suspension_seeded(sys, sample::DEFAULT_SEED, 100)
}

pub fn suspension_seeded(
    sys: &HamiltonianSystem,
    seed: u64,
    samples: usize,
) -> Result<Suspension, DynamicsError> {
    let base = sys.lcs.chart();
    let n = base.dim();
    let ext = base.clone().extend();
    let t_idx = ext.time_index().expect("extended chart");

    let omega_ext = lift_form(sys.lcs.omega(), &ext);
    let theta_ext = lift_form(sys.lcs.theta(), &ext);
    // d_θ̃H on the extended chart picks up the ∂H/∂t dt term
    let h_form = DifferentialForm::from_scalar(&ext, sys.h.clone());
    let dtheta_h_ext = h_form.ldr(&theta_ext)?;
    let dt_form = DifferentialForm::basis_one_form(&ext, t_idx);
    let omega_h = omega_ext.add(&dtheta_h_ext.wedge(&dt_form)?)?;

    let field = match hamiltonian_field(sys) {
        HamiltonianField::Symbolic(f) => {
            let mut comps: Vec<ScalarExpr> = f.components().to_vec();
            comps.push(ScalarExpr::one());
            Some(VectorFieldExpr::new(&ext, comps))
        }
        HamiltonianField::Pointwise => None,
    };

    let mut rng = sample::rng(seed);
    let mut max_omega = 0.0f64;
    let mut max_dt = 0.0f64;
    for _ in 0..samples {
        let mut xt = sample::point_in_box(&mut rng, n + 1);
        let x: Vec<f64> = xt.drain(..n).collect();
        let t = xt[0];
        let mut v = field_at(sys, t, &x)?;
        v.push(1.0);
        let env = bind_point(&ext, &[x.clone(), vec![t]].concat(), None);
        let susp = VectorFieldExpr::new(
            &ext,
            v.iter()
                .map(|c| {
                    ScalarExpr::Const(num_rational::BigRational::from_float(*c).unwrap_or_default())
                })
                .collect(),
        );
        let contraction = omega_h.interior(&susp)?;
        max_omega = max_omega.max(contraction.max_abs_at(&env)?);
        let dt_pairing = dt_form.pair(&susp)?.eval_f64(&env)?;
        max_dt = max_dt.max((dt_pairing - 1.0).abs());
    }

    Ok(Suspension {
        chart: ext,
        omega_h,
        field,
        report: SuspensionReport {
            seed,
            samples,
            max_omega_contraction: max_omega,
            max_dt_deviation: max_dt,
        },
    })
}

// ---------------------------------------------------------------------------
// integration

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "euler" => Ok(Method::Euler),
            other => Err(format!("unknown method `{other}` (expected rk4 or euler)")),
        }
    }
}

/// Right-hand side of the ODE: a Hamiltonian system (intrinsic linear
/// solve per step) or an explicit time-dependent vector field.
pub enum Rhs<'a> {
    System(&'a HamiltonianSystem),
    Field(&'a VectorFieldExpr),
}

impl Rhs<'_> {
    fn chart(&self) -> &Chart {
        match self {
            Rhs::System(s) => s.lcs.chart(),
            Rhs::Field(f) => f.chart(),
        }
    }

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        match self {
            Rhs::System(s) => field_at(s, t, x),
            Rhs::Field(f) => {
                let env = bind_point(f.chart(), x, Some(t));
                Ok(f.eval_at(&env)?)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub coords: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub method: Method,
    pub dt: f64,
    /// Per-sample residual of `ι_X Ω − d_θ H`, when requested.
    pub residuals: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has samples")
    }

    /// CSV with header `t,x1,...,xn` (a `residual` column when present).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.coords {
            out.push(',');
            out.push_str(c);
        }
        if self.residuals.is_some() {
            out.push_str(",residual");
        }
        out.push('\n');
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            out.push_str(&format!("{t:.12e}"));
            for v in x {
                out.push_str(&format!(",{v:.12e}"));
            }
            if let Some(r) = &self.residuals {
                out.push_str(&format!(",{:.12e}", r[k]));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("dt must be positive, got {0}")]
    BadStep(f64),
    #[error("t1 ({t1}) must exceed t0 ({t0})")]
    BadInterval { t0: f64, t1: f64 },
    #[error("initial state has {got} components, chart needs {expected}")]
    StateDimension { expected: usize, got: usize },
    #[error("aborted at t={t}: {reason} ({} samples kept)", partial.times.len())]
    Aborted {
        t: f64,
        reason: Box<DynamicsError>,
        partial: Trajectory,
    },
    #[error("non-finite state at t={t}")]
    NonFiniteState { t: f64, partial: Trajectory },
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub method: Method,
    pub dt: f64,
    pub diagnostics: bool,
}

impl IntegrateOptions {
    pub fn rk4(dt: f64) -> Self {
        IntegrateOptions {
            method: Method::Rk4,
            dt,
            diagnostics: false,
        }
    }
}

fn axpy(x: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// Fixed-step explicit integration on `[t0, t1]`; the last step is
/// shortened so the final sample lands exactly on `t1`.
pub fn integrate(
    rhs: &Rhs,
    x0: &[f64],
    t0: f64,
    t1: f64,
    opts: IntegrateOptions,
) -> Result<Trajectory, IntegrateError> {
    if !(opts.dt > 0.0) {
        return Err(IntegrateError::BadStep(opts.dt));
    }
    if !(t1 > t0) {
        return Err(IntegrateError::BadInterval { t0, t1 });
    }
    let chart = rhs.chart();
    if x0.len() != chart.dim() {
        return Err(IntegrateError::StateDimension {
            expected: chart.dim(),
            got: x0.len(),
        });
    }
    let mut traj = Trajectory {
        coords: chart.coords().to_vec(),
        times: vec![t0],
        states: vec![x0.to_vec()],
        method: opts.method,
        dt: opts.dt,
        residuals: if opts.diagnostics {
            Some(Vec::new())
        } else {
            None
        },
    };

    let record_residual =
        |traj: &mut Trajectory, rhs: &Rhs, t: f64, x: &[f64]| -> Result<(), DynamicsError> {
            if let Some(res) = traj.residuals.as_mut() {
                match rhs {
                    Rhs::System(s) => {
                        let v = field_at(s, t, x)?;
                        res.push(defining_residual(s, t, x, &v)?);
                    }
                    Rhs::Field(_) => res.push(0.0),
                }
            }
            Ok(())
        };

    let abort = |traj: Trajectory, t: f64, e: DynamicsError| IntegrateError::Aborted {
        t,
        reason: Box::new(e),
        partial: traj,
    };

    if let Err(e) = record_residual(&mut traj, rhs, t0, x0) {
        return Err(abort(traj, t0, e));
    }

    let mut t = t0;
    let mut x = x0.to_vec();
    while t < t1 - 1e-15 * t1.abs().max(1.0) {
        let h = opts.dt.min(t1 - t);
        let step = match opts.method {
            Method::Euler => rhs.eval(t, &x).map(|k1| axpy(&x, h, &k1)),
            Method::Rk4 => (|| {
                let k1 = rhs.eval(t, &x)?;
                let k2 = rhs.eval(t + h / 2.0, &axpy(&x, h / 2.0, &k1))?;
                let k3 = rhs.eval(t + h / 2.0, &axpy(&x, h / 2.0, &k2))?;
                let k4 = rhs.eval(t + h, &axpy(&x, h, &k3))?;
                Ok(x.iter()
                    .enumerate()
                    .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect())
            })(),
        };
        x = match step {
            Ok(v) => v,
            Err(e) => return Err(abort(traj, t, e)),
        };
        t += h;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(IntegrateError::NonFiniteState { t, partial: traj });
        }
        traj.times.push(t);
        traj.states.push(x.clone());
        if let Err(e) = record_residual(&mut traj, rhs, t, &x) {
            return Err(abort(traj, t, e));
        }
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// coordinate cross-check on cotangent charts

#[derive(Debug, Clone)]
pub struct CoordinateCheck {
    pub coordinate_rhs: Vec<f64>,
    pub intrinsic_rhs: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Evaluate the coordinate form of the equations of motion on a
/// cotangent chart:
/// `q̇ⁱ = ∂H/∂p_i`,
/// `ṗ_i = −∂H/∂qⁱ + ∂H/∂p_k (θ_k p_i − p_k θ_i) + θ_i H`,
/// and report the discrepancy against the intrinsic linear solve.
pub fn hamilton_rhs_coordinates(
    sys: &HamiltonianSystem,
    t: f64,
    x: &[f64],
) -> Result<CoordinateCheck, DynamicsError> {
    let chart = sys.lcs.chart();
    let n = chart.base_dim().ok_or(DynamicsError::NotCotangent)?;
    let env = bind_point(chart, x, Some(t));
    let h = &sys.h;
    let theta_c = sys.lcs.theta().components();
    let theta: Vec<f64> = theta_c[..n]
        .iter()
        .map(|c| c.eval_f64(&env))
        .collect::<Result<_, _>>()?;
    let dh_q: Vec<f64> = (0..n)
        .map(|i| h.differentiate(chart.coord(i)).eval_f64(&env))
        .collect::<Result<_, _>>()?;
    let dh_p: Vec<f64> = (0..n)
        .map(|i| h.differentiate(chart.coord(n + i)).eval_f64(&env))
        .collect::<Result<_, _>>()?;
    let h_val = h.eval_f64(&env)?;
    let p = &x[n..];

    let mut rhs = Vec::with_capacity(2 * n);
    rhs.extend_from_slice(&dh_p);
    for i in 0..n {
        let mut v = -dh_q[i] + theta[i] * h_val;
        for k in 0..n {
            v += dh_p[k] * (theta[k] * p[i] - p[k] * theta[i]);
        }
        rhs.push(v);
    }

    let intrinsic = field_at(sys, t, x)?;
    let max_discrepancy = rhs
        .iter()
        .zip(&intrinsic)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(CoordinateCheck {
        coordinate_rhs: rhs,
        intrinsic_rhs: intrinsic,
        max_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::lcs::{cotangent_lcs, validate_lcs, LeeField};

    fn symplectic_2d() -> LcsStructure {
        let c = Chart::cotangent(1);
        let omega = DifferentialForm::basis_one_form(&c, 0)
            .wedge(&DifferentialForm::basis_one_form(&c, 1))
            .unwrap();
        validate_lcs(omega, DifferentialForm::zero(&c, 1), 20).unwrap()
    }

    fn dq1_structure() -> LcsStructure {
        let base = Chart::new(vec!["q1", "q2"]).unwrap();
        let mut vt = DifferentialForm::zero(&base, 1);
        vt.add_term(&[0], ScalarExpr::one());
        cotangent_lcs(2, &vt).unwrap().structure
    }

    #[test]
    fn symplectic_field_reduces() {
        // H = p²/2 + q²/2 → X = p∂q − q∂p
        let s = symplectic_2d();
        let h = parse("p1^2/2 + q1^2/2", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let HamiltonianField::Symbolic(x) = hamiltonian_field(&sys) else {
            panic!("expected symbolic field");
        };
        assert_eq!(x.components()[0], ScalarExpr::var("p1"));
        assert_eq!(x.components()[1], -ScalarExpr::var("q1"));
    }

    #[test]
    fn unit_hamiltonian_gives_lee_field() {
        let s = dq1_structure();
        let sys = HamiltonianSystem::new(s.clone(), ScalarExpr::one()).unwrap();
        let LeeField::Symbolic(z) = s.lee_field() else {
            panic!()
        };
        let mut rng = sample::rng(7);
        for _ in 0..100 {
            let x = sample::point_in_box(&mut rng, 4);
            let v = field_at(&sys, 0.0, &x).unwrap();
            let env = bind_point(s.chart(), &x, None);
            let zv = z.eval_at(&env).unwrap();
            for (a, b) in v.iter().zip(&zv) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        // on a cotangent chart the Lee field is θ_i ∂/∂p_i
        let v = field_at(&sys, 0.0, &[0.3, -0.2, 0.9, 0.1]).unwrap();
        assert!((v[0]).abs() < 1e-12 && (v[1]).abs() < 1e-12);
        assert!((v[2] - 1.0).abs() < 1e-12 && (v[3]).abs() < 1e-12);
    }

    #[test]
    fn pointwise_solve_matches_symbolic() {
        // θ = dq¹, H = p₁: 4×4 linear system at random points
        let s = dq1_structure();
        let h = parse("p1", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let HamiltonianField::Symbolic(xf) = hamiltonian_field(&sys) else {
            panic!()
        };
        let mut rng = sample::rng(11);
        for _ in 0..20 {
            let x = sample::point_in_box(&mut rng, 4);
            let v = field_at(&sys, 0.0, &x).unwrap();
            let env = bind_point(sys.lcs().chart(), &x, None);
            let sv = xf.eval_at(&env).unwrap();
            for (a, b) in v.iter().zip(&sv) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!(defining_residual(&sys, 0.0, &x, &v).unwrap() < 1e-9);
        }
    }

    #[test]
    fn coordinate_form_cross_check() {
        let s = dq1_structure();
        let h = parse("p1", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let mut rng = sample::rng(13);
        for _ in 0..20 {
            let x = sample::point_in_box(&mut rng, 4);
            let chk = hamilton_rhs_coordinates(&sys, 0.0, &x).unwrap();
            assert!(chk.max_discrepancy < 1e-9, "{}", chk.max_discrepancy);
        }
        // θ=0 reduces exactly
        let s0 = symplectic_2d();
        let h0 = parse("p1^2/2 + q1^4", s0.chart(), false).unwrap();
        let sys0 = HamiltonianSystem::new(s0, h0).unwrap();
        let chk = hamilton_rhs_coordinates(&sys0, 0.5, &[0.7, -0.3]).unwrap();
        assert!(chk.max_discrepancy < 1e-12);
        // H ≡ 1 → q̇ = 0, ṗ_i = θ_i
        let s1 = dq1_structure();
        let sys1 = HamiltonianSystem::new(s1, ScalarExpr::one()).unwrap();
        let chk = hamilton_rhs_coordinates(&sys1, 0.0, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(chk.coordinate_rhs[..2], [0.0, 0.0]);
        assert_eq!(chk.coordinate_rhs[2..], [1.0, 0.0]);
    }

    #[test]
    fn suspension_contractions_vanish() {
        let s = dq1_structure();
        let h = parse("p1^2/2 + p2^2/2 + q2^2/2", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let susp = suspension(&sys).unwrap();
        assert!(susp.report.max_omega_contraction < 1e-9);
        assert!(susp.report.max_dt_deviation < 1e-12);
        assert!(susp.field.is_some());
    }

    #[test]
    fn suspension_time_dependent_symplectic() {
        // autonomous symplectic case is the classical suspension
        let s = symplectic_2d();
        let h = parse("p1^2/2 + sin(t)*q1", s.chart(), true).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let susp = suspension(&sys).unwrap();
        assert!(susp.report.max_omega_contraction < 1e-9);
    }

    #[test]
    fn free_particle_trajectory() {
        let s = symplectic_2d();
        let h = parse("p1^2/2", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let traj = integrate(
            &Rhs::System(&sys),
            &[0.0, 1.0],
            0.0,
            1.0,
            IntegrateOptions::rk4(1e-2),
        )
        .unwrap();
        let x = traj.last_state();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!((x[1] - 1.0).abs() < 1e-10);
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn last_step_shortening() {
        let s = symplectic_2d();
        let h = parse("p1^2/2", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        // 0.3 does not divide 1.0
        let traj = integrate(
            &Rhs::System(&sys),
            &[0.0, 1.0],
            0.0,
            1.0,
            IntegrateOptions {
                method: Method::Euler,
                dt: 0.3,
                diagnostics: true,
            },
        )
        .unwrap();
        assert_eq!(traj.times.len(), 5);
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-14);
        let res = traj.residuals.as_ref().unwrap();
        assert_eq!(res.len(), traj.times.len());
        assert!(res.iter().all(|r| *r < 1e-9));
    }

    #[test]
    fn rk4_convergence_order() {
        // harmonic oscillator; measured order from dt and dt/2 vs dt/4
        let s = symplectic_2d();
        let h = parse("p1^2/2 + q1^2/2", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let exact = |t: f64| (t.sin(), t.cos());
        let err = |dt: f64| {
            let traj = integrate(
                &Rhs::System(&sys),
                &[0.0, 1.0],
                0.0,
                2.0,
                IntegrateOptions::rk4(dt),
            )
            .unwrap();
            let x = traj.last_state();
            let (q, p) = exact(2.0);
            ((x[0] - q).powi(2) + (x[1] - p).powi(2)).sqrt()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!((3.9..=4.1).contains(&order), "order {order}");
    }

    #[test]
    fn csv_output_shape() {
        let s = symplectic_2d();
        let h = parse("p1", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s, h).unwrap();
        let traj = integrate(
            &Rhs::System(&sys),
            &[0.0, 0.0],
            0.0,
            0.2,
            IntegrateOptions::rk4(0.1),
        )
        .unwrap();
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,q1,p1\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn bad_inputs_rejected() {
        let s = symplectic_2d();
        let h = parse("p1", s.chart(), false).unwrap();
        let sys = HamiltonianSystem::new(s.clone(), h).unwrap();
        assert!(matches!(
            integrate(
                &Rhs::System(&sys),
                &[0.0, 0.0],
                0.0,
                1.0,
                IntegrateOptions::rk4(0.0)
            ),
            Err(IntegrateError::BadStep(_))
        ));
        assert!(matches!(
            integrate(
                &Rhs::System(&sys),
                &[0.0],
                0.0,
                1.0,
                IntegrateOptions::rk4(0.1)
            ),
            Err(IntegrateError::StateDimension { .. })
        ));
        let stray = parse("p1", s.chart(), false).unwrap() * ScalarExpr::var("zz");
        assert!(matches!(
            HamiltonianSystem::new(s, stray),
            Err(DynamicsError::UnboundSymbols(_))
        ));
    }

    #[test]
    fn nonfinite_state_detected() {
        // ẋ = x² blows up past t = 1
        let c = Chart::standard(1);
        let f = VectorFieldExpr::new(&c, vec![parse("x1^2", &c, false).unwrap()]);
        let r = integrate(
            &Rhs::Field(&f),
            &[1.0],
            0.0,
            2.0,
            IntegrateOptions {
                method: Method::Euler,
                dt: 0.05,
                diagnostics: false,
            },
        );
        assert!(matches!(r, Err(IntegrateError::NonFiniteState { .. })));
    }
}
