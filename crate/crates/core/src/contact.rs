//! Contact pairs, Reeb vector fields, lcs structures built from contact
//! pairs, and the built-in nilpotent-algebra representations with their
//! time-dependent Lie systems.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use thiserror::Error;

use crate::chart::Chart;
use crate::expr::{expr_equal, EvalError, ScalarExpr};
use crate::exterior::{bind_point, DifferentialForm, ExteriorError, VectorFieldExpr};
use crate::lcs::{validate_lcs, LcsError, LcsStructure};
use crate::sample;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("chart dimension {dim} does not match type ({h},{k}): need {need}")]
    DimensionMismatch { dim: usize, h: usize, k: usize, need: usize },
    #[error("nilpotency violated: {which} is not zero")]
    NilpotencyViolation { which: String },
    #[error("top form vanishes at {point:?} (|coefficient| = {value:e})")]
    TopFormVanishes { point: Vec<f64>, value: f64 },
    #[error("Reeb conditions rank-deficient at {point:?} (rank {rank} < {dim})")]
    RankDeficient { point: Vec<f64>, rank: usize, dim: usize },
    #[error("unknown representation `{0}` (expected g41-rep1, g41-rep2, g41-rep4)")]
    UnknownRepresentation(String),
    #[error("contact pair requires k = 0 for the lcs construction, got k = {0}")]
    NonzeroK(usize),
    #[error("{0}")]
    Lcs(#[from] LcsError),
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

/// A contact pair `(α, β)` of type `(h, k)` on a chart of dimension
/// `2h + 2k + 2`.
#[derive(Debug, Clone)]
pub struct ContactPair {
    pub chart: Chart,
    pub alpha: DifferentialForm,
    pub beta: DifferentialForm,
    pub h: usize,
    pub k: usize,
}

impl ContactPair {
    pub fn new(
        alpha: DifferentialForm,
        beta: DifferentialForm,
        h: usize,
        k: usize,
    ) -> Result<Self, ContactError> {
        let chart = alpha.chart().clone();
        let need = 2 * h + 2 * k + 2;
        if chart.dim() != need {
            return Err(ContactError::DimensionMismatch {
                dim: chart.dim(),
                h,
                k,
                need,
            });
        }
        Ok(ContactPair {
            chart,
            alpha,
            beta,
            h,
            k,
        })
    }
}

fn wedge_power(f: &DifferentialForm, e: usize) -> Result<DifferentialForm, ExteriorError> {
    let mut acc = DifferentialForm::from_scalar(f.chart(), ScalarExpr::one());
    for _ in 0..e {
        acc = acc.wedge(f)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct ContactPairReport {
    pub seed: u64,
    pub samples: usize,
    pub min_abs_top: f64,
}

const TOP_FORM_TOL: f64 = 1e-12;

/// Check `(dα)^{h+1} = 0`, `(dβ)^{k+1} = 0` exactly and the nonvanishing
/// of the volume form `α∧(dα)^h∧β∧(dβ)^k` at sampled points.
pub fn verify_contact_pair(
    cp: &ContactPair,
    samples: usize,
) -> Result<ContactPairReport, ContactError> {
    verify_contact_pair_seeded(cp, samples, sample::DEFAULT_SEED)
}

pub fn verify_contact_pair_seeded(
    cp: &ContactPair,
    samples: usize,
    seed: u64,
) -> Result<ContactPairReport, ContactError> {
    let da = cp.alpha.d();
    let db = cp.beta.d();
    if !wedge_power(&da, cp.h + 1)?.is_zero_verdict().equal {
        return Err(ContactError::NilpotencyViolation {
            which: format!("(dα)^{}", cp.h + 1),
        });
    }
    if !wedge_power(&db, cp.k + 1)?.is_zero_verdict().equal {
        return Err(ContactError::NilpotencyViolation {
            which: format!("(dβ)^{}", cp.k + 1),
        });
    }
    let top = cp
        .alpha
        .wedge(&wedge_power(&da, cp.h)?)?
        .wedge(&cp.beta)?
        .wedge(&wedge_power(&db, cp.k)?)?;
    let n = cp.chart.dim();
    let idx: Vec<usize> = (0..n).collect();
    let coeff = top.coeff(&idx);
    let mut rng = sample::rng(seed);
    let mut min_abs = f64::INFINITY;
    for _ in 0..samples {
        let x = sample::point_in_box(&mut rng, n);
        let env = bind_point(&cp.chart, &x, None);
        let v = coeff.eval_f64(&env)?.abs();
        if v <= TOP_FORM_TOL {
            return Err(ContactError::TopFormVanishes { point: x, value: v });
        }
        min_abs = min_abs.min(v);
    }
    Ok(ContactPairReport {
        seed,
        samples,
        min_abs_top: min_abs,
    })
}

/// Solve the defining conditions of the Reeb pair at a point:
/// `α(A)=1, β(A)=0, ι_A dα = 0, ι_A dβ = 0` and symmetrically for `B`.
pub fn reeb_fields(cp: &ContactPair, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ContactError> {
    let n = cp.chart.dim();
    let env = bind_point(&cp.chart, x, None);
    let alpha: Vec<f64> = cp
        .alpha
        .components()
        .iter()
        .map(|c| c.eval_f64(&env))
        .collect::<Result<_, _>>()?;
    let beta: Vec<f64> = cp
        .beta
        .components()
        .iter()
        .map(|c| c.eval_f64(&env))
        .collect::<Result<_, _>>()?;
    let da = cp.alpha.d().matrix_at(&env)?;
    let db = cp.beta.d().matrix_at(&env)?;

    // rows: α, β, then (ι_v dα)_j = v_i·dα(∂i,∂j) for each j, then dβ
    let rows = 2 + 2 * n;
    let mut m = DMatrix::zeros(rows, n);
    for i in 0..n {
        m[(0, i)] = alpha[i];
        m[(1, i)] = beta[i];
        for j in 0..n {
            m[(2 + j, i)] = da[(i, j)];
            m[(2 + n + j, i)] = db[(i, j)];
        }
    }
    let svd = m.clone().svd(true, true);
    let rank = svd.rank(1e-10);
    if rank < n {
        return Err(ContactError::RankDeficient {
            point: x.to_vec(),
            rank,
            dim: n,
        });
    }
    let solve = |first: f64, second: f64| -> Result<Vec<f64>, ContactError> {
        let mut rhs = DVector::zeros(rows);
        rhs[0] = first;
        rhs[1] = second;
        let sol = svd.solve(&rhs, 1e-12).expect("svd solve");
        // the conditions are overdetermined; reject inconsistent systems
        let res = (&m * &sol - rhs).amax();
        if res > 1e-8 {
            return Err(ContactError::RankDeficient {
                point: x.to_vec(),
                rank,
                dim: n,
            });
        }
        Ok(sol.iter().copied().collect())
    };
    Ok((solve(1.0, 0.0)?, solve(0.0, 1.0)?))
}

/// `Ω = dα + c·α∧β` with Lee form `θ = c·β`, validated as an lcs
/// structure (fails with `DegeneracyDetected` when `c` is too small).
pub fn lcs_from_pair(cp: &ContactPair, c: &BigRational) -> Result<LcsStructure, ContactError> {
    if cp.k != 0 {
        return Err(ContactError::NonzeroK(cp.k));
    }
    let c_expr = ScalarExpr::Const(c.clone());
    let omega = cp
        .alpha
        .d()
        .add(&cp.alpha.wedge(&cp.beta)?.scale_expr(&c_expr))?;
    let theta = cp.beta.scale_expr(&c_expr);
    Ok(validate_lcs(omega, theta, 100)?)
}

/// Sampled minimum `|det Ω|` for each candidate `c`, without validation;
/// exposes how large `c` must be for nondegeneracy.
pub fn min_det_scan(
    cp: &ContactPair,
    cs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, ContactError> {
    let n = cp.chart.dim();
    let da = cp.alpha.d();
    let ab = cp.alpha.wedge(&cp.beta)?;
    let mut out = Vec::with_capacity(cs.len());
    for &c in cs {
        let omega = da.add(&ab.scale_expr(&ScalarExpr::Const(
            BigRational::from_float(c).unwrap_or_default(),
        )))?;
        let mut rng = sample::rng(seed);
        let mut min_det = f64::INFINITY;
        for _ in 0..samples {
            let x = sample::point_in_box(&mut rng, n);
            let env = bind_point(&cp.chart, &x, None);
            min_det = min_det.min(omega.matrix_at(&env)?.determinant().abs());
        }
        out.push((c, min_det));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// built-in representations

/// A shipped four-dimensional representation of the nilpotent algebra:
/// fundamental fields, dual coframe, and the lcs pair built from
/// `Ω = dη² + η²∧η⁴`, `θ = η⁴`.
#[derive(Debug, Clone)]
pub struct Representation {
    pub id: &'static str,
    pub chart: Chart,
    pub fields: Vec<VectorFieldExpr>,
    pub coframe: Vec<DifferentialForm>,
    pub omega: DifferentialForm,
    pub theta: DifferentialForm,
}

pub const REPRESENTATION_IDS: [&str; 3] = ["g41-rep1", "g41-rep2", "g41-rep4"];

fn field(chart: &Chart, comps: [&str; 4]) -> VectorFieldExpr {
    VectorFieldExpr::new(
        chart,
        comps
            .iter()
            .map(|s| crate::expr::parse(s, chart, false).unwrap())
            .collect(),
    )
}

fn one_form(chart: &Chart, comps: [&str; 4]) -> DifferentialForm {
    let mut f = DifferentialForm::zero(chart, 1);
    for (i, s) in comps.iter().enumerate() {
        f.add_term(&[i], crate::expr::parse(s, chart, false).unwrap());
    }
    f
}

pub fn representation(id: &str) -> Result<Representation, ContactError> {
    let chart = Chart::standard(4);
    let c = &chart;
    let (id_static, fields, coframe, omega_terms): (
        &'static str,
        Vec<VectorFieldExpr>,
        Vec<DifferentialForm>,
        Vec<(Vec<usize>, &str)>,
    ) = match id {
        "g41-rep1" => (
            "g41-rep1",
            vec![
                field(c, ["0", "1", "0", "0"]),
                field(c, ["1", "0", "0", "0"]),
                field(c, ["x2", "x3", "0", "1"]),
                field(c, ["0", "0", "1", "0"]),
            ],
            vec![
                one_form(c, ["0", "1", "0", "-x3"]),
                one_form(c, ["1", "0", "0", "-x2"]),
                one_form(c, ["0", "0", "0", "1"]),
                one_form(c, ["0", "0", "1", "0"]),
            ],
            // Ω₁ = −dx2∧dx4 + dx1∧dx3 − x2·dx4∧dx3
            vec![
                (vec![1, 3], "-1"),
                (vec![0, 2], "1"),
                (vec![2, 3], "x2"),
            ],
        ),
        "g41-rep2" => (
            "g41-rep2",
            vec![
                field(c, ["0", "1", "0", "0"]),
                field(c, ["1", "0", "0", "0"]),
                field(c, ["x2", "x3", "x4", "1"]),
                field(c, ["0", "0", "1", "0"]),
            ],
            vec![
                one_form(c, ["0", "1", "0", "-x3"]),
                one_form(c, ["1", "0", "0", "-x2"]),
                one_form(c, ["0", "0", "0", "1"]),
                one_form(c, ["0", "0", "1", "-x4"]),
            ],
            // Ω₂ = −dx2∧dx4 + dx1∧dx3 − x4·dx1∧dx4 + x2·dx3∧dx4
            vec![
                (vec![1, 3], "-1"),
                (vec![0, 2], "1"),
                (vec![0, 3], "-x4"),
                (vec![2, 3], "x2"),
            ],
        ),
        "g41-rep4" => (
            "g41-rep4",
            vec![
                field(c, ["0", "1", "0", "0"]),
                field(c, ["1", "0", "0", "0"]),
                field(c, ["x2", "0", "x4", "-1"]),
                field(c, ["x3", "x4", "1", "0"]),
            ],
            vec![
                one_form(c, ["0", "1", "-x4", "-x4^2"]),
                one_form(c, ["1", "0", "-x3", "-(x3*x4-x2)"]),
                one_form(c, ["0", "0", "0", "-1"]),
                one_form(c, ["0", "0", "1", "x4"]),
            ],
            // Ω₄ = dx1∧dx3 + x4·dx1∧dx4 + dx2∧dx4 − (x4+x2)·dx3∧dx4
            vec![
                (vec![0, 2], "1"),
                (vec![0, 3], "x4"),
                (vec![1, 3], "1"),
                (vec![2, 3], "-(x4+x2)"),
            ],
        ),
        other => return Err(ContactError::UnknownRepresentation(other.to_string())),
    };

    let mut omega = DifferentialForm::zero(c, 2);
    for (idx, s) in &omega_terms {
        omega.add_term(idx, crate::expr::parse(s, c, false).unwrap());
    }
    // re-derive Ω = dη² + η²∧η⁴ and cross-check the transcription
    let derived = coframe[1].d().add(&coframe[1].wedge(&coframe[3])?)?;
    let check = derived.equals(&omega)?;
    assert!(
        check.equal,
        "representation {id_static}: derived dη² + η²∧η⁴ = {derived} does not match the shipped two-form {omega}"
    );
    let theta = coframe[3].clone();
    Ok(Representation {
        id: id_static,
        chart,
        fields,
        coframe,
        omega,
        theta,
    })
}

impl Representation {
    /// The contact pair `(η², η⁴)` of type `(1, 0)`.
    pub fn contact_pair(&self) -> Result<ContactPair, ContactError> {
        ContactPair::new(self.coframe[1].clone(), self.coframe[3].clone(), 1, 0)
    }

    /// The validated lcs structure with the shipped `Ω`, `θ`.
    pub fn lcs(&self) -> Result<LcsStructure, LcsError> {
        validate_lcs(self.omega.clone(), self.theta.clone(), 100)
    }

    /// `⟨ηⁱ, X_j⟩ − δⁱ_j`, all entries, simplified.
    pub fn duality_residual(&self) -> Result<Vec<Vec<ScalarExpr>>, ExteriorError> {
        let mut out = Vec::with_capacity(4);
        for i in 0..4 {
            let mut row = Vec::with_capacity(4);
            for j in 0..4 {
                let mut p = self.coframe[i].pair(&self.fields[j])?;
                if i == j {
                    p = p - ScalarExpr::one();
                }
                row.push(p.simplify());
            }
            out.push(row);
        }
        Ok(out)
    }

    /// All basis brackets `[X_i, X_j]`, i < j.
    pub fn bracket_table(&self) -> Vec<((usize, usize), VectorFieldExpr)> {
        let mut out = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                out.push(((i, j), self.fields[i].bracket(&self.fields[j])));
            }
        }
        out
    }
}

/// Compare a bracket table against the reference structure constants
/// `[X₁,X₄] = X₃`, `[X₁,X₃] = X₂`, all other basis brackets zero.
/// Returns the list of mismatching pairs (1-based) with a display of the
/// computed bracket.
pub fn g41_bracket_mismatches(rep: &Representation) -> Vec<((usize, usize), String)> {
    let mut bad = Vec::new();
    for ((i, j), b) in rep.bracket_table() {
        let expected: Option<&VectorFieldExpr> = match (i, j) {
            (0, 3) => Some(&rep.fields[2]),
            (0, 2) => Some(&rep.fields[1]),
            _ => None,
        };
        let matches = match expected {
            Some(e) => b
                .components()
                .iter()
                .zip(e.components())
                .all(|(a, b)| expr_equal(a, b).equal),
            None => b.components().iter().all(|c| c.is_zero()),
        };
        if !matches {
            let disp: Vec<String> = b.components().iter().map(|c| c.to_string()).collect();
            bad.push(((i + 1, j + 1), format!("[{}]", disp.join(", "))));
        }
    }
    bad
}

/// The time-dependent Lie-system field of a representation with
/// coefficient functions `a₁(t)..a₄(t)`.
pub fn lie_system_field(
    rep_id: &str,
    a: &[ScalarExpr; 4],
) -> Result<VectorFieldExpr, ContactError> {
    let chart = Chart::standard(4);
    let x = |i: usize| ScalarExpr::var(chart.coord(i));
    let comps = match rep_id {
        // ẋ1 = a1 + a4·x2, ẋ2 = a2 + a4·x3, ẋ3 = a3, ẋ4 = a4
        "g41-rep1" => vec![
            a[0].clone() + a[3].clone() * x(1),
            a[1].clone() + a[3].clone() * x(2),
            a[2].clone(),
            a[3].clone(),
        ],
        // ẋ3 gains the a4·x4 term
        "g41-rep2" => vec![
            a[0].clone() + a[3].clone() * x(1),
            a[1].clone() + a[3].clone() * x(2),
            a[2].clone() + a[3].clone() * x(3),
            a[3].clone(),
        ],
        // ẋ1 = a1 + a3·x3 + a4·x2, ẋ2 = a2 + a3·x4,
        // ẋ3 = a3 + a4·x4, ẋ4 = −a4
        "g41-rep4" => vec![
            a[0].clone() + a[2].clone() * x(2) + a[3].clone() * x(1),
            a[1].clone() + a[2].clone() * x(3),
            a[2].clone() + a[3].clone() * x(3),
            -a[3].clone(),
        ],
        other => return Err(ContactError::UnknownRepresentation(other.to_string())),
    };
    Ok(VectorFieldExpr::new(
        &chart,
        comps.into_iter().map(|c| c.simplify()).collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct AutomorphismReport {
    pub lie_omega_zero: crate::expr::EqualityVerdict,
    pub theta_of_x: ScalarExpr,
    pub theta_of_x_is_one: bool,
}

/// Check `ℒ_X Ω = 0` (Cartan formula) and whether `θ(X) ≡ 1`.
pub fn verify_lcs_automorphism(
    s: &LcsStructure,
    x: &VectorFieldExpr,
) -> Result<AutomorphismReport, ContactError> {
    let lie = x.lie_derivative(s.omega())?;
    let lie_omega_zero = lie.is_zero_verdict();
    let theta_of_x = s.theta().pair(x)?.simplify();
    let theta_of_x_is_one = expr_equal(&theta_of_x, &ScalarExpr::one()).equal;
    Ok(AutomorphismReport {
        lie_omega_zero,
        theta_of_x,
        theta_of_x_is_one,
    })
}
