//! JSON descriptors for forms, structures, sections, and canonical
//! candidates, plus helpers for serializing reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::Chart;
use crate::expr::{parse, ParseError, ScalarExpr};
use crate::exterior::{ChartMap, DifferentialForm, ExteriorError};
use crate::lcs::{cotangent_lcs, validate_lcs_seeded, CotangentLcs, LcsError, LcsStructure};

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expression error in `{source_text}`: {err}")]
    Expr { source_text: String, err: ParseError },
    #[error("descriptor needs either inline coordinates/omega/theta or a cotangent block")]
    IncompleteStructure,
    #[error("unknown built-in structure `{0}`")]
    UnknownBuiltin(String),
    #[error("chart error: {0}")]
    Chart(#[from] crate::chart::ChartError),
    #[error("{0}")]
    Lcs(#[from] LcsError),
    #[error("{0}")]
    Contact(#[from] crate::contact::ContactError),
    #[error("{0}")]
    Exterior(#[from] ExteriorError),
}

fn parse_expr(src: &str, chart: &Chart, allow_time: bool) -> Result<ScalarExpr, DescriptorError> {
    parse(src, chart, allow_time).map_err(|err| DescriptorError::Expr {
        source_text: src.to_string(),
        err,
    })
}

/// `{degree, terms: [{indices: [...], coeff: "expr"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormDesc {
    pub degree: usize,
    pub terms: Vec<TermDesc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDesc {
    pub indices: Vec<usize>,
    pub coeff: String,
}

impl FormDesc {
    pub fn to_form(
        &self,
        chart: &Chart,
        allow_time: bool,
    ) -> Result<DifferentialForm, DescriptorError> {
        let mut f = DifferentialForm::zero(chart, self.degree);
        for t in &self.terms {
            f.add_term(&t.indices, parse_expr(&t.coeff, chart, allow_time)?);
        }
        Ok(f)
    }

    pub fn from_form(f: &DifferentialForm) -> FormDesc {
        FormDesc {
            degree: f.degree(),
            terms: f
                .terms()
                .map(|(idx, c)| TermDesc {
                    indices: idx.clone(),
                    coeff: c.to_string(),
                })
                .collect(),
        }
    }
}

/// Structure descriptor: inline `{coordinates, omega, theta}` or
/// `{cotangent: {base_dim, vartheta}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureDesc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<FormDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<FormDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cotangent: Option<CotangentDesc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CotangentDesc {
    pub base_dim: usize,
    pub vartheta: FormDesc,
}

/// A structure loaded from a descriptor or built-in id, with the
/// cotangent bookkeeping retained when available.
#[derive(Debug, Clone)]
pub struct LoadedStructure {
    pub structure: LcsStructure,
    pub cotangent: Option<CotangentLcs>,
    pub label: String,
}

/// Resolve a reference: a built-in id (`g41-rep1` etc.) or a JSON
/// descriptor string.
pub fn load_structure(reference: &str, seed: u64) -> Result<LoadedStructure, DescriptorError> {
    let trimmed = reference.trim();
    if crate::contact::REPRESENTATION_IDS.contains(&trimmed) {
        let rep = crate::contact::representation(trimmed)?;
        let structure = validate_lcs_seeded(
            rep.omega.clone(),
            rep.theta.clone(),
            crate::lcs::DEFAULT_NONDEGENERACY_SAMPLES,
            seed,
        )?;
        return Ok(LoadedStructure {
            structure,
            cotangent: None,
            label: trimmed.to_string(),
        });
    }
    if !trimmed.starts_with('{') {
        return Err(DescriptorError::UnknownBuiltin(trimmed.to_string()));
    }
    let desc: StructureDesc = serde_json::from_str(trimmed)?;
    load_structure_desc(&desc, seed)
}

pub fn load_structure_desc(
    desc: &StructureDesc,
    seed: u64,
) -> Result<LoadedStructure, DescriptorError> {
    if let Some(ct) = &desc.cotangent {
        let base = Chart::new(
            (1..=ct.base_dim)
                .map(|i| format!("q{i}"))
                .collect::<Vec<String>>(),
        )?;
        let vartheta = ct.vartheta.to_form(&base, false)?;
        let s = cotangent_lcs(ct.base_dim, &vartheta)?;
        return Ok(LoadedStructure {
            structure: s.structure.clone(),
            cotangent: Some(s),
            label: format!("cotangent(n={})", ct.base_dim),
        });
    }
    let (Some(coords), Some(omega), Some(theta)) = (&desc.coordinates, &desc.omega, &desc.theta)
    else {
        return Err(DescriptorError::IncompleteStructure);
    };
    let chart = Chart::new(coords.clone())?;
    let omega = omega.to_form(&chart, false)?;
    let theta = theta.to_form(&chart, false)?;
    let s = validate_lcs_seeded(omega, theta, crate::lcs::DEFAULT_NONDEGENERACY_SAMPLES, seed)?;
    Ok(LoadedStructure {
        structure: s,
        cotangent: None,
        label: "inline".to_string(),
    })
}

/// `{components: ["expr(t,q)", ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionDesc {
    pub components: Vec<String>,
}

impl SectionDesc {
    pub fn to_section(
        &self,
        base: &Chart,
    ) -> Result<crate::hamjac::TimeSection, DescriptorError> {
        let comps = self
            .components
            .iter()
            .map(|s| parse_expr(s, base, true))
            .collect::<Result<Vec<_>, _>>()?;
        crate::hamjac::TimeSection::new(base, comps).map_err(|e| DescriptorError::Expr {
            source_text: self.components.join(", "),
            err: ParseError::Syntax {
                pos: 0,
                msg: e.to_string(),
            },
        })
    }
}

/// Canonical-candidate descriptor: component expressions of the extended
/// map, structures by reference, optional inverse and counterterm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateDesc {
    pub map: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<String>,
    pub structure1: StructureDesc,
    pub structure2: StructureDesc,
    /// Optional d_θ-potentials for condition 3, on the base charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1_potential: Option<FormDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2_potential: Option<FormDesc>,
}

pub struct LoadedCandidate {
    pub candidate: crate::canonical::CanonicalCandidate,
    pub potentials: Option<(DifferentialForm, DifferentialForm)>,
}

impl CandidateDesc {
    pub fn to_candidate(&self, seed: u64) -> Result<LoadedCandidate, DescriptorError> {
        let s1 = load_structure_desc(&self.structure1, seed)?;
        let s2 = load_structure_desc(&self.structure2, seed)?;
        let ext1 = s1.structure.chart().clone().extend();
        let ext2 = s2.structure.chart().clone().extend();
        let comps = self
            .map
            .iter()
            .map(|s| parse_expr(s, &ext1, true))
            .collect::<Result<Vec<_>, _>>()?;
        let map = ChartMap::new(&ext1, &ext2, comps)?;
        let k_f = match &self.k_f {
            Some(s) => Some(parse_expr(s, &ext1, true)?),
            None => None,
        };
        let mut candidate = crate::canonical::CanonicalCandidate::new(
            map,
            s1.structure.clone(),
            s2.structure.clone(),
            k_f,
        )
        .map_err(|e| DescriptorError::Expr {
            source_text: "candidate".into(),
            err: ParseError::Syntax {
                pos: 0,
                msg: e.to_string(),
            },
        })?;
        if let Some(inv) = &self.inverse {
            let comps = inv
                .iter()
                .map(|s| parse_expr(s, &ext2, true))
                .collect::<Result<Vec<_>, _>>()?;
            candidate = candidate.with_inverse(ChartMap::new(&ext2, &ext1, comps)?);
        }
        let potentials = match (&self.theta1_potential, &self.theta2_potential) {
            (Some(p1), Some(p2)) => Some((
                p1.to_form(s1.structure.chart(), false)?,
                p2.to_form(s2.structure.chart(), false)?,
            )),
            _ => None,
        };
        Ok(LoadedCandidate {
            candidate,
            potentials,
        })
    }
}
