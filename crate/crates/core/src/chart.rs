//! Coordinate charts.

use thiserror::Error;

/// The reserved time symbol. It is never a chart coordinate on plain
/// charts; time-extended charts append it as the last coordinate.
pub const TIME: &str = "t";

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("duplicate coordinate name `{0}`")]
    DuplicateCoordinate(String),
    #[error("coordinate name `{0}` is reserved")]
    ReservedName(String),
    #[error("chart must have at least one coordinate")]
    Empty,
}

/// An ordered list of coordinate names, optionally marked as a cotangent
/// chart with `n` base coordinates followed by `n` fiber coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    coords: Vec<String>,
    cotangent_base: Option<usize>,
    /// True when the last coordinate is the time symbol `t` (time-extended
    /// charts used by the canonical-transformation machinery).
    extended: bool,
}

impl Chart {
    pub fn new<S: Into<String>>(coords: Vec<S>) -> Result<Self, ChartError> {
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        if coords.is_empty() {
            return Err(ChartError::Empty);
        }
        for (i, c) in coords.iter().enumerate() {
            if c == TIME {
                return Err(ChartError::ReservedName(c.clone()));
            }
            if coords[..i].contains(c) {
                return Err(ChartError::DuplicateCoordinate(c.clone()));
            }
        }
        Ok(Chart {
            coords,
            cotangent_base: None,
            extended: false,
        })
    }

    /// The chart `x1..xn`.
    pub fn standard(n: usize) -> Self {
        Chart::new((1..=n).map(|i| format!("x{i}")).collect()).unwrap()
    }

    /// A cotangent chart `q1..qn, p1..pn`.
    pub fn cotangent(n: usize) -> Self {
        let mut coords: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
        coords.extend((1..=n).map(|i| format!("p{i}")));
        let mut c = Chart::new(coords).unwrap();
        c.cotangent_base = Some(n);
        c
    }

    /// Mark an even-dimensional chart as cotangent with the first half as
    /// base coordinates.
    pub fn into_cotangent(mut self) -> Option<Self> {
        if self.extended || self.coords.len() % 2 != 0 {
            return None;
        }
        self.cotangent_base = Some(self.coords.len() / 2);
        Some(self)
    }

    /// The time-extended chart with `t` appended as the last coordinate.
    pub fn extend(&self) -> Self {
        assert!(!self.extended, "chart is already time-extended");
        let mut coords = self.coords.clone();
        coords.push(TIME.to_string());
        Chart {
            coords,
            cotangent_base: None,
            extended: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &str {
        &self.coords[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn is_cotangent(&self) -> bool {
        self.cotangent_base.is_some()
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    /// Index of the time coordinate on an extended chart.
    pub fn time_index(&self) -> Option<usize> {
        self.extended.then(|| self.coords.len() - 1)
    }

    /// Base dimension of a cotangent chart.
    pub fn base_dim(&self) -> Option<usize> {
        self.cotangent_base
    }

    /// The base (q) sub-chart of a cotangent chart.
    pub fn base_chart(&self) -> Option<Chart> {
        let n = self.cotangent_base?;
        Chart::new(self.coords[..n].to_vec()).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cotangent_layout() {
        let c = Chart::cotangent(2);
        assert_eq!(c.coords(), &["q1", "q2", "p1", "p2"]);
        assert_eq!(c.base_dim(), Some(2));
        assert!(c.is_cotangent());
    }

    #[test]
    fn rejects_duplicates_and_time() {
        assert!(Chart::new(vec!["x", "x"]).is_err());
        assert!(Chart::new(vec!["x", "t"]).is_err());
    }

    #[test]
    fn extension_appends_time() {
        let c = Chart::standard(2).extend();
        assert_eq!(c.coords(), &["x1", "x2", "t"]);
        assert_eq!(c.time_index(), Some(2));
    }
}
