//! Operator signal-strength bands.

use std::fmt;
use std::io::Read;

use serde::Deserialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignalQuality {
    Great,
    Good,
    Average,
    Poor,
    VeryPoor,
}

impl SignalQuality {
    pub const ALL: [SignalQuality; 5] = [
        SignalQuality::Great,
        SignalQuality::Good,
        SignalQuality::Average,
        SignalQuality::Poor,
        SignalQuality::VeryPoor,
    ];
}

impl fmt::Display for SignalQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SignalQuality::Great => "great",
            SignalQuality::Good => "good",
            SignalQuality::Average => "average",
            SignalQuality::Poor => "poor",
            SignalQuality::VeryPoor => "very_poor",
        };
        f.write_str(s)
    }
}

/// Lower band edges [dBm], strictly decreasing from Great to Very Poor.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorProfile {
    pub name: String,
    edges: [f64; 5],
}

impl OperatorProfile {
    pub fn new(name: impl Into<String>, edges: [f64; 5]) -> Result<Self> {
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] <= w[1]) {
            return Err(invalid(
                "band_edges",
                format!("edges must be finite and strictly decreasing, got {edges:?}"),
            ));
        }
        Ok(Self { name: name.into(), edges })
    }

    pub fn edges(&self) -> &[f64; 5] {
        &self.edges
    }

    pub fn edge(&self, q: SignalQuality) -> f64 {
        self.edges[q as usize]
    }

    /// Band text of the D² display: green down to −89 dBm, orange to −99 dBm,
    /// red down to −120 dBm. The Great/Good and Poor/Very Poor splits inside
    /// the green and red ranges are placed at −70 and −110 dBm.
    pub fn generic() -> Self {
        Self::new("generic", [-70.0, -89.0, -99.0, -110.0, -120.0]).expect("valid edges")
    }
}

/// Returns the first band whose edge the signal meets or exceeds; signals
/// below every edge are Very Poor.
pub fn classify_signal(ss_dbm: f64, profile: &OperatorProfile) -> SignalQuality {
    SignalQuality::ALL
        .into_iter()
        .find(|&q| ss_dbm >= profile.edge(q))
        .unwrap_or(SignalQuality::VeryPoor)
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    operator: String,
    great_dbm: f64,
    good_dbm: f64,
    average_dbm: f64,
    poor_dbm: f64,
    very_poor_dbm: f64,
}

/// Reads `operator,great_dbm,good_dbm,average_dbm,poor_dbm,very_poor_dbm` rows.
pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<OperatorProfile>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: ProfileRow = row?;
        out.push(OperatorProfile::new(
            r.operator,
            [r.great_dbm, r.good_dbm, r.average_dbm, r.poor_dbm, r.very_poor_dbm],
        )?);
    }
    if out.is_empty() {
        return Err(Error::Dataset {
            name: "operator profiles".into(),
            reason: "no rows".into(),
        });
    }
    Ok(out)
}
