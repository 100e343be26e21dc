//! Bundled reference datasets.
//!
//! * `table3_operators.csv`: signal-strength band edges for three operators.
//! * `table4_pd.csv`: power density [mW/cm²] against skin depth for two
//!   dielectric reference models, an Active-mode handset and a TR-mode handset.
//! * `table5_channel.csv`: channel gain and coefficient magnitude of a
//!   non-stationary channel at five time instants.

use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mode::{read_profiles, OperatorProfile};

pub const TABLE3_CSV: &str = include_str!("../data/table3_operators.csv");
pub const TABLE4_CSV: &str = include_str!("../data/table4_pd.csv");
pub const TABLE5_CSV: &str = include_str!("../data/table5_channel.csv");

/// Built-in operator rows plus the generic band profile.
pub fn operator_profiles() -> Vec<OperatorProfile> {
    let mut v = read_profiles(TABLE3_CSV.as_bytes()).expect("bundled table is valid");
    v.push(OperatorProfile::generic());
    v
}

pub fn operator_profile(name: &str) -> Option<OperatorProfile> {
    operator_profiles()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Power-density columns on a shared depth grid, keeping the source text so
/// the values can be echoed verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct PdTable {
    pub header: Vec<String>,
    pub depths_mm: Vec<f64>,
    /// `columns[c][row]`, in header order after the depth column.
    pub columns: Vec<Vec<f64>>,
    pub raw_rows: Vec<Vec<String>>,
}

impl PdTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .skip(1)
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }
}

pub fn read_pd_table<R: Read>(reader: R) -> Result<PdTable> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::Dataset {
            name: "pd table".into(),
            reason: "need a depth column and at least one profile".into(),
        });
    }
    let mut depths_mm = Vec::new();
    let mut columns = vec![Vec::new(); header.len() - 1];
    let mut raw_rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| {
                v.trim().parse::<f64>().map_err(|e| Error::Dataset {
                    name: "pd table".into(),
                    reason: format!("`{v}`: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        depths_mm.push(vals[0]);
        for (c, v) in vals[1..].iter().enumerate() {
            columns[c].push(*v);
        }
        raw_rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(PdTable { header, depths_mm, columns, raw_rows })
}

pub fn table4() -> PdTable {
    read_pd_table(TABLE4_CSV.as_bytes()).expect("bundled table is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ChannelRow {
    pub time_instant: u32,
    pub gain: f64,
    pub coefficient_magnitude: f64,
}

pub fn read_channel_table<R: Read>(reader: R) -> Result<Vec<ChannelRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn table5() -> Vec<ChannelRow> {
    read_channel_table(TABLE5_CSV.as_bytes()).expect("bundled table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table3_rows() {
        let p = operator_profiles();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0].name, "Jio");
        assert_eq!(p[0].edges(), &[-75.0, -84.0, -96.0, -106.0, -110.0]);
        assert_eq!(p[1].edges(), &[-70.0, -81.0, -91.0, -101.0, -105.0]);
        assert_eq!(p[2].edges(), &[-77.0, -85.0, -93.0, -104.0, -114.0]);
        assert!(operator_profile("airtel").is_some());
    }

    #[test]
    fn table4_shape() {
        let t = table4();
        assert_eq!(t.depths_mm, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(t.column("am").unwrap()[2], 0.22);
        assert_eq!(t.column("tr").unwrap(), &[0.41, 0.21, 0.11, 0.09, 0.05, 0.01]);
        assert_eq!(t.raw_rows[0], vec!["0.0", "0.62", "0.62", "0.50", "0.41"]);
    }

    #[test]
    fn table5_gain_decreasing_and_consistent() {
        let t = table5();
        assert_eq!(t.len(), 5);
        assert!(t.windows(2).all(|w| w[1].gain < w[0].gain));
        // coefficient column is rounded; its square agrees with the gain to 0.3%
        for r in &t {
            let g = r.coefficient_magnitude.powi(2);
            assert!((g - r.gain).abs() / r.gain < 3e-3, "{r:?}");
        }
    }

    #[test]
    fn bad_pd_table() {
        assert!(read_pd_table("depth_mm\n0.0\n".as_bytes()).is_err());
        assert!(read_pd_table("depth_mm,a\n0.0,x\n".as_bytes()).is_err());
    }
}
