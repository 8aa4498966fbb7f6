use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::opf::StepInputs;

pub const PROFILE_HEADER: [&str; 3] = ["profile_id", "timestep", "value_mw"];

/// Hourly MW values per profile id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileTable {
    series: BTreeMap<String, BTreeMap<i64, f64>>,
}

impl ProfileTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a value; returns false if the key already existed (value is kept).
    pub fn insert(&mut self, profile: impl Into<String>, timestep: i64, mw: f64) -> bool {
        let entry = self.series.entry(profile.into()).or_default();
        if entry.contains_key(&timestep) {
            return false;
        }
        entry.insert(timestep, mw);
        true
    }

    /// Inserts or overwrites a value.
    pub fn set(&mut self, profile: impl Into<String>, timestep: i64, mw: f64) {
        self.series.entry(profile.into()).or_default().insert(timestep, mw);
    }

    pub fn get(&self, profile: &str, timestep: i64) -> Option<f64> {
        self.series.get(profile)?.get(&timestep).copied()
    }

    /// Number of (profile, timestep) entries.
    pub fn len(&self) -> usize {
        self.series.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn profiles(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// Covered timestep span of one profile, inclusive.
    pub fn span(&self, profile: &str) -> Option<(i64, i64)> {
        let s = self.series.get(profile)?;
        Some((*s.keys().next()?, *s.keys().next_back()?))
    }

    /// All values of timestep `t`.
    pub fn step_inputs(&self, timestep: i64) -> StepInputs {
        let mut inputs = StepInputs::new(timestep);
        for (id, s) in &self.series {
            if let Some(v) = s.get(&timestep) {
                inputs.values.insert(id.clone(), *v);
            }
        }
        inputs
    }

    /// Checks that each of `profiles` has a value at every step of `[from, to)`.
    pub fn check_coverage<'a>(&self, profiles: impl IntoIterator<Item = &'a str>, from: i64, to: i64) -> Result<()> {
        for p in profiles {
            for t in from..to {
                if self.get(p, t).is_none() {
                    return Err(Error::MissingProfile { profile: p.to_string(), timestep: t });
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        writeln!(out, "{}", PROFILE_HEADER.join(",")).expect("write to Vec");
        for (id, s) in &self.series {
            for (t, v) in s {
                writeln!(out, "{id},{t},{v}").expect("write to Vec");
            }
        }
        String::from_utf8(out).expect("ascii")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<ProfileTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profiles_str(&path.display().to_string(), &text)
}

/// Parses profile CSV text. Rejects duplicate keys, negative values and
/// missing hours between a profile's first and last timestep.
pub fn parse_profiles_str(name: &str, text: &str) -> Result<ProfileTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::row(name, 1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != PROFILE_HEADER {
        return Err(Error::row(name, 1, format!("expected header {}", PROFILE_HEADER.join(","))));
    }
    let mut table = ProfileTable::new();
    let mut first_row: BTreeMap<String, usize> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::row(name, row, e.to_string()))?;
        if record.len() != 3 {
            return Err(Error::row(name, row, format!("expected 3 fields, found {}", record.len())));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(Error::row(name, row, "empty profile_id"));
        }
        let t: i64 = record[1].parse().map_err(|_| Error::row(name, row, format!("bad timestep {:?}", &record[1])))?;
        let v: f64 = record[2]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::row(name, row, format!("bad value {:?}", &record[2])))?;
        if v < 0.0 {
            return Err(Error::row(name, row, format!("negative value {v} for profile {id}")));
        }
        if !table.insert(id, t, v) {
            return Err(Error::row(name, row, format!("duplicate entry for profile {id} at timestep {t}")));
        }
        first_row.entry(id.to_string()).or_insert(row);
    }
    for (id, s) in &table.series {
        let mut prev: Option<i64> = None;
        for &t in s.keys() {
            if let Some(p) = prev {
                if t != p + 1 {
                    return Err(Error::row(
                        name,
                        first_row[id],
                        format!("profile {id} has a gap between timesteps {p} and {t}"),
                    ));
                }
            }
            prev = Some(t);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_entries() {
        let text = "profile_id,timestep,value_mw\nL,1,10\nL,2,11\nL,3,12\nW,1,0\nW,2,5\nW,3,7.5\n";
        let t = parse_profiles_str("p.csv", text).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.get("W", 3), Some(7.5));
        assert_eq!(t.span("L"), Some((1, 3)));
        let inputs = t.step_inputs(2);
        assert_eq!(inputs.get("L").unwrap(), 11.0);
        assert_eq!(inputs.get("W").unwrap(), 5.0);
    }

    #[test]
    fn negative_value_reports_row() {
        let text = "profile_id,timestep,value_mw\nW,1,3\nW,2,-1\n";
        match parse_profiles_str("p.csv", text).unwrap_err() {
            Error::Row { row, message, .. } => {
                assert_eq!(row, 3);
                assert!(message.contains("negative"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = "profile_id,timestep,value_mw\nW,1,3\nW,1,4\n";
        assert!(matches!(parse_profiles_str("p.csv", text), Err(Error::Row { row: 3, .. })));
    }

    #[test]
    fn gap_rejected() {
        let text = "profile_id,timestep,value_mw\nW,1,3\nW,3,4\n";
        let err = parse_profiles_str("p.csv", text).unwrap_err().to_string();
        assert!(err.contains("gap"), "{err}");
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_profiles_str("p.csv", "id,t,v\n").is_err());
    }

    #[test]
    fn coverage_check() {
        let text = "profile_id,timestep,value_mw\nL,5,1\nL,6,1\n";
        let t = parse_profiles_str("p.csv", text).unwrap();
        assert!(t.check_coverage(["L"], 5, 7).is_ok());
        assert!(matches!(t.check_coverage(["L"], 5, 8), Err(Error::MissingProfile { timestep: 7, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let mut t = ProfileTable::new();
        t.insert("A", 0, 1.25);
        t.insert("A", 1, 3.0);
        t.insert("B", 0, 0.1);
        assert_eq!(parse_profiles_str("x", &t.to_csv_string()).unwrap(), t);
    }
}
