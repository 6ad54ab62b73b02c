//! CSV ingestion. Headers carry units as a `_unit` suffix (`t_s`, `B_T`,
//! `field_G`); lines starting with `#` are comments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acquisition::FieldMap;
use crate::epr::EprSpectrum;
use crate::fitting::{DecayCurve, Provenance, RelaxometryProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Decay,
    Profile,
    Spectrum,
    Fieldmap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Decays(Vec<DecayCurve>),
    Profile(RelaxometryProfile),
    Spectrum(EprSpectrum),
    FieldMap(FieldMap),
}

struct Column {
    header: &'static str,
    required: bool,
}

const fn req(header: &'static str) -> Column {
    Column { header, required: true }
}
const fn opt(header: &'static str) -> Column {
    Column { header, required: false }
}

const DECAY: &[Column] = &[req("B_T"), req("t_s"), req("signal"), opt("sigma"), opt("kind")];
const PROFILE: &[Column] = &[req("B_T"), req("R1_per_s"), req("err"), opt("provenance")];
const SPECTRUM: &[Column] = &[req("field_G"), req("signal")];
const FIELDMAP: &[Column] = &[req("position_mm"), req("B_T")];

fn quantity(h: &str) -> &str {
    match h {
        "R1_per_s" => "R1",
        _ => h.split_once('_').map_or(h, |(q, _)| q),
    }
}

struct Table {
    path: std::path::PathBuf,
    /// schema index -> column index in the file
    index: Vec<Option<usize>>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, schema: &[Column]) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(file);
        let perr = |row: usize, column: &str, message: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            column: column.to_string(),
            message,
        };
        let headers = rdr
            .headers()
            .map_err(|e| perr(1, "", e.to_string()))?
            .clone();
        let mut index = vec![None; schema.len()];
        for (ci, h) in headers.iter().enumerate() {
            if let Some(si) = schema.iter().position(|c| c.header == h) {
                if index[si].is_some() {
                    return Err(perr(1, h, "duplicate column".into()));
                }
                index[si] = Some(ci);
            } else if let Some(c) = schema.iter().find(|c| quantity(c.header) == quantity(h)) {
                return Err(perr(1, h, format!("wrong unit in header '{h}', expected '{}'", c.header)));
            } else {
                return Err(perr(1, h, format!("unknown column '{h}'")));
            }
        }
        for (c, i) in schema.iter().zip(&index) {
            if c.required && i.is_none() {
                return Err(perr(1, c.header, format!("missing column '{}'", c.header)));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line() as usize);
                perr(row, "", e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec));
        }
        Ok(Self {
            path: path.to_path_buf(),
            index,
            rows,
        })
    }

    fn text<'a>(&self, rec: &'a csv::StringRecord, col: usize) -> Option<&'a str> {
        self.index[col].and_then(|i| rec.get(i))
    }

    fn num(&self, schema: &[Column], row: usize, rec: &csv::StringRecord, col: usize) -> Result<Option<f64>> {
        let Some(s) = self.text(rec, col) else {
            return Ok(None);
        };
        super::format::parse_sci(s).map(Some).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            row,
            column: schema[col].header.into(),
            message: format!("'{s}' is not a number"),
        })
    }

    fn column(&self, schema: &[Column], col: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|(row, rec)| Ok(self.num(schema, *row, rec, col)?.unwrap_or(f64::NAN)))
            .collect()
    }
}

fn in_file(path: &Path, e: Error) -> Error {
    e.in_stage(format!("ingest {}", path.display()))
}

/// Reads `path` under the schema for `kind`.
pub fn ingest_dataset(path: &Path, kind: DatasetKind) -> Result<Dataset> {
    match kind {
        DatasetKind::Decay => read_decays(path).map(Dataset::Decays),
        DatasetKind::Profile => read_profile(path).map(Dataset::Profile),
        DatasetKind::Spectrum => read_spectrum(path).map(Dataset::Spectrum),
        DatasetKind::Fieldmap => read_fieldmap(path).map(Dataset::FieldMap),
    }
}

/// Rows grouped into one curve per run of equal `B_T` and `kind`.
pub fn read_decays(path: &Path) -> Result<Vec<DecayCurve>> {
    let t = Table::read(path, DECAY)?;
    let mut curves: Vec<DecayCurve> = Vec::new();
    let mut has_sigma = false;
    let mut last_kind = None;
    for (row, rec) in &t.rows {
        let kind = t.text(rec, 4).map(str::to_string);
        let same_kind = last_kind.as_ref() == Some(&kind);
        last_kind = Some(kind);
        let b = t.num(DECAY, *row, rec, 0)?.unwrap_or(f64::NAN);
        let time = t.num(DECAY, *row, rec, 1)?.unwrap_or(f64::NAN);
        let y = t.num(DECAY, *row, rec, 2)?.unwrap_or(f64::NAN);
        let s = t.num(DECAY, *row, rec, 3)?;
        has_sigma |= s.is_some();
        match curves.last_mut() {
            Some(c) if c.field_b == b && same_kind => {
                c.times.push(time);
                c.signals.push(y);
                if let (Some(v), Some(s)) = (c.sigma.as_mut(), s) {
                    v.push(s);
                }
            }
            _ => {
                let mut c = DecayCurve::new(b, vec![time], vec![y]);
                if let Some(s) = s {
                    c.sigma = Some(vec![s]);
                }
                curves.push(c);
            }
        }
    }
    if curves.is_empty() {
        return Err(in_file(path, Error::validation("no decay rows")));
    }
    for c in &curves {
        if has_sigma && c.sigma.as_ref().map(Vec::len) != Some(c.times.len()) {
            return Err(in_file(path, Error::validation("sigma column is incomplete")));
        }
        c.validate().map_err(|e| in_file(path, e))?;
    }
    Ok(curves)
}

pub fn read_profile(path: &Path) -> Result<RelaxometryProfile> {
    let t = Table::read(path, PROFILE)?;
    let mut p = RelaxometryProfile::new(t.column(PROFILE, 0)?, t.column(PROFILE, 1)?, t.column(PROFILE, 2)?);
    for (i, (row, rec)) in t.rows.iter().enumerate() {
        if let Some(s) = t.text(rec, 3) {
            p.provenance[i] = match s {
                "full_curve" => Provenance::FullCurve,
                "accelerated" => Provenance::Accelerated,
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: *row,
                        column: "provenance".into(),
                        message: format!("unknown provenance '{s}'"),
                    })
                }
            };
        }
    }
    if p.fields.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(in_file(path, Error::validation("B_T must be strictly increasing")));
    }
    p.validate().map_err(|e| in_file(path, e))?;
    Ok(p)
}

pub fn read_spectrum(path: &Path) -> Result<EprSpectrum> {
    let t = Table::read(path, SPECTRUM)?;
    EprSpectrum::new(t.column(SPECTRUM, 0)?, t.column(SPECTRUM, 1)?).map_err(|e| in_file(path, e))
}

pub fn read_fieldmap(path: &Path) -> Result<FieldMap> {
    let t = Table::read(path, FIELDMAP)?;
    FieldMap::new(t.column(FIELDMAP, 0)?, t.column(FIELDMAP, 1)?).map_err(|e| in_file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn decay_csv_groups_by_field() {
        let f = file("# demo\nB_T,t_s,signal\n1,10,5\n1,20,4\n1,30,3\n1,40,2.5\n2,10,5\n2,20,3\n2,30,2\n2,40,1\n");
        let c = read_decays(f.path()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].times, vec![10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn wrong_unit_names_the_column() {
        let f = file("B_T,t_ms,signal\n1,10,5\n");
        match read_decays(f.path()) {
            Err(Error::Parse { column, message, .. }) => {
                assert_eq!(column, "t_ms");
                assert!(message.contains("t_s"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_row_and_column() {
        let f = file("field_G,signal\n1,2\n2,x\n");
        match read_spectrum(f.path()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "signal");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotone_axis_is_validation_error() {
        let f = file("field_G,signal\n1,2\n0.5,3\n2,1\n");
        assert_eq!(read_spectrum(f.path()).unwrap_err().class(), crate::ErrorClass::Validation);
        let g = file("position_mm,B_T\n0,0.03\n0,1\n");
        assert!(read_fieldmap(g.path()).is_err());
    }

    #[test]
    fn profile_round_trip_through_export() {
        let f = file("B_T,R1_per_s,err,provenance\n1.000000000e-3,2.5e0,1e-1,accelerated\n2e-3,2e0,0,full_curve\n");
        let p = read_profile(f.path()).unwrap();
        assert_eq!(p.provenance, vec![Provenance::Accelerated, Provenance::FullCurve]);
        assert_eq!(p.rates, vec![2.5, 2.0]);
    }
}
