//! The self-describing on-disk module format.
//!
//! A module document embeds the field modulus, so no registry of fields is
//! needed; numbers are decimal integers and field elements are little-endian
//! F_p coefficient vectors. Struct fields are declared in alphabetical order
//! so that serialization emits sorted keys: canonical documents round-trip
//! byte-identically.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};
use crate::indres::RankOneData;
use crate::module::BKModule;
use crate::series::LaurentSeries;
use crate::smat::SMat;

pub const FORMAT_VERSION: &str = "1";
pub const ORIENTATION: &str = "j+1_to_j";

/// One Laurent series: coefficients for exponents val..prec, as F_p vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub coeffs: Vec<Vec<u32>>,
    pub prec: i64,
    pub val: i64,
}

/// A Breuil-Kisin module over an explicit field presentation. The fixed
/// orientation literal records that frobenius[j] maps the component j+1 mod d
/// to the component j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDocument {
    pub d: usize,
    pub format_version: String,
    /// d matrices, each n x n, row-major.
    pub frobenius: Vec<Vec<Vec<SeriesDoc>>>,
    pub m: u32,
    pub modulus: Vec<u32>,
    pub n: usize,
    pub orientation: String,
    pub p: u32,
}

/// A rectangular cochain (one matrix per embedding) over the same field
/// presentation; used for extension classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CochainDocument {
    pub cols: usize,
    pub d: usize,
    /// d matrices, each rows x cols, row-major.
    pub entries: Vec<Vec<Vec<SeriesDoc>>>,
    pub format_version: String,
    pub m: u32,
    pub modulus: Vec<u32>,
    pub p: u32,
    pub rows: usize,
}

fn series_to_doc(s: &LaurentSeries, min_prec: i64) -> SeriesDoc {
    let field = s.field().clone();
    if s.is_zero_within_prec() {
        let prec = if s.is_certified_zero() { min_prec.max(0) } else { s.first_unknown() };
        let val = prec.min(0);
        let coeffs = (val..prec).map(|_| field.coeffs(Fe::ZERO)).collect();
        return SeriesDoc { coeffs, prec, val };
    }
    let val = s.val();
    let support_end = val
        + s.coeff_range(val, s.first_unknown().min(val + 1 << 20))
            .map(|v| v.len() as i64)
            .unwrap_or(0);
    let prec = if s.is_exact() {
        min_prec.max(support_end)
    } else {
        s.first_unknown()
    };
    let coeffs = (val..prec)
        .map(|e| field.coeffs(s.coeff(e).unwrap_or(Fe::ZERO)))
        .collect();
    SeriesDoc { coeffs, prec, val }
}

fn series_from_doc(field: &Arc<FieldSpec>, doc: &SeriesDoc) -> Result<LaurentSeries> {
    if doc.prec - doc.val != doc.coeffs.len() as i64 {
        return Err(Error::BadInput(format!(
            "series window [{}, {}) does not match {} coefficients",
            doc.val,
            doc.prec,
            doc.coeffs.len()
        )));
    }
    let mut coeffs = Vec::with_capacity(doc.coeffs.len());
    for v in &doc.coeffs {
        if v.len() != field.m() as usize {
            return Err(Error::BadInput(format!(
                "field element vector of length {} in a degree-{} field",
                v.len(),
                field.m()
            )));
        }
        coeffs.push(field.from_coeffs(v)?);
    }
    Ok(LaurentSeries::from_coeffs_window(field.clone(), doc.val, coeffs, doc.prec))
}

impl ModuleDocument {
    /// Serialize a module; exact entries are emitted with an explicit window
    /// of at least `min_prec` (trailing zeros written out).
    pub fn from_module(m: &BKModule, min_prec: i64) -> ModuleDocument {
        let field = m.field();
        let frobenius = (0..m.embeddings())
            .map(|j| {
                let x = m.frob(j);
                (0..m.rank())
                    .map(|i| (0..m.rank()).map(|k| series_to_doc(x.get(i, k), min_prec)).collect())
                    .collect()
            })
            .collect();
        ModuleDocument {
            d: m.embeddings(),
            format_version: FORMAT_VERSION.into(),
            frobenius,
            m: field.m(),
            modulus: field.modulus().to_vec(),
            n: m.rank(),
            orientation: ORIENTATION.into(),
            p: field.p(),
        }
    }

    pub fn field(&self) -> Result<Arc<FieldSpec>> {
        if self.modulus.len() != self.m as usize + 1 {
            return Err(Error::BadInput(format!(
                "modulus must have length m + 1 = {}, got {}",
                self.m + 1,
                self.modulus.len()
            )));
        }
        FieldSpec::new(self.p, self.modulus.clone())
    }

    /// Validate and build the module; `prec` overrides the default working
    /// precision of downstream computations.
    pub fn to_module(&self, prec: Option<i64>) -> Result<BKModule> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::BadInput(format!("unsupported format version {}", self.format_version)));
        }
        if self.orientation != ORIENTATION {
            return Err(Error::BadInput(format!(
                "unsupported orientation {:?} (expected {ORIENTATION:?})",
                self.orientation
            )));
        }
        let field = self.field()?;
        if self.d == 0 || self.m as usize % self.d != 0 {
            return Err(Error::DegreeIncompatible(format!("d = {} must divide m = {}", self.d, self.m)));
        }
        if self.frobenius.len() != self.d {
            return Err(Error::BadInput(format!(
                "expected {} Frobenius matrices, got {}",
                self.d,
                self.frobenius.len()
            )));
        }
        let mut frob = Vec::with_capacity(self.d);
        for rows in &self.frobenius {
            if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                return Err(Error::BadInput(format!("Frobenius matrices must be {0} x {0}", self.n)));
            }
            let mut entries = Vec::with_capacity(self.n * self.n);
            for row in rows {
                for s in row {
                    entries.push(series_from_doc(&field, s)?);
                }
            }
            frob.push(SMat::from_entries(field.clone(), self.n, self.n, entries));
        }
        let work = prec.unwrap_or(2 * crate::module::n_work(self.p, self.n) + 32);
        BKModule::new(field, self.d, self.n, frob, work)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }

    pub fn parse(text: &str) -> Result<ModuleDocument> {
        serde_json::from_str(text).map_err(|e| Error::BadInput(format!("invalid module document: {e}")))
    }
}

impl CochainDocument {
    pub fn from_matrices(field: &Arc<FieldSpec>, mats: &[SMat], min_prec: i64) -> CochainDocument {
        let rows = mats.first().map_or(0, |m| m.rows());
        let cols = mats.first().map_or(0, |m| m.cols());
        let entries = mats
            .iter()
            .map(|x| {
                (0..rows)
                    .map(|i| (0..cols).map(|k| series_to_doc(x.get(i, k), min_prec)).collect())
                    .collect()
            })
            .collect();
        CochainDocument {
            cols,
            d: mats.len(),
            entries,
            format_version: FORMAT_VERSION.into(),
            m: field.m(),
            modulus: field.modulus().to_vec(),
            p: field.p(),
            rows,
        }
    }

    pub fn to_matrices(&self) -> Result<(Arc<FieldSpec>, Vec<SMat>)> {
        if self.modulus.len() != self.m as usize + 1 {
            return Err(Error::BadInput("modulus length must be m + 1".into()));
        }
        let field = FieldSpec::new(self.p, self.modulus.clone())?;
        if self.entries.len() != self.d {
            return Err(Error::BadInput("wrong number of cochain matrices".into()));
        }
        let mut out = Vec::with_capacity(self.d);
        for rows in &self.entries {
            if rows.len() != self.rows || rows.iter().any(|r| r.len() != self.cols) {
                return Err(Error::BadInput(format!("cochain matrices must be {} x {}", self.rows, self.cols)));
            }
            let mut entries = Vec::with_capacity(self.rows * self.cols);
            for row in rows {
                for s in row {
                    entries.push(series_from_doc(&field, s)?);
                }
            }
            out.push(SMat::from_entries(field.clone(), self.rows, self.cols, entries));
        }
        Ok((field, out))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }

    pub fn parse(text: &str) -> Result<CochainDocument> {
        serde_json::from_str(text).map_err(|e| Error::BadInput(format!("invalid cochain document: {e}")))
    }
}

/// Rank-one data serialization: {"D": ..., "r": [...], "x_total": [...]}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOneDoc {
    #[serde(rename = "D")]
    pub big_d: usize,
    pub r: Vec<i64>,
    pub x_total: Vec<u32>,
}

impl RankOneDoc {
    pub fn from_data(field: &FieldSpec, data: &RankOneData) -> RankOneDoc {
        RankOneDoc { big_d: data.big_d, r: data.r.clone(), x_total: field.coeffs(data.x_total) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_byte_identical() {
        let field = FieldSpec::default_field(3, 2).unwrap();
        let m = BKModule::rank_one(field.clone(), &[field.generator(), Fe::ONE], &[1, 2]).unwrap();
        let doc = ModuleDocument::from_module(&m, 8);
        let text = doc.to_json();
        let parsed = ModuleDocument::parse(&text).unwrap();
        assert_eq!(parsed.to_json(), text);
        let rebuilt = parsed.to_module(None).unwrap();
        assert!(rebuilt.frob(0).agrees_with(m.frob(0)));
        assert!(rebuilt.frob(1).agrees_with(m.frob(1)));
    }

    #[test]
    fn rejects_malformed_documents() {
        let field = FieldSpec::default_field(2, 1).unwrap();
        let m = BKModule::trivial(field, 1, 1).unwrap();
        let mut doc = ModuleDocument::from_module(&m, 4);
        doc.orientation = "j_to_j+1".into();
        assert!(doc.to_module(None).is_err());
        let mut doc2 = ModuleDocument::from_module(&m, 4);
        doc2.modulus = vec![1, 1, 1];
        assert!(doc2.to_module(None).is_err());
        let mut doc3 = ModuleDocument::from_module(&m, 4);
        doc3.frobenius[0][0][0].prec = 99;
        assert!(doc3.to_module(None).is_err());
        assert!(ModuleDocument::parse("{not json").is_err());
    }

    #[test]
    fn windows_honor_min_prec() {
        let field = FieldSpec::default_field(2, 1).unwrap();
        let m = BKModule::trivial(field, 1, 1).unwrap();
        let doc = ModuleDocument::from_module(&m, 12);
        assert_eq!(doc.frobenius[0][0][0].prec, 12);
        assert_eq!(doc.frobenius[0][0][0].coeffs.len(), 12);
        let back = doc.to_module(None).unwrap();
        assert_eq!(back.frob(0).get(0, 0).first_unknown(), 12);
    }
}
