use crate::{Error, Result};

/// Headered CSV held in memory with column lookup by name.
pub(crate) struct CsvTable {
    header: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl CsvTable {
    pub(crate) fn parse(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let header = rdr
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, rec));
        }
        Ok(CsvTable { header, rows })
    }

    pub(crate) fn column(&self, name: &str) -> Result<usize> {
        self.optional_column(name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    pub(crate) fn optional_column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub(crate) fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().map(|(line, rec)| Row { line: *line, rec })
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }
}

pub(crate) struct Row<'a> {
    pub(crate) line: usize,
    rec: &'a csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, message: String) -> Error {
        Error::Parse {
            line: self.line,
            message,
        }
    }

    pub(crate) fn str(&self, col: usize) -> Result<&str> {
        self.rec
            .get(col)
            .ok_or_else(|| self.err(format!("missing field {}", col + 1)))
    }

    pub(crate) fn f64(&self, col: usize) -> Result<f64> {
        let s = self.str(col)?;
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("non-numeric value {s:?}")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite value {s:?}")));
        }
        Ok(v)
    }

    /// Integer cell; `12.0` is accepted, `12.5` is not.
    pub(crate) fn i64(&self, col: usize) -> Result<i64> {
        let s = self.str(col)?;
        if let Ok(v) = s.parse::<i64>() {
            return Ok(v);
        }
        match s.parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
            _ => Err(self.err(format!("non-integer value {s:?}"))),
        }
    }
}
