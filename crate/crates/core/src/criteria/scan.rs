use std::io::Write;

use crate::error::Result;

/// One row of a scan: the parameters that identify it, the value and the
/// truncation metadata it was computed with.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub params: Vec<String>,
    pub value: f64,
    pub error_bound: Option<f64>,
    pub depth_omega: Option<u32>,
    pub depth_sigma: Option<u32>,
}

/// Rows over a parameter grid; the summary is the row with the largest value.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub param_names: Vec<String>,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn new<S: Into<String>>(param_names: impl IntoIterator<Item = S>) -> Self {
        Self {
            param_names: param_names.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// The first row attaining the largest value.
    pub fn sup_row(&self) -> Option<&ScanRow> {
        self.rows.iter().fold(None, |best: Option<&ScanRow>, r| match best {
            Some(b) if b.value >= r.value => Some(b),
            _ => Some(r),
        })
    }

    pub fn sup(&self) -> f64 {
        self.sup_row().map_or(f64::NAN, |r| r.value)
    }

    /// Appends the rows of `other`, which must share the parameter names.
    pub fn extend(&mut self, other: ScanResult) {
        assert_eq!(self.param_names, other.param_names, "scan layouts differ");
        self.rows.extend(other.rows);
    }

    /// CSV: the parameter columns, then `value,error_bound,depth_omega,depth_sigma`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = self.param_names.clone();
        header.extend(["value", "error_bound", "depth_omega", "depth_sigma"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for r in &self.rows {
            let mut fields = r.params.clone();
            fields.push(format_real(r.value));
            fields.push(r.error_bound.map(format_real).unwrap_or_default());
            fields.push(r.depth_omega.map(|d| d.to_string()).unwrap_or_default());
            fields.push(r.depth_sigma.map(|d| d.to_string()).unwrap_or_default());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Seventeen significant digits; `inf` and `nan` spelled out.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> ScanRow {
        ScanRow {
            params: vec!["1".into()],
            value: v,
            error_bound: None,
            depth_omega: Some(4),
            depth_sigma: None,
        }
    }

    #[test]
    fn sup_is_the_maximum() {
        let mut s = ScanResult::new(["k"]);
        assert!(s.sup().is_nan());
        s.rows = vec![row(1.0), row(3.0), row(2.0)];
        assert_eq!(s.sup(), 3.0);
    }

    #[test]
    fn csv_layout() {
        let mut s = ScanResult::new(["k"]);
        s.rows.push(row(0.25));
        s.rows.push(ScanRow {
            error_bound: Some(f64::INFINITY),
            ..row(1.0)
        });
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,value,error_bound,depth_omega,depth_sigma\n\
             1,2.5000000000000000e-1,,4,\n\
             1,1.0000000000000000e0,inf,4,\n"
        );
    }
}
