//! Writers for the CSV and JSON artifacts. Every float is printed with 17
//! significant digits so that values survive a round trip bit for bit.

use std::io::{self, Write};
use std::path::Path;

use piezowave_core::EnergyRecord;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{HarnessError, Result};

/// `d.dddddddddddddddde±x`, or `NaN`/`inf`/`-inf`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats use [`fmt_f64`].
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("reports serialize to JSON");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn energy_csv(records: &[EnergyRecord]) -> String {
    let mut out = String::with_capacity(32 + records.len() * 240);
    out.push_str(EnergyRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let row = [
            r.t,
            r.e,
            r.j,
            r.etot,
            r.damping_cum,
            r.residual,
            r.sign_fn,
            r.q,
            r.vnorm_n1,
            r.pnorm_n2,
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Reads the `t` and `Etot` columns of an energy CSV.
pub fn read_energy_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let csv_err = |message: String| HarnessError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| csv_err(format!("missing column `{name}`")))
    };
    let (it, ie) = (col("t")?, col("Etot")?);
    let (mut t, mut e) = (Vec::new(), Vec::new());
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        let cell = |i: usize| -> Result<f64> {
            let s = row.get(i).unwrap_or("").trim();
            s.parse()
                .map_err(|_| csv_err(format!("row {}: `{s}` is not a number", line + 2)))
        };
        t.push(cell(it)?);
        e.push(cell(ie)?);
    }
    Ok((t, e))
}
