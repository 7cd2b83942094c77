//! Line-oriented text serialization for [`RkhsModel`].
//!
//! ```text
//! FBF-MODEL v1 <n_s> <n_u> <n_y> <a_s> <a_u> <N>
//! <center_s (n_s)> <center_u (n_u)> <A row (n_s)>     # N lines
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every `f64`.
//! Lines starting with `#` are skipped by the reader.

use super::RkhsModel;
use crate::error::{FbfError, Result};
use crate::kernel::KernelParams;
use std::io::{self, BufRead, Write};

pub const MODEL_HEADER: &str = "FBF-MODEL";

pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_reals<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    let line: Vec<String> = values.iter().map(|&v| fmt_real(v)).collect();
    writeln!(w, "{}", line.join(" "))
}

/// Writes `model` in the `FBF-MODEL v1` format.
pub fn write_model<W: Write>(model: &RkhsModel, w: &mut W) -> io::Result<()> {
    let kp = model.kernel_params();
    writeln!(
        w,
        "{MODEL_HEADER} v1 {} {} {} {} {} {}",
        model.n_s(),
        model.n_u(),
        model.n_y(),
        fmt_real(kp.a_s()),
        fmt_real(kp.a_u()),
        model.len()
    )?;
    let mut row = Vec::with_capacity(2 * model.n_s() + model.n_u());
    for j in 0..model.len() {
        row.clear();
        row.extend_from_slice(model.center_s(j));
        row.extend_from_slice(model.center_u(j));
        row.extend_from_slice(model.coeff_row(j));
        write_reals(w, &row)?;
    }
    Ok(())
}

/// Reads a model written by [`write_model`].
pub fn read_model<R: BufRead>(reader: R) -> Result<RkhsModel> {
    let mut lines = LineReader::new(reader);
    read_model_from(&mut lines)
}

pub(crate) fn read_model_from<R: BufRead>(lines: &mut LineReader<R>) -> Result<RkhsModel> {
    let header = lines.expect_line("model header")?;
    let mut fields = header.fields();
    header.expect_keyword(&mut fields, MODEL_HEADER)?;
    header.expect_keyword(&mut fields, "v1")?;
    let n_s: usize = header.parse_next(&mut fields, "n_s")?;
    let n_u: usize = header.parse_next(&mut fields, "n_u")?;
    let n_y: usize = header.parse_next(&mut fields, "n_y")?;
    let a_s: f64 = header.parse_next(&mut fields, "a_s")?;
    let a_u: f64 = header.parse_next(&mut fields, "a_u")?;
    let n: usize = header.parse_next(&mut fields, "N")?;
    header.expect_end(&mut fields)?;
    if n == 0 {
        return Err(header.error(1, "dictionary size must be at least 1"));
    }
    let kp = KernelParams::new(a_s, a_u).map_err(|e| header.error(1, &e.to_string()))?;

    let width = 2 * n_s + n_u;
    let mut model: Option<RkhsModel> = None;
    for _ in 0..n {
        let line = lines.expect_line("model center")?;
        let vals = line.reals(width)?;
        let (s, rest) = vals.split_at(n_s);
        let (u, a) = rest.split_at(n_u);
        let res = match model.as_mut() {
            None => RkhsModel::new(kp, n_y, s, u, a).map(|m| model = Some(m)),
            Some(m) => m.add_center(s, u, a),
        };
        res.map_err(|e| line.error(1, &e.to_string()))?;
    }
    Ok(model.expect("n >= 1"))
}

/// A numbered, trimmed input line.
pub(crate) struct Line {
    pub number: usize,
    pub text: String,
}

impl Line {
    pub fn error(&self, column: usize, message: &str) -> FbfError {
        FbfError::Parse {
            line: self.number,
            column,
            message: message.to_string(),
        }
    }

    /// Whitespace-separated fields with their 1-based starting column.
    pub fn fields(&self) -> std::vec::IntoIter<(usize, &str)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in self.text.char_indices() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    out.push((s + 1, &self.text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s + 1, &self.text[s..]));
        }
        out.into_iter()
    }

    pub fn expect_keyword<'a, I>(&self, fields: &mut I, keyword: &str) -> Result<()>
    where
        I: Iterator<Item = (usize, &'a str)>,
    {
        match fields.next() {
            Some((_, f)) if f == keyword => Ok(()),
            Some((col, f)) => Err(self.error(col, &format!("expected `{keyword}`, found `{f}`"))),
            None => Err(self.error(self.text.len() + 1, &format!("expected `{keyword}`"))),
        }
    }

    pub fn parse_next<'a, T, I>(&self, fields: &mut I, what: &str) -> Result<T>
    where
        T: std::str::FromStr,
        I: Iterator<Item = (usize, &'a str)>,
    {
        match fields.next() {
            Some((col, f)) => f
                .parse()
                .map_err(|_| self.error(col, &format!("invalid {what}: `{f}`"))),
            None => Err(self.error(self.text.len() + 1, &format!("missing {what}"))),
        }
    }

    pub fn expect_end<'a, I>(&self, fields: &mut I) -> Result<()>
    where
        I: Iterator<Item = (usize, &'a str)>,
    {
        match fields.next() {
            None => Ok(()),
            Some((col, f)) => Err(self.error(col, &format!("unexpected trailing field `{f}`"))),
        }
    }

    /// Parses exactly `count` finite reals.
    pub fn reals(&self, count: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for (col, f) in self.fields() {
            if out.len() == count {
                return Err(self.error(col, &format!("expected {count} values, found more")));
            }
            let v: f64 = f
                .parse()
                .map_err(|_| self.error(col, &format!("invalid number `{f}`")))?;
            if !v.is_finite() {
                return Err(self.error(col, "non-finite value"));
            }
            out.push(v);
        }
        if out.len() != count {
            return Err(self.error(
                self.text.len() + 1,
                &format!("expected {count} values, found {}", out.len()),
            ));
        }
        Ok(out)
    }
}

/// Yields non-empty, non-comment lines with 1-based line numbers.
pub(crate) struct LineReader<R> {
    inner: io::Lines<R>,
    number: usize,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            inner: reader.lines(),
            number: 0,
        }
    }

    pub fn next_line(&mut self) -> Result<Option<Line>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let text = line.map_err(|e| FbfError::Parse {
                line: self.number,
                column: 1,
                message: e.to_string(),
            })?;
            let trimmed = text.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok(Some(Line {
                number: self.number,
                text: trimmed.to_string(),
            }));
        }
        Ok(None)
    }

    pub fn expect_line(&mut self, what: &str) -> Result<Line> {
        self.next_line()?.ok_or_else(|| FbfError::Parse {
            line: self.number + 1,
            column: 1,
            message: format!("unexpected end of input, expected {what}"),
        })
    }
}
