//! Record emission with fixed 12-significant-digit number formatting.

use std::io::{self, Write};

#[derive(Debug, Clone)]
pub enum Field {
    Int(u64),
    Num(f64),
    Str(String),
    Bool(bool),
    Null,
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Str(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Str(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl<T: Into<Field>> From<Option<T>> for Field {
    fn from(v: Option<T>) -> Self {
        v.map_or(Field::Null, Into::into)
    }
}

pub type Record = Vec<(&'static str, Field)>;

/// `v` with 12 significant digits, `%g` style.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mant.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn json_value(f: &Field) -> String {
    match f {
        Field::Int(v) => v.to_string(),
        Field::Num(v) if v.is_finite() => fmt_num(*v),
        Field::Num(_) | Field::Null => "null".into(),
        Field::Str(s) => serde_json::to_string(s).expect("string serializes"),
        Field::Bool(b) => b.to_string(),
    }
}

fn tsv_value(f: &Field) -> String {
    match f {
        Field::Int(v) => v.to_string(),
        Field::Num(v) => fmt_num(*v),
        Field::Str(s) => s.clone(),
        Field::Bool(b) => b.to_string(),
        Field::Null => "NA".into(),
    }
}

pub fn json_object(r: &[(&'static str, Field)]) -> String {
    let body: Vec<String> = r
        .iter()
        .map(|(k, v)| format!("{}:{}", json_value(&Field::Str((*k).into())), json_value(v)))
        .collect();
    format!("{{{}}}", body.join(","))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

pub struct Emitter<W: Write> {
    out: W,
    format: Format,
    columns: Option<Vec<&'static str>>,
}

impl<W: Write> Emitter<W> {
    /// Writes the configuration header.
    pub fn new(mut out: W, format: Format, config: &Record) -> io::Result<Self> {
        match format {
            Format::Json => writeln!(out, "{}", json_object(config))?,
            Format::Tsv => writeln!(out, "# {}", json_object(config))?,
        }
        Ok(Self {
            out,
            format,
            columns: None,
        })
    }

    pub fn record(&mut self, r: &Record) -> io::Result<()> {
        match self.format {
            Format::Json => writeln!(self.out, "{}", json_object(r)),
            Format::Tsv => {
                let names: Vec<&'static str> = r.iter().map(|(k, _)| *k).collect();
                if self.columns.as_ref() != Some(&names) {
                    writeln!(self.out, "#{}", names.join("\t"))?;
                    self.columns = Some(names);
                }
                let vals: Vec<String> = r.iter().map(|(_, v)| tsv_value(v)).collect();
                writeln!(self.out, "{}", vals.join("\t"))
            }
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_num(1.320_323_631_693_739), "1.32032363169");
        assert_eq!(fmt_num(10.0), "10");
        assert_eq!(fmt_num(0.9), "0.9");
        assert_eq!(fmt_num(-2.5e-7), "-2.5e-7");
        assert_eq!(fmt_num(1.5e15), "1.5e15");
        assert_eq!(fmt_num(999_999_999_999.7), "1e12");
        assert_eq!(fmt_num(123_456.789), "123456.789");
    }

    #[test]
    fn json_rendering() {
        let r: Record = vec![
            ("a", 1u64.into()),
            ("b", 0.5.into()),
            ("c", "x\"y".into()),
            ("d", Field::Null),
            ("e", f64::NAN.into()),
        ];
        assert_eq!(json_object(&r), r#"{"a":1,"b":0.5,"c":"x\"y","d":null,"e":null}"#);
    }
}
