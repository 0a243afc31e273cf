use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{Map, Value};

pub const UNITS: &str = "reduced: hbar^2/2m=1, kB=1";

/// JSON number, or the string tokens "inf", "-inf", "nan".
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    } else {
        Value::String(token(x).into())
    }
}

fn token(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// CSV cell for a float: shortest round-trip text or an explicit token.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        token(x).into()
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn meta() -> Value {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut m = Map::new();
    m.insert("tool".into(), "bec-kit".into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("generated_unix".into(), secs.into());
    Value::Object(m)
}

/// Start a report object with the command name and unit declaration.
pub fn report(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert("units".into(), UNITS.into());
    m
}

pub fn finish(mut m: Map<String, Value>, no_meta: bool) -> Value {
    if !no_meta {
        m.insert("meta".into(), meta());
    }
    Value::Object(m)
}

pub fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json(value: &Value, path: Option<&Path>) -> io::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// CSV with a `# units:` line (and a `# meta:` line unless suppressed),
/// then the header row.
pub fn write_csv(header: &[&str], rows: &[Vec<String>], no_meta: bool, path: Option<&Path>) -> io::Result<()> {
    let mut w = sink(path)?;
    writeln!(w, "# units: {UNITS}")?;
    if !no_meta {
        writeln!(w, "# meta: {}", meta())?;
    }
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        cw.write_record(header)?;
        for r in rows {
            cw.write_record(r)?;
        }
        cw.flush()?;
    }
    w.flush()
}
