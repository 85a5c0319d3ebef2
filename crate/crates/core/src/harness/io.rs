//! Record CSV and summary JSON.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit-for-bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "rep_id",
    "stream_index",
    "point_count",
    "N",
    "second_size",
    "global_unique",
    "N_prime",
    "mismatch_count",
    "e0_count",
    "e1_count",
    "e2_count",
    "e3_count",
    "wall_ms",
];

/// Per-replication observables. Local-score fields are `None` when the
/// localized pass was skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep_id: u64,
    pub stream_index: u64,
    pub point_count: u64,
    /// Size of the largest cluster, tied or not.
    #[serde(rename = "N")]
    pub largest: u64,
    pub second_size: u64,
    pub global_unique: bool,
    #[serde(rename = "N_prime")]
    pub n_prime: Option<u64>,
    pub mismatch_count: Option<u64>,
    pub e0_count: Option<u64>,
    pub e1_count: Option<u64>,
    pub e2_count: Option<u64>,
    pub e3_count: Option<u64>,
    #[serde(serialize_with = "float17")]
    pub wall_ms: f64,
}

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn float17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt17(*x))
}

pub fn write_records_csv<W: Write>(out: W, records: &[ReplicationRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()
        .map_err(|e| Error::io("flushing records csv", e))?;
    Ok(())
}

pub fn records_to_csv(records: &[ReplicationRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records_csv(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ReplicationRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::invalid(format!(
            "unexpected records header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Pretty JSON with every non-integer number printed to 17 significant digits.
pub fn to_json17<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', 2 * k));
    match v {
        Value::Number(num) => match (num.as_u64(), num.as_i64(), num.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (_, Some(i), _) => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&fmt17(f)),
            _ => out.push_str(&num.to_string()),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn write_json17<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    out.write_all(to_json17(value)?.as_bytes())
        .map_err(|e| Error::io("writing json", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> ReplicationRecord {
        ReplicationRecord {
            rep_id: 3,
            stream_index: 3,
            point_count: 120,
            largest: 80,
            second_size: 7,
            global_unique: true,
            n_prime: Some(79),
            mismatch_count: Some(1),
            e0_count: Some(0),
            e1_count: Some(1),
            e2_count: Some(0),
            e3_count: None,
            wall_ms: 0.1 + 0.2,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let text = records_to_csv(&[]).unwrap();
        assert_eq!(
            text,
            "rep_id,stream_index,point_count,N,second_size,global_unique,N_prime,\
             mismatch_count,e0_count,e1_count,e2_count,e3_count,wall_ms\n"
        );
        assert!(read_records_csv(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn one_record_round_trips() {
        let r = sample_record();
        let text = records_to_csv(std::slice::from_ref(&r)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().contains(",79,1,0,1,0,,"));
        let back = read_records_csv(text.as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_records_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn json_floats_keep_all_bits() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct T {
            a: f64,
            b: u64,
            c: Option<f64>,
            d: Vec<(f64, f64)>,
        }
        let t = T {
            a: 0.1 + 0.2,
            b: u64::MAX,
            c: None,
            d: vec![(1.0 / 3.0, -2e-300)],
        };
        let text = to_json17(&t).unwrap();
        assert!(text.contains("3.0000000000000004e-1"));
        let back: T = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }
}
