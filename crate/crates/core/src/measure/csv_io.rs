use std::io::{Read, Write};

use super::AtomMeasure;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 17 significant digits, enough to read the same `f64` back.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_scalar<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        x.literal()
    } else {
        format_f64(x.to_f64())
    }
}

/// Writes `position,weight` rows in position order. Exact values are
/// written as `p/q`.
pub fn write_csv<S: Scalar, W: Write>(mu: &AtomMeasure<S>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "weight"])?;
    for (x, p) in mu.atoms() {
        w.write_record([format_scalar(x), format_scalar(p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads what [`write_csv`] writes; weights must sum to one.
pub fn read_csv<S: Scalar, R: Read>(input: R, merge_tol: f64) -> Result<AtomMeasure<S>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "position" || &headers[1] != "weight" {
        return Err(Error::Parse(format!(
            "expected header position,weight, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut atoms = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        atoms.push((S::parse(&rec[0])?, S::parse(&rec[1])?));
    }
    AtomMeasure::from_atoms(atoms, merge_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn round_trip_float() {
        let mu = AtomMeasure::from_atoms(vec![(0.1, 0.3), (-2.5, 0.7)], 0.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&mu, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("position,weight\n"));
        let back: AtomMeasure<f64> = read_csv(&buf[..], 0.0).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn round_trip_exact() {
        let mu = AtomMeasure::from_atoms(
            vec![
                (Rational::ratio(1, 3), Rational::ratio(2, 7)),
                (Rational::from_int(1), Rational::ratio(5, 7)),
            ],
            0.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&mu, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains("1/3,2/7"));
        let back: AtomMeasure<Rational> = read_csv(&buf[..], 0.0).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_csv::<f64, _>("x,y\n1,1\n".as_bytes(), 0.0).is_err());
        assert!(read_csv::<f64, _>("position,weight\n1,0.5\n".as_bytes(), 0.0).is_err());
    }
}
