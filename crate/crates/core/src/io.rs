//! CSV readers and writers for densities, planar fields and profiles.
//!
//! Radial files have the header `r,value`; profiles `r,R`. Planar files start
//! with `nx,ny,x0,y0,dx,dy` (numbers; a literal header line with those names
//! may precede them) followed by `nx·ny` values in row-major order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geom::Dim;
use crate::measures::{GridSpec, PlanarDensity, RadialDensity, SignedMeasure};
use crate::qcmaps::RadialProfile;
use crate::weights::WeightField;

const PLANAR_NAMES: [&str; 6] = ["nx", "ny", "x0", "y0", "dx", "dy"];

/// Non-empty records with their 1-based line numbers.
fn records<R: Read>(rd: R) -> Result<Vec<(usize, Vec<String>)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(rd);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn number(line: usize, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("`{field}` is not finite") });
    }
    Ok(v)
}

fn expect_header(rows: &[(usize, Vec<String>)], names: &[&str]) -> Result<()> {
    let Some((line, head)) = rows.first() else {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    };
    let ok = head.len() == names.len()
        && head.iter().zip(names).all(|(a, b)| a.eq_ignore_ascii_case(b));
    if ok {
        Ok(())
    } else {
        Err(Error::Parse {
            line: *line,
            message: format!("expected header `{}`, found `{}`", names.join(","), head.join(",")),
        })
    }
}

/// Two numeric columns after the given header.
fn two_columns<R: Read>(rd: R, names: &[&str; 2]) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let rows = records(rd)?;
    expect_header(&rows, names)?;
    let (mut a, mut b, mut lines) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in &rows[1..] {
        if rec.len() != 2 {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let x = number(*line, &rec[0])?;
        if let Some(&prev) = a.last() {
            if !(x > prev) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("{} = {x} is not strictly increasing", names[0]),
                });
            }
        } else if !(x > 0.0) {
            return Err(Error::Parse { line: *line, message: format!("{} = {x} must be positive", names[0]) });
        }
        a.push(x);
        b.push(number(*line, &rec[1])?);
        lines.push(*line);
    }
    if a.len() < 2 {
        return Err(Error::Parse {
            line: rows.last().map_or(1, |r| r.0),
            message: "need at least two data rows".into(),
        });
    }
    Ok((a, b, lines))
}

pub fn read_radial_density<R: Read>(rd: R, dim: Dim) -> Result<RadialDensity> {
    let (r, v, _) = two_columns(rd, &["r", "value"])?;
    RadialDensity::new(dim, r, v)
}

pub fn read_planar_density<R: Read>(rd: R) -> Result<PlanarDensity> {
    let rows = records(rd)?;
    let mut it = rows.iter().peekable();
    if let Some((_, head)) = it.peek() {
        if head.len() == 6 && head.iter().zip(PLANAR_NAMES).all(|(a, b)| a.eq_ignore_ascii_case(b)) {
            it.next();
        }
    }
    let Some((line, head)) = it.next() else {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    };
    if head.len() != 6 {
        return Err(Error::Parse {
            line: *line,
            message: format!("expected header `{}` with six numbers, found `{}`", PLANAR_NAMES.join(","), head.join(",")),
        });
    }
    let h: Vec<f64> = head.iter().map(|f| number(*line, f)).collect::<Result<_>>()?;
    let count = |v: f64, name: &str| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parse { line: *line, message: format!("{name} = {v} must be a positive integer") })
        }
    };
    let (nx, ny) = (count(h[0], "nx")?, count(h[1], "ny")?);
    let grid = GridSpec::new(nx, ny, h[2], h[3], h[4], h[5]).map_err(|e| Error::Parse {
        line: *line,
        message: e.to_string(),
    })?;
    let mut values = Vec::with_capacity(grid.len());
    let mut last = *line;
    for (line, rec) in it {
        if rec.len() != 1 {
            return Err(Error::Parse { line: *line, message: format!("expected one value, found {}", rec.len()) });
        }
        values.push(number(*line, &rec[0])?);
        last = *line;
    }
    if values.len() != grid.len() {
        return Err(Error::Parse {
            line: last,
            message: format!("expected {} values, found {}", grid.len(), values.len()),
        });
    }
    PlanarDensity::new(grid, values)
}

/// Radial files have two columns on their first line; planar files six.
pub fn is_radial_text(text: &str) -> bool {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    first.is_some_and(|l| l.split(',').count() == 2)
}

/// A density measure from a radial or planar file.
pub fn read_measure<R: Read>(mut rd: R, dim: Dim) -> Result<SignedMeasure> {
    let mut text = String::new();
    rd.read_to_string(&mut text)?;
    if is_radial_text(&text) {
        Ok(SignedMeasure::radial(dim, read_radial_density(text.as_bytes(), dim)?))
    } else {
        if dim != Dim::Two {
            return Err(Error::InvalidMeasure("planar files describe measures in n = 2".into()));
        }
        Ok(SignedMeasure::planar(read_planar_density(text.as_bytes())?))
    }
}

/// A weight from a radial (`r,value`, values of `ω`) or planar file.
pub fn read_weight_field<R: Read>(mut rd: R, dim: Dim) -> Result<WeightField> {
    let mut text = String::new();
    rd.read_to_string(&mut text)?;
    if is_radial_text(&text) {
        let (r, v, lines) = two_columns(text.as_bytes(), &["r", "value"])?;
        if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::Parse { line: lines[i], message: format!("weight {} must be positive", v[i]) });
        }
        WeightField::radial(dim, r, &v)
    } else {
        if dim != Dim::Two {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: "planar weight files require n = 2".into(),
            });
        }
        let d = read_planar_density(text.as_bytes())?;
        WeightField::planar(d.grid, d.values)
    }
}

pub fn read_profile<R: Read>(rd: R) -> Result<RadialProfile> {
    let (r, big, _) = two_columns(rd, &["r", "R"])?;
    RadialProfile::from_samples(&r, &big)
}

/// Shortest round-trip form, in exponent notation at extreme magnitudes.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-4 || v.abs() >= 1e16 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes a header and numeric rows.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(header).map_err(io)?;
    for row in rows {
        wr.write_record(row.iter().map(|&v| fmt_num(v))).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_radial_density<W: Write>(w: W, d: &RadialDensity) -> Result<()> {
    write_csv(w, &["r", "value"], d.radii().iter().zip(d.values()).map(|(&r, &v)| vec![r, v]))
}

pub fn write_profile<W: Write>(w: W, p: &RadialProfile) -> Result<()> {
    write_csv(w, &["r", "R"], p.r_grid().into_iter().zip(p.r_values()).map(|(r, v)| vec![r, v]))
}

pub fn write_planar_density<W: Write>(mut w: W, d: &PlanarDensity) -> Result<()> {
    let g = d.grid;
    writeln!(w, "{}", PLANAR_NAMES.join(","))?;
    writeln!(w, "{},{},{},{},{},{}", g.nx, g.ny, fmt_num(g.x0), fmt_num(g.y0), fmt_num(g.dx), fmt_num(g.dy))?;
    for &v in &d.values {
        writeln!(w, "{}", fmt_num(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::total_mass;

    #[test]
    fn radial_round_trip() {
        let d = RadialDensity::from_fn(Dim::Four, vec![0.5, 1.0, 2.0, 4.0], |r| 1.0 / r).unwrap();
        let mut buf = Vec::new();
        write_radial_density(&mut buf, &d).unwrap();
        let back = read_radial_density(buf.as_slice(), Dim::Four).unwrap();
        assert_eq!(back.radii(), d.radii());
        assert_eq!(back.values(), d.values());
    }

    #[test]
    fn planar_round_trip_with_and_without_names() {
        let g = GridSpec::centered(1.0, 3).unwrap();
        let d = PlanarDensity::from_fn(g, |x, y| x + 2.0 * y).unwrap();
        let mut buf = Vec::new();
        write_planar_density(&mut buf, &d).unwrap();
        let back = read_planar_density(buf.as_slice()).unwrap();
        assert_eq!(back.values, d.values);
        let text = String::from_utf8(buf).unwrap();
        let bare: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let m = read_measure(bare.as_bytes(), Dim::Two).unwrap();
        assert!((total_mass(&m) - total_mass(&SignedMeasure::planar(d))).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_line() {
        let bad = "r,val\n1,2\n2,3\n";
        assert_eq!(
            read_radial_density(bad.as_bytes(), Dim::Two).unwrap_err(),
            Error::Parse { line: 1, message: "expected header `r,value`, found `r,val`".into() }
        );
        let bad = "r,value\n1,2\n2,x\n";
        match read_radial_density(bad.as_bytes(), Dim::Two) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
        let bad = "r,value\n2,2\n1,3\n";
        match read_radial_density(bad.as_bytes(), Dim::Two) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
        let bad = "2,2,0,0,1,1\n1\n2\n3\n";
        match read_planar_density(bad.as_bytes()) {
            Err(Error::Parse { line, message }) => assert!(line == 4 && message.contains("expected 4"), "{message}"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn profile_round_trip() {
        let p = RadialProfile::from_samples(&[0.1, 1.0, 10.0], &[0.2, 1.0, 5.0]).unwrap();
        let mut buf = Vec::new();
        write_profile(&mut buf, &p).unwrap();
        let q = read_profile(buf.as_slice()).unwrap();
        assert!((q.eval(3.0) - p.eval(3.0)).abs() < 1e-12);
    }
}
