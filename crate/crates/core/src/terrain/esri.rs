//! ESRI ASCII grid (`.asc`) reader and writer.
//!
//! ```text
//! ncols         4
//! nrows         3
//! xllcorner     0.0
//! yllcorner     0.0
//! cellsize      1.0
//! NODATA_value  -9999
//! 1 2 3 4        <- northernmost row
//! ...
//! ```

use std::fmt::Write as _;

use crate::num::Real;

use super::{ElevationGrid, TerrainError};

struct Token<'a> {
    text: &'a str,
    line: usize,
}

fn tokens(src: &str) -> impl Iterator<Item = Token<'_>> {
    src.lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |text| Token { text, line: i + 1 }))
}

fn parse_err(line: usize, message: impl Into<String>) -> TerrainError {
    TerrainError::Parse {
        line,
        message: message.into(),
    }
}

fn number(tok: &Token<'_>) -> Result<f64, TerrainError> {
    tok.text
        .parse::<f64>()
        .map_err(|_| parse_err(tok.line, format!("non-numeric token `{}`", tok.text)))
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

/// Parses an ESRI ASCII grid. The first data row is the northernmost.
pub fn load_esri_ascii<T: Real>(src: &str) -> Result<ElevationGrid<T>, TerrainError> {
    let mut it = tokens(src).peekable();
    let mut h = Header::default();
    let mut last_line = 1;

    while let Some(tok) = it.peek() {
        if !tok.text.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let key = it.next().unwrap();
        let value = it
            .next()
            .ok_or_else(|| parse_err(key.line, format!("missing value for `{}`", key.text)))?;
        last_line = value.line;
        let int = |v: &Token<'_>| {
            v.text
                .parse::<usize>()
                .map_err(|_| parse_err(v.line, format!("`{}` is not a count", v.text)))
        };
        match key.text.to_ascii_lowercase().as_str() {
            "ncols" => h.ncols = Some(int(&value)?),
            "nrows" => h.nrows = Some(int(&value)?),
            "xllcorner" => h.xll = Some((number(&value)?, false)),
            "yllcorner" => h.yll = Some((number(&value)?, false)),
            "xllcenter" => h.xll = Some((number(&value)?, true)),
            "yllcenter" => h.yll = Some((number(&value)?, true)),
            "cellsize" => h.cellsize = Some(number(&value)?),
            "nodata_value" => h.nodata = Some(number(&value)?),
            other => return Err(parse_err(key.line, format!("unknown header key `{other}`"))),
        }
    }

    let missing = |k: &str| parse_err(last_line, format!("header is missing `{k}`"));
    let ncols = h.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = h.nrows.ok_or_else(|| missing("nrows"))?;
    let (xll, xcenter) = h.xll.ok_or_else(|| missing("xllcorner"))?;
    let (yll, ycenter) = h.yll.ok_or_else(|| missing("yllcorner"))?;
    let cellsize = h.cellsize.ok_or_else(|| missing("cellsize"))?;
    if !(cellsize > 0.0) {
        return Err(parse_err(
            last_line,
            format!("cellsize must be positive, got {cellsize}"),
        ));
    }
    let origin_x = if xcenter { xll - 0.5 * cellsize } else { xll };
    let origin_y = if ycenter { yll - 0.5 * cellsize } else { yll };

    let expected = ncols * nrows;
    let mut north_first = Vec::with_capacity(expected);
    for tok in it {
        if north_first.len() == expected {
            return Err(parse_err(
                tok.line,
                format!("too many values: expected {expected} ({nrows} rows x {ncols} cols)"),
            ));
        }
        last_line = tok.line;
        north_first.push(T::lit(number(&tok)?));
    }
    if north_first.len() != expected {
        return Err(parse_err(
            last_line,
            format!(
                "wrong value count: expected {expected} ({nrows} rows x {ncols} cols), found {}",
                north_first.len()
            ),
        ));
    }

    let mut heights = Vec::with_capacity(expected);
    for row in north_first.chunks(ncols).rev() {
        heights.extend_from_slice(row);
    }
    ElevationGrid::new(
        ncols,
        nrows,
        T::lit(cellsize),
        T::lit(origin_x),
        T::lit(origin_y),
        heights,
        h.nodata.map(T::lit),
    )
    .map_err(|e| parse_err(1, e.to_string()))
}

/// Formats with `sig` significant digits, like C's `%g`.
pub fn format_significant(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", sig.saturating_sub(1), v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= sig as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serializes a grid, north row first, values at 6 significant digits.
pub fn write_esri_ascii<T: Real>(grid: &ElevationGrid<T>) -> String {
    let g6 = |v: T| format_significant(v.to_f64_lossy(), 6);
    let (ox, oy) = grid.origin();
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.ncols());
    let _ = writeln!(out, "nrows {}", grid.nrows());
    let _ = writeln!(out, "xllcorner {}", g6(ox));
    let _ = writeln!(out, "yllcorner {}", g6(oy));
    let _ = writeln!(out, "cellsize {}", g6(grid.cellsize()));
    if let Some(nd) = grid.nodata() {
        let _ = writeln!(out, "NODATA_value {}", g6(nd));
    }
    for row in (0..grid.nrows()).rev() {
        let line: Vec<String> = (0..grid.ncols()).map(|c| g6(grid.raw(c, row))).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SMALL: &str =
        "ncols 3\nNROWS 2\nxllcorner 10\nyllcorner 20\ncellsize 2\nnodata_value -9999\n1 2 3\n4 5 -9999\n";

    #[test]
    fn parses_north_row_first() {
        let g = load_esri_ascii::<f64>(SMALL).unwrap();
        assert_eq!((g.ncols(), g.nrows()), (3, 2));
        // south row is the last line of the file
        assert_eq!(g.raw(0, 0), 4.0);
        assert_eq!(g.raw(0, 1), 1.0);
        assert_eq!(g.node_xy(0, 0), (11.0, 21.0));
        assert_eq!(g.sample(2, 0), None);
        assert!(matches!(g.height_at(14.5, 22.0), Err(TerrainError::NoData { .. })));
        assert_eq!(g.height_at(11.0, 22.0).unwrap(), 2.5);
    }

    #[test]
    fn flat_two_by_two() {
        let g = load_esri_ascii::<f64>("ncols 2 nrows 2 xllcorner 0 yllcorner 0 cellsize 1\n0 0\n0 0").unwrap();
        assert_eq!(g.height_at(1.0, 1.2).unwrap(), 0.0);
    }

    #[test]
    fn xllcenter_is_shifted_half_a_cell() {
        let g =
            load_esri_ascii::<f64>("ncols 2\nnrows 2\nxllcenter 0.5\nyllcenter 0.5\ncellsize 1\n0 0\n0 0\n").unwrap();
        assert_eq!(g.origin(), (0.0, 0.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad_token = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0 x\n";
        match load_esri_ascii::<f64>(bad_token) {
            Err(TerrainError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        let short = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0\n";
        assert!(matches!(
            load_esri_ascii::<f64>(short),
            Err(TerrainError::Parse { line: 7, .. })
        ));
        let long = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0 0\n1\n";
        assert!(matches!(
            load_esri_ascii::<f64>(long),
            Err(TerrainError::Parse { line: 8, .. })
        ));
        let no_size = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n0 0\n0 0\n";
        assert!(matches!(
            load_esri_ascii::<f64>(no_size),
            Err(TerrainError::Parse { .. })
        ));
        let bad_key = "ncols 2\nfoo 2\n";
        assert!(matches!(
            load_esri_ascii::<f64>(bad_key),
            Err(TerrainError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(-69.99971, 6), "-69.9997");
        assert_eq!(format_significant(1234567.0, 6), "1.23457e6");
        assert_eq!(format_significant(0.000012345, 6), "1.2345e-5");
        assert_eq!(format_significant(600.0, 6), "600");
        assert_eq!(format_significant(-9999.0, 6), "-9999");
    }

    #[test]
    fn roundtrip_reproduces_heights() {
        let g1 = load_esri_ascii::<f64>(SMALL).unwrap();
        let g2 = load_esri_ascii::<f64>(&write_esri_ascii(&g1)).unwrap();
        assert_eq!(g1, g2);
    }

    proptest! {
        #[test]
        fn writer_is_a_fixed_point_after_one_pass(vals in proptest::collection::vec(-1e4..1e4f64, 12)) {
            let g = ElevationGrid::new(4, 3, 0.5, -3.25, 7.0, vals, None).unwrap();
            let once = write_esri_ascii(&g);
            let reparsed = load_esri_ascii::<f64>(&once).unwrap();
            prop_assert_eq!(write_esri_ascii(&reparsed), once);
            for (a, b) in g.heights().iter().zip(reparsed.heights()) {
                prop_assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0));
            }
        }
    }
}
