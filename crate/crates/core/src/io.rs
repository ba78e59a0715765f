//! High-symmetry k paths and the CSV formats written by the command-line
//! tool.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::alloy::SweepRow;
use crate::error::{Error, Result};
use crate::model::WaveVector;

/// Significant digits of every number in a CSV file.
pub const CSV_DIGITS: usize = 6;

/// Formats `x` with `digits` significant digits, fixed notation for
/// moderate exponents and scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { s }
}

/// A labelled point of the fcc Brillouin zone, in units of 2π/a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryPoint {
    pub label: &'static str,
    pub k: WaveVector,
}

pub const SYMMETRY_POINTS: [SymmetryPoint; 6] = [
    SymmetryPoint { label: "Γ", k: WaveVector::GAMMA },
    SymmetryPoint { label: "X", k: WaveVector::X },
    SymmetryPoint { label: "L", k: WaveVector::L },
    SymmetryPoint { label: "K", k: WaveVector { kx: 0.75, ky: 0.75, kz: 0.0 } },
    SymmetryPoint { label: "W", k: WaveVector { kx: 1.0, ky: 0.5, kz: 0.0 } },
    SymmetryPoint { label: "U", k: WaveVector { kx: 1.0, ky: 0.25, kz: 0.25 } },
];

fn symmetry_point(s: &str) -> Result<SymmetryPoint> {
    let s = s.trim();
    let canonical = match s {
        "G" | "g" | "Gamma" | "gamma" | "GAMMA" => "Γ",
        other => other,
    };
    SYMMETRY_POINTS
        .iter()
        .find(|p| p.label.eq_ignore_ascii_case(canonical))
        .copied()
        .ok_or_else(|| Error::Argument(format!("unknown symmetry point `{s}` (known: Γ/G, X, L, K, W, U)")))
}

/// Straight segments between symmetry points, each sampled uniformly with
/// both ends included.
#[derive(Debug, Clone, PartialEq)]
pub struct KPath {
    pub points: Vec<SymmetryPoint>,
    pub samples_per_segment: usize,
}

/// One sampled point of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub index: usize,
    /// Position along the path, 0 at the start and 1 at the end.
    pub fraction: f64,
    pub k: WaveVector,
}

impl KPath {
    pub fn new(points: Vec<SymmetryPoint>, samples_per_segment: usize) -> Result<Self> {
        let p = KPath { points, samples_per_segment };
        p.validate()?;
        Ok(p)
    }

    /// Parses labels joined by `-` (or an en dash), e.g. `L-Γ-X`.
    pub fn parse(spec: &str, samples_per_segment: usize) -> Result<Self> {
        let points = spec
            .split(['-', '–'])
            .map(symmetry_point)
            .collect::<Result<Vec<_>>>()?;
        KPath::new(points, samples_per_segment)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Argument("a k path needs at least two symmetry points".into()));
        }
        if self.samples_per_segment < 2 {
            return Err(Error::Argument(format!(
                "at least 2 samples per segment are needed, got {}",
                self.samples_per_segment
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.points.iter().map(|p| p.label).collect::<Vec<_>>().join("-")
    }

    /// Shared segment ends appear once.
    pub fn samples(&self) -> Vec<PathSample> {
        let n = self.samples_per_segment - 1;
        let lengths: Vec<f64> = self.points.windows(2).map(|w| dist(&w[0].k, &w[1].k)).collect();
        let total: f64 = lengths.iter().sum();
        let mut out = Vec::with_capacity(lengths.len() * n + 1);
        let mut start = 0.0;
        for (seg, (w, len)) in self.points.windows(2).zip(&lengths).enumerate() {
            let (a, b) = (w[0].k, w[1].k);
            let first = if seg == 0 { 0 } else { 1 };
            for j in first..=n {
                let t = j as f64 / n as f64;
                let k = WaveVector::new(a.kx + t * (b.kx - a.kx), a.ky + t * (b.ky - a.ky), a.kz + t * (b.kz - a.kz));
                let fraction = if total > 0.0 { (start + t * len) / total } else { 0.0 };
                out.push(PathSample { index: out.len(), fraction, k });
            }
            start += len;
        }
        out
    }
}

impl FromStr for KPath {
    type Err = Error;

    /// `L-Γ-X` (default 50 samples per segment) or `L-Γ-X:20`.
    fn from_str(s: &str) -> Result<Self> {
        match s.rsplit_once(':') {
            Some((path, n)) => {
                let n = n.trim().parse().map_err(|_| Error::Argument(format!("bad sample count `{n}`")))?;
                KPath::parse(path, n)
            }
            None => KPath::parse(s, 50),
        }
    }
}

fn dist(a: &WaveVector, b: &WaveVector) -> f64 {
    ((a.kx - b.kx).powi(2) + (a.ky - b.ky).powi(2) + (a.kz - b.kz).powi(2)).sqrt()
}

fn push_row<I: IntoIterator<Item = String>>(out: &mut String, fields: I) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

/// Band CSV: `k_index,k_frac,kx,ky,kz,e1..eN`.
pub fn bands_csv(samples: &[PathSample], energies: &[Vec<f64>]) -> Result<String> {
    if samples.len() != energies.len() {
        return Err(Error::Argument("one energy list per k sample is required".into()));
    }
    let bands = energies.first().map_or(0, Vec::len);
    if energies.iter().any(|e| e.len() != bands) {
        return Err(Error::Argument("every k sample needs the same number of bands".into()));
    }
    let mut out = String::new();
    let header = ["k_index", "k_frac", "kx", "ky", "kz"].map(String::from);
    push_row(&mut out, header.into_iter().chain((1..=bands).map(|i| format!("e{i}"))));
    for (s, e) in samples.iter().zip(energies) {
        let g = |x: f64| format_sig(x, CSV_DIGITS);
        let mut row = vec![s.index.to_string(), g(s.fraction), g(s.k.kx), g(s.k.ky), g(s.k.kz)];
        row.extend(e.iter().map(|&x| g(x)));
        push_row(&mut out, row);
    }
    Ok(out)
}

pub const SWEEP_HEADER: &str = "thickness_ml,x,gap_ev,cutoff_um";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    writeln!(out, "{SWEEP_HEADER}").expect("writing to a String");
    for r in rows {
        let g = |x: f64| format_sig(x, CSV_DIGITS);
        push_row(&mut out, [r.thickness_ml.to_string(), g(r.x), g(r.gap_ev), g(r.cutoff_um)]);
    }
    out
}

/// Parses a numeric CSV with a header row. Returns the header and rows.
pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Argument("empty CSV".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|_| Error::Argument(format!("line {}: bad number `{f}`", i + 2))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Argument(format!("line {}: {} fields, header has {}", i + 2, row.len(), header.len())));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.4240000001, 6), "1.424");
        assert_eq!(format_sig(-12.2243456, 6), "-12.2243");
        assert_eq!(format_sig(0.000123456789, 6), "0.000123457");
        assert_eq!(format_sig(9.9999996, 6), "10");
        assert_eq!(format_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(format_sig(1.5e-9, 6), "1.5e-9");
        assert_eq!(format_sig(-0.0, 6), "0");
        assert_eq!(format_sig(100.0, 6), "100");
    }

    #[test]
    fn path_parsing_and_sampling() {
        let p = KPath::parse("L-Γ-X", 3).unwrap();
        let s = p.samples();
        assert_eq!(s.len(), 5);
        assert_eq!(s[2].k, WaveVector::GAMMA);
        assert_eq!(s[0].fraction, 0.0);
        assert!((s[4].fraction - 1.0).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[1].fraction > w[0].fraction));
        assert_eq!(KPath::parse("G-x", 2).unwrap().label(), "Γ-X");
        assert!(KPath::parse("Γ-X", 1).is_err());
        assert!(KPath::parse("Γ", 5).is_err());
        assert!(KPath::parse("Γ-Q", 5).is_err());
        assert_eq!("Γ-X:7".parse::<KPath>().unwrap().samples_per_segment, 7);
    }

    #[test]
    fn csv_round_trip() {
        let p = KPath::parse("Γ-X", 2).unwrap();
        let s = p.samples();
        let csv = bands_csv(&s, &[vec![-1.0, 2.0], vec![0.5, 1.25]]).unwrap();
        assert!(csv.starts_with("k_index,k_frac,kx,ky,kz,e1,e2\n"));
        assert!(!csv.contains('\r'));
        let (h, rows) = parse_numeric_csv(&csv).unwrap();
        assert_eq!(h.len(), 7);
        assert_eq!(rows[1], vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.5, 1.25]);
        assert!(bands_csv(&s, &[vec![1.0]]).is_err());
    }
}
