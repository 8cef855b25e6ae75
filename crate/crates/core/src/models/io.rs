//! Matrix Market files, model manifests, CSV tables and SVG line plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lti::{PhRepresentation, StateSpace};

pub const MANIFEST_FORMAT: &str = "pamor-manifest-v1";

/// Matrix roles a manifest can carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    A,
    B,
    C,
    D,
    E,
    J,
    R,
    Q,
    G,
    P,
    S,
    N,
}

impl Role {
    pub const ALL: [Role; 12] = [
        Role::A,
        Role::B,
        Role::C,
        Role::D,
        Role::E,
        Role::J,
        Role::R,
        Role::Q,
        Role::G,
        Role::P,
        Role::S,
        Role::N,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::A => "A",
            Role::B => "B",
            Role::C => "C",
            Role::D => "D",
            Role::E => "E",
            Role::J => "J",
            Role::R => "R",
            Role::Q => "Q",
            Role::G => "G",
            Role::P => "P",
            Role::S => "S",
            Role::N => "N",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == s)
    }
}

/// A model on disk: named matrices plus echoed generator parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelManifest {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub matrices: BTreeMap<Role, Matrix>,
}

impl ModelManifest {
    pub fn new(name: impl Into<String>) -> Self {
        ModelManifest {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    /// Roles A, B, C, D and, if present, E.
    pub fn from_state_space(name: impl Into<String>, sys: &StateSpace) -> Self {
        let mut m = ModelManifest::new(name);
        m.insert_state_space(sys);
        m
    }

    pub fn insert_state_space(&mut self, sys: &StateSpace) {
        self.matrices.insert(Role::A, sys.a().clone());
        self.matrices.insert(Role::B, sys.b().clone());
        self.matrices.insert(Role::C, sys.c().clone());
        self.matrices.insert(Role::D, sys.d().clone());
        if let Some(e) = sys.e() {
            self.matrices.insert(Role::E, e.clone());
        }
    }

    pub fn insert_ph(&mut self, ph: &PhRepresentation) {
        for (role, m) in [
            (Role::J, &ph.j),
            (Role::R, &ph.r),
            (Role::Q, &ph.q),
            (Role::G, &ph.g),
            (Role::P, &ph.p),
            (Role::S, &ph.s),
            (Role::N, &ph.n),
        ] {
            self.matrices.insert(role, m.clone());
        }
    }

    pub fn get(&self, role: Role) -> Option<&Matrix> {
        self.matrices.get(&role)
    }

    /// The system from roles A, B, C (D defaults to zero, E optional), or
    /// from the pH roles when A is absent.
    pub fn state_space(&self) -> Result<StateSpace> {
        let Some(a) = self.get(Role::A) else {
            return self
                .ph()
                .ok_or_else(|| Error::InvalidConfig(format!("manifest '{}' has neither A nor a pH form", self.name)))?
                .and_then(|ph| ph.to_state_space());
        };
        let need = |r: Role| {
            self.get(r)
                .cloned()
                .ok_or_else(|| Error::InvalidConfig(format!("manifest '{}' has A but no {}", self.name, r.name())))
        };
        let (b, c) = (need(Role::B)?, need(Role::C)?);
        let d = match self.get(Role::D) {
            Some(d) => d.clone(),
            None => {
                log::info!("manifest '{}': no D given, using zeros", self.name);
                Matrix::zeros(c.nrows(), b.ncols())
            }
        };
        match self.get(Role::E) {
            Some(e) => StateSpace::with_mass(a.clone(), b, c, d, e.clone()),
            None => StateSpace::new(a.clone(), b, c, d),
        }
    }

    /// pH form when J, R, G and either Q or E are present (P, S, N default
    /// to zero). Without Q the roles describe `E x' = (J - R) x + G u`,
    /// `y = G^T x`, which is read in the coordinates `z = E x`, `Q = E^{-1}`.
    pub fn ph(&self) -> Option<Result<PhRepresentation>> {
        let (j, r, g) = (self.get(Role::J)?, self.get(Role::R)?, self.get(Role::G)?);
        let q = match (self.get(Role::Q), self.get(Role::E)) {
            (Some(q), _) => q.clone(),
            (None, Some(e)) => match e.clone().cholesky() {
                Some(c) => crate::linalg::sym(&c.inverse()),
                None => return Some(Err(Error::ESingular)),
            },
            (None, None) => return None,
        };
        let q = &q;
        let (n, m) = g.shape();
        let or_zero = |role: Role, rows: usize, cols: usize| {
            self.get(role).cloned().unwrap_or_else(|| Matrix::zeros(rows, cols))
        };
        Some(PhRepresentation::new(
            j.clone(),
            r.clone(),
            q.clone(),
            g.clone(),
            or_zero(Role::P, n, m),
            or_zero(Role::S, m, m),
            or_zero(Role::N, m, m),
        ))
    }

    /// Shapes of all present roles agree with a common `(n, m, p)`.
    pub fn check_dims(&self) -> Result<()> {
        let mut n = None;
        let mut m = None;
        let mut p = None;
        let fix = |slot: &mut Option<usize>, v: usize, what: &str| -> Result<()> {
            match *slot {
                Some(old) if old != v => Err(Error::dims(format!(
                    "manifest '{}': {what} is {v}, other roles imply {old}",
                    self.name
                ))),
                _ => {
                    *slot = Some(v);
                    Ok(())
                }
            }
        };
        for (&role, mat) in &self.matrices {
            let (r, c) = mat.shape();
            let what = role.name();
            match role {
                Role::A | Role::E | Role::J | Role::R | Role::Q => {
                    fix(&mut n, r, what)?;
                    fix(&mut n, c, what)?;
                }
                Role::B | Role::G | Role::P => {
                    fix(&mut n, r, what)?;
                    fix(&mut m, c, what)?;
                }
                Role::C => {
                    fix(&mut p, r, what)?;
                    fix(&mut n, c, what)?;
                }
                Role::D => {
                    fix(&mut p, r, what)?;
                    fix(&mut m, c, what)?;
                }
                Role::S | Role::N => {
                    fix(&mut m, r, what)?;
                    fix(&mut m, c, what)?;
                }
            }
        }
        Ok(())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Matrix files sit next to the manifest as `<stem>.<role>.mtx`.
fn matrix_path(manifest: &Path, role: Role) -> PathBuf {
    let stem = manifest.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    PathBuf::from(format!("{stem}.{}.mtx", role.name()))
}

/// Writes the manifest and one Matrix Market file per role.
pub fn write_manifest(manifest: &ModelManifest, path: &Path) -> Result<()> {
    manifest.check_dims()?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut text = String::new();
    writeln!(text, "format = {MANIFEST_FORMAT}").unwrap();
    writeln!(text, "name = {}", manifest.name).unwrap();
    for (k, v) in &manifest.params {
        writeln!(text, "param.{k} = {v}").unwrap();
    }
    for (&role, mat) in &manifest.matrices {
        let rel = matrix_path(path, role);
        write_matrix_market(mat, &dir.join(&rel))?;
        writeln!(text, "{} = {}", role.name(), rel.display()).unwrap();
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<ModelManifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut out = ModelManifest::default();
    let mut format = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(path, i + 1, "expected 'key = value'"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "format" {
            format = Some(value.to_string());
        } else if key == "name" {
            out.name = value.to_string();
        } else if let Some(p) = key.strip_prefix("param.") {
            out.params.insert(p.to_string(), value.to_string());
        } else if let Some(role) = Role::parse(key) {
            out.matrices.insert(role, read_matrix_market(&dir.join(value))?);
        } else {
            return Err(Error::parse(path, i + 1, format!("unknown key '{key}'")));
        }
    }
    match format.as_deref() {
        Some(MANIFEST_FORMAT) => {}
        Some(other) => return Err(Error::parse(path, 1, format!("unsupported format '{other}'"))),
        None => return Err(Error::parse(path, 1, "missing 'format' line")),
    }
    out.check_dims()?;
    Ok(out)
}

/// Coordinate format when less than a third of the entries are nonzero,
/// array format otherwise. Values carry 17 significant digits.
pub fn write_matrix_market(m: &Matrix, path: &Path) -> Result<()> {
    let (r, c) = m.shape();
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    let mut s = String::new();
    if 3 * nnz < r * c {
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        writeln!(s, "{r} {c} {nnz}").unwrap();
        for j in 0..c {
            for i in 0..r {
                let v = m[(i, j)];
                if v != 0.0 {
                    writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v).unwrap();
                }
            }
        }
    } else {
        s.push_str("%%MatrixMarket matrix array real general\n");
        writeln!(s, "{r} {c}").unwrap();
        for v in m.iter() {
            writeln!(s, "{v:.16e}").unwrap();
        }
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(s.as_bytes()).map_err(io_err(path))
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Reads `coordinate` or `array` files with `real`/`integer` fields and
/// `general`, `symmetric` or `skew-symmetric` storage.
pub fn read_matrix_market(path: &Path) -> Result<Matrix> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(f).lines().enumerate();
    let perr = |line: usize, msg: &str| Error::parse(path, line, msg);

    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let header = header.map_err(io_err(path))?;
    let h: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(perr(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        _ => return Err(perr(1, "format must be 'coordinate' or 'array'")),
    };
    if h[3] != "real" && h[3] != "integer" && h[3] != "double" {
        return Err(perr(1, "only real and integer fields are supported"));
    }
    let sym = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        _ => return Err(perr(1, "unsupported symmetry")),
    };

    let mut data = lines.filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => None,
        other => Some((i + 1, other)),
    });
    let (size_line, size) = data.next().ok_or_else(|| perr(2, "missing size line"))?;
    let size = size.map_err(io_err(path))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(size_line, "bad size entry")))
        .collect::<Result<_>>()?;
    let num = |line: usize, t: &str| -> Result<f64> {
        t.parse::<f64>().map_err(|_| perr(line, &format!("bad number '{t}'")))
    };
    let place = |m: &mut Matrix, i: usize, j: usize, v: f64| {
        m[(i, j)] = v;
        if i != j {
            match sym {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] = v,
                Symmetry::Skew => m[(j, i)] = -v,
            }
        }
    };

    if coordinate {
        let [r, c, nnz] = dims[..] else {
            return Err(perr(size_line, "coordinate size line needs 'rows cols nnz'"));
        };
        let mut m = Matrix::zeros(r, c);
        let mut seen = 0;
        for (ln, l) in data {
            let l = l.map_err(io_err(path))?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(perr(ln, "expected 'row col value'"));
            }
            let i: usize = t[0].parse().map_err(|_| perr(ln, "bad row index"))?;
            let j: usize = t[1].parse().map_err(|_| perr(ln, "bad column index"))?;
            if i == 0 || j == 0 || i > r || j > c {
                return Err(perr(ln, "index out of range"));
            }
            place(&mut m, i - 1, j - 1, num(ln, t[2])?);
            seen += 1;
        }
        if seen != nnz {
            return Err(perr(size_line, &format!("expected {nnz} entries, found {seen}")));
        }
        Ok(m)
    } else {
        let [r, c] = dims[..] else {
            return Err(perr(size_line, "array size line needs 'rows cols'"));
        };
        let mut vals = Vec::with_capacity(r * c);
        let mut last = size_line;
        for (ln, l) in data {
            let l = l.map_err(io_err(path))?;
            for t in l.split_whitespace() {
                vals.push(num(ln, t)?);
            }
            last = ln;
        }
        let mut m = Matrix::zeros(r, c);
        let mut it = vals.into_iter();
        // column-major; symmetric variants store the lower triangle only
        for j in 0..c {
            let start = if sym == Symmetry::General { 0 } else if sym == Symmetry::Skew { j + 1 } else { j };
            for i in start..r {
                let v = it.next().ok_or_else(|| perr(last, "too few array entries"))?;
                place(&mut m, i, j, v);
            }
        }
        if it.next().is_some() {
            return Err(perr(last, "too many array entries"));
        }
        Ok(m)
    }
}

/// CSV with a header row.
pub fn write_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::dims(format!("CSV row has {} fields, header {}", row.len(), header.len())));
        }
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// One curve of a line plot.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Renders `plot` as a standalone SVG file. Points with non-finite
/// coordinates (or nonpositive y on a log axis) are dropped.
pub fn write_svg_plot(plot: &Plot, path: &Path) -> Result<()> {
    fs::write(path, render_svg(plot)).map_err(io_err(path))
}

pub fn render_svg(plot: &Plot) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 60.0);
    let ty = |y: f64| if plot.log_y { y.log10() } else { y };
    let keep = |x: f64, y: f64| x.is_finite() && y.is_finite() && (!plot.log_y || y > 0.0);
    let pts: Vec<Vec<(f64, f64)>> = plot
        .series
        .iter()
        .map(|s| s.x.iter().zip(&s.y).filter(|(x, y)| keep(**x, **y)).map(|(x, y)| (*x, ty(*y))).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = all.fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), (x, y)| (a.min(*x), b.max(*x), c.min(*y), d.max(*y)),
    );
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if plot.log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let (pw, ph) = (w - left - right, h - top - bottom);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(&plot.title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();

    // y ticks: decades on a log axis, 5 intervals otherwise
    let yticks: Vec<f64> = if plot.log_y {
        let step = ((y1 - y0) / 8.0).ceil().max(1.0);
        let mut v = Vec::new();
        let mut t = y0;
        while t <= y1 + 1e-9 {
            v.push(t);
            t += step;
        }
        v
    } else {
        (0..=5).map(|k| y0 + (y1 - y0) * k as f64 / 5.0).collect()
    };
    for t in yticks {
        let y = sy(t);
        let label = if plot.log_y { format!("1e{}", t.round() as i64) } else { format!("{t:.3}") };
        writeln!(s, r##"<line x1="{left}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/>"##, left + pw).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, left - 6.0, y + 4.0).unwrap();
    }
    for k in 0..=5 {
        let t = x0 + (x1 - x0) * k as f64 / 5.0;
        let x = sx(t);
        writeln!(s, r##"<line x1="{x:.2}" x2="{x:.2}" y1="{top}" y2="{}" stroke="#ddd"/>"##, top + ph).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, top + ph + 18.0, format_tick(t)).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 16.0,
        escape(&plot.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&plot.y_label)
    )
    .unwrap();

    for (k, (series, p)) in plot.series.iter().zip(&pts).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if !p.is_empty() {
            let d: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                d.join(" ")
            )
            .unwrap();
            for (x, y) in p {
                writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(*x), sy(*y)).unwrap();
            }
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let lx = left + pw + 12.0;
        writeln!(s, r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(t: f64) -> String {
    if t == t.round() && t.abs() < 1e6 {
        format!("{}", t as i64)
    } else {
        format!("{t:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-20..20)))
    }

    #[test]
    fn matrix_market_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let dense = random(5, 5, 1);
        let mut sparse = Matrix::zeros(6, 4);
        sparse[(0, 0)] = 1.0 / 3.0;
        sparse[(5, 3)] = -std::f64::consts::PI * 1e-300;
        for (m, name) in [(&dense, "d.mtx"), (&sparse, "s.mtx"), (&Matrix::zeros(0, 3), "e.mtx")] {
            let p = dir.path().join(name);
            write_matrix_market(m, &p).unwrap();
            assert_eq!(&read_matrix_market(&p).unwrap(), m);
        }
        let text = fs::read_to_string(dir.path().join("s.mtx")).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate"));
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.mtx");
        fs::write(&p, "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2\n2 1 -1\n").unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), Matrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 0.0]));
        fs::write(&p, "%%MatrixMarket matrix array real skew-symmetric\n2 2\n3\n").unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), Matrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]));
    }

    #[test]
    fn malformed_header_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.mtx");
        fs::write(&p, "%%MatrixMarket tensor array real general\n1 1\n1\n").unwrap();
        match read_matrix_market(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        fs::write(&p, "%%MatrixMarket matrix array real general\n2 1\n1\nx\n").unwrap();
        match read_matrix_market(&p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("'x'"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn manifest_round_trip_and_default_d() {
        let dir = tempfile::tempdir().unwrap();
        let sys = StateSpace::new(random(3, 3, 2), random(3, 2, 3), random(1, 3, 4), random(1, 2, 5)).unwrap();
        let man = ModelManifest::from_state_space("toy", &sys).with_param("n", 3);
        let p = dir.path().join("toy.manifest");
        write_manifest(&man, &p).unwrap();
        let back = read_manifest(&p).unwrap();
        assert_eq!(back, man);
        assert_eq!(back.state_space().unwrap(), sys);

        let text = fs::read_to_string(&p).unwrap();
        let no_d: String = text.lines().filter(|l| !l.starts_with("D ")).map(|l| format!("{l}\n")).collect();
        fs::write(&p, no_d).unwrap();
        let back = read_manifest(&p).unwrap().state_space().unwrap();
        assert_eq!(back.d(), &Matrix::zeros(1, 2));
    }

    #[test]
    fn manifest_dimension_mismatch() {
        let mut man = ModelManifest::new("bad");
        man.matrices.insert(Role::A, Matrix::zeros(3, 3));
        man.matrices.insert(Role::B, Matrix::zeros(2, 1));
        assert!(matches!(man.check_dims(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn ph_manifest() {
        let ph = crate::models::generate_msd(&crate::models::MsdConfig { n: 4, ..Default::default() }).unwrap();
        let mut man = ModelManifest::new("msd");
        man.insert_ph(&ph);
        assert_eq!(man.ph().unwrap().unwrap(), ph);
        assert_eq!(man.state_space().unwrap(), ph.to_state_space().unwrap());
    }

    #[test]
    fn generalized_ph_manifest() {
        let m = crate::models::generate_poro(&crate::models::PoroConfig {
            mesh_divisions: 3,
            ..Default::default()
        })
        .unwrap();
        let mut man = ModelManifest::new("poro");
        man.matrices.insert(Role::E, m.e.clone());
        man.matrices.insert(Role::J, m.ph.j.clone());
        man.matrices.insert(Role::R, m.ph.r.clone());
        man.matrices.insert(Role::G, m.ph.g.clone());
        let ph = man.ph().unwrap().unwrap();
        assert!((&ph.q - &m.ph.q).norm() <= 1e-12 * m.ph.q.norm());
    }

    #[test]
    fn csv_and_svg_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&["r", "err"], &[vec!["2".into(), "1.5e-3".into()]], &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "r,err\n2,1.5e-3\n");
        assert!(write_csv(&["r"], &[vec![]], &p).is_err());
        let plot = Plot {
            title: "errors <r>".into(),
            x_label: "r".into(),
            y_label: "H2 error".into(),
            log_y: true,
            series: vec![Series {
                label: "a".into(),
                x: vec![2.0, 4.0, 6.0],
                y: vec![1e-2, 0.0, 1e-5],
            }],
        };
        let svg = render_svg(&plot);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("errors &lt;r&gt;"));
        // the zero is dropped on the log axis
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
