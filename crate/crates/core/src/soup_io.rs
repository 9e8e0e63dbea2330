//! Soup serialization: a line-oriented text format and a little-endian binary
//! format. Both round-trip bit-exactly.
//!
//! Text layout:
//!
//! ```text
//! loopsoup-text 1
//! # lines starting with '#' are comments
//! domain rectangle 0 0 2 1
//! intensity_c 0.5
//! t_min 0.01
//! t_max 1
//! step_scale 0.0001
//! seed 7
//! loops 2
//! loop <duration> <n_points>
//! <x> <y>            (n_points lines, root first and last)
//! ...
//! ```
//!
//! Binary layout: magic `LSOUPBIN`, u32 version, u8 domain tag, four f64
//! domain parameters, f64 c, t_min, t_max, step_scale, u64 seed, u64 loop
//! count; then per loop f64 root x, root y, duration, u64 point count and the
//! coordinate pairs.

use std::io::{BufRead, Read, Write};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::soup::{Loop, LoopSoup, SoupConfig};

const TEXT_MAGIC: &str = "loopsoup-text 1";
const BIN_MAGIC: &[u8; 8] = b"LSOUPBIN";
const BIN_VERSION: u32 = 1;

fn domain_text(d: &Domain) -> String {
    match *d {
        Domain::UnitSquare => "unit_square".into(),
        Domain::UnitDisk => "unit_disk".into(),
        Domain::Rectangle { x0, y0, width, height } => format!("rectangle {x0} {y0} {width} {height}"),
        Domain::HalfPlaneBox { width, height } => format!("half_plane_box {width} {height}"),
    }
}

fn domain_params(d: &Domain) -> (u8, [f64; 4]) {
    match *d {
        Domain::UnitSquare => (0, [0.0; 4]),
        Domain::UnitDisk => (1, [0.0; 4]),
        Domain::Rectangle { x0, y0, width, height } => (2, [x0, y0, width, height]),
        Domain::HalfPlaneBox { width, height } => (3, [width, height, 0.0, 0.0]),
    }
}

fn domain_from_params(tag: u8, p: [f64; 4]) -> Result<Domain> {
    Ok(match tag {
        0 => Domain::UnitSquare,
        1 => Domain::UnitDisk,
        2 => Domain::Rectangle { x0: p[0], y0: p[1], width: p[2], height: p[3] },
        3 => Domain::HalfPlaneBox { width: p[0], height: p[1] },
        _ => return Err(Error::Parse { line: 0, reason: format!("unknown domain tag {tag}") }),
    })
}

pub fn write_text<W: Write>(soup: &LoopSoup, mut w: W) -> std::io::Result<()> {
    let c = &soup.config;
    writeln!(w, "{TEXT_MAGIC}")?;
    writeln!(w, "domain {}", domain_text(&c.domain))?;
    writeln!(w, "intensity_c {}", c.intensity_c)?;
    writeln!(w, "t_min {}", c.t_min)?;
    writeln!(w, "t_max {}", c.t_max)?;
    writeln!(w, "step_scale {}", c.step_scale)?;
    writeln!(w, "seed {}", c.seed)?;
    writeln!(w, "loops {}", soup.loops.len())?;
    for l in &soup.loops {
        writeln!(w, "loop {} {}", l.duration(), l.points().len())?;
        for p in l.points() {
            writeln!(w, "{} {}", p.x, p.y)?;
        }
    }
    Ok(())
}

/// Text format preceded by `# comment` lines, which the reader skips.
pub fn write_text_annotated<W: Write>(soup: &LoopSoup, comments: &[&str], mut w: W) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    write_text(soup, w)
}

pub fn to_text(soup: &LoopSoup) -> String {
    let mut buf = Vec::new();
    write_text(soup, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("text format is ascii")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line that is not a `#` comment.
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(Ok(s)) if s.starts_with('#') => continue,
                Some(Ok(s)) => return Ok(s),
                Some(Err(e)) => return Err(Error::Parse { line: self.line, reason: e.to_string() }),
                None => return Err(self.err("unexpected end of input")),
            }
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse { line: self.line, reason: reason.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let s = self.next_line()?;
        let mut parts = s.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.map(str::to_owned).collect()),
            other => Err(self.err(format!("expected `{key}`, found {:?}", other.unwrap_or("")))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        if v.len() != 1 {
            return Err(self.err(format!("`{key}` takes one value")));
        }
        self.parse(&v[0])
    }
}

pub fn read_text<R: BufRead>(r: R) -> Result<LoopSoup> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    if lines.next_line()?.trim() != TEXT_MAGIC {
        return Err(lines.err("missing `loopsoup-text 1` header"));
    }
    let d = lines.keyed("domain")?;
    let nums = |lines: &Lines<R>, n: usize| -> Result<Vec<f64>> {
        if d.len() != n + 1 {
            return Err(lines.err(format!("domain `{}` takes {n} parameters", d[0])));
        }
        d[1..].iter().map(|s| lines.parse(s)).collect()
    };
    let domain = match d.first().map(String::as_str) {
        Some("unit_square") => Domain::UnitSquare,
        Some("unit_disk") => Domain::UnitDisk,
        Some("rectangle") => {
            let v = nums(&lines, 4)?;
            Domain::Rectangle { x0: v[0], y0: v[1], width: v[2], height: v[3] }
        }
        Some("half_plane_box") => {
            let v = nums(&lines, 2)?;
            Domain::HalfPlaneBox { width: v[0], height: v[1] }
        }
        _ => return Err(lines.err("unknown domain kind")),
    };
    let config = SoupConfig {
        domain,
        intensity_c: lines.single("intensity_c")?,
        t_min: lines.single("t_min")?,
        t_max: lines.single("t_max")?,
        step_scale: lines.single("step_scale")?,
        seed: lines.single("seed")?,
    };
    let n: usize = lines.single("loops")?;
    let mut loops = Vec::with_capacity(n);
    for _ in 0..n {
        let head = lines.keyed("loop")?;
        if head.len() != 2 {
            return Err(lines.err("`loop` takes duration and point count"));
        }
        let duration: f64 = lines.parse(&head[0])?;
        let count: usize = lines.parse(&head[1])?;
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let s = lines.next_line()?;
            let mut it = s.split_whitespace();
            let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
                return Err(lines.err("expected `x y`"));
            };
            points.push(Point::new(lines.parse(x)?, lines.parse(y)?));
        }
        let l = Loop::new(duration, points).map_err(|e| lines.err(e.to_string()))?;
        loops.push(l);
    }
    Ok(LoopSoup { config, loops })
}

pub fn write_binary<W: Write>(soup: &LoopSoup, mut w: W) -> std::io::Result<()> {
    let c = &soup.config;
    w.write_all(BIN_MAGIC)?;
    w.write_all(&BIN_VERSION.to_le_bytes())?;
    let (tag, params) = domain_params(&c.domain);
    w.write_all(&[tag])?;
    for v in params.iter().chain([c.intensity_c, c.t_min, c.t_max, c.step_scale].iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&c.seed.to_le_bytes())?;
    w.write_all(&(soup.loops.len() as u64).to_le_bytes())?;
    for l in &soup.loops {
        w.write_all(&l.root().x.to_le_bytes())?;
        w.write_all(&l.root().y.to_le_bytes())?;
        w.write_all(&l.duration().to_le_bytes())?;
        w.write_all(&(l.points().len() as u64).to_le_bytes())?;
        for p in l.points() {
            w.write_all(&p.x.to_le_bytes())?;
            w.write_all(&p.y.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn to_binary(soup: &LoopSoup) -> Vec<u8> {
    let mut buf = Vec::new();
    write_binary(soup, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

fn bin_err(e: std::io::Error) -> Error {
    Error::Parse { line: 0, reason: format!("binary soup: {e}") }
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(bin_err)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(bin_err)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<LoopSoup> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(bin_err)?;
    if &magic != BIN_MAGIC {
        return Err(Error::Parse { line: 0, reason: "bad binary soup magic".into() });
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver).map_err(bin_err)?;
    if u32::from_le_bytes(ver) != BIN_VERSION {
        return Err(Error::Parse { line: 0, reason: "unsupported binary soup version".into() });
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag).map_err(bin_err)?;
    let mut params = [0.0; 4];
    for p in params.iter_mut() {
        *p = read_f64(&mut r)?;
    }
    let domain = domain_from_params(tag[0], params)?;
    let config = SoupConfig {
        domain,
        intensity_c: read_f64(&mut r)?,
        t_min: read_f64(&mut r)?,
        t_max: read_f64(&mut r)?,
        step_scale: read_f64(&mut r)?,
        seed: read_u64(&mut r)?,
    };
    let n = read_u64(&mut r)? as usize;
    let mut loops = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let root = Point::new(read_f64(&mut r)?, read_f64(&mut r)?);
        let duration = read_f64(&mut r)?;
        let count = read_u64(&mut r)? as usize;
        let mut points = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            points.push(Point::new(read_f64(&mut r)?, read_f64(&mut r)?));
        }
        let l = Loop::new(duration, points).map_err(|e| Error::Parse { line: 0, reason: e.to_string() })?;
        if l.root() != root {
            return Err(Error::Parse { line: 0, reason: "stored root differs from first point".into() });
        }
        loops.push(l);
    }
    Ok(LoopSoup { config, loops })
}
