//! Deterministic SVG rendering of soups, clusters, boundaries, masks and
//! traces. Plane y points up; the document flips it.

use std::fmt::Write as _;

use crate::boundary::ClusterBoundary;
use crate::cluster::ClusterSet;
use crate::geometry::{BBox, Point};
use crate::raster::{GridGeometry, Mask};
use crate::soup::LoopSoup;

/// Fixed palette cycled by cluster id.
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn cluster_color(id: usize) -> &'static str {
    PALETTE[id % PALETTE.len()]
}

pub struct Svg {
    view: BBox,
    scale: f64,
    body: String,
    comment: Option<String>,
}

impl Svg {
    /// Canvas showing `view`, `pixel_width` pixels wide.
    pub fn new(view: BBox, pixel_width: f64) -> Self {
        let scale = pixel_width / view.width().max(f64::MIN_POSITIVE);
        Self { view, scale, body: String::new(), comment: None }
    }

    /// Comment placed right after the `<svg>` tag.
    pub fn with_comment(mut self, text: impl Into<String>) -> Self {
        self.comment = Some(text.into().replace("--", "- -"));
        self
    }

    fn map(&self, p: Point) -> (f64, f64) {
        ((p.x - self.view.min.x) * self.scale, (self.view.max.y - p.y) * self.scale)
    }

    pub fn polyline(&mut self, points: &[Point], stroke: &str, width: f64, fill: Option<&str>) -> &mut Self {
        if points.len() < 2 {
            return self;
        }
        let mut d = String::new();
        for (k, &p) in points.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{d}" fill="{}" stroke="{stroke}" stroke-width="{width}" stroke-linejoin="round"/>"#,
            fill.unwrap_or("none")
        );
        self
    }

    /// Set cells of `mask` as horizontal runs of rectangles.
    pub fn mask(&mut self, mask: &Mask, geom: &GridGeometry, fill: &str, opacity: f64) -> &mut Self {
        let _ = writeln!(self.body, r#"<g fill="{fill}" fill-opacity="{opacity}">"#);
        let cs = geom.cell_size;
        for j in 0..mask.ny {
            let mut i = 0;
            while i < mask.nx {
                if !mask.get(i, j) {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < mask.nx && mask.get(i, j) {
                    i += 1;
                }
                let top_left = Point::new(geom.origin.x + start as f64 * cs, geom.origin.y + (j + 1) as f64 * cs);
                let (x, y) = self.map(top_left);
                let w = (i - start) as f64 * cs * self.scale;
                let h = cs * self.scale;
                let _ = writeln!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}"/>"#);
            }
        }
        self.body.push_str("</g>\n");
        self
    }

    pub fn rect_outline(&mut self, b: &BBox, stroke: &str) -> &mut Self {
        let corners = [b.min, Point::new(b.max.x, b.min.y), b.max, Point::new(b.min.x, b.max.y), b.min];
        self.polyline(&corners, stroke, 1.0, None)
    }

    pub fn finish(&self) -> String {
        let w = self.view.width() * self.scale;
        let h = self.view.height() * self.scale;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n"
        );
        if let Some(c) = &self.comment {
            let _ = writeln!(out, "<!-- {c} -->");
        }
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

/// Loops coloured by cluster, with optional boundaries and free mask.
pub fn render_soup(
    soup: &LoopSoup,
    clusters: Option<&ClusterSet>,
    boundaries: &[ClusterBoundary],
    free: Option<(&Mask, &GridGeometry)>,
    pixel_width: f64,
) -> Svg {
    let view = soup.config.domain.bbox();
    let mut svg = Svg::new(view, pixel_width);
    if let Some((m, g)) = free {
        svg.mask(m, g, "#dde8f5", 1.0);
    }
    svg.rect_outline(&view, "#444444");
    for (i, l) in soup.loops.iter().enumerate() {
        let color = clusters.map_or("#333333", |c| cluster_color(c.labels[i]));
        svg.polyline(l.points(), color, 0.5, None);
    }
    for b in boundaries {
        svg.polyline(&b.polyline, "#000000", 1.5, None);
    }
    svg
}
