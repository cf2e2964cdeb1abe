//! CSV, JSON and SVG artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use singlab_core::geometry::Point;
use singlab_core::levelset::ContourSet;
use singlab_core::{GradedMesh, ScalarField, SingularFunction};

use crate::commands::SolveReport;

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// `x,y,value` per vertex.
pub fn write_field_csv(path: &Path, field: &ScalarField) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "value"])?;
    for (p, v) in field.mesh().vertices.iter().zip(field.values()) {
        w.serialize((p.x, p.y, v))?;
    }
    w.flush()
}

/// Vertices and triangles as two CSV files.
pub fn write_mesh_csv(dir: &Path, stem: &str, mesh: &GradedMesh) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}_vertices.csv")))?;
    w.write_record(["index", "x", "y"])?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        w.serialize((i, p.x, p.y))?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}_triangles.csv")))?;
    w.write_record(["v0", "v1", "v2"])?;
    for t in &mesh.triangles {
        w.serialize((t[0], t[1], t[2]))?;
    }
    w.flush()
}

/// `chain,index,x,y` for each traced point.
pub fn write_contours_csv(path: &Path, contours: &ContourSet) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["chain", "index", "x", "y"])?;
    for (c, pl) in contours.polylines.iter().enumerate() {
        for (i, p) in pl.points.iter().enumerate() {
            w.serialize((c, i, p.x, p.y))?;
        }
    }
    w.flush()
}

/// `a,b,level,nominal_h,kappa,max_abs` per probe and level.
pub fn write_convergence_csv(path: &Path, report: &SolveReport) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["a", "b", "level", "nominal_h", "kappa", "max_abs"])?;
    for p in &report.probes {
        for l in &p.levels {
            let h = report.meshes[l.mesh_level].nominal_h;
            w.serialize((p.a, p.b, l.mesh_level, h, l.kappa, l.max_abs))?;
        }
    }
    w.flush()
}

/// Raster cells per side of the sign shading.
const SHADE_CELLS: usize = 160;

/// Domain outline, sign shading of `S̃` and the traced contours.
pub fn contour_svg(stilde: &SingularFunction, contours: &ContourSet) -> String {
    let d = stilde.domain();
    let (ox, oy) = (d.lambda0() * d.r1(), d.lambda0() * d.r2());
    let size = 600.0;
    let scale = size / (2.0 * ox.max(oy));
    let (w, h) = (2.0 * ox * scale, 2.0 * oy * scale);
    let map = |p: Point| ((p.x + ox) * scale, (oy - p.y) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let cell = 2.0 * ox.max(oy) / SHADE_CELLS as f64;
    let (nx, ny) = ((2.0 * ox / cell).ceil() as usize, (2.0 * oy / cell).ceil() as usize);
    for j in 0..ny {
        for i in 0..nx {
            let c = Point::new(-ox + (i as f64 + 0.5) * cell, oy - (j as f64 + 0.5) * cell);
            if !d.contains(c) {
                continue;
            }
            let Ok(v) = stilde.evaluate(c) else { continue };
            let fill = if v >= 0.0 { "#f4c7a1" } else { "#a9c8ec" };
            let (x, y) = map(Point::new(c.x - 0.5 * cell, c.y + 0.5 * cell));
            let side = cell * scale;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{side:.3}" height="{side:.3}" fill="{fill}"/>"#
            );
        }
    }
    let rect = |s: &mut String, hx: f64, hy: f64| {
        let (x, y) = map(Point::new(-hx, hy));
        let _ = writeln!(
            s,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            2.0 * hx * scale,
            2.0 * hy * scale
        );
    };
    rect(&mut s, ox, oy);
    rect(&mut s, d.r1(), d.r2());
    for pl in &contours.polylines {
        let pts: Vec<String> = pl
            .points
            .iter()
            .map(|p| {
                let (x, y) = map(*p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
