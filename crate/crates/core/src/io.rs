//! Text formats for point clouds, extracted level sets, and coefficient
//! grids.
//!
//! Floating-point values are written with 17 significant digits so that
//! every `f64` survives a write/read cycle unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bspline::{CoefficientGrid, KnotAxis, TensorBasis};
use crate::error::{Error, Result};
use crate::levelset::{CurveSet, LevelSetMesh, TriangleMesh};
use crate::offsets::OrientedPointCloud;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    /// Whitespace-separated `x y nx ny` or `x y z nx ny nz` rows.
    XyznText,
    /// ASCII PLY with `x y z nx ny nz` vertex properties.
    PlyAscii,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("xyz" | "xyzn") => Ok(CloudFormat::XyznText),
            Some("ply") => Ok(CloudFormat::PlyAscii),
            _ => Err(Error::Format(format!(
                "cannot infer the cloud format of {}; use .xyz, .xyzn, or .ply",
                path.display()
            ))),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads an oriented cloud, inferring the format from the extension unless
/// `format` is given.
pub fn read_cloud(path: &Path, format: Option<CloudFormat>) -> Result<OrientedPointCloud> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let text = read_text(path)?;
    match format {
        CloudFormat::XyznText => parse_xyzn(&text),
        CloudFormat::PlyAscii => parse_ply_ascii(&text),
    }
}

pub fn parse_xyzn(text: &str) -> Result<OrientedPointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    // (arity, first line with that arity)
    let mut arity: Option<(usize, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("'{t}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if fields.len() != 4 && fields.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 or 6 numbers, found {}", fields.len()),
            });
        }
        match arity {
            None => arity = Some((fields.len(), line_no)),
            Some((n, first)) if n != fields.len() => {
                return Err(Error::Format(format!(
                    "line {first} has {n} numbers but line {line_no} has {}",
                    fields.len()
                )));
            }
            _ => {}
        }
        let dim = fields.len() / 2;
        points.extend_from_slice(&fields[..dim]);
        normals.extend_from_slice(&fields[dim..]);
    }
    let dim = arity.map_or(2, |(n, _)| n / 2);
    OrientedPointCloud::new(dim, points, normals)
}

pub fn parse_ply_ascii(text: &str) -> Result<OrientedPointCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing 'ply' magic".into(),
            })
        }
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut props: Vec<String> = Vec::new();
    let mut elements_before_vertex = false;
    let mut header_done = false;
    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(Error::Format(format!(
                    "PLY format '{fmt}' is not supported; only ascii is"
                )))
            }
            ["format", ..] | ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertex_count = Some(count.parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad vertex count '{count}'"),
                    })?);
                } else if vertex_count.is_none() {
                    elements_before_vertex = true;
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err(Error::Format(
                    "list properties on vertices are not supported".into(),
                ))
            }
            ["property", _ty, name] => {
                if in_vertex {
                    props.push(name.to_string());
                }
            }
            ["property", ..] => {}
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unexpected header line '{raw}'"),
                })
            }
        }
    }
    if !header_done {
        return Err(Error::Format("PLY header has no end_header".into()));
    }
    if elements_before_vertex {
        return Err(Error::Format("the vertex element must come first".into()));
    }
    let count = vertex_count.ok_or_else(|| Error::Format("PLY has no vertex element".into()))?;
    let column = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::Format(format!("PLY vertex element lacks property '{name}'")))
    };
    let cols = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|n| column(n))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(3 * count);
    let mut normals = Vec::with_capacity(3 * count);
    let mut read = 0;
    for (i, raw) in lines {
        if read == count {
            break;
        }
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields = raw
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("'{t}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if fields.len() != props.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} values, found {}", props.len(), fields.len()),
            });
        }
        points.extend(cols[..3].iter().map(|&c| fields[c]));
        normals.extend(cols[3..].iter().map(|&c| fields[c]));
        read += 1;
    }
    if read != count {
        return Err(Error::Format(format!(
            "PLY declares {count} vertices but only {read} were found"
        )));
    }
    OrientedPointCloud::new(3, points, normals)
}

/// Serializes a cloud as `x y [z] nx ny [nz]` rows.
pub fn format_xyzn(cloud: &OrientedPointCloud) -> String {
    let mut out = String::new();
    for (p, n) in cloud.points().zip(cloud.normals()) {
        let row: Vec<String> = p.iter().chain(n).map(|&v| num(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_cloud(cloud: &OrientedPointCloud, path: &Path) -> Result<()> {
    write_text(path, &format_xyzn(cloud))
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::from("# implicit zero level set\n");
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", num(v[0]), num(v[1]), num(v[2]));
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

/// Reads `v` and triangular `f` records; face entries may carry `/`-suffixes.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut mesh = TriangleMesh::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut tokens = raw.split_whitespace();
        let bad = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        match tokens.next() {
            Some("v") => {
                let v = tokens
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| bad(format!("'{t}' is not a number")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if v.len() != 3 {
                    return Err(bad("vertex needs 3 coordinates".into()));
                }
                mesh.vertices.push([v[0], v[1], v[2]]);
            }
            Some("f") => {
                let idx = tokens
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        match head.parse::<u32>() {
                            Ok(k) if k >= 1 && (k as usize) <= mesh.vertices.len() => Ok(k - 1),
                            _ => Err(bad(format!("bad vertex reference '{t}'"))),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() != 3 {
                    return Err(bad(format!("face has {} vertices, expected 3", idx.len())));
                }
                mesh.triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok(mesh)
}

/// One `<path>` per polyline; the y axis is flipped so that +y points up.
pub fn format_svg(curves: &CurveSet) -> String {
    let [x0, y0] = curves.lower;
    let [x1, y1] = curves.upper;
    let (w, h) = (x1 - x0, y1 - y0);
    let stroke = 0.002 * w.max(h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        num(x0),
        num(y0),
        num(w),
        num(h)
    );
    let _ = writeln!(
        out,
        r#"<g transform="matrix(1 0 0 -1 0 {})" fill="none" stroke="black" stroke-width="{}">"#,
        num(y0 + y1),
        num(stroke)
    );
    for line in &curves.polylines {
        let mut d = String::new();
        for (i, p) in line.points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{} {} ",
                if i == 0 { "M" } else { "L" },
                num(p[0]),
                num(p[1])
            );
        }
        if line.closed {
            d.push('Z');
        }
        let _ = writeln!(out, r#"<path d="{}"/>"#, d.trim_end());
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Blank-line-separated point lists, each introduced by `# closed` or
/// `# open`.
pub fn format_polylines(curves: &CurveSet) -> String {
    let mut out = String::new();
    for (i, line) in curves.polylines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(if line.closed {
            "# closed\n"
        } else {
            "# open\n"
        });
        for p in &line.points {
            let _ = writeln!(out, "{} {}", num(p[0]), num(p[1]));
        }
    }
    out
}

/// Writes a mesh according to the extension: `.obj` for surfaces, `.svg`
/// or `.txt`/`.poly` for curves.
pub fn write_mesh(mesh: &LevelSetMesh, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let text = match (mesh, ext.as_deref()) {
        (LevelSetMesh::Surface(m), Some("obj")) => format_obj(m),
        (LevelSetMesh::Curves(c), Some("svg")) => format_svg(c),
        (LevelSetMesh::Curves(c), Some("txt" | "poly")) => format_polylines(c),
        _ => {
            return Err(Error::Format(format!(
                "{} does not match the mesh kind (.obj for surfaces, .svg/.poly/.txt for curves)",
                path.display()
            )))
        }
    };
    write_text(path, &text)
}

pub fn format_coeffs(grid: &CoefficientGrid) -> String {
    let basis = grid.basis();
    let mut out = String::from("# implicit B-spline coefficients\n");
    let _ = writeln!(out, "dimension {}", basis.dim());
    for a in basis.axes() {
        let _ = writeln!(
            out,
            "axis {} {} {}",
            num(a.domain_min()),
            num(a.domain_max()),
            a.num_basis()
        );
    }
    let _ = writeln!(out, "values {}", grid.values().len());
    for v in grid.values() {
        out.push_str(&num(*v));
        out.push('\n');
    }
    out
}

pub fn parse_coeffs(text: &str) -> Result<CoefficientGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut header = |key: &str| -> Result<(usize, Vec<&str>)> {
        match lines.next() {
            Some((n, l)) => {
                let tokens: Vec<&str> = l.split_whitespace().collect();
                if tokens.first() == Some(&key) {
                    Ok((n, tokens[1..].to_vec()))
                } else {
                    Err(Error::Format(format!("line {n}: expected '{key}' record")))
                }
            }
            None => Err(Error::Format(format!("missing '{key}' record"))),
        }
    };
    let parse_f = |n: usize, t: &str| {
        t.parse::<f64>().map_err(|_| Error::Parse {
            line: n,
            message: format!("'{t}' is not a number"),
        })
    };
    let parse_u = |n: usize, t: &str| {
        t.parse::<usize>().map_err(|_| Error::Parse {
            line: n,
            message: format!("'{t}' is not a count"),
        })
    };
    let (n, dim) = header("dimension")?;
    let dim = match dim.as_slice() {
        [d] => parse_u(n, d)?,
        _ => {
            return Err(Error::Format(format!(
                "line {n}: malformed dimension record"
            )))
        }
    };
    if !(2..=3).contains(&dim) {
        return Err(Error::Format(format!(
            "dimension must be 2 or 3, found {dim}"
        )));
    }
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let (n, a) = header("axis")?;
        match a.as_slice() {
            [lo, hi, nb] => axes.push(KnotAxis::new(
                parse_f(n, lo)?,
                parse_f(n, hi)?,
                parse_u(n, nb)?,
            )?),
            _ => {
                return Err(Error::Format(format!(
                    "line {n}: axis needs min, max, count"
                )))
            }
        }
    }
    let basis = TensorBasis::new(axes)?;
    let (n, count) = header("values")?;
    let declared = match count.as_slice() {
        [c] => parse_u(n, c)?,
        _ => return Err(Error::Format(format!("line {n}: malformed values record"))),
    };
    if declared != basis.num_coeffs() {
        return Err(Error::Format(format!(
            "header declares {declared} values but the axes need {}",
            basis.num_coeffs()
        )));
    }
    let values = lines
        .map(|(n, l)| parse_f(n, l))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != declared {
        return Err(Error::Format(format!(
            "expected {declared} coefficient values, found {}",
            values.len()
        )));
    }
    CoefficientGrid::new(basis, values)
}

pub fn write_coeffs(grid: &CoefficientGrid, path: &Path) -> Result<()> {
    write_text(path, &format_coeffs(grid))
}

pub fn read_coeffs(path: &Path) -> Result<CoefficientGrid> {
    parse_coeffs(&read_text(path)?)
}
