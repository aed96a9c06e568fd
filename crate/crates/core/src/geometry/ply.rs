//! ASCII PLY reader and writer for labelled point clouds.
//!
//! Files carry one `vertex` element with `x y z` coordinates in millimetres and
//! a `class` label (0 = LV endocardium, 1 = LV epicardium, 2 = RV endocardium).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AnatomicalClass, GeometryError, MultiClassPointCloud};

fn parse_err(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::PlyParse {
        line,
        message: message.into(),
    }
}

pub fn write_ply<W: Write>(mut out: W, cloud: &MultiClassPointCloud) -> std::io::Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "comment units mm")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "property uchar class")?;
    writeln!(out, "end_header")?;
    for (p, l) in cloud.points().iter().zip(cloud.labels()) {
        writeln!(out, "{} {} {} {}", p[0], p[1], p[2], l.label())?;
    }
    Ok(())
}

pub fn read_ply<R: Read>(input: R) -> Result<MultiClassPointCloud, GeometryError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String), GeometryError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(parse_err(i + 1, e.to_string())),
            None => Err(parse_err(0, format!("unexpected end of file, expected {expect}"))),
        }
    };

    let (ln, magic) = next("magic")?;
    if magic.trim() != "ply" {
        return Err(parse_err(ln, "missing `ply` magic"));
    }
    let mut vertex_count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let (ln, line) = next("end_header")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(ln, format!("unsupported format `{other}`")));
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                vertex_count = Some(
                    n.parse()
                        .map_err(|_| parse_err(ln, format!("bad vertex count `{n}`")))?,
                );
                in_vertex = true;
            }
            ["element", name, n] => {
                if *n != "0" {
                    return Err(parse_err(ln, format!("unsupported element `{name}`")));
                }
                in_vertex = false;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(parse_err(ln, "list properties are not supported on vertices"));
            }
            ["property", ty, name] if in_vertex => {
                let ok = matches!(
                    *ty,
                    "float" | "float32" | "double" | "float64" | "uchar" | "uint8" | "int"
                        | "uint" | "char" | "short" | "ushort"
                );
                if !ok {
                    return Err(parse_err(ln, format!("unknown property type `{ty}`")));
                }
                props.push(name.to_string());
            }
            ["property", ..] => {}
            ["end_header"] => break,
            [] => {}
            _ => return Err(parse_err(ln, format!("unrecognized header line `{line}`"))),
        }
    }
    let n = vertex_count.ok_or_else(|| parse_err(0, "no vertex element"))?;
    let col = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| parse_err(0, format!("missing vertex property `{name}`")))
    };
    let (cx, cy, cz, cc) = (col("x")?, col("y")?, col("z")?, col("class")?);

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = next("vertex row")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != props.len() {
            return Err(parse_err(
                ln,
                format!("expected {} values, found {}", props.len(), fields.len()),
            ));
        }
        let num = |i: usize| -> Result<f64, GeometryError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| parse_err(ln, format!("bad number `{}`", fields[i])))
        };
        points.push([num(cx)?, num(cy)?, num(cz)?]);
        let label: u8 = fields[cc]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad class `{}`", fields[cc])))?;
        labels.push(AnatomicalClass::from_label(label)?);
    }
    MultiClassPointCloud::new(points, labels)
}

pub fn save_ply(path: &Path, cloud: &MultiClassPointCloud) -> Result<(), GeometryError> {
    let file = File::create(path).map_err(|e| GeometryError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut w = BufWriter::new(file);
    write_ply(&mut w, cloud)
        .and_then(|_| w.flush())
        .map_err(|e| GeometryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

pub fn load_ply(path: &Path) -> Result<MultiClassPointCloud, GeometryError> {
    let file = File::open(path).map_err(|e| GeometryError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_ply(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read_preserves_cloud() {
        let cloud = MultiClassPointCloud::from_classes([
            vec![[1.0, 2.5, -3.25], [0.1, 0.2, 0.30000000000000004]],
            vec![[1e-9, 12345.678, 0.0]],
            vec![[-7.0, 8.0, 9.0]],
        ]);
        let mut buf = Vec::new();
        write_ply(&mut buf, &cloud).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("comment units mm\n"));
        assert!(text.contains("property uchar class\n"));
        assert_eq!(read_ply(buf.as_slice()).unwrap(), cloud);
    }

    #[test]
    fn rejects_unknown_class() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty uchar class\nend_header\n0 0 0 7\n";
        assert!(matches!(
            read_ply(text.as_bytes()),
            Err(GeometryError::UnknownClass(7))
        ));
    }

    #[test]
    fn property_order_follows_header() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty uchar class\nproperty float z\nproperty float y\nproperty float x\nend_header\n2 3 2 1\n";
        let cloud = read_ply(text.as_bytes()).unwrap();
        assert_eq!(cloud.points(), &[[1.0, 2.0, 3.0]]);
        assert_eq!(cloud.labels(), &[AnatomicalClass::RvEndo]);
    }

    #[test]
    fn rejects_truncated_body_and_binary() {
        let short = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar class\nend_header\n0 0 0 1\n";
        assert!(read_ply(short.as_bytes()).is_err());
        let binary = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(read_ply(binary.as_bytes()).is_err());
        let missing = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        assert!(read_ply(missing.as_bytes()).is_err());
    }
}
