use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::geometry::{Point3, PointCloud};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// Optional per-point integer attributes written alongside a cloud.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtraAttributes {
    pub class_ids: Option<Vec<i32>>,
    pub object_ids: Option<Vec<i32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyCloud {
    pub cloud: PointCloud,
    pub extra: ExtraAttributes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => f64::from(b[0] as i8),
            ScalarType::U8 => f64::from(b[0]),
            ScalarType::I16 => f64::from(i16::from_le_bytes([b[0], b[1]])),
            ScalarType::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            ScalarType::I32 => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            ScalarType::U32 => f64::from(u32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            ScalarType::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    X,
    Y,
    Z,
    Red,
    Green,
    Blue,
    ClassId,
    ObjectId,
}

impl Field {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "x" => Field::X,
            "y" => Field::Y,
            "z" => Field::Z,
            "red" => Field::Red,
            "green" => Field::Green,
            "blue" => Field::Blue,
            "class_id" => Field::ClassId,
            "object_id" => Field::ObjectId,
            _ => return None,
        })
    }
}

struct Header {
    encoding: PlyEncoding,
    count: usize,
    properties: Vec<(Field, ScalarType)>,
}

fn parse_header<R: BufRead>(reader: &mut R) -> Result<Header> {
    let mut line = String::new();
    let mut next_line = |line: &mut String| -> Result<()> {
        line.clear();
        let n = reader
            .read_line(line)
            .map_err(|e| Error::Format(format!("PLY header: {e}")))?;
        if n == 0 {
            return Err(Error::Format("PLY header: unexpected end of file".into()));
        }
        Ok(())
    };
    next_line(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::Format("missing 'ply' magic".into()));
    }
    let mut encoding = None;
    let mut count = None;
    let mut properties = Vec::new();
    let mut unsupported = Vec::new();
    loop {
        next_line(&mut line)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => {
                        return Err(Error::Format(format!("unsupported PLY format '{other}'")))
                    }
                });
            }
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(Error::Format("duplicate vertex element".into()));
                }
                count = Some(
                    n.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad vertex count '{n}'")))?,
                );
            }
            ["element", name, _] => unsupported.push(format!("element {name}")),
            ["property", "list", .., name] => unsupported.push(format!("property list {name}")),
            ["property", ty, name] => {
                if count.is_none() {
                    unsupported.push(format!("property {name} outside vertex element"));
                    continue;
                }
                match (Field::parse(name), ScalarType::parse(ty)) {
                    (Some(f), Some(t)) => properties.push((f, t)),
                    _ => unsupported.push(format!("property {ty} {name}")),
                }
            }
            _ => return Err(Error::Format(format!("bad PLY header line '{}'", line.trim_end()))),
        }
    }
    if !unsupported.is_empty() {
        return Err(Error::Format(format!(
            "unsupported PLY content: {}",
            unsupported.join(", ")
        )));
    }
    let encoding = encoding.ok_or_else(|| Error::Format("PLY header lacks a format line".into()))?;
    let count = count.ok_or_else(|| Error::Format("PLY header lacks a vertex element".into()))?;
    for (required, name) in [(Field::X, "x"), (Field::Y, "y"), (Field::Z, "z")] {
        if !properties.iter().any(|(f, _)| *f == required) {
            return Err(Error::Format(format!("PLY vertex lacks property {name}")));
        }
    }
    Ok(Header {
        encoding,
        count,
        properties,
    })
}

pub fn read_ply_from<R: Read>(reader: R) -> Result<PlyCloud> {
    let mut reader = BufReader::new(reader);
    let header = parse_header(&mut reader)?;
    let n_props = header.properties.len();
    let mut values = vec![0.0f64; header.count * n_props];
    match header.encoding {
        PlyEncoding::Ascii => {
            let mut text = String::new();
            reader
                .read_to_string(&mut text)
                .map_err(|e| Error::Format(format!("PLY body: {e}")))?;
            let mut tokens = text.split_whitespace();
            for (i, v) in values.iter_mut().enumerate() {
                let tok = tokens.next().ok_or_else(|| {
                    Error::Format(format!("PLY body truncated at vertex {}", i / n_props))
                })?;
                let bad = |_| Error::Format(format!("bad PLY value '{tok}'"));
                // float properties hold single precision, same as in binary files
                *v = match header.properties[i % n_props].1 {
                    ScalarType::F32 => f64::from(tok.parse::<f32>().map_err(bad)?),
                    _ => tok.parse::<f64>().map_err(bad)?,
                };
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let stride: usize = header.properties.iter().map(|(_, t)| t.size()).sum();
            let mut body = vec![0u8; stride * header.count];
            reader
                .read_exact(&mut body)
                .map_err(|_| Error::Format("PLY binary body truncated".into()))?;
            for (row, chunk) in body.chunks_exact(stride.max(1)).enumerate() {
                let mut offset = 0;
                for (col, (_, t)) in header.properties.iter().enumerate() {
                    values[row * n_props + col] = t.decode_le(&chunk[offset..]);
                    offset += t.size();
                }
            }
        }
    }

    let column = |field: Field| header.properties.iter().position(|(f, _)| *f == field);
    let get = |row: usize, col: usize| values[row * n_props + col];
    let (cx, cy, cz) = (
        column(Field::X).unwrap(),
        column(Field::Y).unwrap(),
        column(Field::Z).unwrap(),
    );
    let points: Vec<Point3> = (0..header.count)
        .map(|r| Point3::new(get(r, cx), get(r, cy), get(r, cz)))
        .collect();
    let colors = match (column(Field::Red), column(Field::Green), column(Field::Blue)) {
        (Some(r), Some(g), Some(b)) => {
            let mut out = Vec::with_capacity(header.count);
            for row in 0..header.count {
                let mut rgb = [0u8; 3];
                for (c, col) in rgb.iter_mut().zip([r, g, b]) {
                    let v = get(row, col);
                    if !(0.0..=255.0).contains(&v) || v.fract() != 0.0 {
                        return Err(Error::Format(format!("color value {v} outside 0..=255")));
                    }
                    *c = v as u8;
                }
                out.push(rgb);
            }
            Some(out)
        }
        (None, None, None) => None,
        _ => return Err(Error::Format("PLY colors need all of red, green, blue".into())),
    };
    let int_column = |field: Field| {
        column(field).map(|col| (0..header.count).map(|r| get(r, col) as i32).collect())
    };
    let extra = ExtraAttributes {
        class_ids: int_column(Field::ClassId),
        object_ids: int_column(Field::ObjectId),
    };
    let mut cloud = PointCloud::new(points)?;
    if let Some(colors) = colors {
        cloud = cloud.with_colors(colors)?;
    }
    Ok(PlyCloud { cloud, extra })
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PlyCloud> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ply_from(file)
}

pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    Ok(read_ply(path)?.cloud)
}

pub fn write_ply_to<W: Write>(
    mut w: W,
    cloud: &PointCloud,
    extra: &ExtraAttributes,
    encoding: PlyEncoding,
) -> Result<()> {
    let n = cloud.len();
    for (name, attr) in [("class_id", &extra.class_ids), ("object_id", &extra.object_ids)] {
        if let Some(v) = attr {
            if v.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{} {name} values for {n} points",
                    v.len()
                )));
            }
        }
    }
    let io = |e: std::io::Error| Error::Format(format!("PLY write: {e}"));
    let mut header = String::from("ply\n");
    header += match encoding {
        PlyEncoding::Ascii => "format ascii 1.0\n",
        PlyEncoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    };
    header += &format!("element vertex {n}\nproperty float x\nproperty float y\nproperty float z\n");
    if cloud.colors().is_some() {
        header += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    if extra.class_ids.is_some() {
        header += "property int class_id\n";
    }
    if extra.object_ids.is_some() {
        header += "property int object_id\n";
    }
    header += "end_header\n";
    w.write_all(header.as_bytes()).map_err(io)?;

    let mut buf = Vec::with_capacity(n * 24);
    for (i, p) in cloud.points().iter().enumerate() {
        let xyz = [p.x as f32, p.y as f32, p.z as f32];
        let rgb = cloud.colors().map(|c| c[i]);
        let ints = [
            extra.class_ids.as_ref().map(|v| v[i]),
            extra.object_ids.as_ref().map(|v| v[i]),
        ];
        match encoding {
            PlyEncoding::Ascii => {
                let mut fields: Vec<String> = xyz.iter().map(f32::to_string).collect();
                if let Some(rgb) = rgb {
                    fields.extend(rgb.iter().map(u8::to_string));
                }
                fields.extend(ints.iter().flatten().map(i32::to_string));
                buf.extend_from_slice(fields.join(" ").as_bytes());
                buf.push(b'\n');
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in xyz {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(rgb) = rgb {
                    buf.extend_from_slice(&rgb);
                }
                for v in ints.iter().flatten() {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    w.write_all(&buf).map_err(io)?;
    w.flush().map_err(io)
}

pub fn save_point_cloud(
    path: impl AsRef<Path>,
    cloud: &PointCloud,
    extra: &ExtraAttributes,
    encoding: PlyEncoding,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply_to(std::io::BufWriter::new(file), cloud, extra, encoding)
}
