//! Minimal PLY support: reads the `vertex` element of ascii and binary
//! little-endian files, skipping any other elements and properties.

use std::io::Write;
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("unterminated PLY header".into()))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::Format("PLY header is not valid utf-8".into()))?
            .trim_end_matches('\r')
            .trim();
        offset += end + 1;
        if line == "end_header" {
            break;
        }
        lines.push(line.to_owned());
    }

    let mut iter = lines.iter();
    if iter.next().map(String::as_str) != Some("ply") {
        return Err(Error::Format("missing 'ply' magic".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in iter {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => {
                        return Err(Error::Format(format!("unsupported PLY format {other}")))
                    }
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::Format(format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: (*name).to_owned(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, _name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("property before element".into()))?;
                let count = Scalar::parse(count)
                    .ok_or_else(|| Error::Format(format!("unknown PLY type {count}")))?;
                let item = Scalar::parse(item)
                    .ok_or_else(|| Error::Format(format!("unknown PLY type {item}")))?;
                el.properties.push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("property before element".into()))?;
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| Error::Format(format!("unknown PLY type {ty}")))?;
                el.properties.push(Property::Scalar {
                    name: (*name).to_owned(),
                    ty,
                });
            }
            _ => return Err(Error::Format(format!("unrecognized header line '{line}'"))),
        }
    }
    Ok(Header {
        encoding: encoding.ok_or_else(|| Error::Format("missing format line".into()))?,
        elements,
        body_offset: offset,
    })
}

const REQUIRED: [&str; 6] = ["x", "y", "z", "red", "green", "blue"];

/// Column of each required property within the vertex element.
fn locate_required(vertex: &Element) -> Result<[usize; 6]> {
    let mut slots = [usize::MAX; 6];
    for (col, prop) in vertex.properties.iter().enumerate() {
        if let Property::Scalar { name, ty } = prop {
            if let Some(k) = REQUIRED.iter().position(|r| r == name) {
                let ok = if k < 3 {
                    matches!(ty, Scalar::F32 | Scalar::F64)
                } else {
                    *ty == Scalar::U8
                };
                if !ok {
                    return Err(Error::Format(format!("property {name} has type {ty:?}")));
                }
                slots[k] = col;
            }
        }
    }
    for (k, slot) in slots.iter().enumerate() {
        if *slot == usize::MAX {
            return Err(Error::Format(format!("missing property {}", REQUIRED[k])));
        }
    }
    Ok(slots)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n,
                available: self.bytes.len() - self.pos,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn scalar(&mut self, ty: Scalar) -> Result<f64> {
        Ok(ty.read_le(self.take(ty.size())?))
    }
}

/// Parses an in-memory PLY file.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_idx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::Format("missing element vertex".into()))?;
    let vertex = &header.elements[vertex_idx];
    let slots = locate_required(vertex)?;
    if vertex.count == 0 {
        return Err(Error::EmptyInput("PLY has zero vertices".into()));
    }

    let mut positions = Vec::with_capacity(vertex.count);
    let mut colors = Vec::with_capacity(vertex.count);
    let mut row = vec![0f64; vertex.properties.len()];
    let mut push_row = |row: &[f64]| {
        positions.push([row[slots[0]] as f32, row[slots[1]] as f32, row[slots[2]] as f32]);
        colors.push([
            color_from_byte(row[slots[3]]),
            color_from_byte(row[slots[4]]),
            color_from_byte(row[slots[5]]),
        ]);
    };

    match header.encoding {
        PlyEncoding::BinaryLittleEndian => {
            let mut cur = Cursor {
                bytes,
                pos: header.body_offset,
            };
            for (ei, el) in header.elements.iter().enumerate() {
                for _ in 0..el.count {
                    for (col, prop) in el.properties.iter().enumerate() {
                        match *prop {
                            Property::Scalar { ty, .. } => {
                                let v = cur.scalar(ty)?;
                                if ei == vertex_idx {
                                    row[col] = v;
                                }
                            }
                            Property::List { count, item } => {
                                let n = cur.scalar(count)? as usize;
                                cur.take(n * item.size())?;
                            }
                        }
                    }
                    if ei == vertex_idx {
                        push_row(&row);
                    }
                }
                if ei == vertex_idx {
                    break;
                }
            }
        }
        PlyEncoding::Ascii => {
            let body = std::str::from_utf8(&bytes[header.body_offset..])
                .map_err(|_| Error::Format("ascii PLY body is not valid utf-8".into()))?;
            let mut lines = body.lines().filter(|l| !l.trim().is_empty());
            for (ei, el) in header.elements.iter().enumerate() {
                for r in 0..el.count {
                    let line = lines.next().ok_or_else(|| {
                        Error::Format(format!("element {} ends after {r} of {} rows", el.name, el.count))
                    })?;
                    if ei != vertex_idx {
                        continue;
                    }
                    let mut tokens = line.split_whitespace();
                    for (col, prop) in el.properties.iter().enumerate() {
                        match prop {
                            Property::Scalar { .. } => {
                                let tok = tokens.next().ok_or_else(|| {
                                    Error::Format(format!("vertex row {r} is short"))
                                })?;
                                row[col] = tok.parse().map_err(|_| {
                                    Error::Format(format!("vertex row {r}: bad number '{tok}'"))
                                })?;
                            }
                            Property::List { .. } => {
                                let n: usize = tokens
                                    .next()
                                    .and_then(|t| t.parse().ok())
                                    .ok_or_else(|| Error::Format(format!("vertex row {r}: bad list")))?;
                                for _ in 0..n {
                                    tokens.next();
                                }
                            }
                        }
                    }
                    push_row(&row);
                }
                if ei == vertex_idx {
                    break;
                }
            }
        }
    }

    PointCloud::new(positions, colors)
}

pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

fn color_byte(c: f32) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

fn color_from_byte(b: f64) -> f32 {
    (b / 255.0) as f32
}

/// Snaps a `[0, 1]` color channel to the value it will have after a PLY
/// write/read cycle.
pub fn quantize_color(c: f32) -> f32 {
    color_from_byte(color_byte(c) as f64)
}

/// Serializes `cloud` as PLY with float32 positions and uint8 colors.
pub fn encode_point_cloud(cloud: &PointCloud, encoding: PlyEncoding) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + cloud.len() * 15);
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    write!(
        out,
        "ply\nformat {format} 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    )
    .unwrap();
    for (p, c) in cloud.positions().iter().zip(cloud.colors()) {
        let rgb = c.map(color_byte);
        match encoding {
            PlyEncoding::Ascii => {
                writeln!(out, "{} {} {} {} {} {}", p[0], p[1], p[2], rgb[0], rgb[1], rgb[2]).unwrap();
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in p {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.extend_from_slice(&rgb);
            }
        }
    }
    out
}

pub fn write_point_cloud(cloud: &PointCloud, path: impl AsRef<Path>, encoding: PlyEncoding) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_point_cloud(cloud, encoding)).map_err(|e| Error::io(path, e))
}
