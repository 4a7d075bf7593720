use std::fs::File;
use std::io::{BufReader, Cursor};
use std::path::Path;

use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, ElementDef, Encoding, Ply, Property, PropertyAccess, PropertyDef, PropertyType, ScalarType,
};
use ply_rs::writer::Writer;
use serde::{Deserialize, Serialize};

use super::{MapSnapshot, SurfelEstimate};
use crate::fsutil::write_atomic;
use crate::{Error, Result};

/// Label written for points that carry none.
pub const NO_LABEL: u32 = u32::MAX;

/// One vertex of an exported map.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MapPoint {
    pub position: [f32; 3],
    pub normal: [f32; 3],
    pub rgb: [u8; 3],
    pub label: u32,
    pub radius: f32,
}

impl MapPoint {
    pub fn from_estimate(est: &SurfelEstimate) -> Self {
        Self {
            position: est.position.map(|v| v as f32).into(),
            normal: est.normal.into_inner().map(|v| v as f32).into(),
            rgb: est.rgb,
            label: est.label,
            radius: est.radius as f32,
        }
    }
}

const FLOATS: [&str; 7] = ["x", "y", "z", "nx", "ny", "nz", "radius"];
const COLORS: [&str; 3] = ["red", "green", "blue"];

impl PropertyAccess for MapPoint {
    fn new() -> Self {
        Self {
            label: NO_LABEL,
            ..Self::default()
        }
    }

    fn set_property(&mut self, name: String, property: Property) {
        let value = match property {
            Property::Float(v) => v as f64,
            Property::Double(v) => v,
            Property::UChar(v) => v as f64,
            Property::Char(v) => v as f64,
            Property::UShort(v) => v as f64,
            Property::Short(v) => v as f64,
            Property::UInt(v) => v as f64,
            Property::Int(v) => v as f64,
            _ => return,
        };
        match name.as_str() {
            "x" => self.position[0] = value as f32,
            "y" => self.position[1] = value as f32,
            "z" => self.position[2] = value as f32,
            "nx" => self.normal[0] = value as f32,
            "ny" => self.normal[1] = value as f32,
            "nz" => self.normal[2] = value as f32,
            "red" => self.rgb[0] = value as u8,
            "green" => self.rgb[1] = value as u8,
            "blue" => self.rgb[2] = value as u8,
            "label" => self.label = value as u32,
            "radius" => self.radius = value as f32,
            _ => {}
        }
    }

    fn get_float(&self, name: &String) -> Option<f32> {
        match name.as_str() {
            "x" => Some(self.position[0]),
            "y" => Some(self.position[1]),
            "z" => Some(self.position[2]),
            "nx" => Some(self.normal[0]),
            "ny" => Some(self.normal[1]),
            "nz" => Some(self.normal[2]),
            "radius" => Some(self.radius),
            _ => None,
        }
    }

    fn get_uchar(&self, name: &String) -> Option<u8> {
        COLORS.iter().position(|c| c == name).map(|i| self.rgb[i])
    }

    fn get_uint(&self, name: &String) -> Option<u32> {
        (name == "label").then_some(self.label)
    }
}

/// Binary little-endian PLY with per-vertex position, normal, colour,
/// label and radius.
pub fn encode_ply(points: &[MapPoint]) -> Result<Vec<u8>> {
    let mut ply = Ply::<MapPoint>::new();
    ply.header.encoding = Encoding::BinaryLittleEndian;
    let mut vertex = ElementDef::new("vertex".to_string());
    let float = |name: &str| PropertyDef::new(name.to_string(), PropertyType::Scalar(ScalarType::Float));
    for name in &FLOATS[..6] {
        vertex.properties.add(float(name));
    }
    for name in COLORS {
        vertex
            .properties
            .add(PropertyDef::new(name.to_string(), PropertyType::Scalar(ScalarType::UChar)));
    }
    vertex
        .properties
        .add(PropertyDef::new("label".to_string(), PropertyType::Scalar(ScalarType::UInt)));
    vertex.properties.add(float("radius"));
    ply.header.elements.add(vertex);
    ply.payload.insert("vertex".to_string(), points.to_vec());
    let mut out = Vec::new();
    Writer::new()
        .write_ply(&mut out, &mut ply)
        .map_err(|e| Error::invalid(format!("PLY encoding failed: {e}")))?;
    Ok(out)
}

pub fn decode_ply(bytes: &[u8]) -> Result<Vec<MapPoint>> {
    let ply = Parser::<MapPoint>::new()
        .read_ply(&mut Cursor::new(bytes))
        .map_err(|e| Error::parse(format!("PLY: {e}")))?;
    Ok(ply.payload.get("vertex").cloned().unwrap_or_default())
}

pub fn write_ply(path: impl AsRef<Path>, points: &[MapPoint]) -> Result<()> {
    write_atomic(path, &encode_ply(points)?)
}

/// Reads the `vertex` element of any PLY file. Missing normals, colours
/// and radii read as zero; a missing label reads as [`NO_LABEL`].
pub fn read_ply(path: impl AsRef<Path>) -> Result<Vec<MapPoint>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ply = Parser::<MapPoint>::new()
        .read_ply(&mut BufReader::new(file))
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    Ok(ply.payload.get("vertex").cloned().unwrap_or_default())
}

/// One row of `map_stats.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfelStatsRow {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
    pub label: u32,
    pub intensity: f64,
    pub radius: f64,
    pub gradient: f64,
    pub entropy: f64,
    pub samples: u32,
    pub observations: u32,
}

impl SurfelStatsRow {
    pub fn from_estimate(est: &SurfelEstimate) -> Self {
        let n = est.normal.into_inner();
        Self {
            id: est.id,
            x: est.position.x,
            y: est.position.y,
            z: est.position.z,
            nx: n.x,
            ny: n.y,
            nz: n.z,
            label: est.label,
            intensity: est.intensity,
            radius: est.radius,
            gradient: est.gradient,
            entropy: est.entropy,
            samples: est.samples,
            observations: est.observations,
        }
    }
}

pub fn encode_map_stats(snapshot: &MapSnapshot) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for est in &snapshot.surfels {
        writer
            .serialize(SurfelStatsRow::from_estimate(est))
            .map_err(|e| Error::invalid(format!("CSV encoding failed: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::invalid(format!("CSV encoding failed: {e}")))
}

pub fn write_map_stats(path: impl AsRef<Path>, snapshot: &MapSnapshot) -> Result<()> {
    write_atomic(path, &encode_map_stats(snapshot)?)
}

pub fn read_map_stats(path: impl AsRef<Path>) -> Result<Vec<SurfelStatsRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))
}
