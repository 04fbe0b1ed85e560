//! CSV dumps of fields and trajectories.
//!
//! A field dump has the header `x[,y],u_1,...,u_N` and one row per node in
//! mesh order. Numbers are written with 17 significant digits, so a dump
//! read back reproduces every `f64` exactly. A trajectory is one field dump
//! per time level plus an index `times.csv` with columns
//! `level,time,filename`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::field::{NodalField, Trajectory};
use super::mesh::Mesh;
use crate::error::{Error, Result};

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv<W: Write>(field: &NodalField, out: W) -> Result<()> {
    let mesh = field.mesh();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["x", "y"][..mesh.dim()].iter().map(|s| s.to_string()).collect();
    header.extend((1..=field.components()).map(|a| format!("u_{a}")));
    w.write_record(&header)?;
    for i in 0..mesh.node_count() {
        let row: Vec<String> = mesh.node(i).iter().chain(field.value(i)).map(|v| format_number(*v)).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_file(field: &NodalField, path: &Path) -> Result<()> {
    write_field_csv(field, fs::File::create(path)?)
}

/// Contents of a field dump before a mesh is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dim: usize,
    pub components: usize,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

impl FieldDump {
    /// Rebuilds the generating mesh from the coordinates.
    pub fn into_field(self) -> Result<NodalField> {
        let mesh = Arc::new(Mesh::from_node_coordinates(self.dim, &self.coords)?);
        NodalField::new(mesh, self.components, self.values)
    }

    /// Same, on a mesh that must match the dumped coordinates.
    pub fn into_field_on(self, mesh: Arc<Mesh>) -> Result<NodalField> {
        if mesh.dim() != self.dim || mesh.coordinates() != self.coords.as_slice() {
            return Err(Error::InvalidArgument("dump does not match the mesh".into()));
        }
        NodalField::new(mesh, self.components, self.values)
    }
}

pub fn read_field_csv<R: Read>(input: R) -> Result<FieldDump> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let dim = match names.as_slice() {
        ["x", "y", ..] => 2,
        ["x", ..] => 1,
        _ => return Err(Error::Parse { line: 1, message: "header must start with x".into() }),
    };
    let components = names.len() - dim;
    if components == 0 || names[dim..].iter().enumerate().any(|(a, n)| *n != format!("u_{}", a + 1)) {
        return Err(Error::Parse { line: 1, message: "expected columns u_1,...,u_N after coordinates".into() });
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::Parse { line, message: format!("expected {} columns, found {}", names.len(), rec.len()) });
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("not a number: {cell:?}") })?;
            if c < dim {
                coords.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if coords.is_empty() {
        return Err(Error::Parse { line: 2, message: "no rows".into() });
    }
    Ok(FieldDump { dim, components, coords, values })
}

pub fn read_field_file(path: &Path) -> Result<FieldDump> {
    read_field_csv(fs::File::open(path)?)
}

/// Writes `level_NNNNN.csv` for every level and `times.csv` into `dir`.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = csv::Writer::from_path(dir.join("times.csv"))?;
    index.write_record(["level", "time", "filename"])?;
    for (k, (t, f)) in traj.times().iter().zip(traj.fields()).enumerate() {
        let name = format!("level_{k:05}.csv");
        write_field_file(f, &dir.join(&name))?;
        index.write_record([k.to_string(), format_number(*t), name])?;
    }
    index.flush()?;
    Ok(())
}

/// Reads a trajectory from its `times.csv` index; level files are resolved
/// relative to the index.
pub fn read_trajectory(index: &Path) -> Result<Trajectory> {
    let base = index.parent().unwrap_or_else(|| Path::new("."));
    let mut r = csv::Reader::from_path(index)?;
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let mut mesh: Option<Arc<Mesh>> = None;
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse { line, message: "expected level,time,filename".into() });
        }
        let t: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad time {:?}", &rec[1]) })?;
        let dump = read_field_file(&base.join(rec[2].trim()))?;
        let field = match &mesh {
            Some(m) => dump.into_field_on(m.clone())?,
            None => {
                let f = dump.into_field()?;
                mesh = Some(f.mesh().clone());
                f
            }
        };
        times.push(t);
        fields.push(field);
    }
    Trajectory::new(times, fields)
}
