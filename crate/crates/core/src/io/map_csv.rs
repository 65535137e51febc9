//! Radio map persistence as CSV tables in one directory.
//!
//! * `refs.csv`: `grid_id,x_m,y_m`
//! * `rss.csv`: `grid_id,anchor_id,rssi_dbm`, unheard entries omitted
//! * `anchors.csv`: `anchor_id,x_m,y_m`, in RSS vector order
//! * `meta.csv`: `key,value`, currently the grid spacing

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{GridPoint, Position, ReferenceGrid};
use crate::radio_map::{assemble_radio_map, Anchor, RadioMap, Rssi};

pub const REFS_FILE: &str = "refs.csv";
pub const RSS_FILE: &str = "rss.csv";
pub const ANCHORS_FILE: &str = "anchors.csv";
pub const META_FILE: &str = "meta.csv";

fn csv_err(file: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            file: file.display().to_string(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn write_radio_map(map: &RadioMap, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut refs = String::from("grid_id,x_m,y_m\n");
    for p in &map.grid.points {
        refs.push_str(&format!("{},{},{}\n", p.index, p.position.x, p.position.y));
    }
    let mut rss = String::from("grid_id,anchor_id,rssi_dbm\n");
    for f in &map.fingerprints {
        for (a, r) in map.anchors.iter().zip(&f.rss) {
            if let Some(r) = r {
                rss.push_str(&format!("{},{},{}\n", f.grid_index, a.id, r.dbm()));
            }
        }
    }
    let mut anchors = String::from("anchor_id,x_m,y_m\n");
    for a in &map.anchors {
        anchors.push_str(&format!("{},{},{}\n", a.id, a.position.x, a.position.y));
    }
    let meta = format!("key,value\nspacing_m,{}\n", map.grid.spacing);
    fs::write(dir.join(REFS_FILE), refs)?;
    fs::write(dir.join(RSS_FILE), rss)?;
    fs::write(dir.join(ANCHORS_FILE), anchors)?;
    fs::write(dir.join(META_FILE), meta)?;
    Ok(())
}

/// Reads rows of a headed CSV file, checking the header. Each row comes with
/// its 1-based line number.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let found = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse {
            file: path.display().to_string(),
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, row: &[String], i: usize, name: &str) -> Result<T> {
    row.get(i)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            file: path.display().to_string(),
            line,
            message: format!("bad or missing `{name}`"),
        })
}

pub fn read_radio_map(dir: &Path) -> Result<RadioMap> {
    let refs_path = dir.join(REFS_FILE);
    let mut points = Vec::new();
    for (line, row) in read_rows(&refs_path, &["grid_id", "x_m", "y_m"])? {
        points.push(GridPoint {
            index: field(&refs_path, line, &row, 0, "grid_id")?,
            position: Position::new(
                field(&refs_path, line, &row, 1, "x_m")?,
                field(&refs_path, line, &row, 2, "y_m")?,
            ),
        });
    }

    let meta_path = dir.join(META_FILE);
    let mut spacing = None;
    for (line, row) in read_rows(&meta_path, &["key", "value"])? {
        if row.first().map(String::as_str) == Some("spacing_m") {
            spacing = Some(field::<f64>(&meta_path, line, &row, 1, "value")?);
        }
    }
    let spacing = spacing.ok_or_else(|| Error::Parse {
        file: meta_path.display().to_string(),
        line: 0,
        message: "no spacing_m entry".into(),
    })?;
    let grid = ReferenceGrid::from_points(points, spacing)?;

    let anchors_path = dir.join(ANCHORS_FILE);
    let mut anchors = Vec::new();
    for (line, row) in read_rows(&anchors_path, &["anchor_id", "x_m", "y_m"])? {
        anchors.push(Anchor {
            id: field(&anchors_path, line, &row, 0, "anchor_id")?,
            position: Position::new(
                field(&anchors_path, line, &row, 1, "x_m")?,
                field(&anchors_path, line, &row, 2, "y_m")?,
            ),
        });
    }

    let rss_path = dir.join(RSS_FILE);
    let n = anchors.len();
    let mut vectors: Vec<Vec<Option<Rssi>>> = vec![vec![None; n]; grid.len()];
    for (line, row) in read_rows(&rss_path, &["grid_id", "anchor_id", "rssi_dbm"])? {
        let bad = |message: String| Error::Parse {
            file: rss_path.display().to_string(),
            line,
            message,
        };
        let gid: u32 = field(&rss_path, line, &row, 0, "grid_id")?;
        let aid: u32 = field(&rss_path, line, &row, 1, "anchor_id")?;
        let dbm: i32 = field(&rss_path, line, &row, 2, "rssi_dbm")?;
        let rssi = Rssi::new(dbm).map_err(|e| bad(e.to_string()))?;
        let j = anchors
            .iter()
            .position(|a| a.id == aid)
            .ok_or_else(|| bad(format!("unknown anchor {aid}")))?;
        let slot = (gid as usize)
            .checked_sub(1)
            .and_then(|k| vectors.get_mut(k))
            .ok_or_else(|| bad(format!("unknown grid point {gid}")))?;
        if slot[j].replace(rssi).is_some() {
            return Err(bad(format!("duplicate entry for grid point {gid}, anchor {aid}")));
        }
    }
    let per_point = grid.points.iter().map(|p| p.index).zip(vectors).collect();
    assemble_radio_map(grid, per_point, anchors)
}
