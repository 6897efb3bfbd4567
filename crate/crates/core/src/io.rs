//! Plain-text file formats.
//!
//! * Wide dataset CSV: header `id,t_1,…,t_t`, then one `id,v_1,…,v_t` row per
//!   course (shared grid only).
//! * Long dataset CSV: header `series_id,time,value`, one row per observation.
//! * Labels CSV: `series_id,label`.
//! * Matrix CSV: a `# measure=<name> orientation=<o>` line, a header row of
//!   ids, then `id,score,…` rows.
//! * Model file: `key = value` lines with a `format_version`.
//!
//! Floats are written with 17 significant digits so that reading them back
//! reproduces the same `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::evaluation::BioSimilarityMatrix;
use crate::gp::Hyperparams;
use crate::similarity::{Orientation, SimilarityMatrix};
use crate::timecourse::{is_synchronous, TimeCourse};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {s:?}"),
    })
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetLayout {
    Wide,
    Long,
}

/// Writes courses in the wide layout; fails if they do not share a grid.
pub fn write_wide<W: Write>(w: W, courses: &[TimeCourse]) -> Result<()> {
    if !is_synchronous(courses) {
        return Err(Error::IncompatibleGrids(
            "wide layout requires every course on the same grid".into(),
        ));
    }
    let mut out = csv::Writer::from_writer(w);
    if let Some(first) = courses.first() {
        let mut header = vec!["id".to_string()];
        header.extend(first.times().iter().map(|&t| fmt_f64(t)));
        out.write_record(&header).map_err(csv_err)?;
    }
    for c in courses {
        let mut row = vec![c.id().to_string()];
        row.extend(c.values().iter().map(|&v| fmt_f64(v)));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_long<W: Write>(w: W, courses: &[TimeCourse]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["series_id", "time", "value"])
        .map_err(csv_err)?;
    for c in courses {
        for (t, v) in c.times().iter().zip(c.values()) {
            out.write_record([c.id(), &fmt_f64(*t), &fmt_f64(*v)])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads either layout, detected from the header row. Every course needs at
/// least two observations.
pub fn read_dataset<R: Read>(r: R) -> Result<(Vec<TimeCourse>, DatasetLayout)> {
    let mut rows = csv_reader(r).into_records();
    let header = match rows.next() {
        Some(h) => h.map_err(csv_err)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "dataset file is empty".into(),
            })
        }
    };
    let is_long = header.len() == 3
        && &header[0] == "series_id"
        && &header[1] == "time"
        && &header[2] == "value";
    let courses = if is_long {
        read_long_rows(rows)?
    } else {
        read_wide_rows(&header, rows)?
    };
    if courses.is_empty() {
        return Err(Error::Parse {
            line: record_line(&header) + 1,
            message: "dataset has no series".into(),
        });
    }
    if let Some(c) = courses.iter().find(|c| c.len() < 2) {
        return Err(Error::InvalidInput(format!(
            "series {} has {} observation(s); at least 2 are required",
            c.id(),
            c.len()
        )));
    }
    Ok((
        courses,
        if is_long {
            DatasetLayout::Long
        } else {
            DatasetLayout::Wide
        },
    ))
}

fn read_wide_rows<I>(header: &csv::StringRecord, rows: I) -> Result<Vec<TimeCourse>>
where
    I: Iterator<Item = csv::Result<csv::StringRecord>>,
{
    let hline = record_line(header);
    if header.len() < 2 {
        return Err(Error::Parse {
            line: hline,
            message: "wide header needs an id column and at least one time".into(),
        });
    }
    let times = header
        .iter()
        .skip(1)
        .map(|s| parse_f64(s, hline))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for rec in rows {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|s| parse_f64(s, line))
            .collect::<Result<Vec<_>>>()?;
        let c = TimeCourse::new(&rec[0], times.clone(), values).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(c);
    }
    Ok(out)
}

fn read_long_rows<I>(rows: I) -> Result<Vec<TimeCourse>>
where
    I: Iterator<Item = csv::Result<csv::StringRecord>>,
{
    let mut order: Vec<String> = Vec::new();
    let mut points: HashMap<String, (usize, Vec<(f64, f64)>)> = HashMap::new();
    for rec in rows {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let t = parse_f64(&rec[1], line)?;
        let v = parse_f64(&rec[2], line)?;
        let id = rec[0].to_string();
        let entry = points.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            (line, Vec::new())
        });
        entry.1.push((t, v));
    }
    order
        .into_iter()
        .map(|id| {
            let (line, pts) = points.remove(&id).expect("recorded");
            TimeCourse::from_pairs(id, pts).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_dataset_file(path: &Path) -> Result<(Vec<TimeCourse>, DatasetLayout)> {
    read_dataset(open(path)?)
}

/// Writes wide when the courses share a grid, long otherwise.
pub fn write_dataset_file(path: &Path, courses: &[TimeCourse]) -> Result<DatasetLayout> {
    let w = create(path)?;
    if is_synchronous(courses) {
        write_wide(w, courses)?;
        Ok(DatasetLayout::Wide)
    } else {
        write_long(w, courses)?;
        Ok(DatasetLayout::Long)
    }
}

pub fn write_labels<W: Write>(w: W, ids: &[String], c: &ClusterAssignment) -> Result<()> {
    if ids.len() != c.len() {
        return Err(Error::InvalidInput(format!(
            "{} ids for {} labels",
            ids.len(),
            c.len()
        )));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["series_id", "label"]).map_err(csv_err)?;
    for (id, l) in ids.iter().zip(c.labels()) {
        out.write_record([id.as_str(), &l.to_string()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_labels_file(path: &Path, ids: &[String], c: &ClusterAssignment) -> Result<()> {
    write_labels(create(path)?, ids, c)
}

/// Reads `series_id,label` rows; labels are renumbered by first appearance.
pub fn read_labels<R: Read>(r: R) -> Result<(Vec<String>, ClusterAssignment)> {
    let mut ids = Vec::new();
    let mut raw = Vec::new();
    for (k, rec) in csv_reader(r).into_records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec);
        if k == 0 && rec.get(0) == Some("series_id") {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let label = rec[1].parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("label {:?} is not a non-negative integer", &rec[1]),
        })?;
        ids.push(rec[0].to_string());
        raw.push(label);
    }
    if ids.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "labels file is empty".into(),
        });
    }
    Ok((ids, ClusterAssignment::from_labels(&raw)))
}

pub fn read_labels_file(path: &Path) -> Result<(Vec<String>, ClusterAssignment)> {
    read_labels(open(path)?)
}

pub fn write_matrix<W: Write>(mut w: W, m: &SimilarityMatrix) -> Result<()> {
    writeln!(
        w,
        "# measure={} orientation={}",
        m.measure_name(),
        m.orientation().as_str()
    )?;
    write_square(w, m.ids(), m.scores())
}

fn write_square<W: Write>(w: W, ids: &[String], scores: &DMatrix<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend(ids.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(scores.row(i).iter().map(|&v| fmt_f64(v)));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_file(path: &Path, m: &SimilarityMatrix) -> Result<()> {
    write_matrix(create(path)?, m)
}

/// Header metadata plus the square body of a matrix CSV.
struct SquareCsv {
    meta: HashMap<String, String>,
    ids: Vec<String>,
    scores: DMatrix<f64>,
}

fn read_square<R: Read>(r: R) -> Result<SquareCsv> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut meta = HashMap::new();
    for line in text.lines().take_while(|l| l.trim_start().starts_with('#')) {
        for tok in line.trim_start_matches('#').split([' ', ',', ';']) {
            if let Some((k, v)) = tok.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut rows = csv_reader(text.as_bytes()).into_records();
    let header = match rows.next() {
        Some(h) => h.map_err(csv_err)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "matrix file is empty".into(),
            })
        }
    };
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = ids.len();
    let mut scores = DMatrix::<f64>::zeros(n, n);
    let mut count = 0;
    for rec in rows {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec);
        if count >= n {
            return Err(Error::Parse {
                line,
                message: format!("more than {n} matrix rows"),
            });
        }
        if rec.len() != n + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", n + 1, rec.len()),
            });
        }
        if rec[0] != ids[count] {
            return Err(Error::Parse {
                line,
                message: format!(
                    "row id {:?} does not match column id {:?}",
                    &rec[0], ids[count]
                ),
            });
        }
        for j in 0..n {
            scores[(count, j)] = parse_f64(&rec[j + 1], line)?;
        }
        count += 1;
    }
    if count != n {
        return Err(Error::Parse {
            line: count + 2,
            message: format!("expected {n} matrix rows, found {count}"),
        });
    }
    Ok(SquareCsv { meta, ids, scores })
}

pub fn read_matrix<R: Read>(r: R) -> Result<SimilarityMatrix> {
    let sq = read_square(r)?;
    let orientation = sq
        .meta
        .get("orientation")
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing orientation in matrix header".into(),
        })?
        .parse::<Orientation>()?;
    let measure = sq
        .meta
        .get("measure")
        .cloned()
        .unwrap_or_else(|| "unknown".into());
    SimilarityMatrix::new(sq.ids, sq.scores, orientation, measure)
}

pub fn read_matrix_file(path: &Path) -> Result<SimilarityMatrix> {
    read_matrix(open(path)?)
}

/// Biological similarity in the matrix CSV layout (metadata line optional).
pub fn read_bio_similarity<R: Read>(r: R) -> Result<BioSimilarityMatrix> {
    let sq = read_square(r)?;
    BioSimilarityMatrix::new(sq.ids, sq.scores)
}

pub fn read_bio_similarity_file(path: &Path) -> Result<BioSimilarityMatrix> {
    read_bio_similarity(open(path)?)
}

pub fn write_bio_similarity<W: Write>(w: W, s: &BioSimilarityMatrix) -> Result<()> {
    write_square(w, s.ids(), s.scores())
}

/// Preprocessing applied to data before fitting, replayed when the model is
/// used later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocessing {
    pub center: bool,
    pub time_offset: f64,
    pub time_scale: f64,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            center: false,
            time_offset: 0.0,
            time_scale: 1.0,
        }
    }
}

impl Preprocessing {
    /// Maps the dataset's overall time range onto [0, 1].
    pub fn normalizing(courses: &[TimeCourse], center: bool) -> Self {
        let lo = courses
            .iter()
            .map(|c| c.times()[0])
            .fold(f64::INFINITY, f64::min);
        let hi = courses
            .iter()
            .map(|c| c.times()[c.len() - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = if hi > lo { 1.0 / (hi - lo) } else { 1.0 };
        Self {
            center,
            time_offset: lo,
            time_scale: scale,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, courses: &[TimeCourse]) -> Result<Vec<TimeCourse>> {
        courses
            .iter()
            .map(|c| {
                let c = if self.center { c.centered() } else { c.clone() };
                if self.time_offset == 0.0 && self.time_scale == 1.0 {
                    Ok(c)
                } else {
                    c.rescaled_time(self.time_offset, self.time_scale)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub hyperparams: Hyperparams,
    pub objective: f64,
    pub preprocessing: Preprocessing,
}

pub fn write_model<W: Write>(mut w: W, m: &ModelFile) -> Result<()> {
    let hp = &m.hyperparams;
    writeln!(w, "# squared-exponential GP hyperparameters")?;
    writeln!(w, "format_version = {MODEL_FORMAT_VERSION}")?;
    writeln!(w, "lengthscale = {}", fmt_f64(hp.lengthscale()))?;
    writeln!(w, "signal_std = {}", fmt_f64(hp.signal_std()))?;
    writeln!(w, "noise_std = {}", fmt_f64(hp.noise_std()))?;
    writeln!(w, "objective = {}", fmt_f64(m.objective))?;
    writeln!(w, "centered = {}", m.preprocessing.center)?;
    writeln!(w, "time_offset = {}", fmt_f64(m.preprocessing.time_offset))?;
    writeln!(w, "time_scale = {}", fmt_f64(m.preprocessing.time_scale))?;
    w.flush()?;
    Ok(())
}

pub fn write_model_file(path: &Path, m: &ModelFile) -> Result<()> {
    write_model(create(path)?, m)
}

pub fn read_model<R: Read>(r: R) -> Result<ModelFile> {
    let mut kv: HashMap<String, (usize, String)> = HashMap::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
            line: k + 1,
            message: format!("expected key = value, found {trimmed:?}"),
        })?;
        kv.insert(key.trim().to_string(), (k + 1, value.trim().to_string()));
    }
    if kv.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "model file is empty".into(),
        });
    }
    let get = |key: &str| {
        kv.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("model file is missing {key}"),
        })
    };
    let num = |key: &str| -> Result<f64> {
        let (line, v) = get(key)?;
        parse_f64(v, *line)
    };
    let (vline, version) = get("format_version")?;
    if version.parse::<u32>().ok() != Some(MODEL_FORMAT_VERSION) {
        return Err(Error::Parse {
            line: *vline,
            message: format!("unsupported model format version {version:?}"),
        });
    }
    let hyperparams = Hyperparams::new(num("lengthscale")?, num("signal_std")?, num("noise_std")?)?;
    let center = match kv.get("centered") {
        None => false,
        Some((line, v)) => v.parse::<bool>().map_err(|_| Error::Parse {
            line: *line,
            message: format!("centered must be true or false, found {v:?}"),
        })?,
    };
    let opt_num = |key: &str, default: f64| -> Result<f64> {
        match kv.get(key) {
            None => Ok(default),
            Some((line, v)) => parse_f64(v, *line),
        }
    };
    Ok(ModelFile {
        hyperparams,
        objective: num("objective")?,
        preprocessing: Preprocessing {
            center,
            time_offset: opt_num("time_offset", 0.0)?,
            time_scale: opt_num("time_scale", 1.0)?,
        },
    })
}

pub fn read_model_file(path: &Path) -> Result<ModelFile> {
    read_model(open(path)?)
}
