//! Seeded synthetic generators and dataset file I/O.
//!
//! Feature datasets are CSV files without a header: the first column is the
//! label (`+1`, `1`, `-1` or `−1`), the rest are features. Image datasets are
//! directories of binary PGM (`P5`, maxval 255) windows plus a
//! `manifest.csv` of `filename,label` rows.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, Samples};
use crate::error::{Error, Result};
use crate::haar::GrayImage;
use crate::rng::{SeededRng, Stream};

pub const MANIFEST_NAME: &str = "manifest.csv";

fn check_counts(m1: usize, m2: usize) -> Result<()> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::invalid(format!(
            "generators need at least one example per class, got m1 = {m1}, m2 = {m2}"
        )));
    }
    Ok(())
}

fn labels_for(m1: usize, m2: usize) -> Vec<Label> {
    let mut labels = vec![Label::Positive; m1];
    labels.extend(std::iter::repeat_n(Label::Negative, m2));
    labels
}

/// Two overlapping 2-D Gaussian blobs: positives `N((0,0), I)`, negatives
/// `N((1.5, 1.5), I)`; positives first.
pub fn gen_toy_2d(m1: usize, m2: usize, seed: u64) -> Result<Dataset> {
    check_counts(m1, m2)?;
    let mut rng = SeededRng::new(seed, Stream::ToyData);
    let mut rows = Vec::with_capacity(m1 + m2);
    for i in 0..m1 + m2 {
        let shift = if i < m1 { 0.0 } else { 1.5 };
        rows.push(vec![shift + rng.normal(), shift + rng.normal()]);
    }
    Dataset::from_features(&rows, labels_for(m1, m2))
}

/// Parameters of [`gen_gaussian`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub m1: usize,
    pub m2: usize,
    pub dim: usize,
    /// Every coordinate of the positive mean.
    pub positive_mean: f64,
    pub positive_sd: f64,
    pub negative_sd: f64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            m1: 200,
            m2: 2000,
            dim: 10,
            positive_mean: 0.5,
            positive_sd: 1.0,
            negative_sd: 2.0,
        }
    }
}

/// Axis-aligned Gaussian classes: positives `N(μ·1, σ₊² I)`, negatives
/// `N(0, σ₋² I)`; positives first.
pub fn gen_gaussian(spec: &GaussianSpec, seed: u64) -> Result<Dataset> {
    check_counts(spec.m1, spec.m2)?;
    if spec.dim == 0 || !(spec.positive_sd > 0.0) || !(spec.negative_sd > 0.0) {
        return Err(Error::invalid(
            "gaussian generator needs dim >= 1 and positive deviations",
        ));
    }
    let mut rng = SeededRng::new(seed, Stream::GaussianData);
    let rows: Vec<Vec<f64>> = (0..spec.m1 + spec.m2)
        .map(|i| {
            (0..spec.dim)
                .map(|_| {
                    if i < spec.m1 {
                        spec.positive_mean + spec.positive_sd * rng.normal()
                    } else {
                        spec.negative_sd * rng.normal()
                    }
                })
                .collect()
        })
        .collect();
    Dataset::from_features(&rows, labels_for(spec.m1, spec.m2))
}

/// Positives `N(0, I)` in `dim` dimensions and negatives uniform on
/// `[−half_width, half_width]^dim`: a well-separated cascade workload where
/// most negatives are easy and a thin shell is hard.
pub fn gen_cascade_task(
    m1: usize,
    m2: usize,
    dim: usize,
    half_width: f64,
    seed: u64,
) -> Result<Dataset> {
    check_counts(m1, m2)?;
    if dim == 0 || !(half_width > 0.0) {
        return Err(Error::invalid(
            "cascade generator needs dim >= 1 and a positive box width",
        ));
    }
    let mut rng = SeededRng::new(seed, Stream::NegativePool);
    let rows: Vec<Vec<f64>> = (0..m1 + m2)
        .map(|i| {
            (0..dim)
                .map(|_| {
                    if i < m1 {
                        rng.normal()
                    } else {
                        rng.uniform_range(-half_width, half_width)
                    }
                })
                .collect()
        })
        .collect();
    Dataset::from_features(&rows, labels_for(m1, m2))
}

/// Survivor counts from simulating independent per-node acceptance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeStream {
    pub samples: u64,
    /// `survivors[t]` examples passed nodes `0..=t`.
    pub survivors: Vec<u64>,
}

impl NodeStream {
    pub fn final_survivors(&self) -> u64 {
        self.survivors.last().copied().unwrap_or(self.samples)
    }

    pub fn pass_rate(&self) -> f64 {
        self.final_survivors() as f64 / self.samples as f64
    }
}

/// Outcome of pushing positives through nodes with acceptance
/// probabilities `d_probs` and negatives through `f_probs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeStreamTable {
    pub positives: NodeStream,
    pub negatives: NodeStream,
}

fn simulate(probs: &[f64], samples: u64, rng: &mut SeededRng) -> NodeStream {
    let mut survivors = vec![0u64; probs.len()];
    for _ in 0..samples {
        for (t, &p) in probs.iter().enumerate() {
            if !rng.bernoulli(p) {
                break;
            }
            survivors[t] += 1;
        }
    }
    NodeStream { samples, survivors }
}

/// Simulate a cascade whose node `t` accepts a positive with probability
/// `d_probs[t]` and a negative with probability `f_probs[t]`, independently.
/// Rejected examples are not offered to later nodes.
pub fn gen_node_stream(
    d_probs: &[f64],
    f_probs: &[f64],
    n_positive: u64,
    n_negative: u64,
    seed: u64,
) -> Result<NodeStreamTable> {
    if d_probs.len() != f_probs.len() {
        return Err(Error::DimensionMismatch {
            what: "node false-positive probabilities",
            expected: d_probs.len(),
            found: f_probs.len(),
        });
    }
    if d_probs
        .iter()
        .chain(f_probs)
        .any(|p| !(0.0..=1.0).contains(p))
    {
        return Err(Error::invalid("node probabilities must lie in [0, 1]"));
    }
    let mut pos_rng = SeededRng::new(seed, Stream::NodeStreamPositive);
    let mut neg_rng = SeededRng::new(seed, Stream::NodeStreamNegative);
    Ok(NodeStreamTable {
        positives: simulate(d_probs, n_positive, &mut pos_rng),
        negatives: simulate(f_probs, n_negative, &mut neg_rng),
    })
}

/// Synthetic image windows: positives carry a dark horizontal band across
/// the upper third over a brighter lower part (a crude "eyes over cheeks"
/// pattern) plus noise; negatives are smoothed random textures.
pub fn gen_image_windows(
    m1: usize,
    m2: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Dataset> {
    check_counts(m1, m2)?;
    if width < 2 || height < 2 {
        return Err(Error::invalid("image windows must be at least 2x2"));
    }
    let mut rng = SeededRng::new(seed, Stream::ImageData);
    let mut images = Vec::with_capacity(m1 + m2);
    for i in 0..m1 + m2 {
        let mut px = vec![0u8; width * height];
        if i < m1 {
            let base = 90.0 + 60.0 * rng.uniform();
            for r in 0..height {
                for c in 0..width {
                    let band = if r >= height / 6 && r < height / 3 + 1 {
                        -60.0
                    } else {
                        30.0
                    };
                    let v = base + band + 20.0 * rng.normal();
                    px[r * width + c] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        } else {
            let raw: Vec<f64> = (0..width * height).map(|_| 255.0 * rng.uniform()).collect();
            for r in 0..height {
                for c in 0..width {
                    let mut acc = 0.0;
                    let mut n = 0.0;
                    for dr in r.saturating_sub(1)..(r + 2).min(height) {
                        for dc in c.saturating_sub(1)..(c + 2).min(width) {
                            acc += raw[dr * width + dc];
                            n += 1.0;
                        }
                    }
                    px[r * width + c] = (acc / n).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        images.push(GrayImage::new(width, height, px)?);
    }
    Dataset::from_images(images, labels_for(m1, m2))
}

/// On-disk layouts understood by [`load_dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Pgm,
}

impl DatasetFormat {
    /// Directories are PGM collections; anything else is CSV.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            DatasetFormat::Pgm
        } else {
            DatasetFormat::Csv
        }
    }
}

pub fn parse_label(token: &str) -> Option<Label> {
    match token.trim() {
        "+1" | "1" => Some(Label::Positive),
        "-1" | "\u{2212}1" => Some(Label::Negative),
        _ => None,
    }
}

fn label_token(l: Label) -> &'static str {
    match l {
        Label::Positive => "+1",
        Label::Negative => "-1",
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn load_dataset(path: &Path, format: Option<DatasetFormat>) -> Result<Dataset> {
    match format.unwrap_or_else(|| DatasetFormat::detect(path)) {
        DatasetFormat::Csv => load_csv(path),
        DatasetFormat::Pgm => load_pgm_dir(path),
    }
}

/// Writes CSV for feature datasets and a PGM directory for image datasets.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    match dataset.samples() {
        Samples::Features(_) => save_csv(dataset, path),
        Samples::Images(set) => save_pgm_dir(set.images(), dataset.labels(), path),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_error(path, line, e.to_string())
}

fn load_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for rec in csv_reader(&text).records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let label = parse_label(&rec[0]).ok_or_else(|| {
            parse_error(
                path,
                line,
                format!("label must be +1, 1, -1 or \u{2212}1, found {:?}", &rec[0]),
            )
        })?;
        let features = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(k, tok)| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_error(
                            path,
                            line,
                            format!("column {}: not a finite number: {tok:?}", k + 2),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if features.is_empty() {
            return Err(parse_error(path, line, "row has a label but no features"));
        }
        match width {
            None => width = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(parse_error(
                    path,
                    line,
                    format!("expected {w} features, found {}", features.len()),
                ))
            }
            _ => {}
        }
        rows.push(features);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 0, "no data rows"));
    }
    Dataset::from_features(&rows, labels)
}

fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for i in 0..dataset.len() {
        write!(out, "{}", label_token(dataset.label(i)))?;
        for j in 0..dataset.num_features() {
            // `Display` for f64 prints the shortest string that parses back
            // to the same value.
            write!(out, ",{}", dataset.feature_value(i, j))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a binary PGM (`P5`, maxval 255).
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut pos = 0usize;
    let mut line = 1usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // Skip whitespace and comments.
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                b'\n' => {
                    line += 1;
                    pos += 1;
                }
                b if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(parse_error(path, line, "truncated PGM header"));
        }
        tokens.push((
            String::from_utf8_lossy(&bytes[start..pos]).into_owned(),
            line,
        ));
    }
    if tokens[0].0 != "P5" {
        return Err(parse_error(
            path,
            tokens[0].1,
            format!("expected binary PGM magic P5, found {:?}", tokens[0].0),
        ));
    }
    let number = |k: usize, what: &str| -> Result<usize> {
        tokens[k].0.parse::<usize>().map_err(|_| {
            parse_error(
                path,
                tokens[k].1,
                format!("invalid {what} {:?}", tokens[k].0),
            )
        })
    };
    let width = number(1, "width")?;
    let height = number(2, "height")?;
    let maxval = number(3, "maxval")?;
    if maxval != 255 {
        return Err(parse_error(
            path,
            tokens[3].1,
            format!("only 8-bit PGM with maxval 255 is supported, found maxval {maxval}"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(parse_error(
            path,
            line,
            "missing whitespace after PGM header",
        ));
    }
    pos += 1;
    let need = width * height;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(parse_error(
            path,
            line,
            format!("raster has {} bytes, expected {need}", raster.len()),
        ));
    }
    GrayImage::new(width, height, raster[..need].to_vec())
}

pub fn write_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height())?;
    out.write_all(image.pixels())?;
    out.flush()?;
    Ok(())
}

fn load_pgm_dir(dir: &Path) -> Result<Dataset> {
    let manifest = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&manifest)?;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for rec in csv_reader(&text).records() {
        let rec = rec.map_err(|e| csv_error(&manifest, e))?;
        let line = record_line(&rec);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_error(
                &manifest,
                line,
                format!("expected filename,label, found {} fields", rec.len()),
            ));
        }
        let label = parse_label(&rec[1]).ok_or_else(|| {
            parse_error(
                &manifest,
                line,
                format!("label must be +1, 1, -1 or \u{2212}1, found {:?}", &rec[1]),
            )
        })?;
        let file = dir.join(&rec[0]);
        let bytes = fs::read(&file)?;
        images.push(parse_pgm(&bytes, &file)?);
        labels.push(label);
    }
    if images.is_empty() {
        return Err(parse_error(&manifest, 0, "manifest lists no images"));
    }
    Dataset::from_images(images, labels)
}

fn save_pgm_dir(images: &[GrayImage], labels: &[Label], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = BufWriter::new(fs::File::create(dir.join(MANIFEST_NAME))?);
    for (i, (im, l)) in images.iter().zip(labels).enumerate() {
        let name = format!("{i:06}.pgm");
        write_pgm(im, &dir.join(&name))?;
        writeln!(manifest, "{name},{}", label_token(*l))?;
    }
    manifest.flush()?;
    Ok(())
}

/// Generator provenance written next to generated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMetadata {
    pub generator: String,
    pub seed: u64,
    pub params: serde_json::Value,
}

/// `data.csv` → `data.csv.meta.json`; `pool/` → `pool/meta.json`.
pub fn metadata_path(data_path: &Path) -> PathBuf {
    if data_path.is_dir() {
        data_path.join("meta.json")
    } else {
        let mut name = data_path
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".meta.json");
        data_path.with_file_name(name)
    }
}

pub fn write_metadata(data_path: &Path, meta: &GeneratorMetadata) -> Result<PathBuf> {
    let path = metadata_path(data_path);
    fs::write(&path, serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn toy_rejects_empty_class() {
        assert!(gen_toy_2d(0, 5, 1).is_err());
        assert!(gen_toy_2d(5, 0, 1).is_err());
    }

    #[test]
    fn toy_is_deterministic_to_the_byte() {
        let dir = temp();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        save_dataset(&gen_toy_2d(30, 90, 7).unwrap(), &a).unwrap();
        save_dataset(&gen_toy_2d(30, 90, 7).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let c = dir.path().join("c.csv");
        save_dataset(&gen_toy_2d(30, 90, 8).unwrap(), &c).unwrap();
        assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    }

    #[test]
    fn toy_class_means_are_separated() {
        let d = gen_toy_2d(400, 1200, 3).unwrap();
        for j in 0..2 {
            let stats = |label: Label| {
                let v: Vec<f64> = d
                    .indices_with(label)
                    .iter()
                    .map(|&i| d.feature_value(i, j))
                    .collect();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
                (mean, var, v.len() as f64)
            };
            let (m_p, v_p, n_p) = stats(Label::Positive);
            let (m_n, v_n, n_n) = stats(Label::Negative);
            let pooled = (((n_p - 1.0) * v_p + (n_n - 1.0) * v_n) / (n_p + n_n - 2.0)).sqrt();
            assert!((m_n - m_p).abs() >= pooled, "coordinate {j}");
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = temp();
        let path = dir.path().join("g.csv");
        let d = gen_gaussian(
            &GaussianSpec {
                m1: 5,
                m2: 7,
                dim: 3,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        save_dataset(&d, &path).unwrap();
        let back = load_dataset(&path, None).unwrap();
        assert_eq!(back.labels(), d.labels());
        for i in 0..d.len() {
            for j in 0..3 {
                assert_eq!(
                    back.feature_value(i, j).to_bits(),
                    d.feature_value(i, j).to_bits()
                );
            }
        }
    }

    #[test]
    fn csv_label_tokens() {
        let dir = temp();
        let path = dir.path().join("l.csv");
        fs::write(&path, "+1,0.5\n1,1\n-1,2\n\u{2212}1,3\n").unwrap();
        let d = load_dataset(&path, None).unwrap();
        assert_eq!(d.num_positives(), 2);
        assert_eq!(d.num_negatives(), 2);
        fs::write(&path, "+1,0.5\n0,1\n").unwrap();
        match load_dataset(&path, None) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("label"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_reports_bad_numbers_and_ragged_rows() {
        let dir = temp();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "+1,0.5,1\n-1,abc,2\n").unwrap();
        assert!(matches!(
            load_dataset(&path, None),
            Err(Error::Parse { line: 2, .. })
        ));
        fs::write(&path, "+1,0.5,1\n-1,2\n").unwrap();
        assert!(matches!(
            load_dataset(&path, None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn pgm_round_trip() {
        let dir = temp();
        let d = gen_image_windows(3, 4, 6, 5, 2).unwrap();
        let out = dir.path().join("imgs");
        save_dataset(&d, &out).unwrap();
        let back = load_dataset(&out, None).unwrap();
        assert_eq!(back.labels(), d.labels());
        let (Samples::Images(a), Samples::Images(b)) = (d.samples(), back.samples()) else {
            panic!("expected image datasets");
        };
        assert_eq!(a.images(), b.images());
    }

    #[test]
    fn pgm_rejects_other_maxval() {
        let err = parse_pgm(b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0", Path::new("x.pgm")).unwrap_err();
        match err {
            Error::Parse { message, line, .. } => {
                assert!(message.contains("maxval 255"), "{message}");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_pgm(b"P2\n2 2\n255\n1 2 3 4", Path::new("x.pgm")).is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01", Path::new("x.pgm")).is_err());
    }

    #[test]
    fn pgm_header_comments() {
        let im = parse_pgm(
            b"P5\n# made by hand\n2 1\n255\n\x07\x09",
            Path::new("c.pgm"),
        )
        .unwrap();
        assert_eq!(im.pixels(), &[7, 9]);
    }

    #[test]
    fn node_stream_all_pass() {
        let t = gen_node_stream(&[1.0; 5], &[0.0; 5], 1000, 10, 1).unwrap();
        assert_eq!(t.positives.final_survivors(), 1000);
        assert_eq!(t.positives.pass_rate(), 1.0);
        assert_eq!(t.negatives.survivors, vec![0; 5]);
        assert!(gen_node_stream(&[1.0], &[0.5, 0.5], 1, 1, 1).is_err());
        assert!(gen_node_stream(&[1.5], &[0.5], 1, 1, 1).is_err());
    }

    #[test]
    fn generators_are_pure() {
        let s = GaussianSpec::default();
        let a = gen_gaussian(&s, 9).unwrap();
        let b = gen_gaussian(&s, 9).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.feature_value(i, 3), b.feature_value(i, 3));
        }
        let c = gen_cascade_task(10, 20, 4, 8.0, 5).unwrap();
        let d = gen_cascade_task(10, 20, 4, 8.0, 5).unwrap();
        assert_eq!(c.feature_value(25, 2), d.feature_value(25, 2));
    }

    #[test]
    fn metadata_sidecar() {
        let dir = temp();
        let data = dir.path().join("toy.csv");
        let meta = GeneratorMetadata {
            generator: "toy-2d".into(),
            seed: 3,
            params: serde_json::json!({"m1": 10, "m2": 30}),
        };
        let p = write_metadata(&data, &meta).unwrap();
        assert_eq!(p.file_name().unwrap(), "toy.csv.meta.json");
        let back: GeneratorMetadata =
            serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(back, meta);
    }
}
