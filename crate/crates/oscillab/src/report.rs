//! Output plumbing: CSV files, a minimal self-contained SVG log-log plot
//! writer, and the run manifest listing every output file with its hash.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub config: toml::Value,
    pub files: Vec<ManifestFile>,
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<ManifestFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, content: &str) -> std::io::Result<PathBuf> {
        let path = self.root.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(content.as_bytes())?;
        let mut hasher = Sha256::new();
        hasher.update(content.as_bytes());
        self.written.push(ManifestFile {
            name: name.to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(path)
    }

    /// Write manifest.json covering every file written so far.
    pub fn finish(mut self, config: toml::Value, seed: u64) -> std::io::Result<()> {
        let manifest = Manifest {
            tool: "oscillab".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config,
            files: std::mem::take(&mut self.written),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.root.join("manifest.json");
        std::fs::write(path, text)
    }
}

/// Minimal log-log SVG plot: decade grid, one polyline with point markers.
/// Non-positive values are dropped (they cannot appear on a log axis).
pub fn svg_loglog(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        title
    ));
    if pts.is_empty() {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">all values at or below zero; nothing to plot</text>\n</svg>\n",
            w / 2.0,
            h / 2.0
        ));
        return s;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    // expand to whole decades
    let x0 = x0.floor();
    let x1 = x1.ceil().max(x0 + 1.0);
    let y0 = y0.floor();
    let y1 = y1.ceil().max(y0 + 1.0);
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    // decade grid and tick labels
    let mut d = x0;
    while d <= x1 + 1e-9 {
        let px = sx(d);
        s.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{mt}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n",
            h - mb
        ));
        s.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1e{d:.0}</text>\n",
            h - mb + 18.0
        ));
        d += 1.0;
    }
    let mut d = y0;
    while d <= y1 + 1e-9 {
        let py = sy(d);
        s.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n",
            w - mr
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{py:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e{d:.0}</text>\n",
            ml - 6.0
        ));
        d += 1.0;
    }
    // axes
    s.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    s.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        h - mb
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        (ml + w - mr) / 2.0,
        h - 10.0,
        xlabel
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0,
        ylabel
    ));
    // polyline and markers
    let path: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\"/>\n",
        path.join(" ")
    ));
    for &(x, y) in &pts {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f6fb2\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    s.push_str("</svg>\n");
    s
}
