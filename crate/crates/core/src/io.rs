//! Config files, CSV tables, state snapshots and run manifests.
//!
//! Config files are TOML with the sections `model`, `background`, `packets`,
//! `evolution`, `spectrum`, `analysis` and `output`; every command reads only
//! the sections it needs. Tables are UTF-8 CSV with a header row, `.` as the
//! decimal point and half-integer lattice positions written as decimals.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hilbert::{build_sector_basis, StateVector, BIT_ORDER_TAG};
use crate::info_lattice::{info_per_scale, InfoLattice, ScaleProfile};
use crate::protocols::{
    EvolutionConfig, ScatteringConfig, ScatteringRun, SpectrumConfig, SpectrumRun, StringConfig,
    StringRun, TimeSeries,
};
use crate::schwinger::{ChargeBackground, ModelParams};
use crate::spectral::LanczosOptions;
use crate::C64;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketsSection {
    pub k: f64,
    #[serde(default)]
    pub k_right: Option<f64>,
    #[serde(default)]
    pub j_left: Option<usize>,
    #[serde(default)]
    pub j_right: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub sector: Option<i32>,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub lanczos: Option<LanczosOptions>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub ell_max: Option<usize>,
    pub cut_n: Option<(f64, f64)>,
    pub cut_t: Option<(f64, f64)>,
    pub field_links: Option<(usize, usize)>,
    pub info_n: Option<(f64, f64)>,
    pub peak_exclude_below: Option<usize>,
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Parsed config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelParams,
    #[serde(default)]
    pub background: Option<ChargeBackground>,
    #[serde(default)]
    pub packets: Option<PacketsSection>,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub analysis: Option<AnalysisSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn analysis(&self) -> AnalysisSection {
        self.analysis.clone().unwrap_or_default()
    }

    pub fn spectrum_config(&self) -> Result<SpectrumConfig> {
        let sec = self.spectrum.clone().unwrap_or_default();
        let mut cfg = SpectrumConfig::new(self.model, sec.levels.unwrap_or(10));
        cfg.sector = sec.sector;
        cfg.shift = sec.shift;
        if let Some(l) = sec.lanczos {
            cfg.lanczos = l;
        }
        if let Some(seed) = self.output.seed {
            cfg.lanczos.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scattering_config(&self) -> Result<ScatteringConfig> {
        let p = self
            .packets
            .as_ref()
            .ok_or_else(|| Error::Config("scattering needs a [packets] section".into()))?;
        let mut cfg = ScatteringConfig::desk(p.k);
        cfg.model = self.model;
        cfg.k_right = p.k_right;
        if let Some(j) = p.j_left {
            cfg.j_left = j;
        }
        if let Some(j) = p.j_right {
            cfg.j_right = j;
        }
        if let Some(s) = p.sigma {
            cfg.sigma = s;
        }
        if let Some(e) = self.evolution {
            cfg.evolution = e;
        }
        let a = self.analysis();
        cfg.ell_max = a.ell_max;
        if let Some(c) = a.cut_n {
            cfg.cut_n = c;
        }
        if let Some(c) = a.cut_t {
            cfg.cut_t = c;
        }
        cfg.snapshot_times = a.snapshot_times;
        if let Some(seed) = self.output.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn string_config(&self) -> Result<StringConfig> {
        let bg = self
            .background
            .ok_or_else(|| Error::Config("string quench needs a [background] section".into()))?;
        let mut cfg = StringConfig::desk(self.model.ga, bg.q);
        cfg.model = self.model;
        cfg.background = bg;
        if let Some(e) = self.evolution {
            cfg.evolution = e;
        }
        let a = self.analysis();
        cfg.ell_max = a.ell_max;
        if let Some(f) = a.field_links {
            cfg.field_links = f;
        }
        if let Some(w) = a.info_n {
            cfg.info_n = w;
        }
        if let Some(p) = a.peak_exclude_below {
            cfg.peak_exclude_below = p;
        }
        cfg.snapshot_times = a.snapshot_times;
        if let Some(seed) = self.output.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Decimal formatting shared by every table: shortest round-trip digits,
/// switching to exponent form for very small or very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Lattice position `n` written with one decimal.
pub fn fmt_position(n: f64) -> String {
    format!("{n:.1}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Renders a CSV table to bytes.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::ShapeMismatch(format!(
                "row with {} fields under a {}-column header",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row).map_err(to_io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Output directory that remembers a checksum for every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let bytes = csv_bytes(header, rows)?;
        self.write_bytes(name, &bytes)
    }

    /// Output directory for `prefix/` below this one.
    pub fn child(&self, prefix: &str) -> Result<OutputDir> {
        OutputDir::create(&self.root.join(prefix))
    }

    /// Records the files of a child created with [`OutputDir::child`].
    pub fn absorb(&mut self, prefix: &str, child: OutputDir) {
        for f in child.files {
            let path = format!("{prefix}/{}", f.path);
            self.files.retain(|g| g.path != path);
            self.files.push(FileRecord { path, ..f });
        }
    }
}

/// Per-run metadata written next to the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub git_hash: String,
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub wall_time_s: Option<f64>,
    pub complete: bool,
    pub error: Option<String>,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn now_rfc3339() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| "unknown".into())
}

/// Short commit hash of the working directory, or `"unknown"`.
pub fn git_hash() -> String {
    Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

impl RunManifest {
    /// Manifest for a run that has started but not finished.
    pub fn begin<C: Serialize>(command: &str, config: &C) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            git_hash: git_hash(),
            config: serde_json::to_value(config)
                .map_err(|e| Error::Config(format!("config echo failed: {e}")))?,
            started_at: now_rfc3339(),
            finished_at: None,
            wall_time_s: None,
            complete: false,
            error: None,
            files: Vec::new(),
        })
    }

    pub fn finish(&mut self, out: &OutputDir, wall_time_s: f64, complete: bool, error: Option<String>) {
        self.finished_at = Some(now_rfc3339());
        self.wall_time_s = Some(wall_time_s);
        self.complete = complete;
        self.error = error;
        self.files = out.files().to_vec();
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(|e| Error::StateFile(format!("manifest: {e}")))
    }

    /// Files whose current checksum differs from the recorded one.
    pub fn stale_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match fs::read(dir.join(&f.path)) {
                Ok(bytes) => sha256_hex(&bytes) != f.sha256,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    n_sites: usize,
    sector: Option<i32>,
    bit_order: String,
    dim: usize,
    amplitudes: Vec<[f64; 2]>,
}

/// Largest accepted deviation of a stored state's norm from one.
pub const STATE_NORM_TOL: f64 = 1e-8;

pub fn state_to_json(state: &StateVector) -> String {
    let f = StateFile {
        n_sites: state.n_sites(),
        sector: state.basis().sector(),
        bit_order: BIT_ORDER_TAG.to_string(),
        dim: state.amplitudes().len(),
        amplitudes: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
    };
    serde_json::to_string(&f).expect("state serializes")
}

pub fn state_from_json(text: &str) -> Result<StateVector> {
    let f: StateFile = serde_json::from_str(text).map_err(|e| Error::StateFile(e.to_string()))?;
    if f.bit_order != BIT_ORDER_TAG {
        return Err(Error::StateFile(format!(
            "bit order {:?}, expected {BIT_ORDER_TAG:?}",
            f.bit_order
        )));
    }
    let basis = build_sector_basis(f.n_sites, f.sector).map_err(|e| Error::StateFile(e.to_string()))?;
    if f.dim != basis.dim() {
        return Err(Error::StateFile(format!(
            "declared dimension {} but the sector has {}",
            f.dim,
            basis.dim()
        )));
    }
    if f.amplitudes.len() != f.dim {
        return Err(Error::StateFile(format!(
            "{} amplitudes for dimension {}",
            f.amplitudes.len(),
            f.dim
        )));
    }
    let amps: Vec<C64> = f.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
    let state = StateVector::from_raw(basis, amps).map_err(|e| Error::StateFile(e.to_string()))?;
    let norm = state.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::StateFile(format!("state norm {norm} is not 1")));
    }
    Ok(state)
}

pub fn write_state(path: &Path, state: &StateVector) -> Result<()> {
    fs::write(path, state_to_json(state) + "\n")?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<StateVector> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::StateFile(format!("cannot read {}: {e}", path.display())))?;
    state_from_json(&text)
}

pub const LATTICE_HEADER: [&str; 4] = ["t", "n", "ell", "i"];
pub const PROFILE_HEADER: [&str; 3] = ["t", "ell", "value"];
pub const SPECTRUM_HEADER: [&str; 8] = [
    "index",
    "energy",
    "gap",
    "p2",
    "overlap_V",
    "overlap_S",
    "tag",
    "p_mean_squared",
];

pub fn lattice_rows(t: f64, lattice: &InfoLattice) -> Vec<Vec<String>> {
    lattice
        .iter()
        .map(|(label, v)| {
            vec![
                fmt_f64(t),
                fmt_position(label.n()),
                label.ell().to_string(),
                fmt_f64(v),
            ]
        })
        .collect()
}

pub fn profile_rows(t: f64, profile: &ScaleProfile) -> Vec<Vec<String>> {
    profile
        .values()
        .iter()
        .enumerate()
        .map(|(ell, v)| vec![fmt_f64(t), ell.to_string(), fmt_f64(*v)])
        .collect()
}

fn series_rows(series: &TimeSeries<Vec<f64>>) -> Vec<Vec<String>> {
    series
        .iter()
        .flat_map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(move |(k, v)| vec![fmt_f64(t), (k + 1).to_string(), fmt_f64(*v)])
        })
        .collect()
}

fn scalar_rows(series: &TimeSeries<f64>) -> Vec<Vec<String>> {
    series.iter().map(|(t, v)| vec![fmt_f64(t), fmt_f64(*v)]).collect()
}

fn write_snapshots(out: &mut OutputDir, snapshots: &TimeSeries<InfoLattice>) -> Result<()> {
    let mut lattice = Vec::new();
    let mut profiles = Vec::new();
    for (t, il) in snapshots.iter() {
        lattice.extend(lattice_rows(t, il));
        profiles.extend(profile_rows(t, &info_per_scale(il)));
    }
    out.write_csv("info_lattice.csv", &LATTICE_HEADER, &lattice)?;
    out.write_csv("info_per_scale.csv", &PROFILE_HEADER, &profiles)
}

fn write_profiles(out: &mut OutputDir, name: &str, series: &TimeSeries<ScaleProfile>) -> Result<()> {
    let rows: Vec<_> = series.iter().flat_map(|(t, p)| profile_rows(t, p)).collect();
    out.write_csv(name, &PROFILE_HEADER, &rows)
}

pub fn write_spectrum(out: &mut OutputDir, run: &SpectrumRun) -> Result<()> {
    let rows: Vec<_> = run
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            vec![
                i.to_string(),
                fmt_f64(l.energy),
                fmt_f64(l.gap),
                fmt_f64(l.p2),
                fmt_f64(l.overlap_v),
                fmt_f64(l.overlap_s),
                l.tag.as_str().to_string(),
                fmt_f64(l.p_mean_sq),
            ]
        })
        .collect();
    out.write_csv("spectrum.csv", &SPECTRUM_HEADER, &rows)
}

pub fn write_scattering(out: &mut OutputDir, run: &ScatteringRun) -> Result<()> {
    out.write_csv("entropy.csv", &["t", "n", "S"], &series_rows(&run.entropy))?;
    out.write_csv("energy.csv", &["t", "energy"], &scalar_rows(&run.energy))?;
    write_snapshots(out, &run.snapshots)?;
    write_profiles(out, "icut.csv", &run.cut_profile)
}

pub fn write_string(out: &mut OutputDir, run: &StringRun) -> Result<()> {
    let first = run.field.values.first().cloned().unwrap_or_default();
    let field: Vec<_> = run
        .field
        .iter()
        .flat_map(|(t, row)| {
            let first = &first;
            row.iter().enumerate().map(move |(k, v)| {
                vec![
                    fmt_f64(t),
                    (k + 1).to_string(),
                    fmt_f64(*v),
                    fmt_f64(v - first[k]),
                ]
            })
        })
        .collect();
    out.write_csv("field.csv", &["t", "n", "L", "dL"], &field)?;
    out.write_csv("entropy.csv", &["t", "n", "S"], &series_rows(&run.entropy))?;
    let energy: Vec<_> = run
        .energy
        .iter()
        .zip(&run.total_sz.values)
        .map(|((t, e), sz)| vec![fmt_f64(t), fmt_f64(*e), fmt_f64(*sz)])
        .collect();
    out.write_csv("energy.csv", &["t", "energy", "total_sz"], &energy)?;
    write_snapshots(out, &run.snapshots)?;
    write_profiles(out, "ibar.csv", &run.window_profile)?;
    out.write_csv("field_average.csv", &["t", "dLbar"], &scalar_rows(&run.field_shift))?;
    let peak: Vec<_> = run
        .peak
        .iter()
        .map(|(t, p)| vec![fmt_f64(t), p.map(|l| l.to_string()).unwrap_or_default()])
        .collect();
    out.write_csv("peak.csv", &["t", "ell_max"], &peak)
}

/// Lattice, scale profile and entropy profile of a single stored state.
pub fn write_state_analysis(
    out: &mut OutputDir,
    lattice: &InfoLattice,
    entropy: &[f64],
) -> Result<()> {
    out.write_csv("info_lattice.csv", &LATTICE_HEADER, &lattice_rows(0.0, lattice))?;
    out.write_csv(
        "info_per_scale.csv",
        &PROFILE_HEADER,
        &profile_rows(0.0, &info_per_scale(lattice)),
    )?;
    let rows: Vec<_> = entropy
        .iter()
        .enumerate()
        .map(|(k, s)| vec![(k + 1).to_string(), fmt_f64(*s)])
        .collect();
    out.write_csv("entropy.csv", &["n", "S"], &rows)
}
