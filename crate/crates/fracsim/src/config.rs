//! Experiment configuration: a flat, line-oriented `key = value` format with
//! `[section]` headers. Parsing is strict: unknown sections or keys, missing
//! required keys, and out-of-range values all fail before any computation,
//! with messages naming the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolver::{RunConfig, Scheme};
use crate::fraccalc::FracOrder;
use crate::grid::{BoundaryMode, Grid1D, GridFunction};
use crate::model::PhysicalParams;

/// External potential, sampled onto the grid when the run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    None,
    /// V(x) = k x^2 / 2.
    Harmonic { k: f64 },
}

/// Initial wave function.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    PlaneWave {
        k: f64,
    },
    /// Normalized Gaussian packet exp(i k x) (pi w^2)^(-1/4) exp(-(x-c)^2/(2w^2)).
    Gaussian {
        center: f64,
        width: f64,
        k: f64,
    },
    /// CSV with one `re,im` pair per grid point (optional header line).
    FromFile {
        path: PathBuf,
    },
}

/// Diagnostic toggles and their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub continuity: bool,
    pub bohm: bool,
    pub kg_residual: bool,
    pub trajectory_seeds: Vec<f64>,
    /// Node threshold relative to max R.
    pub eps_r_rel: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            continuity: false,
            bohm: false,
            kg_residual: false,
            trajectory_seeds: Vec::new(),
            eps_r_rel: crate::bohm::DEFAULT_EPS_R_REL,
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub grid: Grid1D,
    pub hbar: f64,
    pub mass: f64,
    pub c: f64,
    pub m_x_alpha: f64,
    pub alpha: FracOrder,
    pub beta: FracOrder,
    pub include_relativistic: bool,
    pub potential: PotentialSpec,
    pub initial: InitialCondition,
    pub run: RunConfig,
    pub diagnostics: Diagnostics,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = split_sections(text)?;

        let mut grid_s = sections.take("grid")?;
        let x0 = grid_s.f64("x0")?;
        let h = grid_s.f64("h")?;
        let n = grid_s.usize("n")?;
        let boundary = match grid_s.str("boundary")?.as_str() {
            "periodic" => BoundaryMode::Periodic,
            "zero_extension" => BoundaryMode::ZeroExtension,
            other => {
                return Err(Error::Config(format!(
                    "grid.boundary: expected periodic or zero_extension, got {other:?}"
                )))
            }
        };
        grid_s.finish()?;
        let grid = Grid1D::new(x0, h, n)?;

        let mut phys = sections.take("physics")?;
        let hbar = phys.f64("hbar")?;
        let mass = phys.f64("mass")?;
        let c = phys.f64("c")?;
        let m_x_alpha = phys.f64("m_x_alpha")?;
        let alpha = FracOrder::new(phys.f64("alpha")?)?;
        let beta = FracOrder::new(phys.f64("beta")?)?;
        let include_relativistic = phys.bool_or("relativistic", true)?;
        let potential = match phys.str_or("potential", "none")?.as_str() {
            "none" => PotentialSpec::None,
            "harmonic" => PotentialSpec::Harmonic {
                k: phys.f64("potential_k")?,
            },
            other => {
                return Err(Error::Config(format!(
                    "physics.potential: expected none or harmonic, got {other:?}"
                )))
            }
        };
        phys.finish()?;

        let mut init = sections.take("initial")?;
        let initial = match init.str("kind")?.as_str() {
            "plane_wave" => InitialCondition::PlaneWave { k: init.f64("k")? },
            "gaussian" => InitialCondition::Gaussian {
                center: init.f64("center")?,
                width: init.f64("width")?,
                k: init.f64_or("k", 0.0)?,
            },
            "from_file" => InitialCondition::FromFile {
                path: PathBuf::from(init.str("path")?),
            },
            other => {
                return Err(Error::Config(format!(
                    "initial.kind: expected plane_wave, gaussian, or from_file, got {other:?}"
                )))
            }
        };
        init.finish()?;

        let mut run_s = sections.take("run")?;
        let scheme = match run_s.str("scheme")?.as_str() {
            "integer_cn" => Scheme::IntegerCn,
            "frac_explicit" => Scheme::FracExplicit,
            other => {
                return Err(Error::Config(format!(
                    "run.scheme: expected integer_cn or frac_explicit, got {other:?}"
                )))
            }
        };
        let run = RunConfig {
            dt: run_s.f64("dt")?,
            t_final: run_s.f64("t_final")?,
            snapshot_stride: run_s.usize_or("snapshot_stride", 1)?,
            memory_truncation: run_s.usize_or("memory_truncation", 0)?,
            scheme,
            mode: boundary,
            conjugate: run_s.bool_or("conjugate", false)?,
        };
        run_s.finish()?;

        let mut diagnostics = Diagnostics::default();
        if let Some(mut diag) = sections.take_optional("diagnostics") {
            diagnostics.continuity = diag.bool_or("continuity", false)?;
            diagnostics.bohm = diag.bool_or("bohm", false)?;
            diagnostics.kg_residual = diag.bool_or("kg_residual", false)?;
            diagnostics.eps_r_rel = diag.f64_or("eps_r", crate::bohm::DEFAULT_EPS_R_REL)?;
            if let Some(seeds) = diag.str_optional("trajectories")? {
                for part in seeds.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    let v: f64 = part.parse().map_err(|_| {
                        Error::Config(format!(
                            "diagnostics.trajectories: bad seed {part:?}"
                        ))
                    })?;
                    diagnostics.trajectory_seeds.push(v);
                }
            }
            diag.finish()?;
        }

        let mut out = sections.take("output")?;
        let output_dir = PathBuf::from(out.str("dir")?);
        out.finish()?;

        sections.finish()?;

        let cfg = ExperimentConfig {
            grid,
            hbar,
            mass,
            c,
            m_x_alpha,
            alpha,
            beta,
            include_relativistic,
            potential,
            initial,
            run,
            diagnostics,
            output_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate(self.beta)?;
        if let PotentialSpec::Harmonic { k } = self.potential {
            if !k.is_finite() {
                return Err(Error::Config("physics.potential_k: not finite".into()));
            }
        }
        if self.diagnostics.eps_r_rel <= 0.0 || !self.diagnostics.eps_r_rel.is_finite() {
            return Err(Error::Config("diagnostics.eps_r: must be positive".into()));
        }
        let xmin = self.grid.x0();
        let xmax = self.grid.x(self.grid.n() - 1);
        for &s in &self.diagnostics.trajectory_seeds {
            if !(xmin..=xmax).contains(&s) {
                return Err(Error::Config(format!(
                    "diagnostics.trajectories: seed {s} outside [{xmin}, {xmax}]"
                )));
            }
        }
        if let InitialCondition::Gaussian { width, .. } = self.initial {
            if width <= 0.0 {
                return Err(Error::Config("initial.width: must be positive".into()));
            }
        }
        self.build_params()?.validate()
    }

    /// Physical parameters with the potential sampled on the grid.
    pub fn build_params(&self) -> Result<PhysicalParams> {
        let potential = match self.potential {
            PotentialSpec::None => GridFunction::zeros(self.grid),
            PotentialSpec::Harmonic { k } => {
                GridFunction::from_real_fn(self.grid, move |x| 0.5 * k * x * x)
            }
        };
        let p = PhysicalParams {
            hbar: self.hbar,
            mass: self.mass,
            c: self.c,
            m_x_alpha: self.m_x_alpha,
            alpha: self.alpha,
            beta: self.beta,
            potential,
            include_relativistic: self.include_relativistic,
        };
        p.validate()?;
        Ok(p)
    }

    /// The initial wave function sampled on the grid.
    pub fn build_initial(&self) -> Result<GridFunction> {
        let psi = match &self.initial {
            InitialCondition::PlaneWave { k } => {
                let k = *k;
                GridFunction::from_fn(self.grid, move |x| Complex64::new(0.0, k * x).exp())
            }
            InitialCondition::Gaussian { center, width, k } => {
                let (c0, w, k) = (*center, *width, *k);
                let norm = (std::f64::consts::PI * w * w).powf(-0.25);
                GridFunction::from_fn(self.grid, move |x| {
                    let u = x - c0;
                    norm * (-u * u / (2.0 * w * w)).exp() * Complex64::new(0.0, k * x).exp()
                })
            }
            InitialCondition::FromFile { path } => read_wavefunction(path, self.grid)?,
        };
        psi.check_finite()?;
        Ok(psi)
    }

    /// Round-trippable echo of the resolved configuration, in the same
    /// format the parser accepts.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "x0 = {}", self.grid.x0());
        let _ = writeln!(s, "h = {}", self.grid.h());
        let _ = writeln!(s, "n = {}", self.grid.n());
        let boundary = match self.run.mode {
            BoundaryMode::Periodic => "periodic",
            BoundaryMode::ZeroExtension => "zero_extension",
        };
        let _ = writeln!(s, "boundary = {boundary}");
        let _ = writeln!(s, "\n[physics]");
        let _ = writeln!(s, "hbar = {}", self.hbar);
        let _ = writeln!(s, "mass = {}", self.mass);
        let _ = writeln!(s, "c = {}", self.c);
        let _ = writeln!(s, "m_x_alpha = {}", self.m_x_alpha);
        let _ = writeln!(s, "alpha = {}", self.alpha.value());
        let _ = writeln!(s, "beta = {}", self.beta.value());
        let _ = writeln!(s, "relativistic = {}", self.include_relativistic);
        match self.potential {
            PotentialSpec::None => {
                let _ = writeln!(s, "potential = none");
            }
            PotentialSpec::Harmonic { k } => {
                let _ = writeln!(s, "potential = harmonic");
                let _ = writeln!(s, "potential_k = {k}");
            }
        }
        let _ = writeln!(s, "\n[initial]");
        match &self.initial {
            InitialCondition::PlaneWave { k } => {
                let _ = writeln!(s, "kind = plane_wave");
                let _ = writeln!(s, "k = {k}");
            }
            InitialCondition::Gaussian { center, width, k } => {
                let _ = writeln!(s, "kind = gaussian");
                let _ = writeln!(s, "center = {center}");
                let _ = writeln!(s, "width = {width}");
                let _ = writeln!(s, "k = {k}");
            }
            InitialCondition::FromFile { path } => {
                let _ = writeln!(s, "kind = from_file");
                let _ = writeln!(s, "path = {}", path.display());
            }
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "dt = {}", self.run.dt);
        let _ = writeln!(s, "t_final = {}", self.run.t_final);
        let _ = writeln!(s, "snapshot_stride = {}", self.run.snapshot_stride);
        let _ = writeln!(s, "memory_truncation = {}", self.run.memory_truncation);
        let scheme = match self.run.scheme {
            Scheme::IntegerCn => "integer_cn",
            Scheme::FracExplicit => "frac_explicit",
        };
        let _ = writeln!(s, "scheme = {scheme}");
        let _ = writeln!(s, "conjugate = {}", self.run.conjugate);
        let _ = writeln!(s, "\n[diagnostics]");
        let _ = writeln!(s, "continuity = {}", self.diagnostics.continuity);
        let _ = writeln!(s, "bohm = {}", self.diagnostics.bohm);
        let _ = writeln!(s, "kg_residual = {}", self.diagnostics.kg_residual);
        let _ = writeln!(s, "eps_r = {}", self.diagnostics.eps_r_rel);
        if !self.diagnostics.trajectory_seeds.is_empty() {
            let seeds: Vec<String> = self
                .diagnostics
                .trajectory_seeds
                .iter()
                .map(|v| v.to_string())
                .collect();
            let _ = writeln!(s, "trajectories = {}", seeds.join(", "));
        }
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output_dir.display());
        s
    }
}

fn read_wavefunction(path: &Path, grid: Grid1D) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut vals = Vec::with_capacity(grid.n());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 && line.chars().any(|c| c.is_alphabetic()) {
            continue; // header
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        // either `re,im` or `x,re,im`
        let (re_s, im_s) = match cols.len() {
            2 => (cols[0], cols[1]),
            3 => (cols[1], cols[2]),
            _ => {
                return Err(Error::Config(format!(
                    "{}: line {}: expected 2 or 3 columns",
                    path.display(),
                    i + 1
                )))
            }
        };
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| {
                Error::Config(format!("{}: line {}: bad number {s:?}", path.display(), i + 1))
            })
        };
        vals.push(Complex64::new(parse(re_s)?, parse(im_s)?));
    }
    if vals.len() != grid.n() {
        return Err(Error::Config(format!(
            "{}: expected {} samples, found {}",
            path.display(),
            grid.n(),
            vals.len()
        )));
    }
    GridFunction::new(grid, vals)
}

struct Section {
    name: &'static str,
    entries: BTreeMap<String, (String, usize)>,
}

impl Section {
    fn get(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn str(&mut self, key: &str) -> Result<String> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key {}.{key}", self.name)))
    }

    fn str_or(&mut self, key: &str, default: &str) -> Result<String> {
        Ok(self.get(key).unwrap_or_else(|| default.to_string()))
    }

    fn str_optional(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.get(key))
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let raw = self.str(key)?;
        self.parse_f64(key, &raw)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(raw) => self.parse_f64(key, &raw),
            None => Ok(default),
        }
    }

    fn parse_f64(&self, key: &str, raw: &str) -> Result<f64> {
        let v: f64 = raw.parse().map_err(|_| {
            Error::Config(format!("{}.{key}: bad number {raw:?}", self.name))
        })?;
        if !v.is_finite() {
            return Err(Error::Config(format!("{}.{key}: not finite", self.name)));
        }
        Ok(v)
    }

    fn usize(&mut self, key: &str) -> Result<usize> {
        let raw = self.str(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("{}.{key}: bad integer {raw:?}", self.name)))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("{}.{key}: bad integer {raw:?}", self.name))),
            None => Ok(default),
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some(raw) => match raw.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(Error::Config(format!(
                    "{}.{key}: expected true or false, got {other:?}",
                    self.name
                ))),
            },
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(Error::Config(format!(
                "unknown key {}.{key} (line {line})",
                self.name
            )));
        }
        Ok(())
    }
}

struct Sections {
    map: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

const KNOWN_SECTIONS: &[&str] = &["grid", "physics", "initial", "run", "diagnostics", "output"];

impl Sections {
    fn take(&mut self, name: &'static str) -> Result<Section> {
        let entries = self
            .map
            .remove(name)
            .ok_or_else(|| Error::Config(format!("missing required section [{name}]")))?;
        Ok(Section { name, entries })
    }

    fn take_optional(&mut self, name: &'static str) -> Option<Section> {
        self.map.remove(name).map(|entries| Section { name, entries })
    }

    fn finish(self) -> Result<()> {
        if let Some((name, _)) = self.map.into_iter().next() {
            return Err(Error::Config(format!("unknown section [{name}]")));
        }
        Ok(())
    }
}

fn split_sections(text: &str) -> Result<Sections> {
    let mut map: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {line_no}: malformed section header")))?
                .trim()
                .to_string();
            if !KNOWN_SECTIONS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown section [{name}] (line {line_no})")));
            }
            if map.contains_key(&name) {
                return Err(Error::Config(format!(
                    "duplicate section [{name}] (line {line_no})"
                )));
            }
            map.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {line_no}: expected key = value")));
        };
        let section = current
            .as_ref()
            .ok_or_else(|| Error::Config(format!("line {line_no}: key before any section")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entries = map.get_mut(section).unwrap();
        if entries.insert(key.clone(), (value, line_no)).is_some() {
            return Err(Error::Config(format!(
                "duplicate key {section}.{key} (line {line_no})"
            )));
        }
    }
    Ok(Sections { map })
}
