//! Run configuration: a flat TOML file layered over an optional preset.
//!
//! Precedence, lowest first: built-in defaults, preset, config file, command
//! line flags. The resolved configuration is written back out in the same
//! flat format, so every run can be repeated from its `config.toml` alone.

use std::fs;
use std::path::{Path, PathBuf};

use hubbard_tunneling::dataset::SweepGrid;
use hubbard_tunneling::kan::KanConfig;
use hubbard_tunneling::presets::{self, PresetRun};
use hubbard_tunneling::system::{Barrier, Placement, SystemSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Every key accepted in a config file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,

    pub sites: Option<usize>,
    pub n_up: Option<usize>,
    pub n_down: Option<usize>,
    pub hopping: Option<f64>,
    pub interaction: Option<f64>,
    /// Sets the barrier to `(h/2, h)` unless both sides are given explicitly.
    pub barrier_height: Option<f64>,
    pub barrier_left: Option<f64>,
    pub barrier_right: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    /// Comma-separated placements such as `"1up,1down"`.
    pub initial_placement: Option<String>,

    pub interactions: Option<Vec<f64>>,
    pub heights: Option<Vec<f64>>,
    pub tunneling_only: Option<bool>,

    pub spline_knots: Option<usize>,

    pub kan_widths: Option<Vec<usize>>,
    pub kan_spline_order: Option<usize>,
    pub kan_grid_size: Option<usize>,
    pub kan_grid_counts_basis: Option<bool>,
    pub kan_learning_rate: Option<f64>,
    pub kan_epochs: Option<usize>,
    pub kan_iterations_per_epoch: Option<usize>,
    pub kan_history: Option<usize>,
    pub kan_base_blend: Option<bool>,
    pub kan_init_scale: Option<f64>,
    pub kan_folds: Option<usize>,

    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Values of `top` replace those of `self`. A barrier height in `top`
    /// without explicit sides resets both sides.
    pub fn overlay(&mut self, top: &ConfigFile) {
        if top.barrier_height.is_some() {
            self.barrier_left = None;
            self.barrier_right = None;
        }
        overlay!(self, top;
            preset, sites, n_up, n_down, hopping, interaction, barrier_height,
            barrier_left, barrier_right, t_max, samples, initial_placement,
            interactions, heights, tunneling_only, spline_knots,
            kan_widths, kan_spline_order, kan_grid_size, kan_grid_counts_basis,
            kan_learning_rate, kan_epochs, kan_iterations_per_epoch, kan_history,
            kan_base_blend, kan_init_scale, kan_folds, seed, workers, out_dir,
        );
    }

    fn from_spec(spec: &SystemSpec) -> Self {
        Self {
            sites: Some(spec.sites),
            n_up: Some(spec.n_up),
            n_down: Some(spec.n_down),
            hopping: Some(spec.hopping),
            interaction: Some(spec.interaction),
            barrier_left: Some(spec.barrier.left),
            barrier_right: Some(spec.barrier.right),
            t_max: Some(spec.t_max),
            samples: Some(spec.n_samples),
            initial_placement: Some(Placement::format_list(&spec.initial_placement)),
            ..Self::default()
        }
    }

    fn from_preset(name: &str) -> Result<Self, CliError> {
        let preset = presets::find(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset '{name}' (known: {})", presets::names().join(", ")))
        })?;
        Ok(match preset.run {
            PresetRun::Trajectory(spec) => Self::from_spec(&spec),
            PresetRun::Sweep { template, grid } => Self {
                interactions: Some(grid.interactions),
                heights: Some(grid.heights),
                tunneling_only: Some(grid.tunneling_only),
                ..Self::from_spec(&template)
            },
        })
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub spec: SystemSpec,
    pub grid: Option<SweepGrid>,
    pub spline_knots: usize,
    pub kan: KanConfig,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
    /// Resolved settings in config-file form, without workers and output dir.
    pub canonical: ConfigFile,
}

impl RunConfig {
    /// Resolves `file` (already merged with command-line overrides) on top
    /// of the defaults and the preset named in it.
    pub fn resolve(file: &ConfigFile) -> Result<Self, CliError> {
        let mut merged = Self::defaults();
        if let Some(name) = &file.preset {
            merged.overlay(&ConfigFile::from_preset(name)?);
        }
        merged.overlay(file);
        let m = &merged;
        let req = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Config(format!("missing key '{key}'")));

        let height = m.barrier_height;
        let barrier = match (m.barrier_left, m.barrier_right, height) {
            (Some(left), Some(right), _) => Barrier { left, right },
            (_, _, Some(h)) => Barrier::asymmetric(h),
            _ => return Err(CliError::Config("missing key 'barrier_height'".into())),
        };
        let initial_placement = Placement::parse_list(m.initial_placement.as_deref().unwrap_or(""))
            .map_err(|e| CliError::Config(format!("initial_placement: {e}")))?;
        let spec = SystemSpec {
            sites: m.sites.unwrap_or_default(),
            n_up: m.n_up.unwrap_or_default(),
            n_down: m.n_down.unwrap_or_default(),
            hopping: req(m.hopping, "hopping")?,
            interaction: req(m.interaction, "interaction")?,
            barrier,
            t_max: req(m.t_max, "t_max")?,
            n_samples: m.samples.unwrap_or_default(),
            initial_placement,
        };
        spec.validate().map_err(CliError::from)?;
        if spec.n_samples < 2 {
            return Err(CliError::Config(format!("samples must be at least 2, got {}", spec.n_samples)));
        }

        let grid = match (&m.interactions, &m.heights) {
            (None, None) => None,
            (Some(u), Some(h)) if !u.is_empty() && !h.is_empty() => Some(SweepGrid {
                interactions: u.clone(),
                heights: h.clone(),
                tunneling_only: m.tunneling_only.unwrap_or(false),
            }),
            _ => {
                return Err(CliError::Config(
                    "sweep grid needs non-empty 'interactions' and 'heights'".into(),
                ))
            }
        };
        if let Some(g) = &grid {
            if let Some(x) = g.interactions.iter().chain(&g.heights).find(|x| !x.is_finite()) {
                return Err(CliError::Config(format!("sweep grid value {x} is not finite")));
            }
        }

        let d = KanConfig::default();
        let kan = KanConfig {
            widths: m.kan_widths.clone().unwrap_or(d.widths),
            spline_order: m.kan_spline_order.unwrap_or(d.spline_order),
            grid_size: m.kan_grid_size.unwrap_or(d.grid_size),
            grid_counts_basis: m.kan_grid_counts_basis.unwrap_or(d.grid_counts_basis),
            learning_rate: m.kan_learning_rate.unwrap_or(d.learning_rate),
            epochs: m.kan_epochs.unwrap_or(d.epochs),
            iterations_per_epoch: m.kan_iterations_per_epoch.unwrap_or(d.iterations_per_epoch),
            history: m.kan_history.unwrap_or(d.history),
            seed: m.seed.unwrap_or(d.seed),
            base_blend: m.kan_base_blend.unwrap_or(d.base_blend),
            init_scale: m.kan_init_scale.unwrap_or(d.init_scale),
            folds: m.kan_folds.unwrap_or(d.folds),
        };
        kan.validate().map_err(CliError::from)?;

        let spline_knots = m.spline_knots.unwrap_or(hubbard_tunneling::curvefit::DEFAULT_INTERIOR_KNOTS);
        if m.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }

        let mut canonical = ConfigFile::from_spec(&spec);
        canonical.preset = m.preset.clone();
        if let Some(g) = &grid {
            canonical.interactions = Some(g.interactions.clone());
            canonical.heights = Some(g.heights.clone());
            canonical.tunneling_only = Some(g.tunneling_only);
        }
        canonical.spline_knots = Some(spline_knots);
        canonical.kan_widths = Some(kan.widths.clone());
        canonical.kan_spline_order = Some(kan.spline_order);
        canonical.kan_grid_size = Some(kan.grid_size);
        canonical.kan_grid_counts_basis = Some(kan.grid_counts_basis);
        canonical.kan_learning_rate = Some(kan.learning_rate);
        canonical.kan_epochs = Some(kan.epochs);
        canonical.kan_iterations_per_epoch = Some(kan.iterations_per_epoch);
        canonical.kan_history = Some(kan.history);
        canonical.kan_base_blend = Some(kan.base_blend);
        canonical.kan_init_scale = Some(kan.init_scale);
        canonical.kan_folds = Some(kan.folds);
        canonical.seed = Some(kan.seed);

        Ok(Self {
            preset: m.preset.clone(),
            spec,
            grid,
            spline_knots,
            kan,
            workers: m.workers,
            out_dir: m.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            canonical,
        })
    }

    fn defaults() -> ConfigFile {
        ConfigFile::from_spec(&SystemSpec::new(4, 4.0, 6.0))
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.canonical).expect("flat config serializes")
    }

    /// SHA-256 of [`Self::canonical_toml`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
