//! Named runs covering the single trajectories, KAN training sweeps,
//! heatmap grids and the large-lattice smoke run.

use crate::dataset::SweepGrid;
use crate::system::SystemSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum PresetRun {
    Trajectory(SystemSpec),
    Sweep { template: SystemSpec, grid: SweepGrid },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub run: PresetRun,
}

impl Preset {
    /// Every trajectory the preset produces, in output order.
    pub fn specs(&self) -> Vec<SystemSpec> {
        match &self.run {
            PresetRun::Trajectory(spec) => vec![spec.clone()],
            PresetRun::Sweep { template, grid } => grid.expand(template).0,
        }
    }
}

fn trajectory(name: &'static str, summary: &'static str, sites: usize, u: f64, h: f64) -> Preset {
    Preset { name, summary, run: PresetRun::Trajectory(SystemSpec::new(sites, u, h)) }
}

fn sweep(name: &'static str, summary: &'static str, sites: usize, grid: SweepGrid) -> Preset {
    Preset {
        name,
        summary,
        run: PresetRun::Sweep { template: SystemSpec::new(sites, 0.0, grid.heights[0]), grid },
    }
}

fn kan_grid(height: f64) -> SweepGrid {
    SweepGrid { heights: vec![height], ..SweepGrid::kan_default() }
}

pub fn all() -> Vec<Preset> {
    vec![
        trajectory("trajectory-u2-h5", "single trajectory, L=4, U=2, h=5", 4, 2.0, 5.0),
        trajectory("trajectory-u4-h6", "single trajectory, L=4, U=4, h=6", 4, 4.0, 6.0),
        trajectory("kan-worst-l4", "hardest KAN group, L=4, U=2, h=6", 4, 2.0, 6.0),
        trajectory("kan-worst-l8", "hardest KAN group, L=8, U=2, h=6", 8, 2.0, 6.0),
        sweep("kan-l4", "KAN training sweep, L=4, U=2..5.5, h=6", 4, kan_grid(6.0)),
        sweep("kan-l8", "KAN training sweep, L=8, U=2..5.5, h=6", 8, kan_grid(6.0)),
        sweep("kan-l4-h8", "KAN training sweep, L=4, U=2..5.5, h=8", 4, kan_grid(8.0)),
        sweep("heatmap-l4", "binary-entropy heatmap grid, L=4, U=2..9, h=5..10", 4, SweepGrid::heatmap_default()),
        sweep("heatmap-l8", "binary-entropy heatmap grid, L=8, U=2..9, h=5..10", 8, SweepGrid::heatmap_default()),
        trajectory("l20-smoke", "large-lattice trajectory, L=20, U=4, h=6", 20, 4.0, 6.0),
    ]
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|p| p.name).collect()
}
