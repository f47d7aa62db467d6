//! Trajectories, parameter sweeps and their CSV persistence.
//!
//! File layout: `#`-prefixed `key=value` metadata lines, the header
//! `U,h,L,t,n_A,S_A`, then one row per sample. Floating-point fields are
//! written with 17 significant digits so a save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::basis::FockBasis;
use crate::error::{Error, Result};
use crate::evolution::{eigendecompose, Propagator, QuantumState};
use crate::hamiltonian::SparseHamiltonian;
use crate::observables::{Bipartition, Observer};
use crate::system::{Placement, SystemSpec};

pub const HEADER: [&str; 6] = ["U", "h", "L", "t", "n_A", "S_A"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub n_a: f64,
    pub s_a: f64,
}

/// Evolves the initial product state of `spec` over its time grid and
/// records `(t, n_A, S_A)` at each sample.
pub fn run_trajectory(spec: &SystemSpec) -> Result<Vec<TrajectorySample>> {
    spec.validate()?;
    let basis = FockBasis::for_system(spec)?;
    let ham = SparseHamiltonian::for_system(&basis, spec)?;
    let eig = eigendecompose(&ham)?;
    let psi0 = QuantumState::initial(&basis, spec)?;
    let prop = Propagator::new(&eig, &psi0)?;
    let observer = Observer::new(&basis, Bipartition::post_barrier(spec.sites)?)?;
    spec.times()
        .into_iter()
        .map(|t| {
            let (n_a, s_a) = observer.measure(&prop.state_at(t))?;
            Ok(TrajectorySample { t, n_a, s_a })
        })
        .collect()
}

/// Identity of one trajectory inside a dataset.
#[derive(Debug, Clone, Copy)]
pub struct GroupKey {
    pub u: f64,
    pub h: f64,
    pub sites: usize,
}

impl PartialEq for GroupKey {
    fn eq(&self, other: &Self) -> bool {
        self.u.to_bits() == other.u.to_bits()
            && self.h.to_bits() == other.h.to_bits()
            && self.sites == other.sites
    }
}

impl Eq for GroupKey {}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGroup {
    pub key: GroupKey,
    pub samples: Vec<TrajectorySample>,
}

/// `(U, h, L)` triple left out of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkippedPair {
    pub u: f64,
    pub h: f64,
    pub sites: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryDataset {
    /// Free-form `key=value` metadata (system template, tool version, config hash).
    pub metadata: BTreeMap<String, String>,
    pub skipped: Vec<SkippedPair>,
    pub groups: Vec<TrajectoryGroup>,
}

impl TrajectoryDataset {
    /// Dataset holding one trajectory, with `spec` recorded as metadata.
    pub fn single(spec: &SystemSpec, samples: Vec<TrajectorySample>) -> Self {
        let mut ds = Self {
            metadata: spec_metadata(spec),
            ..Self::default()
        };
        ds.groups.push(TrajectoryGroup {
            key: GroupKey {
                u: spec.interaction,
                h: spec.barrier_height(),
                sites: spec.sites,
            },
            samples,
        });
        ds
    }

    pub fn row_count(&self) -> usize {
        self.groups.iter().map(|g| g.samples.len()).sum()
    }

    pub fn group(&self, key: GroupKey) -> Option<&TrajectoryGroup> {
        self.groups.iter().find(|g| g.key == key)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = File::create(path)?;
        self.write(&mut file)?;
        file.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        for (k, v) in &self.metadata {
            if k.contains('=') || k.contains('\n') || v.contains('\n') {
                return Err(Error::InvalidInput(format!("metadata entry '{k}' is not a single key=value line")));
            }
            writeln!(out, "# {k}={v}")?;
        }
        if !self.skipped.is_empty() {
            let list: Vec<String> = self
                .skipped
                .iter()
                .map(|s| format!("{}:{}:{}", s.u, s.h, s.sites))
                .collect();
            writeln!(out, "# skipped={}", list.join(";"))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for g in &self.groups {
            for s in &g.samples {
                w.write_record([
                    fmt_f64(g.key.u),
                    fmt_f64(g.key.h),
                    g.key.sites.to_string(),
                    fmt_f64(s.t),
                    fmt_f64(s.n_a),
                    fmt_f64(s.s_a),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut ds = Self::default();
        let mut line_no = 0;
        let mut line = String::new();
        // Metadata block, then the header line.
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(Error::Format { line: line_no + 1, message: "missing header".into() });
            }
            line_no += 1;
            let text = line.trim_end_matches(['\n', '\r']);
            let Some(meta) = text.strip_prefix('#') else {
                let fields: Vec<&str> = text.split(',').collect();
                if fields != HEADER {
                    return Err(Error::Format {
                        line: line_no,
                        message: format!("expected header '{}', found '{text}'", HEADER.join(",")),
                    });
                }
                break;
            };
            let (k, v) = meta.trim_start().split_once('=').ok_or_else(|| Error::Format {
                line: line_no,
                message: "metadata line is not key=value".into(),
            })?;
            if k == "skipped" {
                ds.skipped = parse_skipped(v).map_err(|message| Error::Format { line: line_no, message })?;
            } else {
                ds.metadata.insert(k.to_string(), v.to_string());
            }
        }
        let header_line = line_no;
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        for (i, record) in rdr.records().enumerate() {
            let line = header_line + i + 1;
            let record = record?;
            let fail = |message: String| Error::Format { line, message };
            if record.len() != HEADER.len() {
                return Err(fail(format!("expected {} fields, found {}", HEADER.len(), record.len())));
            }
            let num = |idx: usize| -> Result<f64> {
                let x: f64 = record[idx]
                    .trim()
                    .parse()
                    .map_err(|_| fail(format!("field {} '{}' is not a number", HEADER[idx], &record[idx])))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(fail(format!("field {} is {x}", HEADER[idx])))
                }
            };
            let sites: usize = record[2]
                .trim()
                .parse()
                .map_err(|_| fail(format!("field L '{}' is not an integer", &record[2])))?;
            let key = GroupKey { u: num(0)?, h: num(1)?, sites };
            let sample = TrajectorySample { t: num(3)?, n_a: num(4)?, s_a: num(5)? };
            match ds.groups.last_mut() {
                Some(g) if g.key == key => {
                    let prev = g.samples.last().map_or(f64::NEG_INFINITY, |s| s.t);
                    if sample.t <= prev {
                        return Err(fail(format!("t = {} does not increase (previous {prev})", sample.t)));
                    }
                    g.samples.push(sample);
                }
                _ => {
                    if ds.groups.iter().any(|g| g.key == key) {
                        return Err(fail(format!(
                            "group U={} h={} L={} appears in two separate blocks",
                            key.u, key.h, key.sites
                        )));
                    }
                    ds.groups.push(TrajectoryGroup { key, samples: vec![sample] });
                }
            }
        }
        Ok(ds)
    }
}

fn parse_skipped(v: &str) -> std::result::Result<Vec<SkippedPair>, String> {
    v.split(';')
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [u, h, l] => Ok(SkippedPair {
                    u: u.parse().map_err(|_| format!("bad skipped entry '{item}'"))?,
                    h: h.parse().map_err(|_| format!("bad skipped entry '{item}'"))?,
                    sites: l.parse().map_err(|_| format!("bad skipped entry '{item}'"))?,
                }),
                _ => Err(format!("bad skipped entry '{item}'")),
            }
        })
        .collect()
}

/// 17 significant digits, never `-0`.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn spec_metadata(spec: &SystemSpec) -> BTreeMap<String, String> {
    let h = spec.barrier_height();
    BTreeMap::from([
        ("n_up".into(), spec.n_up.to_string()),
        ("n_down".into(), spec.n_down.to_string()),
        ("hopping".into(), spec.hopping.to_string()),
        ("barrier_left_fraction".into(), (spec.barrier.left / h).to_string()),
        ("barrier_right_fraction".into(), (spec.barrier.right / h).to_string()),
        ("t_max".into(), spec.t_max.to_string()),
        ("n_samples".into(), spec.n_samples.to_string()),
        ("initial_placement".into(), Placement::format_list(&spec.initial_placement)),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
    ])
}

/// Grids of a `(U, h)` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub interactions: Vec<f64>,
    pub heights: Vec<f64>,
    /// Skip pairs with `U >= h`.
    pub tunneling_only: bool,
}

impl SweepGrid {
    /// `U ∈ {2.0, 2.5, …, 5.5}` at `h = 6`, tunneling only.
    pub fn kan_default() -> Self {
        Self {
            interactions: (0..8).map(|i| 2.0 + 0.5 * f64::from(i)).collect(),
            heights: vec![6.0],
            tunneling_only: true,
        }
    }

    /// `U ∈ {2, …, 9}`, `h ∈ {5, …, 10}`, all pairs.
    pub fn heatmap_default() -> Self {
        Self {
            interactions: (2..=9).map(f64::from).collect(),
            heights: (5..=10).map(f64::from).collect(),
            tunneling_only: false,
        }
    }
}

impl SweepGrid {
    /// One spec per grid pair (`U` outer), with `U` and `h` taken from the
    /// grid, plus the pairs dropped by the tunneling-only filter.
    pub fn expand(&self, template: &SystemSpec) -> (Vec<SystemSpec>, Vec<SkippedPair>) {
        let mut specs = Vec::new();
        let mut skipped = Vec::new();
        for &u in &self.interactions {
            for &h in &self.heights {
                let mut spec = template.clone();
                spec.interaction = u;
                spec.barrier = template.barrier.rescaled(h);
                if self.tunneling_only && spec.check_tunneling_only().is_err() {
                    skipped.push(SkippedPair { u, h, sites: spec.sites });
                } else {
                    specs.push(spec);
                }
            }
        }
        (specs, skipped)
    }
}

/// Runs one trajectory per `(U, h)` pair. `template` fixes the lattice,
/// particle content, barrier shape and time grid; its `U` and `h` are
/// replaced by the grid values. Groups come out in grid order (`U` outer)
/// regardless of `workers`.
pub fn sweep(template: &SystemSpec, grid: &SweepGrid, workers: Option<usize>) -> Result<TrajectoryDataset> {
    if grid.interactions.is_empty() || grid.heights.is_empty() {
        return Err(Error::InvalidInput("sweep grids must be non-empty".into()));
    }
    template.validate()?;
    let mut ds = TrajectoryDataset {
        metadata: spec_metadata(template),
        ..TrajectoryDataset::default()
    };
    ds.metadata.insert("tunneling_only".into(), grid.tunneling_only.to_string());
    let (jobs, skipped) = grid.expand(template);
    for pair in &skipped {
        info!("skipping U={} h={}: tunneling-only sweep requires U < h", pair.u, pair.h);
    }
    ds.skipped = skipped;
    let run = || -> Result<Vec<TrajectoryGroup>> {
        jobs.par_iter()
            .map(|spec| {
                Ok(TrajectoryGroup {
                    key: GroupKey { u: spec.interaction, h: spec.barrier_height(), sites: spec.sites },
                    samples: run_trajectory(spec)?,
                })
            })
            .collect()
    };
    ds.groups = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(ds)
}
