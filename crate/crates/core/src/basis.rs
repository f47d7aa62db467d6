//! Fixed-`(N↑, N↓)` Fock basis of an open chain.
//!
//! A basis state is a pair of occupation masks, bit `j - 1` standing for site
//! `j`. Fermionic modes are ordered site-major, `1↑, 1↓, 2↑, 2↓, …`, and a
//! basis state denotes the normal-ordered product of creation operators over
//! its occupied modes, lowest mode leftmost, acting on the vacuum. Under this
//! ordering any trailing block of sites is a trailing block of modes.

use crate::error::{Error, Result};
use crate::system::{Spin, SystemSpec, MAX_SITES};

/// Direction of a nearest-neighbour hop across the bond `(j, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    /// `c†_{j+1} c_j`: the particle moves from `j` to `j + 1`.
    Right,
    /// `c†_j c_{j+1}`: the particle moves from `j + 1` to `j`.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    pub up: u32,
    pub down: u32,
}

impl FockState {
    pub fn mask(&self, spin: Spin) -> u32 {
        match spin {
            Spin::Up => self.up,
            Spin::Down => self.down,
        }
    }

    fn with_mask(self, spin: Spin, mask: u32) -> Self {
        match spin {
            Spin::Up => Self { up: mask, ..self },
            Spin::Down => Self { down: mask, ..self },
        }
    }

    /// Occupation of site `site` (1-based), counting both spins.
    pub fn occupation(&self, site: usize) -> u32 {
        let bit = 1u32 << (site - 1);
        u32::from(self.up & bit != 0) + u32::from(self.down & bit != 0)
    }

    pub fn double_occupancy(&self) -> u32 {
        (self.up & self.down).count_ones()
    }

    /// Interleaved site-major mode mask: bit `2(j-1)` is `j↑`, bit `2(j-1)+1` is `j↓`.
    pub fn modes(&self) -> u64 {
        spread(self.up) | (spread(self.down) << 1)
    }
}

fn spread(mask: u32) -> u64 {
    let mut x = u64::from(mask);
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Number of `k`-subsets of an `n`-set.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `sites`-bit masks with exactly `count` bits set, ascending.
fn masks_with_popcount(sites: usize, count: usize) -> Vec<u32> {
    if count == 0 {
        return vec![0];
    }
    let limit = 1u64 << sites;
    let mut out = Vec::with_capacity(binomial(sites, count));
    let mut v: u64 = (1u64 << count) - 1;
    while v < limit {
        out.push(v as u32);
        // Gosper's hack: next integer with the same popcount.
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Position of `mask` among same-popcount masks in ascending order
/// (combinatorial number system).
fn mask_rank(mask: u32) -> usize {
    let mut rank = 0;
    let mut bits = mask;
    let mut i = 0;
    while bits != 0 {
        let pos = bits.trailing_zeros() as usize;
        rank += binomial(pos, i + 1);
        bits &= bits - 1;
        i += 1;
    }
    rank
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    n_up: usize,
    n_down: usize,
    states: Vec<FockState>,
    down_count: usize,
}

impl FockBasis {
    /// Enumerates the sector in lexicographic `(up, down)` mask order.
    pub fn new(sites: usize, n_up: usize, n_down: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::InvalidSystem(format!(
                "site count must be in 1..={MAX_SITES}, got {sites}"
            )));
        }
        if n_up > sites || n_down > sites {
            return Err(Error::InvalidSystem(format!(
                "cannot place {n_up} up / {n_down} down fermions on {sites} sites"
            )));
        }
        let ups = masks_with_popcount(sites, n_up);
        let downs = masks_with_popcount(sites, n_down);
        let states = ups
            .iter()
            .flat_map(|&up| downs.iter().map(move |&down| FockState { up, down }))
            .collect();
        Ok(Self {
            sites,
            n_up,
            n_down,
            states,
            down_count: downs.len(),
        })
    }

    pub fn for_system(spec: &SystemSpec) -> Result<Self> {
        Self::new(spec.sites, spec.n_up, spec.n_down)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_down(&self) -> usize {
        self.n_down
    }

    pub fn particles(&self) -> usize {
        self.n_up + self.n_down
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    /// Exact inverse of [`FockBasis::state`]; `None` for states outside the sector.
    pub fn index_of(&self, state: FockState) -> Option<usize> {
        let full = if self.sites == 32 { u32::MAX } else { (1u32 << self.sites) - 1 };
        if state.up & !full != 0
            || state.down & !full != 0
            || state.up.count_ones() as usize != self.n_up
            || state.down.count_ones() as usize != self.n_down
        {
            return None;
        }
        Some(mask_rank(state.up) * self.down_count + mask_rank(state.down))
    }

    /// Applies one hopping term across bond `(site, site + 1)` to basis state
    /// `from`. Returns the image index and the fermionic sign, or `None` when
    /// the source mode is empty or the target mode is occupied.
    pub fn hop_element(&self, from: usize, site: usize, spin: Spin, dir: Hop) -> Option<(usize, f64)> {
        assert!(
            (1..self.sites).contains(&site),
            "bond site {site} out of range 1..{}",
            self.sites
        );
        let state = self.states[from];
        let mask = state.mask(spin);
        let (src, dst) = match dir {
            Hop::Right => (site - 1, site),
            Hop::Left => (site, site - 1),
        };
        if mask & (1 << src) == 0 || mask & (1 << dst) != 0 {
            return None;
        }
        let target = state.with_mask(spin, mask ^ (1 << src) ^ (1 << dst));
        let lo = 2 * src.min(dst) + spin.mode_offset();
        let hi = 2 * src.max(dst) + spin.mode_offset();
        // Occupied modes strictly between the two hopping modes.
        let between = (state.modes() >> (lo + 1)) & ((1u64 << (hi - lo - 1)) - 1);
        let sign = if between.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        let to = self.index_of(target).expect("hop preserves the particle sector");
        Some((to, sign))
    }
}
