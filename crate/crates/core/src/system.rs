//! Physical parameters of a tunneling run.
//!
//! Sites are numbered `1..=L` throughout the public API. The barrier always
//! occupies the two central sites `L/2` and `L/2 + 1`; everything to the right
//! of it forms the post-barrier region.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain supported by the `u32` occupation masks.
pub const MAX_SITES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn label(self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Down => "down",
        }
    }

    /// Offset of this spin inside a site's pair of modes.
    pub(crate) fn mode_offset(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// Potentials on the two central sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    /// Potential on site `L/2`.
    pub left: f64,
    /// Potential on site `L/2 + 1`.
    pub right: f64,
}

impl Barrier {
    /// Default asymmetric profile `(h/2, h)` with maximum height `h`.
    pub fn asymmetric(height: f64) -> Self {
        Self {
            left: 0.5 * height,
            right: height,
        }
    }

    pub fn height(&self) -> f64 {
        self.left.max(self.right)
    }

    /// Same shape rescaled to maximum height `height`.
    pub fn rescaled(&self, height: f64) -> Self {
        let k = height / self.height();
        Self {
            left: self.left * k,
            right: self.right * k,
        }
    }
}

/// A single fermion placed in the initial product state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub site: usize,
    pub spin: Spin,
}

impl Placement {
    pub fn new(site: usize, spin: Spin) -> Self {
        Self { site, spin }
    }

    /// Parses a comma-separated list such as `1up,1down`.
    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }

    pub fn format_list(list: &[Self]) -> String {
        list.iter().map(Self::to_string).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.site, self.spin.label())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let (site, spin) = s.split_at(digits);
        let site = site
            .parse()
            .map_err(|_| Error::InvalidInput(format!("placement '{s}' has no site number")))?;
        let spin = match spin {
            "up" | "u" => Spin::Up,
            "down" | "dn" | "d" => Spin::Down,
            _ => return Err(Error::InvalidInput(format!("placement '{s}' has no spin (up/down)"))),
        };
        Ok(Self { site, spin })
    }
}

/// Lattice, couplings, barrier, time grid and initial occupation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub sites: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub barrier: Barrier,
    pub t_max: f64,
    pub n_samples: usize,
    pub initial_placement: Vec<Placement>,
}

impl SystemSpec {
    /// One up and one down fermion on site 1, `J = 1`, barrier `(h/2, h)`,
    /// 2001 samples on `t J ∈ [0, 100]`.
    pub fn new(sites: usize, interaction: f64, height: f64) -> Self {
        Self {
            sites,
            n_up: 1,
            n_down: 1,
            hopping: 1.0,
            interaction,
            barrier: Barrier::asymmetric(height),
            t_max: 100.0,
            n_samples: 2001,
            initial_placement: vec![Placement::new(1, Spin::Up), Placement::new(1, Spin::Down)],
        }
    }

    pub fn barrier_height(&self) -> f64 {
        self.barrier.height()
    }

    /// Left barrier site (1-based).
    pub fn barrier_left_site(&self) -> usize {
        self.sites / 2
    }

    /// Site potentials indexed `0..L` (site `j` at index `j - 1`).
    pub fn potentials(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.sites];
        let left = self.barrier_left_site();
        v[left - 1] = self.barrier.left;
        v[left] = self.barrier.right;
        v
    }

    /// Uniform sample times `t_max * i / (n_samples - 1)`.
    pub fn times(&self) -> Vec<f64> {
        match self.n_samples {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n)
                .map(|i| self.t_max * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSystem(m));
        if self.sites < 4 || !self.sites.is_multiple_of(2) {
            return bad(format!("L must be even and at least 4, got {}", self.sites));
        }
        if self.sites > MAX_SITES {
            return bad(format!("L = {} exceeds the {MAX_SITES}-site limit", self.sites));
        }
        let n = self.n_up + self.n_down;
        if !(1..=2).contains(&n) {
            return bad(format!("total particle number must be 1 or 2, got {n}"));
        }
        if !(self.barrier.height() > 0.0) {
            return bad(format!("barrier height must be positive, got {}", self.barrier.height()));
        }
        for (name, x) in [
            ("hopping", self.hopping),
            ("interaction", self.interaction),
            ("barrier left", self.barrier.left),
            ("barrier right", self.barrier.right),
            ("t_max", self.t_max),
        ] {
            if !x.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.hopping < 0.0 {
            return bad(format!("hopping must be non-negative, got {}", self.hopping));
        }
        if self.t_max < 0.0 {
            return bad(format!("t_max must be non-negative, got {}", self.t_max));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        let ups = self.initial_placement.iter().filter(|p| p.spin == Spin::Up).count();
        let downs = self.initial_placement.len() - ups;
        if ups != self.n_up || downs != self.n_down {
            return bad(format!(
                "initial placement has {ups} up / {downs} down fermions, expected {} / {}",
                self.n_up, self.n_down
            ));
        }
        let first_barrier = self.barrier_left_site();
        for p in &self.initial_placement {
            if p.site == 0 || p.site >= first_barrier {
                return bad(format!(
                    "initial site {} is not strictly before the barrier (sites 1..{})",
                    p.site,
                    first_barrier - 1
                ));
            }
        }
        Ok(())
    }

    /// Rejects `U >= h`, where transport could proceed over the barrier.
    pub fn check_tunneling_only(&self) -> Result<()> {
        if self.interaction < self.barrier_height() {
            Ok(())
        } else {
            Err(Error::InvalidSystem(format!(
                "tunneling-only regime requires U < h, got U = {}, h = {}",
                self.interaction,
                self.barrier_height()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        let spec = SystemSpec::new(4, 2.0, 5.0);
        spec.validate().unwrap();
        assert_eq!(spec.potentials(), vec![0.0, 2.5, 5.0, 0.0]);
        assert_eq!(spec.barrier_height(), 5.0);
    }

    #[test]
    fn rejects_odd_or_small_lattices() {
        assert!(SystemSpec::new(5, 2.0, 5.0).validate().is_err());
        assert!(SystemSpec::new(2, 2.0, 5.0).validate().is_err());
    }

    #[test]
    fn rejects_post_barrier_placement() {
        let mut spec = SystemSpec::new(8, 2.0, 5.0);
        spec.initial_placement[1].site = 4;
        assert!(spec.validate().is_err());
        spec.initial_placement[1].site = 3;
        spec.validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_barrier() {
        let mut spec = SystemSpec::new(4, 2.0, 5.0);
        spec.barrier = Barrier { left: 0.0, right: 0.0 };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn tunneling_only_check() {
        assert!(SystemSpec::new(4, 5.0, 6.0).check_tunneling_only().is_ok());
        assert!(SystemSpec::new(4, 7.0, 6.0).check_tunneling_only().is_err());
        assert!(SystemSpec::new(4, 6.0, 6.0).check_tunneling_only().is_err());
    }

    #[test]
    fn placement_text_round_trip() {
        let list = Placement::parse_list("1up, 2down").unwrap();
        assert_eq!(list, vec![Placement::new(1, Spin::Up), Placement::new(2, Spin::Down)]);
        assert_eq!(Placement::format_list(&list), "1up,2down");
        assert!("up".parse::<Placement>().is_err());
        assert!("3left".parse::<Placement>().is_err());
    }

    #[test]
    fn barrier_rescaling_keeps_shape() {
        let b = Barrier::asymmetric(6.0).rescaled(9.0);
        assert_eq!(b, Barrier { left: 4.5, right: 9.0 });
    }

    #[test]
    fn time_grid_endpoints() {
        let t = SystemSpec::new(4, 2.0, 5.0).times();
        assert_eq!(t.len(), 2001);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[2000], 100.0);
        assert!((t[1] - 0.05).abs() < 1e-15);
    }
}
