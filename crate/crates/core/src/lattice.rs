//! Hypercubic lattices in one to three dimensions with nearest-neighbour adjacency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub dim: usize,
    /// Site count along each axis.
    pub lengths: Vec<usize>,
    #[serde(default = "default_periodic")]
    pub periodic: bool,
}

fn default_periodic() -> bool {
    true
}

impl LatticeSpec {
    pub fn chain(n: usize) -> Self {
        Self {
            dim: 1,
            lengths: vec![n],
            periodic: true,
        }
    }

    pub fn square(l: usize) -> Self {
        Self {
            dim: 2,
            lengths: vec![l, l],
            periodic: true,
        }
    }

    pub fn cubic(l: usize) -> Self {
        Self {
            dim: 3,
            lengths: vec![l, l, l],
            periodic: true,
        }
    }

    pub fn open(mut self) -> Self {
        self.periodic = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::param("lattice.dim", format!("{} not in 1..=3", self.dim)));
        }
        if self.lengths.len() != self.dim {
            return Err(Error::param(
                "lattice.lengths",
                format!("{} lengths for dim {}", self.lengths.len(), self.dim),
            ));
        }
        if self.lengths.iter().any(|&l| l == 0) {
            return Err(Error::param("lattice.lengths", "zero-length axis"));
        }
        if self.n_sites() < 2 {
            return Err(Error::param("lattice.lengths", "need at least 2 sites"));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.lengths.iter().product()
    }

    /// Row-major coordinates; axis 0 varies fastest.
    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        self.lengths
            .iter()
            .map(|&l| {
                let c = rest % l;
                rest /= l;
                c
            })
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (c, l) in coords.iter().zip(&self.lengths) {
            idx += c * stride;
            stride *= l;
        }
        idx
    }

    /// Site reached by moving `d` steps along `axis`; `None` when an open boundary is crossed.
    pub fn shift(&self, site: usize, axis: usize, d: usize) -> Option<usize> {
        let mut c = self.coords(site);
        let l = self.lengths[axis];
        if self.periodic {
            c[axis] = (c[axis] + d) % l;
        } else {
            if c[axis] + d >= l {
                return None;
            }
            c[axis] += d;
        }
        Some(self.index(&c))
    }

    /// Checkerboard parity, used by the staggered drive.
    pub fn parity(&self, site: usize) -> usize {
        self.coords(site).iter().sum::<usize>() % 2
    }

    /// Deduplicated nearest neighbours of `site`, sorted ascending.
    ///
    /// On a periodic axis of length 2 both directions reach the same site; it is listed once.
    pub fn neighbors(&self, site: usize) -> Result<Vec<usize>> {
        let n = self.n_sites();
        if site >= n {
            return Err(Error::SiteOutOfRange { site, n_sites: n });
        }
        Ok(self.neighbors_unchecked(site))
    }

    fn neighbors_unchecked(&self, site: usize) -> Vec<usize> {
        let c = self.coords(site);
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            let l = self.lengths[axis];
            if l == 1 {
                continue;
            }
            let mut push = |k: usize| {
                let mut cc = c.clone();
                cc[axis] = k;
                out.push(self.index(&cc));
            };
            if c[axis] + 1 < l {
                push(c[axis] + 1);
            } else if self.periodic {
                push(0);
            }
            if c[axis] > 0 {
                push(c[axis] - 1);
            } else if self.periodic {
                push(l - 1);
            }
        }
        out.sort_unstable();
        out.dedup();
        out.retain(|&k| k != site);
        out
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n_sites()).map(|s| self.neighbors_unchecked(s)).collect()
    }

    /// Unordered bonds `(i, j)` with `i < j`, each listed once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.adjacency().into_iter().enumerate() {
            out.extend(nb.into_iter().filter(|&j| j > i).map(|j| (i, j)));
        }
        out
    }

    /// Largest axis separation worth measuring for correlation profiles.
    pub fn max_separation(&self) -> usize {
        let lmin = *self.lengths.iter().filter(|&&l| l > 1).min().unwrap_or(&1);
        if self.periodic {
            lmin / 2
        } else {
            lmin - 1
        }
    }
}
