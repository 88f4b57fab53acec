//! Deterministic generator of synthetic power-system-shaped matrices.
//!
//! The layout follows the four-quadrant structure of transient-simulation
//! Jacobians: a leading block-diagonal region of small equipment blocks, a
//! trailing sparse network part shaped like a grid with a few chords, and
//! border couplings linking each block to a network node. Values are made
//! strongly diagonally dominant so generated matrices factor without pivot
//! delays and benchmarks measure scheduling, not pivoting.
//!
//! Everything is a pure function of the spec: the same seed reproduces the
//! matrix byte for byte.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blockdetect::BlockMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CscMatrix;

/// Local off-diagonal pattern of a block template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PatternSpec {
    /// Every off-diagonal position.
    Dense,
    /// Positions within `bandwidth` of the diagonal.
    Banded { bandwidth: usize },
    /// Exactly these (row, col) positions, 0-based and off-diagonal.
    Explicit { entries: Vec<(usize, usize)> },
}

/// One equipment-block shape, stamped out `count` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTemplate {
    pub size: usize,
    pub pattern: PatternSpec,
    /// Off-diagonal magnitudes are drawn uniformly from this range; signs
    /// are random.
    pub value_range: (f64, f64),
    pub count: usize,
}

impl BlockTemplate {
    /// The template's off-diagonal positions, sorted and deduplicated.
    fn entries(&self) -> Result<Vec<(usize, usize)>> {
        let mut out = BTreeSet::new();
        match &self.pattern {
            PatternSpec::Dense => {
                for i in 0..self.size {
                    for j in 0..self.size {
                        if i != j {
                            out.insert((i, j));
                        }
                    }
                }
            }
            PatternSpec::Banded { bandwidth } => {
                for i in 0..self.size {
                    for j in i.saturating_sub(*bandwidth)..(i + bandwidth + 1).min(self.size) {
                        if i != j {
                            out.insert((i, j));
                        }
                    }
                }
            }
            PatternSpec::Explicit { entries } => {
                for &(i, j) in entries {
                    if i >= self.size || j >= self.size {
                        return Err(Error::InvalidSpec(format!(
                            "pattern entry ({i}, {j}) outside a size-{} block",
                            self.size
                        )));
                    }
                    if i == j {
                        return Err(Error::InvalidSpec(format!(
                            "pattern entry ({i}, {j}) is diagonal; diagonals are implicit"
                        )));
                    }
                    out.insert((i, j));
                }
            }
        }
        Ok(out.into_iter().collect())
    }
}

fn default_network_values() -> (f64, f64) {
    (0.5, 1.5)
}

/// Full generator specification; this is also the schema of the JSON spec
/// files the CLI consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub templates: Vec<BlockTemplate>,
    /// Dimension of the trailing network part; 0 means no network and no
    /// couplings (fully independent blocks).
    #[serde(default)]
    pub network_size: usize,
    /// Extra block-to-network couplings as a fraction of the block count,
    /// on top of the one mandatory coupling per block.
    #[serde(default)]
    pub coupling_density: f64,
    /// Magnitude range for network and coupling values.
    #[serde(default = "default_network_values")]
    pub network_value_range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    /// Total matrix dimension.
    pub fn n(&self) -> usize {
        self.block_region() + self.network_size
    }

    /// Dimension of the block-diagonal region.
    pub fn block_region(&self) -> usize {
        self.templates.iter().map(|t| t.size * t.count).sum()
    }

    pub fn n_blocks(&self) -> usize {
        self.templates.iter().map(|t| t.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.templates.iter().enumerate() {
            if t.size == 0 {
                return Err(Error::InvalidSpec(format!("template {i} has size 0")));
            }
            check_range(t.value_range, &format!("template {i} value range"))?;
            t.entries()?;
        }
        check_range(self.network_value_range, "network value range")?;
        if !(0.0..=1.0).contains(&self.coupling_density) {
            return Err(Error::InvalidSpec(format!(
                "coupling density {} outside [0, 1]",
                self.coupling_density
            )));
        }
        if self.n() == 0 {
            return Err(Error::InvalidSpec("spec generates an empty matrix".into()));
        }
        Ok(())
    }
}

fn check_range((lo, hi): (f64, f64), what: &str) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(Error::InvalidSpec(format!(
            "{what} ({lo}, {hi}) must satisfy 0 <= lo <= hi and be finite"
        )));
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let mag = if lo < hi { rng.gen_range(lo..hi) } else { lo };
    if rng.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Generates the matrix and its ground-truth block layout.
///
/// Draw order is fixed (block values in layout order, then network values in
/// edge order, then coupling placements and values), so a seed pins every
/// byte of the result. Diagonals are set last to twice the final row's
/// off-diagonal magnitude sum, floored at 0.5 for rows with no neighbors.
pub fn generate<T: Scalar>(spec: &GenSpec) -> Result<(CscMatrix<T>, BlockMap)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n();
    let region = spec.block_region();
    let k = spec.network_size;

    // Blocks interleave round-robin over the templates so identical
    // structures are not adjacent and grouping is earned, not positional.
    let mut layout: Vec<usize> = Vec::with_capacity(spec.n_blocks());
    let mut remaining: Vec<usize> = spec.templates.iter().map(|t| t.count).collect();
    while remaining.iter().any(|&c| c > 0) {
        for (t, r) in remaining.iter_mut().enumerate() {
            if *r > 0 {
                *r -= 1;
                layout.push(t);
            }
        }
    }
    let mut blocks = Vec::with_capacity(layout.len());
    let mut start = 0;
    for &t in &layout {
        let size = spec.templates[t].size;
        blocks.push(start..start + size);
        start += size;
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (b, &t) in layout.iter().enumerate() {
        let tpl = &spec.templates[t];
        let base = blocks[b].start;
        for (i, j) in tpl.entries()? {
            triplets.push((base + i, base + j, draw(&mut rng, tpl.value_range)));
        }
    }

    // Network: a near-square grid (average degree between 2 and 4) plus 5%
    // random chords for irregularity.
    if k > 0 {
        let w = (k as f64).sqrt().ceil() as usize;
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for u in 0..k {
            if (u + 1) % w != 0 && u + 1 < k {
                edges.insert((u, u + 1));
            }
            if u + w < k {
                edges.insert((u, u + w));
            }
        }
        let want_chords = k.div_ceil(20);
        let mut got = 0;
        for _ in 0..10 * want_chords {
            if got == want_chords {
                break;
            }
            let u = rng.gen_range(0..k);
            let v = rng.gen_range(0..k);
            if u != v && edges.insert((u.min(v), u.max(v))) {
                got += 1;
            }
        }
        for &(u, v) in &edges {
            triplets.push((region + u, region + v, draw(&mut rng, spec.network_value_range)));
            triplets.push((region + v, region + u, draw(&mut rng, spec.network_value_range)));
        }

        // Couplings: each block links one local column to one network node;
        // the density buys extra links on top.
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for r in &blocks {
            let col = r.start + rng.gen_range(0..r.len());
            let node = rng.gen_range(0..k);
            pairs.insert((col, node));
        }
        let extra = (spec.coupling_density * blocks.len() as f64).ceil() as usize;
        let mut got = 0;
        for _ in 0..100 * extra.max(1) {
            if got == extra {
                break;
            }
            let r = &blocks[rng.gen_range(0..blocks.len())];
            let col = r.start + rng.gen_range(0..r.len());
            let node = rng.gen_range(0..k);
            if pairs.insert((col, node)) {
                got += 1;
            }
        }
        if got < extra {
            return Err(Error::InvalidSpec(format!(
                "could not place {extra} extra couplings; density too high \
                 for {} block columns x {k} nodes",
                region
            )));
        }
        for &(col, node) in &pairs {
            triplets.push((region + node, col, draw(&mut rng, spec.network_value_range)));
            triplets.push((col, region + node, draw(&mut rng, spec.network_value_range)));
        }
    }

    let mut row_sum = vec![0.0f64; n];
    for &(i, _, v) in &triplets {
        row_sum[i] += v.abs();
    }
    for (i, &s) in row_sum.iter().enumerate() {
        triplets.push((i, i, (2.0 * s).max(0.5)));
    }

    let typed: Vec<(usize, usize, T)> = triplets
        .into_iter()
        .map(|(i, j, v)| (i, j, T::from_f64_lossy(v)))
        .collect();
    let a = CscMatrix::from_triplets(n, &typed)?;
    let map = BlockMap {
        blocks,
        coupling: region..n,
    };
    Ok((a, map))
}
