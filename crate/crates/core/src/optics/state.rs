use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

/// Amplitudes smaller than this are dropped after every operation.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    fn offset(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// One optical mode: a spatial path carrying one polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub spatial_index: usize,
    pub polarization: Polarization,
}

impl ModeLabel {
    pub fn new(spatial_index: usize, polarization: Polarization) -> Self {
        ModeLabel {
            spatial_index,
            polarization,
        }
    }

    pub fn h(spatial_index: usize) -> Self {
        Self::new(spatial_index, Polarization::H)
    }

    pub fn v(spatial_index: usize) -> Self {
        Self::new(spatial_index, Polarization::V)
    }

    /// Position of this mode in an [`Occupation`] vector.
    pub fn index(self) -> usize {
        2 * self.spatial_index + self.polarization.offset()
    }

    pub fn from_index(index: usize) -> Self {
        let polarization = if index.is_multiple_of(2) {
            Polarization::H
        } else {
            Polarization::V
        };
        ModeLabel::new(index / 2, polarization)
    }
}

/// Photon counts per mode, ordered `(0,H), (0,V), (1,H), (1,V), ...`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u8>);

impl Occupation {
    pub fn vacuum(n_spatial: usize) -> Self {
        Occupation(vec![0; 2 * n_spatial])
    }

    /// Builds an occupation from `(mode, count)` pairs; repeated modes add up.
    pub fn from_modes(n_spatial: usize, photons: &[(ModeLabel, u8)]) -> Result<Self> {
        let mut occ = Self::vacuum(n_spatial);
        for &(mode, count) in photons {
            if mode.spatial_index >= n_spatial {
                return Err(Error::invalid(format!(
                    "mode {} out of range for {n_spatial} spatial modes",
                    mode.spatial_index
                )));
            }
            occ.0[mode.index()] += count;
        }
        Ok(occ)
    }

    pub fn from_counts(counts: Vec<u8>) -> Result<Self> {
        if !counts.len().is_multiple_of(2) {
            return Err(Error::invalid("occupation needs an H and a V count per spatial mode"));
        }
        Ok(Occupation(counts))
    }

    pub fn get(&self, mode: ModeLabel) -> u8 {
        self.0[mode.index()]
    }

    pub(crate) fn set(&mut self, mode: ModeLabel, count: u8) {
        self.0[mode.index()] = count;
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn n_spatial(&self) -> usize {
        self.0.len() / 2
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// Counts of the spatial modes in `range`, re-indexed from zero.
    pub fn slice_spatial(&self, range: std::ops::Range<usize>) -> Occupation {
        Occupation(self.0[2 * range.start..2 * range.end].to_vec())
    }
}

/// A pure state of photons in `n_spatial` polarization-resolved paths, held as
/// a sparse map from occupation to amplitude.
///
/// All terms carry the same photon number. Linear elements preserve it, and the
/// loss operation moves to a sector with fewer photons before renormalizing.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonicState {
    n_spatial: usize,
    total_photons: usize,
    terms: BTreeMap<Occupation, Complex64>,
}

impl PhotonicState {
    pub fn vacuum(n_spatial: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::vacuum(n_spatial), Complex64::new(1.0, 0.0));
        PhotonicState {
            n_spatial,
            total_photons: 0,
            terms,
        }
    }

    pub fn basis(occupation: Occupation) -> Self {
        let n_spatial = occupation.n_spatial();
        let total_photons = occupation.total();
        let mut terms = BTreeMap::new();
        terms.insert(occupation, Complex64::new(1.0, 0.0));
        PhotonicState {
            n_spatial,
            total_photons,
            terms,
        }
    }

    /// Collects terms, summing repeated occupations. The result is not
    /// normalized; call [`PhotonicState::normalized`] if needed.
    pub fn from_terms<I>(n_spatial: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        let mut total = None;
        for (occ, amp) in terms {
            if occ.n_spatial() != n_spatial {
                return Err(Error::invalid("occupation length does not match the mode count"));
            }
            match total {
                None => total = Some(occ.total()),
                Some(t) if t != occ.total() => {
                    return Err(Error::invalid("all terms must carry the same photon number"))
                }
                _ => {}
            }
            *map.entry(occ).or_default() += amp;
        }
        let total_photons =
            total.ok_or_else(|| Error::invalid("a state needs at least one term"))?;
        let mut state = PhotonicState {
            n_spatial,
            total_photons,
            terms: map,
        };
        state.prune();
        if state.terms.is_empty() {
            return Err(Error::invalid("all amplitudes vanish"));
        }
        Ok(state)
    }

    pub(crate) fn from_map_unchecked(
        n_spatial: usize,
        total_photons: usize,
        terms: BTreeMap<Occupation, Complex64>,
    ) -> Self {
        let mut state = PhotonicState {
            n_spatial,
            total_photons,
            terms,
        };
        state.prune();
        state
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn total_photons(&self) -> usize {
        self.total_photons
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, occupation: &Occupation) -> Complex64 {
        self.terms.get(occupation).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for amp in self.terms.values_mut() {
                *amp /= norm;
            }
        }
        self
    }

    /// `<self|other>`; zero when the two states live on different mode sets.
    pub fn inner_product(&self, other: &PhotonicState) -> Complex64 {
        if self.n_spatial != other.n_spatial {
            return Complex64::default();
        }
        self.terms
            .iter()
            .filter_map(|(occ, a)| other.terms.get(occ).map(|b| a.conj() * b))
            .sum()
    }

    /// Equality up to a global phase, as `|<a|b>| = 1` within `tol`.
    pub fn equals_up_to_phase(&self, other: &PhotonicState, tol: f64) -> bool {
        (self.inner_product(other).norm() - 1.0).abs() <= tol
    }

    /// Largest amplitude difference to `other` over the union of supports.
    pub fn max_abs_diff(&self, other: &PhotonicState) -> f64 {
        let mut worst: f64 = 0.0;
        for (occ, a) in &self.terms {
            worst = worst.max((a - other.amplitude(occ)).norm());
        }
        for (occ, b) in &other.terms {
            if !self.terms.contains_key(occ) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Tensor product; the modes of `other` follow those of `self`.
    pub fn tensor(&self, other: &PhotonicState) -> PhotonicState {
        let mut terms = BTreeMap::new();
        for (oa, a) in &self.terms {
            for (ob, b) in &other.terms {
                let mut counts = oa.0.clone();
                counts.extend_from_slice(&ob.0);
                terms.insert(Occupation(counts), a * b);
            }
        }
        PhotonicState::from_map_unchecked(
            self.n_spatial + other.n_spatial,
            self.total_photons + other.total_photons,
            terms,
        )
    }

    /// Relabels spatial modes: old mode `i` becomes `perm[i]`.
    pub fn permute_spatial(&self, perm: &[usize]) -> Result<PhotonicState> {
        let mut seen = vec![false; self.n_spatial];
        if perm.len() != self.n_spatial {
            return Err(Error::invalid("permutation length does not match the mode count"));
        }
        for &p in perm {
            if p >= self.n_spatial || seen[p] {
                return Err(Error::invalid("not a permutation of the spatial modes"));
            }
            seen[p] = true;
        }
        let terms = self
            .terms
            .iter()
            .map(|(occ, amp)| {
                let mut counts = vec![0u8; occ.0.len()];
                for (old, &new) in perm.iter().enumerate() {
                    counts[2 * new] = occ.0[2 * old];
                    counts[2 * new + 1] = occ.0[2 * old + 1];
                }
                (Occupation(counts), *amp)
            })
            .collect();
        Ok(PhotonicState::from_map_unchecked(
            self.n_spatial,
            self.total_photons,
            terms,
        ))
    }

    pub(crate) fn check_mode(&self, spatial: usize) -> Result<()> {
        if spatial < self.n_spatial {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "spatial mode {spatial} out of range for a {}-mode state",
                self.n_spatial
            )))
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_TOLERANCE);
    }
}

/// `(|H H> + |V V>)/sqrt(2)` on spatial mode 0 (kept) and 1 (travel).
pub fn make_bell_pair() -> PhotonicState {
    make_ghz(2, 1).expect("two-party GHZ is always valid")
}

/// `(|H...H> + sign |V...V>)/sqrt(2)` with one photon in each of `n` paths.
pub fn make_ghz(n: usize, sign: i8) -> Result<PhotonicState> {
    if n < 2 {
        return Err(Error::invalid(format!("GHZ state needs n >= 2, got {n}")));
    }
    let sign = match sign {
        1 => 1.0,
        -1 => -1.0,
        other => return Err(Error::invalid(format!("sign must be +1 or -1, got {other}"))),
    };
    let all = |pol| {
        let modes: Vec<_> = (0..n).map(|i| (ModeLabel::new(i, pol), 1)).collect();
        Occupation::from_modes(n, &modes).expect("modes are in range")
    };
    PhotonicState::from_terms(
        n,
        [
            (all(Polarization::H), Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (all(Polarization::V), Complex64::new(sign * FRAC_1_SQRT_2, 0.0)),
        ],
    )
}

/// `n` Bell pairs with kept photons on paths `0..n` and travel photons on
/// paths `n..2n`; pair `j` joins path `j` with path `n + j`.
pub fn make_bell_group(n: usize) -> Result<PhotonicState> {
    if n < 1 {
        return Err(Error::invalid("a group needs at least one Bell pair"));
    }
    let pair = make_bell_pair();
    let mut state = pair.clone();
    for _ in 1..n {
        state = state.tensor(&pair);
    }
    // pair j sits on (2j, 2j+1)
    let mut perm = vec![0; 2 * n];
    for j in 0..n {
        perm[2 * j] = j;
        perm[2 * j + 1] = n + j;
    }
    state.permute_spatial(&perm)
}
