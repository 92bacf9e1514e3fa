use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::element::OpticalElement;
use super::mode::{Arm, ModeSelector, OpticalMode};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

const PRUNE: f64 = 1e-15;

/// Occupation pattern: the sorted multiset of occupied modes.
pub type Pattern = Vec<OpticalMode>;

fn factorial_weight(pattern: &[OpticalMode]) -> f64 {
    // Π n_m! over runs of equal modes in a sorted pattern
    let mut w = 1.0;
    let mut run = 1.0;
    for k in 1..pattern.len() {
        if pattern[k] == pattern[k - 1] {
            run += 1.0;
            w *= run;
        } else {
            run = 1.0;
        }
    }
    w
}

/// Superposition over photon occupation patterns with a fixed photon number.
/// Amplitudes refer to normalized Fock basis states.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockState {
    terms: BTreeMap<Pattern, C64>,
    photons: usize,
    arms: BTreeSet<Arm>,
}

impl FockState {
    /// Builds a state over the declared arms. Patterns are sorted internally and
    /// repeated patterns are summed.
    pub fn new(arms: &[Arm], terms: Vec<(Pattern, C64)>) -> Result<Self> {
        let arms: BTreeSet<Arm> = arms.iter().copied().collect();
        let mut out = FockState {
            terms: BTreeMap::new(),
            photons: terms.first().map_or(0, |t| t.0.len()),
            arms,
        };
        for (mut p, a) in terms {
            if p.len() != out.photons {
                return Err(Error::InvalidState(format!(
                    "pattern with {} photons in a {}-photon state",
                    p.len(),
                    out.photons
                )));
            }
            if let Some(m) = p.iter().find(|m| !out.arms.contains(&m.arm)) {
                return Err(Error::ModeResolution(format!("{m:?}")));
            }
            p.sort();
            *out.terms.entry(p).or_insert(c(0.0, 0.0)) += a;
        }
        Ok(out)
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn arms(&self) -> &BTreeSet<Arm> {
        &self.arms
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Pattern, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, pattern: &[OpticalMode]) -> C64 {
        let mut p = pattern.to_vec();
        p.sort();
        self.terms.get(&p).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, s: C64) -> FockState {
        FockState {
            terms: self.terms.iter().map(|(p, a)| (p.clone(), a * s)).collect(),
            photons: self.photons,
            arms: self.arms.clone(),
        }
    }

    fn from_monomials(&self, photons: usize, mono: BTreeMap<Pattern, C64>) -> FockState {
        let terms = mono
            .into_iter()
            .map(|(p, m)| {
                let a = m * factorial_weight(&p).sqrt();
                (p, a)
            })
            .filter(|(_, a)| a.norm() > PRUNE)
            .collect();
        FockState {
            terms,
            photons,
            arms: self.arms.clone(),
        }
    }

    /// Joint state of independent photon groups.
    pub fn product(&self, other: &FockState) -> FockState {
        let mut mono: BTreeMap<Pattern, C64> = BTreeMap::new();
        for (p, a) in &self.terms {
            let ma = a / factorial_weight(p).sqrt();
            for (q, b) in &other.terms {
                let mb = b / factorial_weight(q).sqrt();
                let mut r = p.clone();
                r.extend_from_slice(q);
                r.sort();
                *mono.entry(r).or_insert(c(0.0, 0.0)) += ma * mb;
            }
        }
        let mut arms = self.arms.clone();
        arms.extend(other.arms.iter().copied());
        let base = FockState {
            terms: BTreeMap::new(),
            photons: 0,
            arms,
        };
        base.from_monomials(self.photons + other.photons, mono)
    }

    /// Applies a linear-optical element by expanding every creation operator.
    pub fn apply(&self, element: &OpticalElement) -> Result<FockState> {
        if let Some(a) = element.arms().into_iter().find(|a| !self.arms.contains(a)) {
            return Err(Error::ModeResolution(format!(
                "{a:?} is not part of this state"
            )));
        }
        let mut mono: BTreeMap<Pattern, C64> = BTreeMap::new();
        for (p, a) in &self.terms {
            let mut partial: Vec<(Pattern, C64)> =
                vec![(Vec::with_capacity(p.len()), a / factorial_weight(p).sqrt())];
            for m in p {
                let images = element
                    .transfer(m)
                    .unwrap_or_else(|| vec![(*m, c(1.0, 0.0))]);
                let mut next = Vec::with_capacity(partial.len() * images.len());
                for (q, coeff) in &partial {
                    for (img, u) in &images {
                        let mut r = q.clone();
                        r.push(*img);
                        next.push((r, coeff * u));
                    }
                }
                partial = next;
            }
            for (mut q, coeff) in partial {
                q.sort();
                *mono.entry(q).or_insert(c(0.0, 0.0)) += coeff;
            }
        }
        Ok(self.from_monomials(self.photons, mono))
    }

    pub fn apply_all(&self, elements: &[OpticalElement]) -> Result<FockState> {
        let mut s = self.clone();
        for e in elements {
            s = s.apply(e)?;
        }
        Ok(s)
    }

    /// Keeps only the patterns accepted by `pattern`, without renormalizing.
    pub fn project(&self, pattern: &PostSelectionPattern) -> FockState {
        FockState {
            terms: self
                .terms
                .iter()
                .filter(|(p, _)| pattern.accepts(p))
                .map(|(p, a)| (p.clone(), *a))
                .collect(),
            photons: self.photons,
            arms: self.arms.clone(),
        }
    }

    /// Conditions on `pattern`: returns the renormalized surviving state and its
    /// probability relative to this state's norm. No survivors gives probability 0
    /// and an empty state.
    pub fn post_select(&self, pattern: &PostSelectionPattern) -> (FockState, f64) {
        let kept = self.project(pattern);
        let total = self.norm_sqr();
        let p = kept.norm_sqr();
        if p <= 0.0 || total <= 0.0 {
            let empty = FockState {
                terms: BTreeMap::new(),
                photons: self.photons,
                arms: self.arms.clone(),
            };
            return (empty, 0.0);
        }
        (kept.scaled(c(1.0 / p.sqrt(), 0.0)), p / total)
    }
}

/// Detection condition: each selector must see exactly the given photon count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelectionPattern {
    required: Vec<(ModeSelector, usize)>,
}

fn overlap(a: &ModeSelector, b: &ModeSelector) -> bool {
    a.arm == b.arm
        && (a.rail.is_none() || b.rail.is_none() || a.rail == b.rail)
        && (a.pol.is_none() || b.pol.is_none() || a.pol == b.pol)
}

impl PostSelectionPattern {
    pub fn new(required: Vec<(ModeSelector, usize)>) -> Result<Self> {
        for i in 0..required.len() {
            for j in i + 1..required.len() {
                if overlap(&required[i].0, &required[j].0) {
                    return Err(Error::InvalidState(format!(
                        "overlapping selectors {:?} and {:?}",
                        required[i].0, required[j].0
                    )));
                }
            }
        }
        Ok(PostSelectionPattern { required })
    }

    /// Exactly one photon in each listed arm.
    pub fn one_per_arm(arms: &[Arm]) -> Self {
        PostSelectionPattern {
            required: arms.iter().map(|&a| (ModeSelector::arm(a), 1)).collect(),
        }
    }

    pub fn required(&self) -> &[(ModeSelector, usize)] {
        &self.required
    }

    pub fn accepts(&self, pattern: &[OpticalMode]) -> bool {
        self.required
            .iter()
            .all(|(sel, n)| pattern.iter().filter(|m| sel.matches(m)).count() == *n)
    }
}
