//! Verification-problem geometry: RSU layout, vehicle placement, and
//! labeled legitimate/spoofed dataset generation.
//!
//! A legitimate vehicle claims exactly its true location; a malicious one
//! claims a location displaced by at least the scenario's minimum spoofing
//! distance `r`. Generation is seeded and partitions the seed space per
//! sample, so datasets are byte-identical regardless of thread count.

use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::D_MIN;
use crate::error::{Error, Result};
use crate::exec;

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidInput(format!(
                "location components must be finite, got ({x}, {y})"
            )));
        }
        Ok(Location { x, y })
    }

    pub fn distance(&self, other: Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl TryFrom<[f64; 2]> for Location {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Location::new(v[0], v[1])
    }
}

impl From<Location> for [f64; 2] {
    fn from(l: Location) -> Self {
        [l.x, l.y]
    }
}

/// Axis-aligned rectangle given by min/max corners in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct Rect {
    pub min: Location,
    pub max: Location,
}

impl Rect {
    pub fn new(min: Location, max: Location) -> Result<Self> {
        if min.x > max.x || min.y > max.y {
            return Err(Error::InvalidInput(format!(
                "rectangle min corner ({}, {}) exceeds max corner ({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(Rect { min, max })
    }

    pub fn contains(&self, p: Location) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Location {
        Location {
            x: 0.5 * (self.min.x + self.max.x),
            y: 0.5 * (self.min.y + self.max.y),
        }
    }

    /// Grows the rectangle by `margin` meters on every side.
    pub fn inflate(&self, margin: f64) -> Rect {
        Rect {
            min: Location {
                x: self.min.x - margin,
                y: self.min.y - margin,
            },
            max: Location {
                x: self.max.x + margin,
                y: self.max.y + margin,
            },
        }
    }
}

impl TryFrom<[[f64; 2]; 2]> for Rect {
    type Error = Error;
    fn try_from(v: [[f64; 2]; 2]) -> Result<Self> {
        Rect::new(Location::try_from(v[0])?, Location::try_from(v[1])?)
    }
}

impl From<Rect> for [[f64; 2]; 2] {
    fn from(r: Rect) -> Self {
        [r.min.into(), r.max.into()]
    }
}

/// Hypothesis label: `H0` legitimate (claim equals truth), `H1` malicious
/// (claim displaced by at least `r`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn is_malicious(self) -> bool {
        matches!(self, Hypothesis::H1)
    }

    /// CSV label encoding: 0 legitimate, 1 malicious.
    pub fn as_u8(self) -> u8 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Hypothesis::H0),
            1 => Ok(Hypothesis::H1),
            other => Err(Error::InvalidInput(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// One labeled sample: where the vehicle actually is and what it claims.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSample {
    pub true_loc: Location,
    pub claimed_loc: Location,
    pub label: Hypothesis,
}

/// RSU layout, area bounds, coverage radius, spoofing-displacement
/// constraint, and class priors.
///
/// JSON schema: `rsus` (array of `[x, y]`), `area`
/// (`[[xmin, ymin], [xmax, ymax]]`), `tx_range`, `r`, `priors`
/// (`[p0, p1]`), optional `r_max` (spoofed-claim displacement upper bound,
/// defaults to `r + 50`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub rsus: Vec<Location>,
    pub area: Rect,
    pub tx_range: f64,
    pub r: f64,
    pub priors: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

impl Scenario {
    /// Upper bound for the spoofed-claim displacement distribution.
    pub fn r_max(&self) -> f64 {
        self.r_max.unwrap_or(self.r + 50.0)
    }

    pub fn n_rsus(&self) -> usize {
        self.rsus.len()
    }

    pub fn prior_h0(&self) -> f64 {
        self.priors[0]
    }

    pub fn prior_h1(&self) -> f64 {
        self.priors[1]
    }

    /// Returns a copy with a different minimum spoofing displacement. A
    /// configured `r_max` is dropped so it re-derives from the new `r`.
    pub fn with_r(&self, r: f64) -> Scenario {
        Scenario {
            r,
            r_max: None,
            ..self.clone()
        }
    }

    /// Checks every scenario invariant; error paths are relative to the
    /// scenario object (e.g. `priors`, `rsus[2]`).
    pub fn validate(&self) -> Result<()> {
        if self.rsus.is_empty() {
            return Err(Error::config("rsus", "at least one RSU is required"));
        }
        for (i, rsu) in self.rsus.iter().enumerate() {
            if !self.area.contains(*rsu) {
                return Err(Error::config(
                    format!("rsus[{i}]"),
                    format!("RSU ({}, {}) lies outside the area", rsu.x, rsu.y),
                ));
            }
            for (j, other) in self.rsus.iter().enumerate().skip(i + 1) {
                if rsu == other {
                    return Err(Error::config(
                        format!("rsus[{j}]"),
                        format!("duplicate RSU position ({}, {})", rsu.x, rsu.y),
                    ));
                }
            }
        }
        for (i, p) in self.priors.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::config(
                    format!("priors[{i}]"),
                    format!("prior {p} outside [0, 1]"),
                ));
            }
        }
        if (self.priors[0] + self.priors[1] - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "priors",
                format!(
                    "priors must sum to 1, got {}",
                    self.priors[0] + self.priors[1]
                ),
            ));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::config("r", format!("r must be positive, got {}", self.r)));
        }
        if !(self.tx_range > 0.0) || !self.tx_range.is_finite() {
            return Err(Error::config(
                "tx_range",
                format!("tx_range must be positive, got {}", self.tx_range),
            ));
        }
        if self.r_max() < self.r {
            return Err(Error::config(
                "r_max",
                format!("r_max {} is below r {}", self.r_max(), self.r),
            ));
        }
        Ok(())
    }

    /// True when `p` can be heard by at least one RSU.
    pub fn in_coverage(&self, p: Location) -> bool {
        self.rsus.iter().any(|rsu| rsu.distance(p) <= self.tx_range)
    }
}

/// The canonical 150 m × 150 m three-RSU test scenario: RSU-1 at the area
/// origin, RSU-2 and RSU-3 spanning the far edge so the geometry is
/// non-collinear, full coverage, equal class priors.
pub fn default_scenario() -> Scenario {
    Scenario {
        rsus: vec![
            Location { x: 0.0, y: 0.0 },
            Location { x: 150.0, y: 0.0 },
            Location { x: 75.0, y: 150.0 },
        ],
        area: Rect {
            min: Location { x: 0.0, y: 0.0 },
            max: Location { x: 150.0, y: 150.0 },
        },
        tx_range: 300.0,
        r: 50.0,
        priors: [0.5, 0.5],
        r_max: None,
    }
}

/// Draws a vehicle position uniformly over the scenario area, rejecting
/// the thin exclusion disks of radius [`D_MIN`] around each RSU where the
/// pathloss model is undefined.
pub fn sample_true_location(scenario: &Scenario, rng: &mut impl Rng) -> Location {
    let area = &scenario.area;
    if area.width() == 0.0 && area.height() == 0.0 {
        return area.min;
    }
    loop {
        let p = Location {
            x: rng.random_range(area.min.x..=area.max.x),
            y: rng.random_range(area.min.y..=area.max.y),
        };
        if scenario.rsus.iter().all(|rsu| rsu.distance(p) >= D_MIN) {
            return p;
        }
    }
}

/// Nudges `p` radially away from `origin` until the computed Euclidean
/// distance is at least `r`. The displacement constraint is enforced on
/// the rounded coordinates, not on the intended geometry.
pub(crate) fn enforce_min_distance(origin: Location, mut p: Location, r: f64) -> Location {
    while origin.distance(p) < r {
        p = Location {
            x: origin.x + (p.x - origin.x) * (1.0 + 1e-14),
            y: origin.y + (p.y - origin.y) * (1.0 + 1e-14),
        };
    }
    p
}

const MAX_REJECTION_ATTEMPTS: usize = 10_000;

/// Draws a spoofed claim for a vehicle at `true_loc`: angle uniform in
/// [0, 2π), displacement uniform in [r, r_max], rejection-sampled until
/// the claim is covered by an RSU and clear of the antenna exclusion
/// disks. The returned claim satisfies `distance ≥ r` exactly.
pub fn sample_spoofed_claim(
    scenario: &Scenario,
    true_loc: Location,
    rng: &mut impl Rng,
) -> Result<Location> {
    if !scenario.area.contains(true_loc) {
        return Err(Error::InvalidInput(format!(
            "true location ({}, {}) is outside the scenario area",
            true_loc.x, true_loc.y
        )));
    }
    let (r, r_max) = (scenario.r, scenario.r_max());
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let dist = rng.random_range(r..=r_max);
        let claim = Location {
            x: true_loc.x + dist * theta.cos(),
            y: true_loc.y + dist * theta.sin(),
        };
        if !scenario.in_coverage(claim) {
            continue;
        }
        if scenario.rsus.iter().any(|rsu| rsu.distance(claim) < D_MIN) {
            continue;
        }
        return Ok(enforce_min_distance(true_loc, claim, r));
    }
    Err(Error::Infeasible(format!(
        "no spoofed claim at displacement [{r}, {r_max}] m from ({}, {}) lies within RSU coverage",
        true_loc.x, true_loc.y
    )))
}

/// Generates a balanced labeled dataset: `n_samples / 2` legitimate
/// samples (claim equals truth bitwise) and `n_samples / 2` spoofed ones,
/// shuffled. Sample `i` draws from seed stream `i`, so the result is
/// identical for a fixed seed whatever the thread count.
pub fn generate_dataset(
    scenario: &Scenario,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<Vec<GroundTruthSample>> {
    generate_with(scenario, n_samples, rng, |s, truth, item_rng| {
        sample_spoofed_claim(s, truth, item_rng)
    })
}

/// Shared generator skeleton: `spoof` produces the H1 claim for a truth.
pub(crate) fn generate_with<F>(
    scenario: &Scenario,
    n_samples: usize,
    rng: &mut impl Rng,
    spoof: F,
) -> Result<Vec<GroundTruthSample>>
where
    F: Fn(&Scenario, Location, &mut rand_chacha::ChaCha8Rng) -> Result<Location> + Sync + Send,
{
    scenario.validate()?;
    if n_samples % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "n_samples must be even to balance the classes, got {n_samples}"
        )));
    }
    let base = rng.next_u64();
    let half = n_samples / 2;
    let mut samples = exec::try_map_indexed(n_samples, |i| -> Result<GroundTruthSample> {
        let mut item_rng = exec::stream_rng(base, i as u64);
        let truth = sample_true_location(scenario, &mut item_rng);
        if i < half {
            Ok(GroundTruthSample {
                true_loc: truth,
                claimed_loc: truth,
                label: Hypothesis::H0,
            })
        } else {
            let claim = spoof(scenario, truth, &mut item_rng)?;
            Ok(GroundTruthSample {
                true_loc: truth,
                claimed_loc: claim,
                label: Hypothesis::H1,
            })
        }
    })?;
    let mut shuffle_rng = exec::stream_rng(base, u64::MAX);
    samples.shuffle(&mut shuffle_rng);
    Ok(samples)
}

/// Writes `label,true_x,true_y,claim_x,claim_y` rows. Floats use the
/// shortest round-trip representation, so equal datasets serialize to
/// identical bytes.
pub fn write_dataset_csv<W: Write>(mut w: W, samples: &[GroundTruthSample]) -> Result<()> {
    writeln!(w, "label,true_x,true_y,claim_x,claim_y")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.label.as_u8(),
            s.true_loc.x,
            s.true_loc.y,
            s.claimed_loc.x,
            s.claimed_loc.y
        )?;
    }
    Ok(())
}

pub fn read_dataset_csv<R: Read>(r: R) -> Result<Vec<GroundTruthSample>> {
    let reader = BufReader::new(r);
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim() != "label,true_x,true_y,claim_x,claim_y" {
                return Err(Error::CsvParse {
                    line: 1,
                    message: format!("expected dataset header, got `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::CsvParse {
                line: idx + 1,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::CsvParse {
                line: idx + 1,
                message: format!("bad float `{s}`: {e}"),
            })
        };
        let label = Hypothesis::from_u8(fields[0].trim().parse::<u8>().map_err(|e| {
            Error::CsvParse {
                line: idx + 1,
                message: format!("bad label `{}`: {e}", fields[0]),
            }
        })?)?;
        samples.push(GroundTruthSample {
            true_loc: Location::new(parse(fields[1])?, parse(fields[2])?)?,
            claimed_loc: Location::new(parse(fields[3])?, parse(fields[4])?)?,
            label,
        });
    }
    Ok(samples)
}
