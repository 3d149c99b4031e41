//! The optimizing spoofer: given its true location, picks the claimed
//! location that minimizes the KL divergence between the two
//! hypothesis-conditional observation distributions, subject to the
//! minimum-displacement and coverage constraints.
//!
//! For diagonal covariance the divergence reduces to
//! `||v - u||^2 / (2 sigma_t^2)`, so the attacker is hunting claims whose
//! mean RSS vector matches the one its true position produces. The search
//! runs a coarse feasible-region grid, a 1-degree scan of the
//! displacement-constraint circle, and projected Nelder-Mead refinement
//! from the best candidates. All stages are deterministic; grid
//! evaluation parallelizes with an exact lexicographic min reduction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{mean_rss, ChannelParams, D_MIN};
use crate::error::{Error, Result};
use crate::exec;
use crate::scenario::{enforce_min_distance, GroundTruthSample, Location, Rect, Scenario};

/// Feasible set for the attacker's claimed location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConstraints {
    /// Minimum displacement between claim and truth, meters.
    pub r: f64,
    /// The claim must be within this range of at least one RSU.
    pub tx_range: f64,
    /// Rectangle searched for candidate claims.
    pub search_region: Rect,
}

impl AttackConstraints {
    /// Constraints induced by a scenario: the search region is the area
    /// inflated by the maximum spoofing displacement.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        AttackConstraints {
            r: scenario.r,
            tx_range: scenario.tx_range,
            search_region: scenario.area.inflate(scenario.r_max()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidInput(format!(
                "attack constraint r must be positive, got {}",
                self.r
            )));
        }
        if self.search_region.width() <= 0.0 || self.search_region.height() <= 0.0 {
            return Err(Error::InvalidInput(
                "attack search region is degenerate".to_string(),
            ));
        }
        Ok(())
    }
}

/// KL divergence (nats) between the observation distributions induced by
/// `true_loc` (H1 mean `v`) and `claimed_loc` (H0 mean `u`):
/// `||v - u||^2 / (2 sigma_t^2)`.
pub fn kl_divergence(
    params: &ChannelParams,
    rsus: &[Location],
    true_loc: Location,
    claimed_loc: Location,
) -> Result<f64> {
    let v = mean_rss(params, true_loc, rsus)?;
    let u = mean_rss(params, claimed_loc, rsus)?;
    let sq: f64 = v.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq / (2.0 * params.sigma_t * params.sigma_t))
}

const COARSE_GRID_STEP: f64 = 5.0;
const CIRCLE_STEPS: usize = 360;
const GRID_SEEDS: usize = 8;
const CIRCLE_SEEDS: usize = 4;
const NM_MAX_ITER: usize = 250;

struct Objective<'a> {
    params: &'a ChannelParams,
    rsus: &'a [Location],
    true_loc: Location,
    truth_mean: Vec<f64>,
    constraints: &'a AttackConstraints,
}

impl<'a> Objective<'a> {
    fn new(
        params: &'a ChannelParams,
        rsus: &'a [Location],
        true_loc: Location,
        constraints: &'a AttackConstraints,
    ) -> Result<Self> {
        Ok(Objective {
            params,
            rsus,
            true_loc,
            truth_mean: mean_rss(params, true_loc, rsus)?,
            constraints,
        })
    }

    fn in_coverage(&self, p: Location) -> bool {
        self.rsus
            .iter()
            .any(|rsu| rsu.distance(p) <= self.constraints.tx_range)
    }

    /// Full feasibility, including the displacement constraint.
    fn feasible(&self, p: Location) -> bool {
        self.constraints.search_region.contains(p)
            && self.in_coverage(p)
            && self.rsus.iter().all(|rsu| rsu.distance(p) >= D_MIN)
            && self.true_loc.distance(p) >= self.constraints.r
    }

    /// Radial push onto the displacement-constraint boundary when `p`
    /// falls inside the r-disk around the truth.
    fn project(&self, p: Location) -> Location {
        let d = self.true_loc.distance(p);
        if d >= self.constraints.r {
            return p;
        }
        if d == 0.0 {
            // Degenerate direction; push along +x.
            return enforce_min_distance(
                self.true_loc,
                Location {
                    x: self.true_loc.x + self.constraints.r,
                    y: self.true_loc.y,
                },
                self.constraints.r,
            );
        }
        let scale = self.constraints.r / d;
        enforce_min_distance(
            self.true_loc,
            Location {
                x: self.true_loc.x + (p.x - self.true_loc.x) * scale,
                y: self.true_loc.y + (p.y - self.true_loc.y) * scale,
            },
            self.constraints.r,
        )
    }

    /// Divergence at `p`, or infinity outside the feasible set. `p` must
    /// already satisfy the displacement constraint (use [`Self::project`]).
    fn eval(&self, p: Location) -> f64 {
        if !self.feasible(p) {
            return f64::INFINITY;
        }
        let sq: f64 = self
            .rsus
            .iter()
            .zip(&self.truth_mean)
            .map(|(rsu, v_i)| {
                let d = rsu.distance(p);
                let u_i =
                    self.params.p_d0 - 10.0 * self.params.gamma * (d / self.params.d0).log10();
                (v_i - u_i) * (v_i - u_i)
            })
            .sum();
        sq / (2.0 * self.params.sigma_t * self.params.sigma_t)
    }
}

/// `(value, point)` ordering: by value, then x, then y. Infeasible points
/// carry infinite values and lose to any feasible one.
fn better(a: (f64, Location), b: (f64, Location)) -> (f64, Location) {
    let key = |c: &(f64, Location)| (c.0, c.1.x, c.1.y);
    if key(&b) < key(&a) {
        b
    } else {
        a
    }
}

/// Optimal claimed location for a vehicle at `true_loc`: the feasible
/// claim minimizing [`kl_divergence`], with the displacement constraint
/// satisfied exactly by the returned point.
pub fn optimize_claim(
    params: &ChannelParams,
    rsus: &[Location],
    true_loc: Location,
    constraints: &AttackConstraints,
) -> Result<(Location, f64)> {
    params.validate().map_err(|e| e.prefix_path("channel"))?;
    constraints.validate()?;
    let obj = Objective::new(params, rsus, true_loc, constraints)?;

    // Stage 1: coarse grid over the search region.
    let region = constraints.search_region;
    let nx = (region.width() / COARSE_GRID_STEP).floor() as usize + 1;
    let ny = (region.height() / COARSE_GRID_STEP).floor() as usize + 1;
    let cells = exec::map_indexed(nx * ny, |k| {
        let p = Location {
            x: region.min.x + (k % nx) as f64 * COARSE_GRID_STEP,
            y: region.min.y + (k / nx) as f64 * COARSE_GRID_STEP,
        };
        (obj.eval(p), p)
    });

    // Stage 2: the displacement-constraint circle at 1-degree resolution;
    // when the unconstrained minimizer sits inside the r-disk the optimum
    // lies on this boundary.
    let circle: Vec<(f64, Location)> = (0..CIRCLE_STEPS)
        .map(|k| {
            let theta = k as f64 * std::f64::consts::TAU / CIRCLE_STEPS as f64;
            let p = enforce_min_distance(
                true_loc,
                Location {
                    x: true_loc.x + constraints.r * theta.cos(),
                    y: true_loc.y + constraints.r * theta.sin(),
                },
                constraints.r,
            );
            (obj.eval(p), p)
        })
        .collect();

    let mut feasible: Vec<(f64, Location)> = cells
        .iter()
        .chain(circle.iter())
        .copied()
        .filter(|(v, _)| v.is_finite())
        .collect();
    if feasible.is_empty() {
        return Err(Error::Infeasible(format!(
            "no claim satisfies displacement >= {} m and coverage from ({}, {})",
            constraints.r, true_loc.x, true_loc.y
        )));
    }
    feasible
        .sort_by(|a, b| (a.0, a.1.x, a.1.y).partial_cmp(&(b.0, b.1.x, b.1.y)).unwrap());

    // Stage 3: Nelder-Mead polish from spatially distinct grid leaders and
    // the best circle angles, projected onto the constraint.
    let mut seeds: Vec<(f64, Location)> = Vec::new();
    for cand in &feasible {
        if seeds.len() >= GRID_SEEDS {
            break;
        }
        if seeds
            .iter()
            .all(|(_, s)| s.distance(cand.1) >= 2.0 * COARSE_GRID_STEP)
        {
            seeds.push(*cand);
        }
    }
    let mut circle_sorted: Vec<(f64, Location)> = circle
        .iter()
        .copied()
        .filter(|(v, _)| v.is_finite())
        .collect();
    circle_sorted
        .sort_by(|a, b| (a.0, a.1.x, a.1.y).partial_cmp(&(b.0, b.1.x, b.1.y)).unwrap());
    seeds.extend(circle_sorted.iter().take(CIRCLE_SEEDS));

    let mut best = feasible[0];
    for (_, seed) in &seeds {
        let refined = nelder_mead(&obj, *seed, COARSE_GRID_STEP / 2.0);
        best = better(best, refined);
    }

    // The polish works on projected points, so the constraint holds; the
    // final enforcement covers the exact-inequality contract on the
    // returned coordinates.
    let claim = enforce_min_distance(true_loc, best.1, constraints.r);
    let value = obj.eval(claim);
    if !value.is_finite() {
        return Err(Error::Infeasible(
            "refined claim left the feasible region".to_string(),
        ));
    }
    Ok((claim, value))
}

/// Projected 2-D Nelder-Mead: proposals inside the r-disk are pushed onto
/// its boundary before evaluation, and the returned point is the best
/// projected vertex seen.
fn nelder_mead(obj: &Objective<'_>, start: Location, step: f64) -> (f64, Location) {
    let f = |p: Location| -> (f64, Location) {
        let q = obj.project(p);
        (obj.eval(q), q)
    };
    let mut simplex = vec![
        start,
        Location {
            x: start.x + step,
            y: start.y,
        },
        Location {
            x: start.x,
            y: start.y + step,
        },
    ];
    let mut values: Vec<(f64, Location)> = simplex.iter().map(|&p| f(p)).collect();
    let mut best = values.iter().copied().fold((f64::INFINITY, start), better);

    for _ in 0..NM_MAX_ITER {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| {
            (values[a].0, simplex[a].x, simplex[a].y)
                .partial_cmp(&(values[b].0, simplex[b].x, simplex[b].y))
                .unwrap()
        });
        let (lo, mid, hi) = (idx[0], idx[1], idx[2]);
        let spread =
            (simplex[lo].distance(simplex[mid])).max(simplex[lo].distance(simplex[hi]));
        if spread < 1e-10 {
            break;
        }
        let centroid = Location {
            x: 0.5 * (simplex[lo].x + simplex[mid].x),
            y: 0.5 * (simplex[lo].y + simplex[mid].y),
        };
        let reflect = Location {
            x: centroid.x + (centroid.x - simplex[hi].x),
            y: centroid.y + (centroid.y - simplex[hi].y),
        };
        let fr = f(reflect);
        best = better(best, fr);
        if fr.0 < values[lo].0 {
            let expand = Location {
                x: centroid.x + 2.0 * (centroid.x - simplex[hi].x),
                y: centroid.y + 2.0 * (centroid.y - simplex[hi].y),
            };
            let fe = f(expand);
            best = better(best, fe);
            if fe.0 < fr.0 {
                simplex[hi] = expand;
                values[hi] = fe;
            } else {
                simplex[hi] = reflect;
                values[hi] = fr;
            }
        } else if fr.0 < values[mid].0 {
            simplex[hi] = reflect;
            values[hi] = fr;
        } else {
            let contract = Location {
                x: centroid.x + 0.5 * (simplex[hi].x - centroid.x),
                y: centroid.y + 0.5 * (simplex[hi].y - centroid.y),
            };
            let fc = f(contract);
            best = better(best, fc);
            if fc.0 < values[hi].0 {
                simplex[hi] = contract;
                values[hi] = fc;
            } else {
                // Shrink toward the best vertex.
                for j in [mid, hi] {
                    simplex[j] = Location {
                        x: simplex[lo].x + 0.5 * (simplex[j].x - simplex[lo].x),
                        y: simplex[lo].y + 0.5 * (simplex[j].y - simplex[lo].y),
                    };
                    values[j] = f(simplex[j]);
                    best = better(best, values[j]);
                }
            }
        }
    }
    best
}

/// Balanced dataset where every malicious claim is the divergence-optimal
/// one instead of a random draw. Legitimate samples are generated exactly
/// as in [`crate::scenario::generate_dataset`].
pub fn generate_optimized_dataset(
    scenario: &Scenario,
    params: &ChannelParams,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<Vec<GroundTruthSample>> {
    let constraints = AttackConstraints::from_scenario(scenario);
    crate::scenario::generate_with(scenario, n_samples, rng, |s, truth, _| {
        optimize_claim(params, &s.rsus, truth, &constraints).map(|(claim, _)| claim)
    })
}
