//! Log-normal pathloss RSS model.
//!
//! All arithmetic stays in the dB domain: the mean RSS at an RSU falls off
//! linearly in log-distance and the shadowing noise is additive Gaussian,
//! so observation vectors are multivariate normal with diagonal covariance
//! `sigma_t^2 * I`.

use std::io::{BufRead, BufReader, Read};

use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::scenario::Location;

/// Minimum source-to-RSU distance in meters; the pathloss mean diverges
/// as the distance approaches zero.
pub const D_MIN: f64 = 1.0;

/// Reference RSS, reference distance, pathloss exponent, and shadowing
/// standard deviation.
///
/// JSON schema: `{"p_d0": .., "d0": .., "gamma": .., "sigma_t": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Reference RSS in dBm measured at distance `d0`.
    pub p_d0: f64,
    /// Reference distance in meters.
    pub d0: f64,
    /// Pathloss exponent.
    pub gamma: f64,
    /// Shadowing standard deviation in dB.
    pub sigma_t: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) || !self.d0.is_finite() {
            return Err(Error::config(
                "d0",
                format!("reference distance must be positive, got {}", self.d0),
            ));
        }
        if !(self.sigma_t > 0.0) || !self.sigma_t.is_finite() {
            return Err(Error::config(
                "sigma_t",
                format!("noise standard deviation must be positive, got {}", self.sigma_t),
            ));
        }
        if !self.gamma.is_finite() || !self.p_d0.is_finite() {
            return Err(Error::config(
                "gamma",
                "gamma and p_d0 must be finite".to_string(),
            ));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    /// Typical outdoor suburban values used for simulation when a config
    /// does not override them.
    fn default() -> Self {
        ChannelParams {
            p_d0: -40.0,
            d0: 1.0,
            gamma: 2.5,
            sigma_t: 4.0,
        }
    }
}

/// Per-RSU RSS measurements in dBm, index-aligned with the scenario RSUs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RssVector(pub Vec<f64>);

impl RssVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Shadowing-noise law used when drawing observations. `StudentT` keeps
/// the same standard deviation as the Gaussian it replaces but with heavy
/// tails; it models field channels that deviate from log-normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    Gaussian,
    StudentT { dof: f64 },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if let NoiseModel::StudentT { dof } = self {
            if !(*dof > 2.0) {
                return Err(Error::config(
                    "dof",
                    format!("Student-t dof must exceed 2 for a finite variance, got {dof}"),
                ));
            }
        }
        Ok(())
    }

    fn sample(&self, sigma_t: f64, rng: &mut impl Rng) -> f64 {
        match self {
            NoiseModel::Gaussian => {
                Normal::new(0.0, sigma_t).expect("validated sigma").sample(rng)
            }
            NoiseModel::StudentT { dof } => {
                // Variance-matched scaling: a t(dof) variate has variance
                // dof / (dof - 2).
                let scale = sigma_t * ((dof - 2.0) / dof).sqrt();
                scale * StudentT::new(*dof).expect("validated dof").sample(rng)
            }
        }
    }
}

/// Mean RSS vector seen from `source`: entry `i` is
/// `p_d0 - 10 * gamma * log10(d_i / d0)` with `d_i` the distance from
/// `source` to `rsus[i]`. Used with the claimed location this is the H0
/// mean `u`; with the true location it is the H1 mean `v`.
pub fn mean_rss(params: &ChannelParams, source: Location, rsus: &[Location]) -> Result<Vec<f64>> {
    rsus.iter()
        .enumerate()
        .map(|(i, rsu)| {
            let d = source.distance(*rsu);
            if d < D_MIN {
                return Err(Error::TooCloseToRsu {
                    x: source.x,
                    y: source.y,
                    rsu: i,
                    d_min: D_MIN,
                });
            }
            Ok(params.p_d0 - 10.0 * params.gamma * (d / params.d0).log10())
        })
        .collect()
}

/// Draws one noisy observation vector from a vehicle at `truth_loc`:
/// independent per-RSU noise added to the mean RSS.
pub fn draw_observation(
    params: &ChannelParams,
    truth_loc: Location,
    rsus: &[Location],
    rng: &mut impl Rng,
) -> Result<RssVector> {
    draw_observation_with(params, &NoiseModel::Gaussian, truth_loc, rsus, rng)
}

/// [`draw_observation`] with a configurable noise law.
pub fn draw_observation_with(
    params: &ChannelParams,
    noise: &NoiseModel,
    truth_loc: Location,
    rsus: &[Location],
    rng: &mut impl Rng,
) -> Result<RssVector> {
    let mean = mean_rss(params, truth_loc, rsus)?;
    Ok(RssVector(
        mean.into_iter()
            .map(|m| m + noise.sample(params.sigma_t, rng))
            .collect(),
    ))
}

/// Batch observation drawing: item `i` uses seed stream `i` of `base_seed`,
/// so the batch reproduces bit-identically regardless of thread count.
pub fn draw_observations(
    params: &ChannelParams,
    noise: &NoiseModel,
    truths: &[Location],
    rsus: &[Location],
    base_seed: u64,
) -> Result<Vec<RssVector>> {
    exec::try_map_indexed(truths.len(), |i| {
        let mut rng = exec::stream_rng(base_seed, i as u64);
        draw_observation_with(params, noise, truths[i], rsus, &mut rng)
    })
}

/// Log-density of `obs` under a multivariate normal with the given mean
/// and covariance `sigma_t^2 * I`:
/// `-(N/2) ln(2π) - N ln(sigma_t) - ||obs - mean||² / (2 sigma_t²)`.
pub fn log_likelihood(obs: &[f64], mean: &[f64], sigma_t: f64) -> Result<f64> {
    if obs.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            actual: obs.len(),
        });
    }
    let n = obs.len() as f64;
    let sq: f64 = obs
        .iter()
        .zip(mean)
        .map(|(y, m)| (y - m) * (y - m))
        .sum();
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI).ln() - n * sigma_t.ln()
        - sq / (2.0 * sigma_t * sigma_t))
}

/// Result of fitting the pathloss line to `(distance, rss)` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFit {
    pub gamma: f64,
    pub p_d0: f64,
    /// Residual standard deviation, the shadowing estimate.
    pub sigma_t: f64,
    pub d0: f64,
    pub n_samples: usize,
}

impl ChannelFit {
    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            p_d0: self.p_d0,
            d0: self.d0,
            gamma: self.gamma,
            sigma_t: self.sigma_t,
        }
    }
}

/// Ordinary least squares of RSS against `-10 log10(distance / d0)`: the
/// slope is the pathloss exponent, the intercept the reference RSS, and
/// the residual standard deviation estimates the shadowing sigma.
pub fn fit_gamma(samples: &[(f64, f64)], d0: f64) -> Result<ChannelFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "pathloss fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(d0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "reference distance must be positive, got {d0}"
        )));
    }
    for (d, _) in samples {
        if *d < D_MIN {
            return Err(Error::InvalidInput(format!(
                "fit distance {d} m is below the model minimum {D_MIN} m"
            )));
        }
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(d, _)| -10.0 * (d / d0).log10()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, rss)| *rss).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::SingularFit(
            "all sample distances are equal; the slope is unidentifiable".to_string(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let gamma = sxy / sxx;
    let p_d0 = y_mean - gamma * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let resid = y - (p_d0 + gamma * x);
            resid * resid
        })
        .sum();
    let dof = (samples.len().saturating_sub(2)).max(1) as f64;
    Ok(ChannelFit {
        gamma,
        p_d0,
        sigma_t: (sse / dof).sqrt(),
        d0,
        n_samples: samples.len(),
    })
}

/// Reads `distance,rss` rows (header required).
pub fn read_fit_csv<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let reader = BufReader::new(r);
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim() != "distance,rss" {
                return Err(Error::CsvParse {
                    line: 1,
                    message: format!("expected `distance,rss` header, got `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::CsvParse {
                line: idx + 1,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::CsvParse {
                line: idx + 1,
                message: format!("bad float `{s}`: {e}"),
            })
        };
        samples.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn mean_rss_at_reference_distance_is_p_d0() {
        let params = ChannelParams::default();
        let rsus = [Location { x: 0.0, y: 0.0 }];
        let source = Location { x: 1.0, y: 0.0 };
        let u = mean_rss(&params, source, &rsus).unwrap();
        assert_eq!(u[0], params.p_d0);
    }

    #[test]
    fn mean_rss_hand_value() {
        let params = ChannelParams {
            p_d0: -40.0,
            d0: 1.0,
            gamma: 2.0,
            sigma_t: 4.0,
        };
        let rsus = [Location { x: 0.0, y: 0.0 }];
        let u = mean_rss(&params, Location { x: 10.0, y: 0.0 }, &rsus).unwrap();
        assert_relative_eq!(u[0], -60.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_gamma_flattens_the_field() {
        let params = ChannelParams {
            gamma: 0.0,
            ..ChannelParams::default()
        };
        let s = default_scenario();
        let u = mean_rss(&params, Location { x: 33.0, y: 91.0 }, &s.rsus).unwrap();
        for entry in u {
            assert_eq!(entry, params.p_d0);
        }
    }

    #[test]
    fn mean_rss_strictly_decreasing_in_distance() {
        let params = ChannelParams::default();
        let rsu = [Location { x: 0.0, y: 0.0 }];
        let mut last = f64::INFINITY;
        for d in [1.0, 2.0, 5.0, 20.0, 100.0, 400.0] {
            let u = mean_rss(&params, Location { x: d, y: 0.0 }, &rsu).unwrap()[0];
            assert!(u < last);
            last = u;
        }
    }

    #[test]
    fn too_close_to_rsu_rejected() {
        let params = ChannelParams::default();
        let rsus = [Location { x: 0.0, y: 0.0 }];
        let err = mean_rss(&params, Location { x: 0.5, y: 0.0 }, &rsus);
        assert!(matches!(err, Err(Error::TooCloseToRsu { rsu: 0, .. })));
    }

    #[test]
    fn noiseless_limit_recovers_mean() {
        let params = ChannelParams {
            sigma_t: 1e-12,
            ..ChannelParams::default()
        };
        let s = default_scenario();
        let loc = Location { x: 40.0, y: 60.0 };
        let mean = mean_rss(&params, loc, &s.rsus).unwrap();
        let obs = draw_observation(&params, loc, &s.rsus, &mut rng(1)).unwrap();
        for (o, m) in obs.as_slice().iter().zip(&mean) {
            assert!((o - m).abs() < 1e-9);
        }
    }

    #[test]
    fn observation_moments_match_model() {
        let params = ChannelParams::default();
        let s = default_scenario();
        let loc = Location { x: 40.0, y: 60.0 };
        let mean = mean_rss(&params, loc, &s.rsus).unwrap();
        let n = 100_000;
        let obs = draw_observations(&params, &NoiseModel::Gaussian, &vec![loc; n], &s.rsus, 99)
            .unwrap();
        for i in 0..s.n_rsus() {
            let vals: Vec<f64> = obs.iter().map(|o| o.as_slice()[i]).collect();
            let m = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let tol = 4.0 * params.sigma_t / (n as f64).sqrt();
            assert!((m - mean[i]).abs() < tol, "mean off: {} vs {}", m, mean[i]);
            let sig2 = params.sigma_t * params.sigma_t;
            assert!((var - sig2).abs() < 0.05 * sig2, "variance off: {var} vs {sig2}");
        }
    }

    #[test]
    fn cross_rsu_noise_is_uncorrelated() {
        let params = ChannelParams::default();
        let s = default_scenario();
        let loc = Location { x: 70.0, y: 20.0 };
        let n = 100_000;
        let obs = draw_observations(&params, &NoiseModel::Gaussian, &vec![loc; n], &s.rsus, 7)
            .unwrap();
        for a in 0..s.n_rsus() {
            for b in (a + 1)..s.n_rsus() {
                let xs: Vec<f64> = obs.iter().map(|o| o.as_slice()[a]).collect();
                let ys: Vec<f64> = obs.iter().map(|o| o.as_slice()[b]).collect();
                let mx = xs.iter().sum::<f64>() / n as f64;
                let my = ys.iter().sum::<f64>() / n as f64;
                let cov: f64 =
                    xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n as f64;
                let sx = (xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / n as f64).sqrt();
                let sy = (ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / n as f64).sqrt();
                let rho = cov / (sx * sy);
                assert!(rho.abs() < 0.02, "rsu {a}/{b} correlated: {rho}");
            }
        }
    }

    #[test]
    fn student_t_noise_matches_requested_spread() {
        let params = ChannelParams::default();
        let noise = NoiseModel::StudentT { dof: 3.0 };
        let mut r = rng(31);
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| noise.sample(params.sigma_t, &mut r)).collect();
        let m = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        // t(3) variance converges slowly; allow a wide band.
        let sig2 = params.sigma_t * params.sigma_t;
        assert!((var - sig2).abs() < 0.25 * sig2, "variance {var} vs {sig2}");
    }

    #[test]
    fn log_likelihood_at_mode_standard_normal() {
        let l = log_likelihood(&[0.0], &[0.0], 1.0).unwrap();
        assert_relative_eq!(l, -0.5 * (2.0 * std::f64::consts::PI).ln(), max_relative = 1e-12);
    }

    #[test]
    fn log_likelihood_translation_invariant() {
        let obs = [-62.0, -70.5, -55.1];
        let mean = [-60.0, -71.0, -54.0];
        let shifted_obs: Vec<f64> = obs.iter().map(|v| v + 13.25).collect();
        let shifted_mean: Vec<f64> = mean.iter().map(|v| v + 13.25).collect();
        let a = log_likelihood(&obs, &mean, 3.0).unwrap();
        let b = log_likelihood(&shifted_obs, &shifted_mean, 3.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn log_likelihood_length_mismatch_rejected() {
        assert!(matches!(
            log_likelihood(&[0.0, 1.0], &[0.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fit_recovers_noiseless_model() {
        let truth = ChannelParams {
            p_d0: -38.0,
            d0: 1.0,
            gamma: 2.7,
            sigma_t: 4.0,
        };
        let rsu = [Location { x: 0.0, y: 0.0 }];
        let samples: Vec<(f64, f64)> = (1..=60)
            .map(|k| {
                let d = 1.0 + k as f64 * 3.0;
                let rss = mean_rss(&truth, Location { x: d, y: 0.0 }, &rsu).unwrap()[0];
                (d, rss)
            })
            .collect();
        let fit = fit_gamma(&samples, 1.0).unwrap();
        assert_relative_eq!(fit.gamma, 2.7, epsilon = 1e-9);
        assert_relative_eq!(fit.p_d0, -38.0, epsilon = 1e-9);
        assert!(fit.sigma_t < 1e-9);
    }

    #[test]
    fn fit_is_consistent_under_noise() {
        let truth = ChannelParams {
            p_d0: -40.0,
            d0: 1.0,
            gamma: 2.5,
            sigma_t: 4.0,
        };
        let rsu = [Location { x: 0.0, y: 0.0 }];
        let mut r = rng(77);
        let noise = Normal::new(0.0, truth.sigma_t).unwrap();
        let samples: Vec<(f64, f64)> = (0..10_000)
            .map(|_| {
                let d = r.random_range(1.0..=200.0);
                let rss = mean_rss(&truth, Location { x: d, y: 0.0 }, &rsu).unwrap()[0]
                    + noise.sample(&mut r);
                (d, rss)
            })
            .collect();
        let fit = fit_gamma(&samples, 1.0).unwrap();
        assert!((fit.gamma - truth.gamma).abs() < 0.05, "gamma {}", fit.gamma);
        assert!((fit.sigma_t - truth.sigma_t).abs() < 0.1, "sigma {}", fit.sigma_t);
    }

    #[test]
    fn fit_error_shrinks_with_sample_count() {
        let truth = ChannelParams::default();
        let rsu = [Location { x: 0.0, y: 0.0 }];
        let mut errs = Vec::new();
        for (seed, n) in [(1u64, 100usize), (2, 1000), (3, 10_000)] {
            let mut r = rng(seed);
            let noise = Normal::new(0.0, truth.sigma_t).unwrap();
            let samples: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    let d = r.random_range(1.0..=200.0);
                    let rss = mean_rss(&truth, Location { x: d, y: 0.0 }, &rsu).unwrap()[0]
                        + noise.sample(&mut r);
                    (d, rss)
                })
                .collect();
            errs.push((fit_gamma(&samples, 1.0).unwrap().gamma - truth.gamma).abs());
        }
        // 1/sqrt(n) scaling with generous statistical slack.
        assert!(errs[2] < errs[0] * 0.5 + 5e-3, "errors {errs:?}");
    }

    #[test]
    fn two_point_fit_interpolates_exactly() {
        let samples = [(10.0, -65.0), (100.0, -90.0)];
        let fit = fit_gamma(&samples, 1.0).unwrap();
        assert_relative_eq!(
            fit.p_d0 - 10.0 * fit.gamma * (10.0f64).log10(),
            -65.0,
            epsilon = 1e-9
        );
        assert!(fit.sigma_t < 1e-12);
    }

    #[test]
    fn equal_distances_are_singular() {
        let samples = [(10.0, -65.0), (10.0, -64.0), (10.0, -66.0)];
        assert!(matches!(fit_gamma(&samples, 1.0), Err(Error::SingularFit(_))));
    }

    #[test]
    fn fit_csv_parses() {
        let csv = "distance,rss\n10.0,-65.0\n100.0,-90.0\n";
        let samples = read_fit_csv(csv.as_bytes()).unwrap();
        assert_eq!(samples, vec![(10.0, -65.0), (100.0, -90.0)]);
        assert!(read_fit_csv("d,r\n1,2\n".as_bytes()).is_err());
    }
}
