use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::oscillatory_integral;
use crate::system::AdditiveSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ChiInfMethod {
    /// Monte Carlo slab volumes at `eps0, eps0/2, ...`, extrapolated to 0.
    Volume {
        eps0: f64,
        levels: usize,
        samples: u64,
        batches: u64,
        seed: u64,
    },
    /// Truncated Fourier integral over `|beta_i| <= beta_box`.
    Fourier { beta_box: f64, points_per_unit: usize },
}

impl ChiInfMethod {
    pub fn volume(samples: u64, seed: u64) -> Self {
        ChiInfMethod::Volume {
            eps0: 0.1,
            levels: 3,
            samples,
            batches: 64,
            seed,
        }
    }

    pub fn fourier(beta_box: f64) -> Self {
        ChiInfMethod::Fourier {
            beta_box,
            points_per_unit: 16,
        }
    }
}

impl Default for ChiInfMethod {
    fn default() -> Self {
        ChiInfMethod::volume(4_000_000, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiInfEstimate {
    pub value: f64,
    /// Two standard errors of the batch means (volume) or the Simpson
    /// refinement gap (fourier).
    pub statistical_error: f64,
    pub extrapolation_error: f64,
    /// `(eps, estimate)` along the ladder (volume method only)
    pub ladder: Vec<(f64, f64)>,
    /// the ladder moved against its own trend by more than the noise
    pub unstable: bool,
    /// a point with every `|Theta_i| <= eps` was seen
    pub real_witness: bool,
    pub method: ChiInfMethod,
}

impl ChiInfEstimate {
    pub fn error(&self) -> f64 {
        self.statistical_error + self.extrapolation_error
    }
}

/// Real density of solutions in the unit cube.
pub fn chi_inf(sys: &AdditiveSystem, method: &ChiInfMethod) -> Result<ChiInfEstimate> {
    match *method {
        ChiInfMethod::Volume {
            eps0,
            levels,
            samples,
            batches,
            seed,
        } => volume(sys, eps0, levels, samples, batches, seed, method),
        ChiInfMethod::Fourier {
            beta_box,
            points_per_unit,
        } => fourier(sys, beta_box, points_per_unit, method),
    }
}

#[allow(clippy::too_many_arguments)]
fn volume(
    sys: &AdditiveSystem,
    eps0: f64,
    levels: usize,
    samples: u64,
    batches: u64,
    seed: u64,
    method: &ChiInfMethod,
) -> Result<ChiInfEstimate> {
    if !(eps0 > 0.0) || levels < 2 || batches < 2 || samples < batches {
        return Err(Error::invalid("volume method needs eps0 > 0, two levels, two batches and samples >= batches"));
    }
    let (r, s) = (sys.r(), sys.s());
    let eps: Vec<f64> = (0..levels).map(|l| eps0 / 2f64.powi(l as i32)).collect();
    let per_batch = samples / batches;
    // hits[b][l]: points of batch b inside the slab of half-width eps[l]; the
    // same points serve every eps, so the ladder differences are low-noise
    let hits: Vec<Vec<u64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut counts = vec![0u64; levels];
            let mut z = vec![0.0; s];
            for _ in 0..per_batch {
                for v in z.iter_mut() {
                    *v = rng.gen::<f64>();
                }
                let worst = (0..r)
                    .map(|i| {
                        let d = sys.degrees()[i] as i32;
                        z.iter()
                            .enumerate()
                            .map(|(j, &zj)| sys.coeff(i, j) as f64 * zj.powi(d))
                            .sum::<f64>()
                            .abs()
                    })
                    .fold(0.0, f64::max);
                for (l, &e) in eps.iter().enumerate() {
                    if worst <= e {
                        counts[l] += 1;
                    } else {
                        break;
                    }
                }
            }
            counts
        })
        .collect();
    let scale = |l: usize| 1.0 / (per_batch as f64 * (2.0 * eps[l]).powi(r as i32));
    // polynomial in eps through every level, evaluated at eps = 0: the slab
    // average has an O(eps) part wherever the solution set has a singular point
    let extrapolate = |e: &[f64], nodes: &[f64]| -> f64 {
        (0..e.len())
            .map(|l| {
                let w: f64 = (0..e.len()).filter(|&m| m != l).map(|m| nodes[m] / (nodes[m] - nodes[l])).product();
                w * e[l]
            })
            .sum()
    };
    let richardson = |e: &[f64]| extrapolate(e, &eps[..e.len()]);
    let batch_values: Vec<f64> = hits
        .iter()
        .map(|h| {
            let e: Vec<f64> = (0..levels).map(|l| h[l] as f64 * scale(l)).collect();
            richardson(&e)
        })
        .collect();
    let nb = batches as f64;
    let mean = batch_values.iter().sum::<f64>() / nb;
    let var = batch_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nb - 1.0);
    let statistical_error = 2.0 * (var / nb).sqrt();
    let pooled: Vec<f64> = (0..levels)
        .map(|l| hits.iter().map(|h| h[l]).sum::<u64>() as f64 * scale(l) / nb)
        .collect();
    let value = richardson(&pooled);
    let extrapolation_error = if levels >= 3 {
        (value - extrapolate(&pooled[1..], &eps[1..])).abs()
    } else {
        (pooled[levels - 1] - pooled[levels - 2]).abs()
    };
    // per-level noise, to judge whether a wiggle in the ladder is real
    let level_err: Vec<f64> = (0..levels)
        .map(|l| {
            let vals: Vec<f64> = hits.iter().map(|h| h[l] as f64 * scale(l)).collect();
            let m = vals.iter().sum::<f64>() / nb;
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt()
        })
        .collect();
    let steps: Vec<f64> = pooled.windows(2).map(|w| w[1] - w[0]).collect();
    let unstable = steps.windows(2).enumerate().any(|(l, w)| {
        let noise = 2.0 * (level_err[l + 1] + level_err[l + 2]);
        w[0] * w[1] < 0.0 && w[0].abs().min(w[1].abs()) > noise
    });
    let real_witness = hits.iter().any(|h| h[levels - 1] > 0);
    Ok(ChiInfEstimate {
        value,
        statistical_error,
        extrapolation_error,
        ladder: eps.iter().copied().zip(pooled).collect(),
        unstable,
        real_witness,
        method: method.clone(),
    })
}

/// `phi_j(beta) = int_0^1 e(sum_i beta_i c_ij z^{d_i}) dz`
fn phi(sys: &AdditiveSystem, j: usize, beta: &[f64]) -> Result<Complex64> {
    let b: Vec<f64> = beta.iter().enumerate().map(|(i, &x)| x * sys.coeff(i, j) as f64).collect();
    Ok(oscillatory_integral(&b, sys.degrees(), 0.0, 1.0, None, 1e-9)?.value())
}

fn fourier(sys: &AdditiveSystem, beta_box: f64, ppu: usize, method: &ChiInfMethod) -> Result<ChiInfEstimate> {
    if !(beta_box > 0.0) || ppu < 2 {
        return Err(Error::invalid("fourier method needs beta_box > 0 and at least 2 points per unit"));
    }
    let r = sys.r();
    // even number of intervals per axis, divisible by 4 for the coarse rule
    let mut n = (2.0 * beta_box * ppu as f64).ceil() as usize;
    n += (4 - n % 4) % 4;
    let total = (n as f64 + 1.0).powi(r as i32);
    if total > 2e7 {
        return Err(Error::budget("fourier grid", total as u128, 20_000_000));
    }
    let h = 2.0 * beta_box / n as f64;
    let axis: Vec<f64> = (0..=n).map(|k| -beta_box + k as f64 * h).collect();
    // distinct columns share phi
    let mut columns: Vec<Vec<i64>> = Vec::new();
    let mut col_of = Vec::with_capacity(sys.s());
    for j in 0..sys.s() {
        let col: Vec<i64> = (0..r).map(|i| sys.coeff(i, j)).collect();
        match columns.iter().position(|c| *c == col) {
            Some(k) => col_of.push((k, j)),
            None => {
                columns.push(col);
                col_of.push((columns.len() - 1, j));
            }
        }
    }
    let reps: Vec<usize> = (0..columns.len())
        .map(|k| col_of.iter().find(|(c, _)| *c == k).unwrap().1)
        .collect();
    let mult: Vec<i32> = (0..columns.len())
        .map(|k| col_of.iter().filter(|(c, _)| *c == k).count() as i32)
        .collect();
    let idx_count = total as usize;
    let values: Vec<Complex64> = (0..idx_count)
        .into_par_iter()
        .map(|mut idx| {
            let beta: Vec<f64> = (0..r)
                .map(|_| {
                    let b = axis[idx % (n + 1)];
                    idx /= n + 1;
                    b
                })
                .collect();
            let mut prod = Complex64::new(1.0, 0.0);
            for (k, &j) in reps.iter().enumerate() {
                prod *= phi(sys, j, &beta)?.powi(mult[k]);
            }
            Ok(prod)
        })
        .collect::<Result<_>>()?;
    let simpson_weight = |k: usize, n: usize| -> f64 {
        if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    // fine rule (step h) and coarse rule (step 2h, every other node), both
    // over the full box, plus the fine rule over the inner half box
    let mut fine = Complex64::new(0.0, 0.0);
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut inner = Complex64::new(0.0, 0.0);
    for (flat, v) in values.iter().enumerate() {
        let mut rest = flat;
        let mut wf = 1.0;
        let mut wc = 1.0;
        let mut wi = 1.0;
        for _ in 0..r {
            let k = rest % (n + 1);
            rest /= n + 1;
            wf *= simpson_weight(k, n) * h / 3.0;
            wc *= if k % 2 == 0 { simpson_weight(k / 2, n / 2) * 2.0 * h / 3.0 } else { 0.0 };
            let (lo, hi) = (n / 4, 3 * n / 4);
            wi *= if (lo..=hi).contains(&k) { simpson_weight(k - lo, n / 2) * h / 3.0 } else { 0.0 };
        }
        fine += v * wf;
        coarse += v * wc;
        inner += v * wi;
    }
    let discretization = (fine - coarse).norm() / 15.0;
    let truncation = (fine - inner).norm();
    let err = discretization + truncation;
    if fine.im.abs() > (10.0 * err).max(1e-2 * fine.re.abs()).max(1e-9) {
        return Err(Error::invalid(format!(
            "fourier integral has imaginary part {:.3e} beyond its error {:.3e}",
            fine.im, err
        )));
    }
    Ok(ChiInfEstimate {
        value: fine.re,
        statistical_error: discretization,
        extrapolation_error: truncation,
        ladder: Vec::new(),
        unstable: false,
        real_witness: fine.re > err,
        method: method.clone(),
    })
}
