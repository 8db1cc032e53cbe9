//! Weight fitting against subjective scores and the evaluation statistics:
//! Pearson and Spearman correlation plus the four-parameter logistic
//! mapping used to linearize metric-vs-MOS scatter before Pearson.

use nalgebra::{DMatrix, DVector};

use crate::cyclopean::{q_cyclopean_from_parts, CyclopeanParams};
use crate::error::{Error, Result};
use crate::score::{sequence_components, FrameComponents, WeightVector};
use crate::video_io::StereoSequence;

/// Pooled weight-independent features of one distorted sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceFeatures {
    /// Sum of the two luma VIF terms, in [0, 2].
    pub f_luma: f64,
    /// Sum of the four chroma VIF terms, in [0, 4].
    pub f_chroma: f64,
    /// Cyclopean term, in [0, 1].
    pub f_cyclopean: f64,
    /// Depth term, in [0, 1].
    pub f_depth: f64,
}

/// One calibration observation: features plus normalized MOS in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    pub f_luma: f64,
    pub f_chroma: f64,
    pub f_cyclopean: f64,
    pub f_depth: f64,
    pub mos: f64,
}

impl SequenceFeatures {
    pub fn with_mos(self, mos: f64) -> FeatureRow {
        FeatureRow {
            f_luma: self.f_luma,
            f_chroma: self.f_chroma,
            f_cyclopean: self.f_cyclopean,
            f_depth: self.f_depth,
            mos,
        }
    }
}

/// Four-parameter logistic fit of predicted MOS against a metric.
#[derive(Debug, Clone, Copy)]
pub struct LogisticFit {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub residual_rms: f64,
    /// False when the iteration cap was hit before the step-size criterion;
    /// the parameters are then the best ones seen.
    pub converged: bool,
}

impl LogisticFit {
    /// Predicted MOS at one metric value.
    pub fn predict(&self, metric: f64) -> f64 {
        let z = self.b2 * (metric - self.b3);
        self.b1 * (0.5 - 1.0 / (1.0 + z.exp())) + self.b4
    }
}

fn frame_features(c: &FrameComponents, beta: f64) -> [f64; 4] {
    let luma = c.vif_y_left.clamp(0.0, 1.0) + c.vif_y_right.clamp(0.0, 1.0);
    let chroma = c.vif_u_left.clamp(0.0, 1.0)
        + c.vif_v_left.clamp(0.0, 1.0)
        + c.vif_u_right.clamp(0.0, 1.0)
        + c.vif_v_right.clamp(0.0, 1.0);
    let fid = (c.depth_fid_left + c.depth_fid_right) / 2.0;
    let q_rl = q_cyclopean_from_parts(fid, beta, c.block_ssim);
    let q_d =
        (c.depth_fid_left.powf(beta) * c.factor_left + c.depth_fid_right.powf(beta) * c.factor_right)
            / 2.0;
    [luma, chroma, q_rl, q_d]
}

/// Pooled per-sequence features on exactly the component code path the
/// score uses, so dotting them with (w1, w4, w2, w3) reproduces the score
/// numerator for any weight vector.
pub fn extract_features(
    reference: &StereoSequence,
    distorted: &StereoSequence,
    beta: f64,
    params: &CyclopeanParams,
) -> Result<SequenceFeatures> {
    let comps = sequence_components(reference, distorted, params)?;
    let n = comps.len() as f64;
    let mut acc = [0.0f64; 4];
    for c in &comps {
        for (a, v) in acc.iter_mut().zip(frame_features(c, beta)) {
            *a += v;
        }
    }
    Ok(SequenceFeatures {
        f_luma: acc[0] / n,
        f_chroma: acc[1] / n,
        f_cyclopean: acc[2] / n,
        f_depth: acc[3] / n,
    })
}

fn design_matrix(rows: &[FeatureRow]) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(rows.len(), 4, |i, j| match j {
        0 => rows[i].f_luma,
        1 => rows[i].f_chroma,
        2 => rows[i].f_cyclopean,
        _ => rows[i].f_depth,
    });
    let y = DVector::from_fn(rows.len(), |i, _| rows[i].mos);
    (x, y)
}

fn matrix_rank(x: &DMatrix<f64>) -> usize {
    let svd = x.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * x.nrows().max(x.ncols()) as f64 * f64::EPSILON;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    x.clone()
        .svd(true, true)
        .solve(y, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("least-squares solve failed: {e}")))
}

/// Nonnegative least squares of MOS on the four features, clamping
/// negative coefficients to zero and refitting the remaining columns until
/// all survivors are nonnegative. Coefficient order maps to
/// (w1, w4, w2, w3); beta keeps its default and the result is flagged
/// calibrated.
pub fn fit_weights(rows: &[FeatureRow]) -> Result<WeightVector> {
    if rows.len() < 4 {
        return Err(Error::TooFewRows {
            needed: 4,
            got: rows.len(),
        });
    }
    let (x, y) = design_matrix(rows);
    if matrix_rank(&x) < 4 {
        return Err(Error::RankDeficient);
    }

    let mut active: Vec<usize> = (0..4).collect();
    let mut coefs = [0.0f64; 4];
    while !active.is_empty() {
        let sub = x.select_columns(active.iter());
        let beta_hat = ols(&sub, &y)?;
        if let Some(worst) = (0..active.len()).filter(|&k| beta_hat[k] < 0.0).min_by(|&a, &b| {
            beta_hat[a].partial_cmp(&beta_hat[b]).expect("finite coefficients")
        }) {
            active.remove(worst);
            continue;
        }
        for (k, &col) in active.iter().enumerate() {
            coefs[col] = beta_hat[k];
        }
        break;
    }
    if coefs.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateWeights);
    }

    Ok(WeightVector {
        w1: coefs[0],
        w4: coefs[1],
        w2: coefs[2],
        w3: coefs[3],
        calibrated: true,
        ..Default::default()
    })
}

fn check_paired(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min_len {
        return Err(Error::TooFewRows {
            needed: min_len,
            got: x.len(),
        });
    }
    Ok(())
}

fn centered_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy, sxx, syy)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y, 3)?;
    let (sxy, sxx, syy) = centered_moments(x, y);
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Fractional ranks, 1-based, ties sharing their average rank.
fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite scores"));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < x.len() {
        let mut j = i;
        while j + 1 < x.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y, 3)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Given shape parameters (b2, b3), the best (b1, b4) follow by linear
/// least squares on the basis [sigmoid-term, 1]. Returns (b1, b4, sse).
fn logistic_inner_solve(metric: &[f64], mos: &[f64], b2: f64, b3: f64) -> (f64, f64, f64) {
    let n = metric.len() as f64;
    let g: Vec<f64> = metric
        .iter()
        .map(|&m| {
            let z = b2 * (m - b3);
            0.5 - 1.0 / (1.0 + z.exp())
        })
        .collect();
    let sum_g = g.iter().sum::<f64>();
    let sum_gg = g.iter().map(|v| v * v).sum::<f64>();
    let sum_y = mos.iter().sum::<f64>();
    let sum_gy = g.iter().zip(mos).map(|(a, b)| a * b).sum::<f64>();

    // Normal equations for [b1, b4]; fall back to a flat fit when the
    // sigmoid term is constant over the data.
    let det = sum_gg * n - sum_g * sum_g;
    let (b1, b4) = if det.abs() < 1e-300 {
        (0.0, sum_y / n)
    } else {
        (
            (sum_gy * n - sum_g * sum_y) / det,
            (sum_gg * sum_y - sum_g * sum_gy) / det,
        )
    };
    let sse = g
        .iter()
        .zip(mos)
        .map(|(&gi, &yi)| {
            let r = b1 * gi + b4 - yi;
            r * r
        })
        .sum::<f64>();
    (b1, b4, sse)
}

/// Least-squares fit of the monotone four-parameter logistic. The two
/// shape parameters move by damped Gauss-Newton steps; the two linear
/// parameters are re-solved exactly at every trial point, which keeps the
/// near-linear regime (b2 -> 0) well conditioned.
pub fn logistic_fit(metric: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    check_paired(metric, mos, 5)?;
    let (_, sxx, syy) = centered_moments(metric, mos);
    if sxx == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let n = metric.len() as f64;
    let mos_mean = mos.iter().sum::<f64>() / n;
    if syy == 0.0 {
        let range = metric.iter().cloned().fold(f64::MIN, f64::max)
            - metric.iter().cloned().fold(f64::MAX, f64::min);
        return Ok(LogisticFit {
            b1: 0.0,
            b2: 4.0 / range,
            b3: median(metric),
            b4: mos_mean,
            residual_rms: 0.0,
            converged: true,
        });
    }

    let lo = metric.iter().cloned().fold(f64::MAX, f64::min);
    let hi = metric.iter().cloned().fold(f64::MIN, f64::max);
    let range = hi - lo;
    let mut b2 = 4.0 / range;
    let mut b3 = median(metric);
    let (mut b1, mut b4, mut sse) = logistic_inner_solve(metric, mos, b2, b3);
    let mut best = (b1, b2, b3, b4, sse);

    let count = metric.len();
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..500 {
        // Jacobian of the projected residual in (b2, b3): because (b1, b4)
        // are re-solved exactly at every point, their implicit dependence
        // on the shape parameters must be differentiated too
        // (variable-projection form), or steps stall once b1 grows large.
        let mut gvec = vec![0.0f64; count];
        let mut rvec = vec![0.0f64; count];
        let mut u2 = vec![0.0f64; count];
        let mut u3 = vec![0.0f64; count];
        for (i, (&m, &y)) in metric.iter().zip(mos).enumerate() {
            let z = b2 * (m - b3);
            let s = 1.0 / (1.0 + (-z).exp());
            let ds = s * (1.0 - s);
            gvec[i] = s - 0.5;
            rvec[i] = b1 * gvec[i] + b4 - y;
            u2[i] = ds * (m - b3);
            u3[i] = -ds * b2;
        }
        let sum_g = gvec.iter().sum::<f64>();
        let sum_gg = gvec.iter().map(|v| v * v).sum::<f64>();
        let det_gtg = sum_gg * n - sum_g * sum_g;
        if det_gtg.abs() < 1e-300 {
            converged = true;
            break;
        }
        // (G'G)^-1 rhs for the 2-column basis [g, 1].
        let solve2 = |r0: f64, r1: f64| -> (f64, f64) {
            ((r0 * n - sum_g * r1) / det_gtg, (sum_gg * r1 - sum_g * r0) / det_gtg)
        };
        let column = |u: &[f64]| -> Vec<f64> {
            let gu = gvec.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
            let su = u.iter().sum::<f64>();
            let ur = u.iter().zip(&rvec).map(|(a, b)| a * b).sum::<f64>();
            let (c0, c1) = solve2(b1 * gu + ur, b1 * su);
            (0..count).map(|i| b1 * u[i] - (gvec[i] * c0 + c1)).collect()
        };
        let j2 = column(&u2);
        let j3 = column(&u3);

        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for i in 0..count {
            jtj[0][0] += j2[i] * j2[i];
            jtj[0][1] += j2[i] * j3[i];
            jtj[1][1] += j3[i] * j3[i];
            jtr[0] += j2[i] * rvec[i];
            jtr[1] += j3[i] * rvec[i];
        }
        jtj[1][0] = jtj[0][1];

        let mut stepped = false;
        for _ in 0..25 {
            let a00 = jtj[0][0] * (1.0 + lambda);
            let a11 = jtj[1][1] * (1.0 + lambda);
            let a01 = jtj[0][1];
            let det = a00 * a11 - a01 * a01;
            if det.abs() < 1e-300 {
                break;
            }
            let d2 = -(a11 * jtr[0] - a01 * jtr[1]) / det;
            let d3 = -(a00 * jtr[1] - a01 * jtr[0]) / det;
            let (t1, t4, trial_sse) = logistic_inner_solve(metric, mos, b2 + d2, b3 + d3);
            if trial_sse < sse {
                b2 += d2;
                b3 += d3;
                b1 = t1;
                b4 = t4;
                sse = trial_sse;
                lambda = (lambda / 4.0).max(1e-12);
                if sse < best.4 {
                    best = (b1, b2, b3, b4, sse);
                }
                if (d2 * d2 + d3 * d3).sqrt() < 1e-10 {
                    converged = true;
                }
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if converged || !stepped {
            if !stepped {
                // No damped step improves the fit; treat as converged at
                // a local minimum.
                converged = true;
            }
            break;
        }
    }

    let (b1, b2, b3, b4, sse) = best;
    Ok(LogisticFit {
        b1,
        b2,
        b3,
        b4,
        residual_rms: (sse / n).sqrt(),
        converged,
    })
}

/// Parses the feature-table calibration format:
/// `sequence,f_luma,f_chroma,f_cyclopean,f_depth,mos`.
pub fn parse_feature_csv(text: &str) -> Result<Vec<(String, FeatureRow)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Csv("empty file".into()))?;
    if header.trim() != "sequence,f_luma,f_chroma,f_cyclopean,f_depth,mos" {
        return Err(Error::Csv(format!("unexpected header: {header}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 6 {
            return Err(Error::Csv(format!(
                "line {}: expected 6 cells, got {}",
                lineno + 2,
                cells.len()
            )));
        }
        let mut nums = [0.0f64; 5];
        for (k, cell) in cells[1..].iter().enumerate() {
            nums[k] = cell.parse::<f64>().map_err(|_| {
                Error::Csv(format!("line {}: bad number {cell:?}", lineno + 2))
            })?;
        }
        rows.push((
            cells[0].to_string(),
            FeatureRow {
                f_luma: nums[0],
                f_chroma: nums[1],
                f_cyclopean: nums[2],
                f_depth: nums[3],
                mos: nums[4],
            },
        ));
    }
    Ok(rows)
}
