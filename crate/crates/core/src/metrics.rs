//! Reconstruction quality metrics (SNR_t, SNR_v, SNR/N) and the
//! Jarque-Bera and Mann-Whitney U statistical tests.

use crate::error::{KttError, Result};
use crate::special::normal_cdf;
use crate::trajectory::Trajectory;

/// Reconstructions reporting better than this are clamped; keeps exact
/// synthetic round trips finite and comparable.
pub const SNR_CAP_DB: f64 = 120.0;

/// Quality summary for one (input, configuration) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionReport {
    pub snr_t: f64,
    pub snr_v: f64,
    /// Number of strokes (velocity peaks) in the plan.
    pub n_strokes: usize,
    pub snr_t_per_n: f64,
    pub snr_v_per_n: f64,
}

impl ReconstructionReport {
    pub fn new(snr_t: f64, snr_v: f64, n_strokes: usize) -> Result<Self> {
        if n_strokes == 0 {
            return Err(KttError::InvalidInput("report needs >= 1 stroke".into()));
        }
        Ok(ReconstructionReport {
            snr_t,
            snr_v,
            n_strokes,
            snr_t_per_n: snr_t / n_strokes as f64,
            snr_v_per_n: snr_v / n_strokes as f64,
        })
    }
}

/// Outcome of a hypothesis test at the 5% level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64) -> Self {
        TestResult {
            statistic,
            p_value,
            reject_at_5pct: p_value < 0.05,
        }
    }
}

fn check_same_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(KttError::InvalidInput(format!(
            "grids differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(KttError::InvalidInput(format!(
                "grids differ: t={x} vs t={y}"
            )));
        }
    }
    Ok(())
}

fn power_ratio_db(signal: f64, error: f64) -> f64 {
    if error <= 0.0 {
        return SNR_CAP_DB;
    }
    (10.0 * (signal / error).log10()).min(SNR_CAP_DB)
}

/// Trajectory-domain SNR in dB: signal power of the original about its
/// centroid over the reconstruction error power.
pub fn snr_t(original: &Trajectory, reconstructed: &Trajectory) -> Result<f64> {
    check_same_grid(&original.times(), &reconstructed.times())?;
    let n = original.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for s in original.samples() {
        cx += s.x;
        cy += s.y;
    }
    cx /= n;
    cy /= n;
    let mut signal = 0.0;
    let mut error = 0.0;
    for (o, r) in original.samples().iter().zip(reconstructed.samples()) {
        signal += (o.x - cx).powi(2) + (o.y - cy).powi(2);
        error += (o.x - r.x).powi(2) + (o.y - r.y).powi(2);
    }
    Ok(power_ratio_db(signal, error))
}

/// Velocity-domain SNR in dB over vector velocities sampled on the same
/// grid.
pub fn snr_v(
    t_orig: &[f64],
    v_orig: &[(f64, f64)],
    t_recon: &[f64],
    v_recon: &[(f64, f64)],
) -> Result<f64> {
    check_same_grid(t_orig, t_recon)?;
    if v_orig.len() != t_orig.len() || v_recon.len() != t_recon.len() {
        return Err(KttError::InvalidInput(
            "velocity arrays do not match their grids".into(),
        ));
    }
    let mut signal = 0.0;
    let mut error = 0.0;
    for (o, r) in v_orig.iter().zip(v_recon) {
        signal += o.0 * o.0 + o.1 * o.1;
        error += (o.0 - r.0).powi(2) + (o.1 - r.1).powi(2);
    }
    Ok(power_ratio_db(signal, error))
}

/// Jarque-Bera normality test: JB = n/6 (S^2 + (K-3)^2/4), p-value from
/// the chi-squared(2) upper tail.
pub fn jarque_bera(samples: &[f64]) -> Result<TestResult> {
    let n = samples.len();
    if n < 8 {
        return Err(KttError::InvalidInput(format!(
            "Jarque-Bera needs n >= 8, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in samples {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 {
        return Err(KttError::DegenerateSample(
            "zero variance in Jarque-Bera input".into(),
        ));
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = nf / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    // Chi-squared(2) survival function.
    let p = (-0.5 * jb).exp();
    Ok(TestResult::new(jb, p))
}

/// Midranks of the pooled sample, average rank on ties.
fn ranks(pooled: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&a, &b| pooled[a].partial_cmp(&pooled[b]).unwrap());
    let mut out = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn u_statistic_of(a_vals: &[f64], b_vals: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = Vec::with_capacity(a_vals.len() + b_vals.len());
    pooled.extend_from_slice(a_vals);
    pooled.extend_from_slice(b_vals);
    let r = ranks(&pooled);
    let ra: f64 = r[..a_vals.len()].iter().sum();
    let na = a_vals.len() as f64;
    ra - na * (na + 1.0) / 2.0
}

/// Advance `comb` to the next k-combination of {0..n}; false at the end.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] != i + n - k {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Two-sided Mann-Whitney U test. Exact enumeration over all rank
/// splits when the pooled size is at most 20; normal approximation with
/// tie correction and continuity correction above that.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(KttError::InvalidInput(
            "Mann-Whitney needs non-empty samples".into(),
        ));
    }
    let na = a.len();
    let nb = b.len();
    let u = u_statistic_of(a, b);
    let mean_u = na as f64 * nb as f64 / 2.0;
    if na + nb <= 20 {
        // Brute force over all C(na+nb, na) assignments of the pooled
        // values; ties are handled naturally by midranks.
        let mut pooled: Vec<f64> = Vec::with_capacity(na + nb);
        pooled.extend_from_slice(a);
        pooled.extend_from_slice(b);
        let r = ranks(&pooled);
        let n = na + nb;
        let observed = (u - mean_u).abs();
        let mut extreme = 0u64;
        let mut total = 0u64;
        // Iterate over combinations of indices of size na.
        let mut comb: Vec<usize> = (0..na).collect();
        loop {
            let ra: f64 = comb.iter().map(|&i| r[i]).sum();
            let u_c = ra - na as f64 * (na as f64 + 1.0) / 2.0;
            total += 1;
            if (u_c - mean_u).abs() >= observed - 1e-12 {
                extreme += 1;
            }
            if !next_combination(&mut comb, n) {
                break;
            }
        }
        let p = extreme as f64 / total as f64;
        Ok(TestResult::new(u, p))
    } else {
        let n = (na + nb) as f64;
        // Tie correction from the pooled tie group sizes.
        let mut pooled: Vec<f64> = Vec::with_capacity(na + nb);
        pooled.extend_from_slice(a);
        pooled.extend_from_slice(b);
        pooled.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < pooled.len() {
            let mut j = i;
            while j + 1 < pooled.len() && pooled[j + 1] == pooled[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = na as f64 * nb as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        if var <= 0.0 {
            // All values identical: no evidence either way.
            return Ok(TestResult::new(u, 1.0));
        }
        let diff = (u - mean_u).abs();
        let z = (diff - 0.5).max(0.0) / var.sqrt();
        let p = 2.0 * (1.0 - normal_cdf(z));
        Ok(TestResult::new(u, p.min(1.0)))
    }
}
