//! Blind and reference-based SNR estimation.
//!
//! The blind estimator follows waveform amplitude distribution analysis:
//! clean speech amplitudes are modeled as two-sided Gamma (shape 0.4) and
//! additive noise as Gaussian, making the scale-invariant statistic
//! `G = ln(mean |x|) - mean(ln |x|)` a strictly monotone function of the
//! speech-to-noise power ratio. `G` is inverted through a checked-in
//! 100-point lookup table spanning -20..+100 dB.
//!
//! The table at `data/wada_table.txt` is derived by deterministic numerical
//! quadrature from that amplitude model; `examples/gen_wada_table.rs`
//! regenerates it and documents the math.

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::SNR_SENTINEL_DB;
use std::sync::OnceLock;

/// Magnitudes at or below this floor are excluded before taking logarithms.
pub const AMPLITUDE_EPSILON: f64 = 1e-10;

const TABLE_TEXT: &str = include_str!("../data/wada_table.txt");
const TABLE_LINES: usize = 100;

/// Mapping from the amplitude statistic `G` to SNR in dB.
#[derive(Debug, Clone)]
pub struct SnrLookupTable {
    /// (g_value, snr_db), snr strictly increasing, g strictly increasing.
    entries: Vec<(f64, f64)>,
}

impl SnrLookupTable {
    /// Parses the `g_value snr_db` line format. Blank lines and `#` comments
    /// are skipped; exactly 100 data lines are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::with_capacity(TABLE_LINES);
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (g, snr) = match (parts.next(), parts.next(), parts.next()) {
                (Some(g), Some(snr), None) => (g, snr),
                _ => {
                    return Err(Error::Config(format!(
                        "snr table line {}: expected 'g_value snr_db'",
                        idx + 1
                    )))
                }
            };
            let g: f64 = g.parse().map_err(|e| {
                Error::Config(format!("snr table line {}: bad g_value: {e}", idx + 1))
            })?;
            let snr: f64 = snr.parse().map_err(|e| {
                Error::Config(format!("snr table line {}: bad snr_db: {e}", idx + 1))
            })?;
            entries.push((g, snr));
        }
        if entries.len() != TABLE_LINES {
            return Err(Error::Config(format!(
                "snr table must hold exactly {TABLE_LINES} entries, found {}",
                entries.len()
            )));
        }
        for pair in entries.windows(2) {
            if pair[1].1 <= pair[0].1 {
                return Err(Error::Config("snr table snr_db not strictly increasing".into()));
            }
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Config("snr table g_value not strictly monotone".into()));
            }
        }
        Ok(Self { entries })
    }

    /// The table compiled into the crate.
    pub fn embedded() -> &'static SnrLookupTable {
        static TABLE: OnceLock<SnrLookupTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            SnrLookupTable::parse(TABLE_TEXT).expect("embedded snr table is valid")
        })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn min_snr_db(&self) -> f64 {
        self.entries[0].1
    }

    pub fn max_snr_db(&self) -> f64 {
        self.entries[self.entries.len() - 1].1
    }

    /// Inverts the statistic: linear interpolation between table points,
    /// clamping outside the tabulated range.
    pub fn invert(&self, g: f64) -> f64 {
        let first = self.entries[0];
        let last = self.entries[self.entries.len() - 1];
        if g <= first.0 {
            return first.1;
        }
        if g >= last.0 {
            return last.1;
        }
        // g is strictly increasing: find the bracketing segment.
        let mut hi = 1;
        while self.entries[hi].0 < g {
            hi += 1;
        }
        let (g0, s0) = self.entries[hi - 1];
        let (g1, s1) = self.entries[hi];
        let t = (g - g0) / (g1 - g0);
        s0 + t * (s1 - s0)
    }
}

/// Blind SNR estimate in dB, clamped to the table range.
pub fn wada_snr(w: &Waveform) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::InvalidSignal("cannot estimate SNR of an empty waveform".into()));
    }
    let mean_abs_all = w.samples().iter().map(|s| s.abs()).sum::<f64>() / w.len() as f64;
    if mean_abs_all <= 0.0 {
        return Err(Error::InvalidSignal("all-zero waveform has no SNR estimate".into()));
    }
    // Normalize to unit mean absolute amplitude, then compute the statistic
    // over samples above the epsilon floor.
    let mut count = 0usize;
    let mut sum_abs = 0.0;
    let mut sum_ln = 0.0;
    for &s in w.samples() {
        let a = (s / mean_abs_all).abs();
        if a > AMPLITUDE_EPSILON {
            count += 1;
            sum_abs += a;
            sum_ln += a.ln();
        }
    }
    if count == 0 {
        return Err(Error::InvalidSignal(
            "every sample is below the amplitude epsilon; no SNR estimate".into(),
        ));
    }
    let g = (sum_abs / count as f64).ln() - sum_ln / count as f64;
    let table = SnrLookupTable::embedded();
    Ok(table.invert(g).clamp(table.min_snr_db(), table.max_snr_db()))
}

/// Reference-based SNR: `10*log10(sum r^2 / sum (r - t)^2)` in dB.
pub fn reference_snr(reference: &Waveform, test: &Waveform) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::InvalidSignal(format!(
            "length mismatch: reference {} vs test {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.sample_rate_hz() != test.sample_rate_hz() {
        return Err(Error::InvalidSignal("sample rate mismatch".into()));
    }
    if reference.is_empty() {
        return Err(Error::InvalidSignal("empty reference".into()));
    }
    let mut signal = 0.0;
    let mut error = 0.0;
    for (r, t) in reference.samples().iter().zip(test.samples()) {
        signal += r * r;
        let d = r - t;
        error += d * d;
    }
    if signal <= 0.0 {
        return Err(Error::InvalidSignal("silent reference has no SNR".into()));
    }
    if error == 0.0 {
        return Ok(SNR_SENTINEL_DB);
    }
    Ok(10.0 * (signal / error).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_gamma_signal, gen_white_noise, mix_at_snr, Waveform};
    use approx::assert_relative_eq;

    #[test]
    fn embedded_table_is_well_formed() {
        let table = SnrLookupTable::embedded();
        assert_eq!(table.entries().len(), 100);
        assert_relative_eq!(table.min_snr_db(), -20.0);
        assert_relative_eq!(table.max_snr_db(), 100.0);
        // Endpoints sit between the theoretical extremes of the statistic:
        // 0.40939 for pure Gaussian noise, 1.64509 for pure shape-0.4 speech.
        let g_lo = table.entries()[0].0;
        let g_hi = table.entries()[99].0;
        assert!(g_lo > 0.40939 && g_lo < 0.45, "g_lo {g_lo}");
        assert!(g_hi < 1.64509 && g_hi > 1.55, "g_hi {g_hi}");
    }

    #[test]
    fn invert_interpolates_and_clamps() {
        let table = SnrLookupTable::embedded();
        assert_relative_eq!(table.invert(0.0), -20.0);
        assert_relative_eq!(table.invert(10.0), 100.0);
        // Midpoint of a segment inverts between the segment's endpoints.
        let (g0, s0) = table.entries()[40];
        let (g1, s1) = table.entries()[41];
        let mid = table.invert(0.5 * (g0 + g1));
        assert_relative_eq!(mid, 0.5 * (s0 + s1), epsilon = 1e-9);
    }

    #[test]
    fn clean_gamma_speech_clamps_at_the_table_maximum() {
        let w = gen_gamma_signal(100_000, 0.4, 7).unwrap();
        assert_relative_eq!(wada_snr(&w).unwrap(), 100.0);
    }

    #[test]
    fn ten_db_mixture_is_recovered_within_three_db() {
        let speech = gen_gamma_signal(150_000, 0.4, 11).unwrap();
        let noise = gen_white_noise(150_000, 12).unwrap();
        let mixed = mix_at_snr(&speech, &noise, 10.0).unwrap();
        let est = wada_snr(&mixed).unwrap();
        assert!((est - 10.0).abs() <= 3.0, "estimate {est}");
    }

    #[test]
    fn estimates_increase_with_true_snr() {
        let speech = gen_gamma_signal(120_000, 0.4, 21).unwrap();
        let noise = gen_white_noise(120_000, 22).unwrap();
        let mut last = f64::NEG_INFINITY;
        for target in [0.0, 10.0, 20.0] {
            let est = wada_snr(&mix_at_snr(&speech, &noise, target).unwrap()).unwrap();
            assert!(est > last, "estimate {est} for target {target} not above {last}");
            last = est;
        }
    }

    #[test]
    fn estimate_is_scale_invariant() {
        let speech = gen_gamma_signal(60_000, 0.4, 31).unwrap();
        let noise = gen_white_noise(60_000, 32).unwrap();
        let mixed = mix_at_snr(&speech, &noise, 15.0).unwrap();
        let base = wada_snr(&mixed).unwrap();
        for scale in [1e-3, 0.5, 7.0, 1e3] {
            let scaled = Waveform::new(
                mixed.samples().iter().map(|s| s * scale).collect(),
                mixed.sample_rate_hz(),
            )
            .unwrap();
            assert_relative_eq!(wada_snr(&scaled).unwrap(), base, epsilon = 1e-9);
        }
    }

    #[test]
    fn estimate_stays_within_table_bounds() {
        // Pure Gaussian noise lands at the bottom of the curve. The mapping
        // is nearly flat below -10 dB, so sampling noise moves the exact
        // value; it must still read as heavy noise and stay inside the
        // clamp bounds.
        let noise = gen_white_noise(50_000, 41).unwrap();
        let est = wada_snr(&noise).unwrap();
        assert!((-20.0..=100.0).contains(&est));
        assert!(est < -5.0, "pure noise estimated at {est} dB");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let empty = Waveform::new(vec![], 24_000).unwrap();
        assert!(wada_snr(&empty).is_err());
        let zeros = Waveform::new(vec![0.0; 1000], 24_000).unwrap();
        assert!(wada_snr(&zeros).is_err());
    }

    #[test]
    fn reference_snr_of_identical_signals_is_the_sentinel() {
        let w = gen_gamma_signal(1_000, 0.4, 51).unwrap();
        assert_eq!(reference_snr(&w, &w).unwrap(), SNR_SENTINEL_DB);
    }

    #[test]
    fn reference_snr_of_zero_test_is_zero_db() {
        let w = gen_gamma_signal(1_000, 0.4, 52).unwrap();
        let zero = Waveform::new(vec![0.0; w.len()], w.sample_rate_hz()).unwrap();
        assert_relative_eq!(reference_snr(&w, &zero).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn halved_signal_scores_just_over_six_db() {
        // error power = P/4, so the ratio is 4 -> 10*log10(4) = 6.0206.
        let w = gen_gamma_signal(5_000, 0.4, 53).unwrap();
        let half = Waveform::new(
            w.samples().iter().map(|s| s / 2.0).collect(),
            w.sample_rate_hz(),
        )
        .unwrap();
        assert_relative_eq!(
            reference_snr(&w, &half).unwrap(),
            10.0 * 4f64.log10(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn reference_snr_decreases_as_noise_grows() {
        let clean = gen_gamma_signal(30_000, 0.4, 61).unwrap();
        let noise = gen_white_noise(30_000, 62).unwrap();
        let mut last = f64::INFINITY;
        for target in [30.0, 20.0, 10.0, 0.0] {
            let noisy = mix_at_snr(&clean, &noise, target).unwrap();
            let snr = reference_snr(&clean, &noisy).unwrap();
            assert!(snr < last, "snr {snr} at target {target} not below {last}");
            assert_relative_eq!(snr, target, epsilon = 1e-6);
            last = snr;
        }
    }

    #[test]
    fn reference_snr_rejects_mismatched_inputs() {
        let a = gen_gamma_signal(100, 0.4, 71).unwrap();
        let b = gen_gamma_signal(101, 0.4, 71).unwrap();
        assert!(reference_snr(&a, &b).is_err());
        let silent = Waveform::new(vec![0.0; 100], 24_000).unwrap();
        assert!(reference_snr(&silent, &a).is_err());
    }

    /// Monte-Carlo oracle for the quadrature-derived table: draw the model's
    /// mixture directly and recompute the statistic at a few tabulated SNRs.
    #[test]
    fn table_matches_monte_carlo_statistic() {
        use crate::rng::SplitMix64;
        let table = SnrLookupTable::embedded();
        for &entry_index in &[20usize, 35, 50] {
            let (g_table, snr_db) = table.entries()[entry_index];
            let ratio = 10f64.powf(snr_db / 10.0);
            let beta = (0.4 * 1.4 / ratio).sqrt();
            let mut rng = SplitMix64::new(0xABCD ^ entry_index as u64);
            let n = 4_000_000;
            let mut sum_abs = 0.0;
            let mut sum_ln = 0.0;
            for _ in 0..n {
                let s = rng.next_gamma(0.4) / beta
                    * if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                let z = (s + rng.next_normal()).abs().max(1e-300);
                sum_abs += z;
                sum_ln += z.ln();
            }
            let g_mc = (sum_abs / n as f64).ln() - sum_ln / n as f64;
            assert!(
                (g_mc - g_table).abs() < 5e-3,
                "snr {snr_db}: table {g_table} vs monte-carlo {g_mc}"
            );
        }
    }
}
