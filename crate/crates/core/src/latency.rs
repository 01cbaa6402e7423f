//! Streaming latency metrics over chunk-arrival traces.
//!
//! A [`StreamTrace`] records when each audio chunk became available
//! (seconds since generation start) and how much audio it carried. Every
//! streaming metric reported by the bench tooling is a pure function of the
//! trace: first-chunk latency, real-time factor, inter-chunk statistics,
//! chunks per second, and playback underruns.
//!
//! All math runs at full precision; only [`summarize`] rounds, to the
//! report's fixed decimal places.

use crate::error::{Error, Result};
use serde::Serialize;

/// One chunk arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChunkEvent {
    /// Seconds since generation start.
    pub arrival_s: f64,
    /// Seconds of audio contained in the chunk.
    pub audio_duration_s: f64,
}

/// Time-ordered chunk events plus the time generation finished.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTrace {
    events: Vec<ChunkEvent>,
    generation_end_s: f64,
}

impl StreamTrace {
    /// Validates and builds a trace.
    ///
    /// Arrivals must be non-negative and non-decreasing (zero-cost virtual
    /// models can legitimately complete several chunks at the same instant),
    /// durations positive, and `generation_end_s` at least the last arrival.
    pub fn new(events: Vec<ChunkEvent>, generation_end_s: f64) -> Result<Self> {
        let mut last = 0.0f64;
        for (i, e) in events.iter().enumerate() {
            if !e.arrival_s.is_finite() || e.arrival_s < 0.0 {
                return Err(Error::Metrics(format!("event {i}: bad arrival {}", e.arrival_s)));
            }
            if !e.audio_duration_s.is_finite() || e.audio_duration_s <= 0.0 {
                return Err(Error::Metrics(format!(
                    "event {i}: audio duration must be positive, got {}",
                    e.audio_duration_s
                )));
            }
            if e.arrival_s < last {
                return Err(Error::Metrics(format!("event {i}: arrivals out of order")));
            }
            last = e.arrival_s;
        }
        if !generation_end_s.is_finite() || generation_end_s < last {
            return Err(Error::Metrics(format!(
                "generation end {generation_end_s} precedes last arrival {last}"
            )));
        }
        Ok(Self { events, generation_end_s })
    }

    pub fn events(&self) -> &[ChunkEvent] {
        &self.events
    }

    pub fn generation_end_s(&self) -> f64 {
        self.generation_end_s
    }

    pub fn total_audio_s(&self) -> f64 {
        self.events.iter().map(|e| e.audio_duration_s).sum()
    }

    /// Serializes to the line-oriented trace text format:
    ///
    /// ```text
    /// # generation_end_s=<v>
    /// <arrival_s> <audio_duration_s>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = format!("# generation_end_s={:.9}\n", self.generation_end_s);
        for e in &self.events {
            out.push_str(&format!("{:.9} {:.9}\n", e.arrival_s, e.audio_duration_s));
        }
        out
    }

    /// Parses the trace text format; errors carry 1-based line numbers.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut generation_end: Option<f64> = None;
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(value) = rest.strip_prefix("generation_end_s=") {
                    let v = value.trim().parse::<f64>().map_err(|e| Error::TraceParse {
                        line,
                        message: format!("bad generation_end_s value: {e}"),
                    })?;
                    if generation_end.replace(v).is_some() {
                        return Err(Error::TraceParse {
                            line,
                            message: "duplicate generation_end_s header".into(),
                        });
                    }
                }
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let arrival = parts
                .next()
                .ok_or_else(|| Error::TraceParse { line, message: "empty event line".into() })?;
            let duration = parts.next().ok_or_else(|| Error::TraceParse {
                line,
                message: "event line needs 'arrival_s audio_duration_s'".into(),
            })?;
            if parts.next().is_some() {
                return Err(Error::TraceParse {
                    line,
                    message: "trailing fields on event line".into(),
                });
            }
            let arrival_s = arrival.parse::<f64>().map_err(|e| Error::TraceParse {
                line,
                message: format!("bad arrival_s: {e}"),
            })?;
            let audio_duration_s = duration.parse::<f64>().map_err(|e| Error::TraceParse {
                line,
                message: format!("bad audio_duration_s: {e}"),
            })?;
            events.push(ChunkEvent { arrival_s, audio_duration_s });
        }
        let generation_end_s = generation_end.ok_or_else(|| Error::TraceParse {
            line: text.lines().count().max(1),
            message: "missing '# generation_end_s=<v>' header".into(),
        })?;
        Self::new(events, generation_end_s).map_err(|e| match e {
            Error::Metrics(message) => Error::TraceParse { line: 0, message },
            other => other,
        })
    }
}

/// Arrival time of the first chunk, in milliseconds.
pub fn first_chunk_latency_ms(trace: &StreamTrace) -> Result<f64> {
    trace
        .events
        .first()
        .map(|e| e.arrival_s * 1000.0)
        .ok_or_else(|| Error::Metrics("trace has no chunks".into()))
}

/// Real-time factor: generation wall time divided by audio produced.
pub fn rtf(trace: &StreamTrace) -> Result<f64> {
    if trace.events.is_empty() {
        return Err(Error::Metrics("trace has no chunks".into()));
    }
    let audio = trace.total_audio_s();
    if audio <= 0.0 {
        return Err(Error::Metrics("trace contains no audio".into()));
    }
    Ok(trace.generation_end_s / audio)
}

/// (avg, min, max) of consecutive arrival differences, in milliseconds.
pub fn inter_chunk_stats_ms(trace: &StreamTrace) -> Result<(f64, f64, f64)> {
    if trace.events.len() < 2 {
        return Err(Error::Metrics("inter-chunk stats need at least two chunks".into()));
    }
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for pair in trace.events.windows(2) {
        let gap = (pair[1].arrival_s - pair[0].arrival_s) * 1000.0;
        sum += gap;
        min = min.min(gap);
        max = max.max(gap);
    }
    let avg = sum / (trace.events.len() - 1) as f64;
    Ok((avg, min, max))
}

/// Chunks produced per second of generation time.
pub fn chunks_per_second(trace: &StreamTrace) -> Result<f64> {
    if trace.events.is_empty() {
        return Err(Error::Metrics("trace has no chunks".into()));
    }
    if trace.generation_end_s <= 0.0 {
        return Err(Error::Metrics("zero-duration trace".into()));
    }
    Ok(trace.events.len() as f64 / trace.generation_end_s)
}

/// Playback underruns under gapless playback starting at the first arrival.
///
/// Chunk `i` (i >= 1) underruns iff it arrives after the instant playback
/// would reach it: `arrival(0) + sum of durations of chunks 0..i`. Returns
/// `(chunk_index, gap_s)` pairs with the positive excess.
pub fn underrun_report(trace: &StreamTrace) -> Result<Vec<(usize, f64)>> {
    let first = trace
        .events
        .first()
        .ok_or_else(|| Error::Metrics("trace has no chunks".into()))?;
    let mut playhead = first.arrival_s;
    let mut report = Vec::new();
    for (i, e) in trace.events.iter().enumerate() {
        if i > 0 && e.arrival_s > playhead {
            report.push((i, e.arrival_s - playhead));
        }
        playhead += e.audio_duration_s;
    }
    Ok(report)
}

/// Full metric set over a trace.
///
/// Inter-chunk fields are absent (`None`) for single-chunk traces rather
/// than zero. Values carry the report's fixed rounding: milliseconds to one
/// decimal, RTF to three, chunks/second to two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub first_chunk_latency_ms: f64,
    pub rtf: f64,
    pub n_chunks: usize,
    pub avg_chunk_size_ms: f64,
    pub avg_inter_chunk_latency_ms: Option<f64>,
    pub min_inter_chunk_latency_ms: Option<f64>,
    pub max_inter_chunk_latency_ms: Option<f64>,
    pub chunks_per_second: f64,
    pub underrun_count: usize,
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

/// Computes the full [`LatencyReport`] for a trace.
pub fn summarize(trace: &StreamTrace) -> Result<LatencyReport> {
    let n_chunks = trace.events.len();
    let first = first_chunk_latency_ms(trace)?;
    let rtf_value = rtf(trace)?;
    let cps = chunks_per_second(trace)?;
    let avg_chunk_size_ms = trace.total_audio_s() * 1000.0 / n_chunks as f64;
    let inter = if n_chunks >= 2 { Some(inter_chunk_stats_ms(trace)?) } else { None };
    let underruns = underrun_report(trace)?;
    Ok(LatencyReport {
        first_chunk_latency_ms: round_to(first, 1),
        rtf: round_to(rtf_value, 3),
        n_chunks,
        avg_chunk_size_ms: round_to(avg_chunk_size_ms, 1),
        avg_inter_chunk_latency_ms: inter.map(|(a, _, _)| round_to(a, 1)),
        min_inter_chunk_latency_ms: inter.map(|(_, m, _)| round_to(m, 1)),
        max_inter_chunk_latency_ms: inter.map(|(_, _, m)| round_to(m, 1)),
        chunks_per_second: round_to(cps, 2),
        underrun_count: underruns.len(),
    })
}

impl LatencyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Two-line CSV: field-name header plus values; absent fields are empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
        format!(
            "first_chunk_latency_ms,rtf,n_chunks,avg_chunk_size_ms,avg_inter_chunk_latency_ms,min_inter_chunk_latency_ms,max_inter_chunk_latency_ms,chunks_per_second,underrun_count\n{:.1},{:.3},{},{:.1},{},{},{},{:.2},{}\n",
            self.first_chunk_latency_ms,
            self.rtf,
            self.n_chunks,
            self.avg_chunk_size_ms,
            opt(self.avg_inter_chunk_latency_ms),
            opt(self.min_inter_chunk_latency_ms),
            opt(self.max_inter_chunk_latency_ms),
            self.chunks_per_second,
            self.underrun_count,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trace(pairs: &[(f64, f64)], end: f64) -> StreamTrace {
        let events = pairs
            .iter()
            .map(|&(arrival_s, audio_duration_s)| ChunkEvent { arrival_s, audio_duration_s })
            .collect();
        StreamTrace::new(events, end).unwrap()
    }

    #[test]
    fn first_chunk_latency_examples() {
        let t = trace(&[(0.6409, 1.6)], 0.6409);
        assert_relative_eq!(first_chunk_latency_ms(&t).unwrap(), 640.9, epsilon = 1e-9);
        let t = trace(&[(0.0, 1.0)], 0.0);
        assert_eq!(first_chunk_latency_ms(&t).unwrap(), 0.0);
        let t = trace(&[(1.0, 1.0), (2.0, 1.0)], 2.0);
        assert_relative_eq!(first_chunk_latency_ms(&t).unwrap(), 1000.0);
        let empty = StreamTrace::new(vec![], 0.0).unwrap();
        assert!(first_chunk_latency_ms(&empty).is_err());
    }

    #[test]
    fn rtf_examples() {
        let t = trace(&[(1.0, 5.0), (3.0, 5.0)], 5.0);
        assert_relative_eq!(rtf(&t).unwrap(), 0.5);
        let t = trace(&[(1.0, 2.5), (2.5, 2.5)], 5.0);
        assert_relative_eq!(rtf(&t).unwrap(), 1.0);
    }

    #[test]
    fn inter_chunk_stats_examples() {
        let t = trace(&[(0.0, 1.0), (1.0, 1.0), (3.0, 1.0)], 3.0);
        let (avg, min, max) = inter_chunk_stats_ms(&t).unwrap();
        assert_relative_eq!(avg, 1500.0);
        assert_relative_eq!(min, 1000.0);
        assert_relative_eq!(max, 2000.0);

        let t = trace(&[(0.0, 1.0), (0.5, 1.0), (1.0, 1.0)], 1.0);
        let (avg, min, max) = inter_chunk_stats_ms(&t).unwrap();
        assert_relative_eq!(avg, min);
        assert_relative_eq!(avg, max);

        let t = trace(&[(0.0, 1.0)], 0.0);
        assert!(inter_chunk_stats_ms(&t).is_err());
    }

    #[test]
    fn chunks_per_second_examples() {
        let t = trace(
            &[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0), (5.0, 1.0), (6.0, 1.0)],
            6.45,
        );
        assert_relative_eq!(round_to(chunks_per_second(&t).unwrap(), 2), 0.93);
        let t = trace(&[(0.5, 1.0)], 1.0);
        assert_relative_eq!(chunks_per_second(&t).unwrap(), 1.0);
        let empty = StreamTrace::new(vec![], 0.0).unwrap();
        assert!(chunks_per_second(&empty).is_err());
    }

    #[test]
    fn underrun_examples() {
        let t = trace(&[(0.0, 1.0), (0.5, 1.0)], 0.5);
        assert!(underrun_report(&t).unwrap().is_empty());

        let t = trace(&[(0.0, 1.0), (1.5, 1.0)], 1.5);
        let report = underrun_report(&t).unwrap();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].0, 1);
        assert_relative_eq!(report[0].1, 0.5);
    }

    #[test]
    fn summarize_populates_every_field() {
        // Roughly the shape of a fast streaming run: several chunks,
        // sub-second inter-chunk, RTF below 1.
        let t = trace(
            &[(0.64, 1.6), (1.3, 1.6), (2.0, 1.6), (2.7, 1.6), (3.4, 1.6), (4.1, 1.6)],
            4.1,
        );
        let r = summarize(&t).unwrap();
        assert_eq!(r.n_chunks, 6);
        assert!(r.rtf < 1.0);
        assert!(r.avg_inter_chunk_latency_ms.is_some());
        assert_eq!(r.underrun_count, 0);
        assert_relative_eq!(r.first_chunk_latency_ms, 640.0);
    }

    #[test]
    fn single_chunk_report_has_absent_inter_chunk_fields() {
        let t = trace(&[(0.2, 1.0)], 0.2);
        let r = summarize(&t).unwrap();
        assert_eq!(r.avg_inter_chunk_latency_ms, None);
        assert_eq!(r.min_inter_chunk_latency_ms, None);
        assert_eq!(r.max_inter_chunk_latency_ms, None);
        let json = r.to_json();
        assert!(json.contains("\"avg_inter_chunk_latency_ms\": null"));
        let csv = r.to_csv();
        assert!(csv.contains(",,"));
    }

    #[test]
    fn trace_text_round_trip_preserves_the_report() {
        let t = trace(&[(0.6409, 1.55), (1.65, 1.55), (2.66, 1.55)], 2.9);
        let parsed = StreamTrace::parse_text(&t.to_text()).unwrap();
        assert_eq!(summarize(&parsed).unwrap(), summarize(&t).unwrap());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = StreamTrace::parse_text("# generation_end_s=1.0\n0.5 1.0\nbogus\n");
        match err {
            Err(Error::TraceParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(StreamTrace::parse_text("0.5 1.0\n").is_err()); // missing header
        assert!(StreamTrace::parse_text("# generation_end_s=1.0\n0.5 1.0 7\n").is_err());
    }

    #[test]
    fn validation_rejects_malformed_traces() {
        assert!(StreamTrace::new(vec![ChunkEvent { arrival_s: -1.0, audio_duration_s: 1.0 }], 0.0)
            .is_err());
        assert!(StreamTrace::new(vec![ChunkEvent { arrival_s: 0.0, audio_duration_s: 0.0 }], 0.0)
            .is_err());
        assert!(StreamTrace::new(
            vec![
                ChunkEvent { arrival_s: 2.0, audio_duration_s: 1.0 },
                ChunkEvent { arrival_s: 1.0, audio_duration_s: 1.0 },
            ],
            2.0
        )
        .is_err());
        assert!(StreamTrace::new(vec![ChunkEvent { arrival_s: 2.0, audio_duration_s: 1.0 }], 1.0)
            .is_err());
    }

    #[test]
    fn rtf_below_one_iff_generation_beats_audio() {
        let fast = trace(&[(0.5, 1.0), (1.0, 1.0)], 1.5);
        assert!(rtf(&fast).unwrap() < 1.0);
        assert!(fast.generation_end_s() < fast.total_audio_s());
        let slow = trace(&[(0.5, 1.0), (2.5, 1.0)], 2.5);
        assert!(rtf(&slow).unwrap() > 1.0);
        assert!(slow.generation_end_s() > slow.total_audio_s());
    }

    proptest! {
        /// If every inter-chunk gap is below every chunk duration, playback
        /// never starves.
        #[test]
        fn tight_gaps_never_underrun(
            durations in proptest::collection::vec(0.5f64..2.0, 2..20),
            gap_fractions in proptest::collection::vec(0.0f64..0.999, 19),
            first_arrival in 0.0f64..2.0,
        ) {
            let min_duration = durations.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut arrival = first_arrival;
            let mut events = Vec::new();
            for (i, &d) in durations.iter().enumerate() {
                if i > 0 {
                    arrival += gap_fractions[(i - 1) % gap_fractions.len()] * min_duration;
                }
                events.push(ChunkEvent { arrival_s: arrival, audio_duration_s: d });
            }
            let t = StreamTrace::new(events, arrival).unwrap();
            let (_, _, max_gap) = inter_chunk_stats_ms(&t).unwrap();
            prop_assert!(max_gap / 1000.0 < min_duration);
            prop_assert!(underrun_report(&t).unwrap().is_empty());
        }

        #[test]
        fn stats_match_brute_force(
            pairs in proptest::collection::vec((0.0f64..10.0, 0.1f64..3.0), 2..24),
        ) {
            let mut sorted = pairs.clone();
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let events: Vec<ChunkEvent> = sorted.iter()
                .map(|&(a, d)| ChunkEvent { arrival_s: a, audio_duration_s: d })
                .collect();
            let end = events.last().unwrap().arrival_s + 0.5;
            let t = StreamTrace::new(events.clone(), end).unwrap();

            let diffs: Vec<f64> = events.windows(2)
                .map(|w| (w[1].arrival_s - w[0].arrival_s) * 1000.0)
                .collect();
            let brute_avg = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let brute_min = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
            let brute_max = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (avg, min, max) = inter_chunk_stats_ms(&t).unwrap();
            prop_assert!((avg - brute_avg).abs() < 1e-9);
            prop_assert!((min - brute_min).abs() < 1e-9);
            prop_assert!((max - brute_max).abs() < 1e-9);
            prop_assert!(min <= avg + 1e-12 && avg <= max + 1e-12);

            let r = summarize(&t).unwrap();
            prop_assert_eq!(r.n_chunks, events.len());
        }
    }
}
