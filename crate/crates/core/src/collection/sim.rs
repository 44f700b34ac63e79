//! Deterministic slotted-time simulation of the full collection protocol.

use std::collections::BTreeMap;

use super::controller::{CommunicationReport, ControllerState};
use super::message::{encode_message, UpdateMessage};
use super::node::NodeState;
use super::{CollectionConfig, ProtocolError};
use crate::spectral::{truncation_rmse, TimeSeriesBatch};

#[derive(Debug)]
pub struct SimulationOutcome {
    pub controller: ControllerState,
    pub report: CommunicationReport,
    /// Every update in emission order (step-major, node-id order within a
    /// step).
    pub messages: Vec<UpdateMessage>,
    /// The same updates as one concatenated wire stream.
    pub encoded_stream: Vec<u8>,
}

/// Drives `config.p` nodes over their aligned series step by step, routing
/// every emitted update through the wire codec into the controller.
/// Node `i` consumes `series[i]`; all series must share a length that is a
/// positive multiple of the batch length.
pub fn run_simulation(
    series: &[Vec<f64>],
    config: &CollectionConfig,
) -> Result<SimulationOutcome, ProtocolError> {
    config.validate()?;
    if series.len() != config.p {
        return Err(ProtocolError::NodeCountMismatch {
            expected: config.p,
            got: series.len(),
        });
    }
    let steps = series[0].len();
    for (i, s) in series.iter().enumerate() {
        if s.len() != steps {
            return Err(ProtocolError::RaggedTrace {
                node: i,
                expected: steps,
                got: s.len(),
            });
        }
    }
    if steps == 0 || steps % config.n != 0 {
        return Err(ProtocolError::BadTraceLength {
            len: steps,
            n: config.n,
        });
    }

    let mut nodes: Vec<NodeState> = (0..config.p as u32).map(NodeState::new).collect();
    let mut controller = ControllerState::new(config.n);
    let mut messages = Vec::new();
    let mut encoded_stream = Vec::new();
    let mut rmse_sums: BTreeMap<u32, (f64, u64)> = BTreeMap::new();

    for t in 0..steps {
        for (node, node_series) in nodes.iter_mut().zip(series) {
            let Some(msg) = node.observe(node_series[t], config)? else {
                continue;
            };
            // The simulator knows the original batch, so it can score the
            // truncation error the controller will incur.
            let original =
                TimeSeriesBatch::new(node_series[t + 1 - config.n..=t].to_vec())?;
            let rmse = truncation_rmse(&original, &msg.spectrum)?;
            let entry = rmse_sums.entry(msg.node_id).or_insert((0.0, 0));
            entry.0 += rmse;
            entry.1 += 1;

            encoded_stream.extend_from_slice(&encode_message(&msg));
            controller.ingest(&msg)?;
            messages.push(msg);
        }
    }

    let per_node_rmse: BTreeMap<u32, f64> = rmse_sums
        .iter()
        .map(|(&id, &(sum, count))| (id, sum / count as f64))
        .collect();
    let total_batches: u64 = rmse_sums.values().map(|&(_, c)| c).sum();
    let total_rmse: f64 = rmse_sums.values().map(|&(s, _)| s).sum();
    let ledger = controller.ledger();
    let report = CommunicationReport {
        floats_sent: ledger.floats_sent,
        floats_raw: ledger.floats_raw,
        savings: ledger.savings(),
        mean_truncation_rmse: total_rmse / total_batches as f64,
        per_node_rmse,
    };

    Ok(SimulationOutcome {
        controller,
        report,
        messages,
        encoded_stream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collection::TruncationCriterion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(n: usize, p: usize, criterion: TruncationCriterion) -> CollectionConfig {
        CollectionConfig {
            n,
            tau: 300.0,
            p,
            criterion,
            seed: 0,
        }
    }

    fn noise_series(steps: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..steps).map(|_| rng.gen_range(0.0..=1.0)).collect()
    }

    #[test]
    fn constant_trace_ledger_arithmetic() {
        // 1 node, 2 constant batches of n=72: each update is k=1, so
        // 2*2 floats sent against 2*72 raw.
        let cfg = config(72, 1, TruncationCriterion::EnergyThreshold(0.9));
        let outcome = run_simulation(&[vec![0.5; 144]], &cfg).unwrap();
        assert_eq!(outcome.report.floats_sent, 4);
        assert_eq!(outcome.report.floats_raw, 144);
        let expected = 1.0 - 4.0 / 144.0;
        assert!((outcome.report.savings - expected).abs() < 1e-12);
        assert_eq!(outcome.report.mean_truncation_rmse, 0.0);
        assert_eq!(outcome.messages.len(), 2);
    }

    #[test]
    fn lossless_threshold_on_noise_goes_negative() {
        let n = 16;
        let cfg = config(n, 1, TruncationCriterion::EnergyThreshold(1.0));
        let outcome = run_simulation(&[noise_series(n, 5)], &cfg).unwrap();
        assert_eq!(outcome.messages[0].k(), n / 2 + 1);
        let expected = 1.0 - (n as f64 + 2.0) / n as f64;
        assert!((outcome.report.savings - expected).abs() < 1e-12);
        assert!(outcome.report.savings < 0.0);
    }

    #[test]
    fn ledger_recount_over_many_nodes() {
        let n = 16;
        let p = 20;
        let batches = 10;
        let series: Vec<Vec<f64>> = (0..p as u64)
            .map(|i| noise_series(n * batches, 100 + i))
            .collect();
        let cfg = config(n, p, TruncationCriterion::EnergyThreshold(0.9));
        let outcome = run_simulation(&series, &cfg).unwrap();
        assert_eq!(outcome.report.floats_raw, (p * batches * n) as u64);
        let recount: u64 = outcome.messages.iter().map(|m| 2 * m.k() as u64).sum();
        assert_eq!(outcome.report.floats_sent, recount);
        assert_eq!(outcome.messages.len(), p * batches);
        // Every node history is gap-free and length-consistent.
        for id in 0..p as u32 {
            assert_eq!(outcome.controller.node(id).unwrap().batches(), batches);
        }
    }

    #[test]
    fn rmse_bound_propagates_end_to_end() {
        let eps = 0.05;
        let cfg = config(32, 3, TruncationCriterion::RmseBound(eps));
        let series: Vec<Vec<f64>> = (0..3).map(|i| noise_series(32 * 6, 40 + i)).collect();
        let outcome = run_simulation(&series, &cfg).unwrap();
        for (_, rmse) in &outcome.report.per_node_rmse {
            assert!(*rmse <= eps);
        }
        assert!(outcome.report.mean_truncation_rmse <= eps);
    }

    #[test]
    fn identical_inputs_give_identical_streams() {
        let cfg = config(24, 4, TruncationCriterion::EnergyThreshold(0.8));
        let series: Vec<Vec<f64>> = (0..4).map(|i| noise_series(24 * 5, 7 + i)).collect();
        let a = run_simulation(&series, &cfg).unwrap();
        let b = run_simulation(&series, &cfg).unwrap();
        assert_eq!(a.encoded_stream, b.encoded_stream);
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.to_json(), b.report.to_json());
    }

    #[test]
    fn savings_monotone_in_threshold() {
        let series: Vec<Vec<f64>> = (0..2)
            .map(|m| {
                let mut rng = ChaCha8Rng::seed_from_u64(60 + m);
                (0..72 * 4)
                    .map(|t| {
                        let day = 2.0 * std::f64::consts::PI * t as f64 / 288.0;
                        (0.5 + 0.2 * day.sin() + 0.05 * (2.0 * day).sin()
                            + rng.gen_range(-0.02..0.02))
                        .clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        let mut last_savings = f64::INFINITY;
        for e in [0.5, 0.7, 0.9, 0.95, 0.99] {
            let cfg = config(72, 2, TruncationCriterion::EnergyThreshold(e));
            let outcome = run_simulation(&series, &cfg).unwrap();
            assert!(outcome.report.savings <= last_savings + 1e-12, "e={e}");
            last_savings = outcome.report.savings;
        }
    }

    #[test]
    fn ragged_and_misaligned_traces_rejected() {
        let cfg = config(4, 2, TruncationCriterion::EnergyThreshold(0.9));
        let err = run_simulation(&[vec![0.5; 8], vec![0.5; 4]], &cfg).unwrap_err();
        assert!(matches!(err, ProtocolError::RaggedTrace { node: 1, .. }));
        let err = run_simulation(&[vec![0.5; 6], vec![0.5; 6]], &cfg).unwrap_err();
        assert!(matches!(err, ProtocolError::BadTraceLength { len: 6, n: 4 }));
        let err = run_simulation(&[vec![0.5; 8]], &cfg).unwrap_err();
        assert!(matches!(
            err,
            ProtocolError::NodeCountMismatch { expected: 2, got: 1 }
        ));
    }
}
