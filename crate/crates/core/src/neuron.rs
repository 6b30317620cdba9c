//! Vanilla LIF/IF neuron dynamics with soft or hard reset, plus the
//! firing-rate identity that underpins conversion-based inference:
//! for IF with soft reset, `F_avg = I_avg - (v_T - v_0) / T` exactly.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResetMode {
    /// Subtract the firing threshold on spike.
    Soft,
    /// Zero the membrane potential on spike.
    Hard,
}

/// Parameters of a single LIF/IF neuron.
#[derive(Clone, Copy, Debug)]
pub struct NeuronParams {
    /// Membrane leak constant, in (0, 1]. 1 gives the IF model.
    pub mu: f64,
    /// Firing threshold compared against the charged potential.
    pub theta_pre: f64,
    /// Amplitude emitted per spike.
    pub theta_post: f64,
    /// Initial membrane potential.
    pub v0: f64,
    pub reset: ResetMode,
}

impl NeuronParams {
    /// IF neuron with soft reset and the standard half-threshold initial
    /// potential `v0 = theta_pre / 2`.
    pub fn if_soft(theta: f64) -> Result<Self> {
        Self::new(1.0, theta, theta, theta / 2.0, ResetMode::Soft)
    }

    pub fn new(mu: f64, theta_pre: f64, theta_post: f64, v0: f64, reset: ResetMode) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(CoreError::InvalidConfig(format!("leak constant {mu} outside (0, 1]")));
        }
        if !(theta_pre > 0.0) {
            return Err(CoreError::InvalidConfig(format!("threshold {theta_pre} must be positive")));
        }
        Ok(NeuronParams { mu, theta_pre, theta_post, v0, reset })
    }
}

/// Per-step record of a simulated neuron: charged potentials `m_t`, reset
/// potentials `v_t` and binary spikes `s_t`.
#[derive(Clone, Debug, Default)]
pub struct NeuronTrace {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<bool>,
}

impl NeuronTrace {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn spike_count(&self) -> usize {
        self.s.iter().filter(|s| **s).count()
    }
}

/// Temporal averages of a trace. For IF with soft reset,
/// `f_avg = i_avg - v_residual` holds exactly.
#[derive(Clone, Copy, Debug)]
pub struct RateSummary {
    pub f_avg: f64,
    pub i_avg: f64,
    pub v_residual: f64,
}

/// One dynamics step: charge, threshold, reset. Ties at the threshold fire.
pub fn step(params: &NeuronParams, v_prev: f64, input: f64) -> Result<(f64, bool, f64)> {
    if !input.is_finite() || !v_prev.is_finite() {
        return Err(CoreError::NonFinite(format!(
            "neuron step input {input}, potential {v_prev}"
        )));
    }
    let m = params.mu * v_prev + input;
    let fired = m >= params.theta_pre;
    let v_next = match (params.reset, fired) {
        (ResetMode::Soft, true) => m - params.theta_pre,
        (ResetMode::Hard, true) => 0.0,
        (_, false) => m,
    };
    Ok((m, fired, v_next))
}

/// Run the dynamics serially from `params.v0` over the given input currents.
pub fn run_sequence(params: &NeuronParams, inputs: &[f64]) -> Result<NeuronTrace> {
    if inputs.is_empty() {
        return Err(CoreError::EmptyInput("run_sequence needs at least one input".into()));
    }
    let mut trace = NeuronTrace::default();
    let mut v = params.v0;
    for &input in inputs {
        let (m, fired, v_next) = step(params, v, input)?;
        trace.m.push(m);
        trace.s.push(fired);
        trace.v.push(v_next);
        v = v_next;
    }
    Ok(trace)
}

/// Average rate, average input and residual-potential drift for an IF
/// soft-reset trace. Errs on leaky or hard-reset parameters, where the
/// identity `f_avg = i_avg - v_residual` is not guaranteed.
pub fn rate_summary(params: &NeuronParams, trace: &NeuronTrace, inputs: &[f64]) -> Result<RateSummary> {
    if params.mu != 1.0 || params.reset != ResetMode::Soft {
        return Err(CoreError::Contract(
            "rate_summary requires the IF model (mu = 1) with soft reset".into(),
        ));
    }
    if trace.len() != inputs.len() || trace.is_empty() {
        return Err(CoreError::ShapeMismatch(format!(
            "trace length {} vs inputs length {}",
            trace.len(),
            inputs.len()
        )));
    }
    let t = inputs.len() as f64;
    let f_avg = trace.spike_count() as f64 * params.theta_post / t;
    let i_avg = inputs.iter().sum::<f64>() / t;
    let v_residual = (trace.v[trace.len() - 1] - params.v0) / t;
    Ok(RateSummary { f_avg, i_avg, v_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subthreshold_step_accumulates() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let (m, s, v) = step(&p, 0.0, 0.6).unwrap();
        assert_eq!((m, s, v), (0.6, false, 0.6));
    }

    #[test]
    fn suprathreshold_step_soft_resets() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let (m, s, v) = step(&p, 0.6, 0.6).unwrap();
        assert!(s);
        assert!((m - 1.2).abs() < 1e-15);
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn leak_halves_potential() {
        let p = NeuronParams::new(0.5, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let (m, s, v) = step(&p, 1.0, 0.0).unwrap();
        assert_eq!((m, s, v), (0.5, false, 0.5));
    }

    #[test]
    fn hard_reset_zeroes() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Hard).unwrap();
        let (_, s, v) = step(&p, 0.6, 0.6).unwrap();
        assert!(s);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ties_fire() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let (_, s, v) = step(&p, 0.0, 1.0).unwrap();
        assert!(s);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn non_finite_input_rejected() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        assert!(matches!(step(&p, 0.0, f64::NAN), Err(CoreError::NonFinite(_))));
    }

    #[test]
    fn hand_simulated_sequence() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let trace = run_sequence(&p, &[0.6, 0.6]).unwrap();
        assert_eq!(trace.s, alloc::vec![false, true]);
        assert!((trace.v[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_inputs_never_fire() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let trace = run_sequence(&p, &[0.0; 8]).unwrap();
        assert_eq!(trace.spike_count(), 0);
        assert_eq!(trace.v[7], 0.0);
    }

    #[test]
    fn suprathreshold_inputs_always_fire() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let trace = run_sequence(&p, &[1.3; 5]).unwrap();
        assert_eq!(trace.spike_count(), 5);
    }

    #[test]
    fn empty_sequence_rejected() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        assert!(matches!(run_sequence(&p, &[]), Err(CoreError::EmptyInput(_))));
    }

    #[test]
    fn rate_identity_on_hand_example() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let inputs = [0.6, 0.6];
        let trace = run_sequence(&p, &inputs).unwrap();
        let r = rate_summary(&p, &trace, &inputs).unwrap();
        assert!((r.f_avg - 0.5).abs() < 1e-15);
        assert!((r.i_avg - 0.6).abs() < 1e-15);
        assert!((r.v_residual - 0.1).abs() < 1e-15);
        assert!((r.f_avg - (r.i_avg - r.v_residual)).abs() < 1e-12);
    }

    #[test]
    fn rate_summary_rejects_leaky_and_hard_reset() {
        let inputs = [0.5, 0.5];
        let leaky = NeuronParams::new(0.9, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let trace = run_sequence(&leaky, &inputs).unwrap();
        assert!(matches!(
            rate_summary(&leaky, &trace, &inputs),
            Err(CoreError::Contract(_))
        ));
        let hard = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Hard).unwrap();
        let trace = run_sequence(&hard, &inputs).unwrap();
        assert!(rate_summary(&hard, &trace, &inputs).is_err());
    }

    #[test]
    fn zero_input_identity_trivial() {
        let p = NeuronParams::new(1.0, 1.0, 1.0, 0.0, ResetMode::Soft).unwrap();
        let inputs = [0.0; 4];
        let trace = run_sequence(&p, &inputs).unwrap();
        let r = rate_summary(&p, &trace, &inputs).unwrap();
        assert_eq!(r.f_avg, 0.0);
        assert!((r.f_avg - (r.i_avg - r.v_residual)).abs() < 1e-15);
    }
}
