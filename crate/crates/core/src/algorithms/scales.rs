//! Action-scale schedules. Each function is a pure evaluation of its
//! schedule; the policy fills in backlog and delay statistics.

/// Delay-aware schedule for the Tsallis variant:
/// sigma = (1/sqrt(t) + pref * d * sqrt(ln(D+1)/D))^-1, delay term 0 when d = 0.
pub fn tinf_scale(t: u64, backlog: u64, experienced_delay: u64, prefactor: f64) -> f64 {
    let base = 1.0 / (t as f64).sqrt();
    let delay_term = if backlog == 0 {
        0.0
    } else {
        let dd = experienced_delay as f64;
        prefactor * backlog as f64 * ((dd + 1.0).ln() / dd).sqrt()
    };
    1.0 / (base + delay_term)
}

/// Scale-free Tsallis schedule:
/// sigma = ((d+1) * sqrt(ln(3 + D/L^2) / (3 + D)))^-1 with D the weighted
/// squared-loss budget including the current round.
pub fn sftinf_scale(backlog: u64, weighted_d: f64, range_estimate: f64) -> f64 {
    let arg = (3.0 + weighted_d / (range_estimate * range_estimate)).ln();
    1.0 / ((backlog as f64 + 1.0) * (arg / (3.0 + weighted_d)).sqrt())
}

/// Scale-free log-barrier schedule: the scale-free Tsallis base gains a
/// sqrt(K ln T) factor, and when the backlog is small relative to the
/// experienced delay the scale is clamped up to twice the range estimate.
pub fn sflbinf_scale(
    backlog: u64,
    weighted_d: f64,
    experienced_delay: u64,
    range_estimate: f64,
    k: usize,
    horizon: u64,
) -> f64 {
    let arg = (3.0 + weighted_d / (range_estimate * range_estimate)).ln();
    let base = 1.0
        / ((backlog as f64 + 1.0)
            * (arg / (3.0 + weighted_d)).sqrt()
            * (k as f64 * (horizon as f64).ln()).sqrt());
    if (backlog as f64) <= (experienced_delay as f64 / k as f64).sqrt() {
        base.max(2.0 * range_estimate)
    } else {
        base
    }
}

/// Linear-bandit schedule, clamped below at 8n so the Dikin-ellipsoid step
/// stays safe: sigma = max((sqrt(lnT/(nt)) + d sqrt(ln(D+1) lnT/(nD)))^-1, 8n).
pub fn bolo_scale(t: u64, backlog: u64, experienced_delay: u64, n: usize, horizon: u64) -> f64 {
    let lnt = (horizon as f64).ln();
    let nf = n as f64;
    let base = (lnt / (nf * t as f64)).sqrt();
    let delay_term = if backlog == 0 {
        0.0
    } else {
        let dd = experienced_delay as f64;
        backlog as f64 * ((dd + 1.0).ln() * lnt / (nf * dd)).sqrt()
    };
    (1.0 / (base + delay_term)).max(8.0 * nf)
}
