use std::f64::consts::PI;

use super::{Point, ReflectionOrder, RoomScenario};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::FirStack;

/// Width of the Hann-windowed sinc used to place each image at its
/// fractional delay.
const KERNEL_TAPS: usize = 81;
const KERNEL_HALF: i64 = (KERNEL_TAPS as i64 - 1) / 2;

/// Propagation distance below which the spherical spreading gain saturates.
pub const MIN_DISTANCE: f64 = 1e-2;

/// Corner frequency of the high-pass applied to the reflected field.
pub const HIGH_PASS_HZ: f64 = 100.0;

/// Wall pressure reflection coefficient for the scenario.
///
/// A single coefficient is shared by all six surfaces. Late energy from the
/// image lattice arriving along direction `u` decays as
/// `β^(2 c t Σ|u_k|/L_k)`; averaging over the sphere gives the energy decay
/// curve up to a time scale set by `β`. The scale is fixed by requiring the
/// curve to fall from -5 dB to -25 dB in a third of the configured T60.
/// Sabine's absorption, which assumes a diffuse field, leaves the simulated
/// responses with a visibly shorter decay.
pub fn reflection_coefficient(scenario: &RoomScenario) -> Result<f64> {
    if let Some(b) = scenario.reflection_override {
        return Ok(b);
    }
    if !(scenario.t60 > 0.0) {
        return Err(Error::Config(format!(
            "T60 must be positive, got {}",
            scenario.t60
        )));
    }
    let rates = lattice_rates(&scenario.room_dims);
    let span = decay_time(&rates, -25.0) - decay_time(&rates, -5.0);
    // EDC(t) depends on t only through a t with a = -2 c ln β.
    let a = 3.0 * span / scenario.t60;
    Ok((-a / (2.0 * scenario.sound_speed)).exp())
}

/// Per-direction reflection rates `Σ|u_k|/L_k` on an equal-area grid over
/// one octant of the sphere.
fn lattice_rates(dims: &Point) -> Vec<f64> {
    const N: usize = 48;
    let mut rates = Vec::with_capacity(N * N);
    for i in 0..N {
        let uz = (i as f64 + 0.5) / N as f64;
        let rho = (1.0 - uz * uz).sqrt();
        for j in 0..N {
            let phi = (j as f64 + 0.5) / N as f64 * PI / 2.0;
            rates.push(rho * phi.cos() / dims[0] + rho * phi.sin() / dims[1] + uz / dims[2]);
        }
    }
    rates
}

/// Scaled time at which the lattice energy decay curve reaches `level_db`.
fn decay_time(rates: &[f64], level_db: f64) -> f64 {
    let edc = |tau: f64| rates.iter().map(|&s| (-s * tau).exp() / s).sum::<f64>();
    let target = edc(0.0) * 10f64.powf(level_db / 10.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    while edc(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if edc(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Second-order DC-blocking high-pass, applied in place.
fn high_pass(h: &mut [f64], fs: f64) {
    let w = 2.0 * PI * HIGH_PASS_HZ / fs;
    let r1 = (-w).exp();
    let (b1, b2, a1) = (2.0 * r1 * w.cos(), -r1 * r1, -(1.0 + r1));
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in h.iter_mut() {
        let y0 = b1 * y1 + b2 * y2 + *v;
        *v = y0 + a1 * y1 + r1 * y2;
        y2 = y1;
        y1 = y0;
    }
}

/// Full `rir_length`-tap response from `source` to `mic`.
pub fn simulate_rir(scenario: &RoomScenario, source: &Point, mic: &Point) -> Result<Vec<f64>> {
    simulate_rir_prefix(scenario, source, mic, scenario.rir_length)
}

/// The first `taps` taps of [`simulate_rir`].
///
/// Images that cannot reach the first `taps` samples are skipped while the
/// iteration order is kept, so the prefix is bit-identical to the head of
/// the full simulation.
pub fn simulate_rir_prefix(
    scenario: &RoomScenario,
    source: &Point,
    mic: &Point,
    taps: usize,
) -> Result<Vec<f64>> {
    scenario.validate()?;
    if taps == 0 || taps > scenario.rir_length {
        return Err(Error::Config(format!(
            "cannot simulate {taps} of {} taps",
            scenario.rir_length
        )));
    }
    for p in [source, mic] {
        if !scenario.contains(p) {
            return Err(Error::Geometry(format!(
                "position {p:?} is outside the room"
            )));
        }
    }
    let beta = reflection_coefficient(scenario)?;
    let samples_per_meter = scenario.sample_rate / scenario.sound_speed;
    // Arrivals later than this cannot touch the requested taps.
    let horizon = taps as f64 + KERNEL_HALF as f64 + 1.0;
    let max_dist = horizon / samples_per_meter;
    let dims = scenario.room_dims;
    let bound = |d: f64| (max_dist / (2.0 * d)).ceil() as i64 + 1;
    let n = [bound(dims[0]), bound(dims[1]), bound(dims[2])];
    let order = match scenario.max_reflection_order {
        ReflectionOrder::Auto => None,
        ReflectionOrder::Fixed(o) => Some(i64::from(o)),
    };

    let mut direct = vec![0.0; taps];
    let mut h = vec![0.0; taps];
    for mx in -n[0]..=n[0] {
        for my in -n[1]..=n[1] {
            for mz in -n[2]..=n[2] {
                let m = [mx, my, mz];
                for qx in 0..2i64 {
                    for qy in 0..2i64 {
                        for qz in 0..2i64 {
                            let q = [qx, qy, qz];
                            let mut reflections = 0i64;
                            let mut dist2 = 0.0;
                            for k in 0..3 {
                                reflections += (2 * m[k] - q[k]).abs();
                                let img =
                                    (1 - 2 * q[k]) as f64 * source[k] + 2.0 * m[k] as f64 * dims[k];
                                dist2 += (img - mic[k]).powi(2);
                            }
                            if order.is_some_and(|o| reflections > o) {
                                continue;
                            }
                            let dist = dist2.sqrt();
                            let delay = dist * samples_per_meter;
                            if delay >= horizon {
                                continue;
                            }
                            let gain =
                                beta.powi(reflections as i32) / (4.0 * PI * dist.max(MIN_DISTANCE));
                            let target = if reflections == 0 {
                                &mut direct
                            } else {
                                &mut h
                            };
                            add_kernel(target, delay, gain);
                        }
                    }
                }
            }
        }
    }
    // The all-positive image sum carries a DC offset that would dominate the
    // late tail.
    high_pass(&mut h, scenario.sample_rate);
    for (v, d) in h.iter_mut().zip(&direct) {
        *v += d;
    }
    Ok(h)
}

/// Adds `gain` times a windowed sinc centered at the fractional `delay`.
fn add_kernel(h: &mut [f64], delay: f64, gain: f64) {
    if gain == 0.0 {
        return;
    }
    // Center on the nearest tap so |frac| <= 1/2 and sin(πf) keeps full
    // relative precision.
    let base = delay.round();
    let frac = delay - base;
    let base = base as i64;
    let half_width = KERNEL_TAPS as f64 / 2.0;
    // sin(π(j − f)) = −(−1)^j sin(πf) for integer j.
    let sin_frac = (PI * frac).sin();
    for j in -KERNEL_HALF..=KERNEL_HALF {
        let n = base + j;
        if n < 0 || n >= h.len() as i64 {
            continue;
        }
        let t = j as f64 - frac;
        if t.abs() >= half_width {
            continue;
        }
        let sinc = if t == 0.0 {
            1.0
        } else {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            sign * sin_frac / (PI * t)
        };
        let window = 0.5 * (1.0 + (2.0 * PI * t / KERNEL_TAPS as f64).cos());
        h[n as usize] += gain * window * sinc;
    }
}

/// Full-length responses from `source` to every microphone as a single-input
/// FIR stack with `rir_length` taps.
pub fn simulate_system<T: Real>(scenario: &RoomScenario, source: &Point) -> Result<FirStack<T>> {
    let filters = scenario
        .mic_positions
        .iter()
        .map(|mic| simulate_rir(scenario, source, mic).map(|h| h.into_iter().map(T::of).collect()))
        .collect::<Result<Vec<Vec<T>>>>()?;
    FirStack::from_filters(scenario.rir_length, &[filters])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: &Point, b: &Point) -> f64 {
        ((0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()).sqrt()
    }

    fn argmax(h: &[f64]) -> usize {
        h.iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0
    }

    #[test]
    fn coefficient_tracks_reverberation_time() {
        let s = RoomScenario::reference(1024);
        let beta = reflection_coefficient(&s).unwrap();
        // Diffuse-field bounds: Sabine absorbs more, the mean-free-path decay less.
        let sabine = 24.0 * 10f64.ln() * 105.0 / (343.0 * 137.0 * 0.3);
        assert!(beta > (1.0 - sabine).sqrt() && beta < 1.0);
        let mut longer = s.clone();
        longer.t60 = 0.6;
        assert!(reflection_coefficient(&longer).unwrap() > beta);
        longer.t60 = 0.0;
        assert!(reflection_coefficient(&longer).is_err());
    }

    #[test]
    fn high_pass_removes_dc() {
        let mut x = vec![1.0; 8000];
        high_pass(&mut x, 8000.0);
        assert!(x[4000..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn anechoic_override_gives_single_pulse() {
        let mut s = RoomScenario::reference(512);
        s.reflection_override = Some(0.0);
        let src = [3.4, 3.1, 1.9];
        let mic = s.mic_positions[0];
        let h = simulate_rir(&s, &src, &mic).unwrap();
        let delay = dist(&src, &mic) * s.sample_rate / s.sound_speed;
        let peak = argmax(&h);
        assert!(
            (peak as f64 - delay).abs() <= 1.0,
            "peak {peak}, delay {delay}"
        );
        let peak_energy = h[peak] * h[peak];
        let lo = (delay.floor() as usize).saturating_sub(KERNEL_HALF as usize);
        let hi = delay.floor() as usize + KERNEL_HALF as usize;
        let outside: f64 = h
            .iter()
            .enumerate()
            .filter(|(n, _)| *n < lo || *n > hi)
            .map(|(_, v)| v * v)
            .sum();
        assert!(outside < 1e-6 * peak_energy);
        let expected_gain = 1.0 / (4.0 * PI * dist(&src, &mic));
        assert!((h[peak].abs() - expected_gain).abs() / expected_gain < 0.1);
    }

    #[test]
    fn near_coincident_source() {
        let mut s = RoomScenario::reference(256);
        s.reflection_override = Some(0.0);
        let mic = s.mic_positions[0];
        let peak_for = |eps: f64| {
            let src = [mic[0] + eps, mic[1], mic[2]];
            let h = simulate_rir(&s, &src, &mic).unwrap();
            (argmax(&h), h[argmax(&h)])
        };
        // One and two samples of travel put the kernel center on a tap.
        let step = s.sound_speed / s.sample_rate;
        let (n1, a1) = peak_for(step);
        let (n2, a2) = peak_for(2.0 * step);
        assert_eq!((n1, n2), (1, 2));
        assert!((a1 / a2 - 2.0).abs() < 1e-9, "{a1} {a2}");
        let (_, tiny1) = peak_for(1e-5);
        let (_, tiny2) = peak_for(1e-4);
        assert!((tiny1 - tiny2).abs() / tiny1 < 1e-3);
        assert!((tiny1 - 1.0 / (4.0 * PI * MIN_DISTANCE)).abs() / tiny1 < 1e-3);
    }

    /// Schroeder backward integration with a line fit between -5 and -25 dB.
    fn schroeder_t60(h: &[f64], fs: f64) -> f64 {
        let mut edc: Vec<f64> = h
            .iter()
            .rev()
            .scan(0.0, |acc, v| {
                *acc += v * v;
                Some(*acc)
            })
            .collect();
        edc.reverse();
        let total = edc[0];
        let pts: Vec<(f64, f64)> = edc
            .iter()
            .enumerate()
            .map(|(n, e)| (n as f64 / fs, 10.0 * (e / total).log10()))
            .filter(|&(_, db)| (-25.0..=-5.0).contains(&db))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -60.0 / (sxy / sxx)
    }

    #[test]
    fn decay_matches_reverberation_time() {
        let s = RoomScenario::reference(4096);
        for (az, el) in [(30.0, -5.0), (80.0, 20.0), (150.0, 50.0), (100.0, 0.0)] {
            let src = s.source_sector.position(az, el);
            for mic in &s.mic_positions {
                let h = simulate_rir(&s, &src, mic).unwrap();
                let t60 = schroeder_t60(&h, s.sample_rate);
                assert!(
                    (t60 - 0.3).abs() <= 0.2 * 0.3,
                    "measured T60 {t60} at ({az}, {el})"
                );
            }
        }
    }

    #[test]
    fn prefix_is_bit_identical() {
        let s = RoomScenario::reference(1024);
        let src = s.source_sector.position(45.0, 10.0);
        let mic = s.mic_positions[0];
        let full = simulate_rir(&s, &src, &mic).unwrap();
        let head = simulate_rir_prefix(&s, &src, &mic, 300).unwrap();
        assert_eq!(&full[..300], &head[..]);
    }

    #[test]
    fn fixed_order_zero_is_direct_path_only() {
        let mut s = RoomScenario::reference(512);
        s.max_reflection_order = ReflectionOrder::Fixed(0);
        let src = s.source_sector.position(100.0, 0.0);
        let mut anechoic = s.clone();
        anechoic.reflection_override = Some(0.0);
        anechoic.max_reflection_order = ReflectionOrder::Auto;
        let a = simulate_rir(&s, &src, &s.mic_positions[0]).unwrap();
        let b = simulate_rir(&anechoic, &src, &s.mic_positions[0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outside_positions_are_rejected() {
        let s = RoomScenario::reference(128);
        let r = simulate_rir(&s, &[-0.1, 1.0, 1.0], &s.mic_positions[0]);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn deterministic() {
        let s = RoomScenario::reference(256);
        let src = s.source_sector.position(60.0, 30.0);
        let a = simulate_rir(&s, &src, &s.mic_positions[0]).unwrap();
        let b = simulate_rir(&s, &src, &s.mic_positions[0]).unwrap();
        assert_eq!(a, b);
    }
}
