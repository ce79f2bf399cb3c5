//! Source-filter tone generator: quasi-harmonic partials shaped by a
//! pitch-independent spectral envelope with a hard cutoff. Eight synthetic
//! instrument classes give a desk-scale labeled corpus whose ground truth
//! is the envelope, not the pitch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::{DspError, Result, SAMPLE_RATE};

/// Pitch-independent spectral envelope: flat passband rolling off toward
/// `cutoff_hz` with slope order `rolloff`, zero above the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub cutoff_hz: f64,
    pub rolloff: f64,
}

impl Envelope {
    /// Amplitude gain at `freq`: -3 dB at the cutoff, hard zero above it.
    pub fn gain(&self, freq: f64) -> f64 {
        if freq > self.cutoff_hz {
            0.0
        } else {
            (1.0 + (freq / self.cutoff_hz).powf(2.0 * self.rolloff)).powf(-0.5)
        }
    }
}

/// Recipe for one rendered note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub f0_hz: f64,
    pub n_partials: usize,
    pub envelope: Envelope,
    /// Dynamic marking as plain gain in dB (0 = forte, -10, -20, ...).
    pub nuance_db: f64,
    pub duration_s: f64,
    pub instrument_id: usize,
}

/// The timbral traits of one synthetic instrument class. The envelope is
/// the class identity; attack, decay, and partial parity add secondary
/// character.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentClass {
    pub id: usize,
    pub name: String,
    pub envelope: Envelope,
    pub attack_s: f64,
    pub decay_s: f64,
    pub odd_partials_only: bool,
}

/// Number of synthetic instrument classes.
pub const N_CLASSES: usize = 8;

/// Class parameter table; cutoffs are roughly log-spaced so every class
/// has a distinct envelope support.
pub fn instrument_class(id: usize) -> InstrumentClass {
    let (cutoff, rolloff, attack, decay, odd) = match id % N_CLASSES {
        0 => (900.0, 2.0, 0.005, 0.8, false),
        1 => (1400.0, 3.0, 0.020, 1.2, false),
        2 => (2100.0, 2.5, 0.002, 0.5, true),
        3 => (3000.0, 4.0, 0.010, 2.0, false),
        4 => (4200.0, 2.0, 0.040, 1.5, false),
        5 => (6000.0, 3.5, 0.004, 0.7, true),
        6 => (8500.0, 2.5, 0.015, 2.5, false),
        _ => (12_000.0, 3.0, 0.008, 1.0, false),
    };
    InstrumentClass {
        id: id % N_CLASSES,
        name: format!("inst{:02}", id % N_CLASSES),
        envelope: Envelope { cutoff_hz: cutoff, rolloff },
        attack_s: attack,
        decay_s: decay,
        odd_partials_only: odd,
    }
}

/// Note spec for a class at a fundamental: partials fill the envelope
/// support without crossing Nyquist.
pub fn note_spec(class: &InstrumentClass, f0_hz: f64, nuance_db: f64, duration_s: f64) -> SynthSpec {
    let by_cutoff = (class.envelope.cutoff_hz / f0_hz).floor() as usize;
    let by_nyquist = ((SAMPLE_RATE as f64 / 2.0 - 1.0) / f0_hz).floor() as usize;
    SynthSpec {
        f0_hz,
        n_partials: by_cutoff.clamp(1, by_nyquist.max(1)),
        envelope: class.envelope,
        nuance_db,
        duration_s,
        instrument_id: class.id,
    }
}

/// Broadband floor under the partials, 70 dB below the nominal level;
/// keeps log-energy features away from the numerical floor the way real
/// recordings do.
const NOISE_FLOOR: f64 = 3.162e-4;

/// Renders a note: partials at `n * f0` with envelope-shaped amplitudes,
/// a few random cents of detuning and a random phase per partial, a faint
/// broadband noise floor, an attack-decay amplitude contour, and the
/// nuance gain applied last.
pub fn synth_tone<R: Rng>(spec: &SynthSpec, rng: &mut R) -> Result<AudioBuffer> {
    if spec.f0_hz <= 0.0 || spec.duration_s <= 0.0 || spec.n_partials == 0 {
        return Err(DspError::InvalidParam {
            name: "synth spec",
            reason: format!("f0 {} Hz, {} partials, {} s", spec.f0_hz, spec.n_partials, spec.duration_s),
        });
    }
    if spec.f0_hz * spec.n_partials as f64 >= SAMPLE_RATE as f64 / 2.0 {
        return Err(DspError::InvalidParam {
            name: "n_partials",
            reason: format!(
                "partial {} at {:.0} Hz crosses Nyquist",
                spec.n_partials,
                spec.f0_hz * spec.n_partials as f64
            ),
        });
    }
    let class = instrument_class(spec.instrument_id);
    let sr = SAMPLE_RATE as f64;
    let len = (spec.duration_s * sr).round() as usize;
    let mut mix = vec![0.0f64; len];
    let mut amp_sum = 0.0f64;

    for p in 1..=spec.n_partials {
        // Draw per-partial randomness unconditionally so the stream stays
        // aligned across classes with different parities.
        let detune: f64 = rng.random_range(-5e-4..5e-4);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        if class.odd_partials_only && p % 2 == 0 {
            continue;
        }
        let nominal = p as f64 * spec.f0_hz;
        let amp = spec.envelope.gain(nominal);
        if amp <= 0.0 {
            continue;
        }
        amp_sum += amp;
        let omega = std::f64::consts::TAU * nominal * (1.0 + detune) / sr;
        let (sin_w, cos_w) = omega.sin_cos();
        let (mut s, mut c) = phase.sin_cos();
        for slot in mix.iter_mut() {
            *slot += amp * s;
            let s_next = s * cos_w + c * sin_w;
            c = c * cos_w - s * sin_w;
            s = s_next;
        }
    }
    if amp_sum <= 0.0 {
        return Err(DspError::InvalidParam {
            name: "envelope",
            reason: "no partial falls inside the envelope support".into(),
        });
    }
    let noise_amp = NOISE_FLOOR * amp_sum;
    for slot in mix.iter_mut() {
        *slot += noise_amp * rng.random_range(-1.0f64..1.0);
    }

    let master = 0.5 / amp_sum;
    let nuance = 10f64.powf(spec.nuance_db / 20.0);
    let samples = mix
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = i as f64 / sr;
            let contour = (1.0 - (-t / class.attack_s).exp()) * (-t / class.decay_s).exp();
            (v * contour * master * nuance) as f32
        })
        .collect();
    Ok(AudioBuffer::new(samples, SAMPLE_RATE))
}
