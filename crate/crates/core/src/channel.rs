//! Non-stationary wideband Rayleigh multipath channels.
//!
//! A channel realization is a short list of taps, each with a delay, a real
//! amplitude and a phase. The narrowband coefficient seen by a subcarrier is
//! the phasor sum of the taps, `h = Σ β_n e^{-jθ_n}`, and the channel power
//! gain is `|h|²`. Tap amplitudes are drawn as magnitudes of independent
//! circular complex Gaussians with an exponential power-delay profile, so the
//! envelope `|h|` is Rayleigh with `E|h|² = mean_gain`. Phases are redrawn
//! uniformly on `[0, 2π)` at every measurement time, folding the Doppler and
//! oscillator offsets into one term.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::power::AppId;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTap {
    /// Excess delay [s].
    pub delay: f64,
    /// Real amplitude β_n (≥ 0).
    pub amplitude: f64,
    /// Phase θ_n [rad].
    pub phase: f64,
}

impl ChannelTap {
    pub fn new(delay: f64, amplitude: f64, phase: f64) -> Result<Self> {
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(invalid("delay", format!("must be finite and >= 0, got {delay}")));
        }
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(invalid("amplitude", format!("must be finite and >= 0, got {amplitude}")));
        }
        Ok(Self {
            delay,
            amplitude,
            phase,
        })
    }

    pub fn phasor(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, -self.phase)
    }
}

/// Tap list for one measurement time, sorted by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    taps: Vec<ChannelTap>,
    measurement_time: u64,
}

impl MultipathChannel {
    pub fn new(mut taps: Vec<ChannelTap>, measurement_time: u64) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("taps", "a channel needs at least one tap"));
        }
        taps.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Ok(Self {
            taps,
            measurement_time,
        })
    }

    pub fn taps(&self) -> &[ChannelTap] {
        &self.taps
    }

    pub fn measurement_time(&self) -> u64 {
        self.measurement_time
    }

    /// Returns a copy with every tap phase shifted by `offset`.
    pub fn rotated(&self, offset: f64) -> Self {
        let taps = self
            .taps
            .iter()
            .map(|t| ChannelTap {
                phase: t.phase + offset,
                ..*t
            })
            .collect();
        Self {
            taps,
            measurement_time: self.measurement_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSnapshot {
    pub coefficient: Complex64,
    /// `|coefficient|²`
    pub gain: f64,
    pub direction: Direction,
}

impl ChannelSnapshot {
    /// Snapshot with a real, non-negative coefficient of the given gain.
    pub fn from_gain(gain: f64, direction: Direction) -> Self {
        Self {
            coefficient: Complex64::new(gain.sqrt(), 0.0),
            gain,
            direction,
        }
    }
}

/// Shape of the power-delay profile used when sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayProfile {
    /// Spacing between consecutive taps [s].
    pub tap_spacing: f64,
    /// Decay constant of the exponential profile [s].
    pub rms_delay_spread: f64,
}

impl Default for DelayProfile {
    fn default() -> Self {
        Self {
            tap_spacing: 50e-9,
            rms_delay_spread: 100e-9,
        }
    }
}

/// Samples a channel for one measurement time from a seed.
pub fn sample_channel(seed: u64, n_taps: usize, mean_gain: f64) -> Result<MultipathChannel> {
    let mut rng = rng::stream(seed, &[]);
    sample_channel_with(&mut rng, n_taps, mean_gain, &DelayProfile::default(), 0)
}

pub fn sample_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    n_taps: usize,
    mean_gain: f64,
    profile: &DelayProfile,
    measurement_time: u64,
) -> Result<MultipathChannel> {
    if n_taps == 0 {
        return Err(invalid("n_taps", "must be at least 1"));
    }
    if !(mean_gain > 0.0) || !mean_gain.is_finite() {
        return Err(invalid("mean_gain", format!("must be positive, got {mean_gain}")));
    }
    let weights: Vec<f64> = (0..n_taps)
        .map(|n| (-(n as f64) * profile.tap_spacing / profile.rms_delay_spread).exp())
        .collect();
    let norm: f64 = weights.iter().sum();

    let taps = weights
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let var = mean_gain * w / norm;
            // each quadrature carries half the tap power
            let sd = (var / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let amplitude = sd * re.hypot(im);
            let phase = rng.random::<f64>() * 2.0 * PI;
            ChannelTap {
                delay: n as f64 * profile.tap_spacing,
                amplitude,
                phase,
            }
        })
        .collect();
    MultipathChannel::new(taps, measurement_time)
}

/// Channel whose tap count and phases change between measurement times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProcess {
    pub min_taps: usize,
    pub max_taps: usize,
    pub profile: DelayProfile,
}

impl ChannelProcess {
    pub fn realize(&self, seed: u64, slot: u64, mean_gain: f64) -> Result<MultipathChannel> {
        if self.min_taps == 0 || self.max_taps < self.min_taps {
            return Err(invalid(
                "taps",
                format!("bad tap range {}..={}", self.min_taps, self.max_taps),
            ));
        }
        let mut rng = rng::stream(seed, &[slot]);
        let n = rng.random_range(self.min_taps..=self.max_taps);
        sample_channel_with(&mut rng, n, mean_gain, &self.profile, slot)
    }
}

pub fn snapshot(channel: &MultipathChannel, direction: Direction) -> ChannelSnapshot {
    let coefficient: Complex64 = channel.taps().iter().map(ChannelTap::phasor).sum();
    ChannelSnapshot {
        coefficient,
        gain: coefficient.norm_sqr(),
        direction,
    }
}

/// `(delay, β_n²)` per tap.
pub fn power_delay_profile(channel: &MultipathChannel) -> Vec<(f64, f64)> {
    channel
        .taps()
        .iter()
        .map(|t| (t.delay, t.amplitude * t.amplitude))
        .collect()
}

fn check_noise(noise_var: f64) -> Result<()> {
    if !(noise_var > 0.0) {
        return Err(invalid("noise_var", format!("must be > 0, got {noise_var}")));
    }
    Ok(())
}

pub fn snr(p_t: f64, snap: &ChannelSnapshot, noise_var: f64) -> Result<f64> {
    check_noise(noise_var)?;
    Ok(p_t * snap.gain / noise_var)
}

pub fn sinr(
    p_t: f64,
    snap: &ChannelSnapshot,
    noise_var: f64,
    budget: &InterferenceBudget,
) -> Result<f64> {
    check_noise(noise_var)?;
    Ok(p_t * snap.gain / (noise_var + budget.total))
}

/// One application flow in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub app: AppId,
    pub direction: Direction,
}

pub type LinkSet = BTreeSet<Link>;

/// Uplink and downlink links for each application.
pub fn duplex_links(apps: impl IntoIterator<Item = AppId>) -> LinkSet {
    apps.into_iter()
        .flat_map(|app| {
            [Direction::Uplink, Direction::Downlink]
                .into_iter()
                .map(move |direction| Link { app, direction })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterferenceBudget {
    /// Interference from base-station transmissions [W].
    pub from_bs: f64,
    /// Interference from other handsets [W].
    pub from_ues: f64,
    pub total: f64,
}

/// Interference seen by a user whose active links are `active_links`.
///
/// Every downlink flow carries a base-station contribution `t_bs·bs_gain` and
/// every uplink flow a handset contribution `p_j·ue_gain`.
pub fn interference(
    t_bs: f64,
    p_j: f64,
    bs_gain: f64,
    ue_gain: f64,
    active_links: &LinkSet,
) -> InterferenceBudget {
    let dl = active_links
        .iter()
        .filter(|l| l.direction == Direction::Downlink)
        .count() as f64;
    let ul = active_links.len() as f64 - dl;
    let from_bs = t_bs * bs_gain * dl;
    let from_ues = p_j * ue_gain * ul;
    InterferenceBudget {
        from_bs,
        from_ues,
        total: from_bs + from_ues,
    }
}

/// Rayleigh CDF for an envelope with mean power `mean_gain`.
pub fn rayleigh_cdf(r: f64, mean_gain: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        1.0 - (-r * r / mean_gain).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub samples: usize,
}

impl KsOutcome {
    pub fn passed(&self) -> bool {
        self.statistic < self.critical
    }
}

/// One-sample Kolmogorov-Smirnov test of envelope samples against Rayleigh,
/// using the asymptotic critical value at significance `alpha`.
pub fn envelope_ks(envelopes: &[f64], mean_gain: f64, alpha: f64) -> Result<KsOutcome> {
    if envelopes.is_empty() {
        return Err(invalid("envelopes", "no samples"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1)"));
    }
    let mut sorted = envelopes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = rayleigh_cdf(r, mean_gain);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max);
    let critical = (-(alpha / 2.0).ln() / 2.0).sqrt() / n.sqrt();
    Ok(KsOutcome {
        statistic,
        critical,
        samples: sorted.len(),
    })
}
