//! Synchronization: length-63 Zadoff-Chu sequences on the 62 subcarriers
//! around DC (PSS on the downlink, PSSS on the sidelink) and a beacon burst
//! that follows the sequence with a 24-bit tag standing in for the MIB.

use num_complex::Complex64;

use super::crc::{bits_to_u32, u32_to_bits};
use super::dft::{forward_raw, forward_unitary, inverse_raw, inverse_unitary};
use super::modulation::{hard_decisions, modulate_bits};
use super::Numerology;
use crate::error::{invalid, Result};
use crate::link::LinkType;

pub const SYNC_LEN: usize = 63;
pub const DOWNLINK_SYNC_ROOT: u32 = 25;
pub const SIDELINK_SYNC_ROOT: u32 = 26;
/// Peak-to-mean ratio of the correlation magnitude below which detection fails.
pub const DETECTION_THRESHOLD: f64 = 4.0;
/// Tags carried after the sync symbol.
pub const DOWNLINK_TAG: u32 = 0x4D_49_42;
pub const SIDELINK_TAG: u32 = 0x53_4C_53;
const TAG_BITS: usize = 24;
const TAG_SUBCARRIERS: usize = 72;

#[derive(Debug, Clone, PartialEq)]
pub struct SyncSequence {
    pub link: LinkType,
    pub root_id: u32,
    /// Frequency-domain Zadoff-Chu values, index 31 (DC) zeroed.
    pub zc: Vec<Complex64>,
    /// One OFDM symbol of time-domain samples without cyclic prefix.
    pub samples: Vec<Complex64>,
}

impl SyncSequence {
    pub fn for_link(link: LinkType, num: &Numerology) -> Self {
        let root = match link {
            LinkType::Downlink => DOWNLINK_SYNC_ROOT,
            LinkType::Sidelink => SIDELINK_SYNC_ROOT,
        };
        generate_sync(link, root, num).expect("built-in roots are valid")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn centered_bin(fft_size: usize, offset: isize) -> usize {
    offset.rem_euclid(fft_size as isize) as usize
}

/// Builds the sync symbol for `root_id` (1..=62, coprime with 63).
pub fn generate_sync(link: LinkType, root_id: u32, num: &Numerology) -> Result<SyncSequence> {
    if root_id == 0 || root_id as usize >= SYNC_LEN || gcd(root_id as usize, SYNC_LEN) != 1 {
        return invalid(format!("sync root {root_id} is not coprime with {SYNC_LEN}"));
    }
    let u = f64::from(root_id);
    let zc: Vec<Complex64> = (0..SYNC_LEN)
        .map(|n| {
            if n == SYNC_LEN / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                let n = n as f64;
                Complex64::from_polar(1.0, -std::f64::consts::PI * u * n * (n + 1.0) / SYNC_LEN as f64)
            }
        })
        .collect();
    let mut freq = vec![Complex64::new(0.0, 0.0); num.fft_size];
    for (n, z) in zc.iter().enumerate() {
        freq[centered_bin(num.fft_size, n as isize - (SYNC_LEN / 2) as isize)] = *z;
    }
    inverse_unitary(&mut freq);
    // Scale to unit mean sample power.
    let p = freq.iter().map(|x| x.norm_sqr()).sum::<f64>() / freq.len() as f64;
    let samples = freq.into_iter().map(|x| x / p.sqrt()).collect();
    Ok(SyncSequence { link, root_id, zc, samples })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Correlation peak found by [`detect_sync`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncOutcome {
    /// Sample index where the sequence starts.
    pub offset: usize,
    /// Peak correlation magnitude over its mean across all offsets.
    pub metric: f64,
    /// Complex gain of the sequence at the peak (least-squares).
    pub gain: Complex64,
}

/// Sliding normalized cross-correlation of `samples` against `seq`.
/// Returns `Ok(None)` when the peak-to-mean ratio is below
/// [`DETECTION_THRESHOLD`].
pub fn detect_sync(samples: &[Complex64], seq: &SyncSequence) -> Result<Option<SyncOutcome>> {
    let l = seq.len();
    if l == 0 || samples.len() < 2 * l {
        return invalid(format!("need at least {} samples, got {}", 2 * l, samples.len()));
    }
    let lags = samples.len() - l + 1;
    let n = (samples.len() + l).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[..samples.len()].copy_from_slice(samples);
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    b[..l].copy_from_slice(&seq.samples);
    forward_raw(&mut a);
    forward_raw(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    inverse_raw(&mut a);
    let scale = 1.0 / n as f64;
    let energy_s: f64 = seq.samples.iter().map(|x| x.norm_sqr()).sum();
    // Lags whose window holds no signal at all are left out of the mean so
    // zero padding around a capture does not inflate the metric.
    let mut window: f64 = samples[..l].iter().map(|x| x.norm_sqr()).sum();
    let peak_energy = samples.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    let floor = 1e-9 * peak_energy;
    let (mut offset, mut peak, mut sum, mut count) = (0, 0.0, 0.0, 0usize);
    for k in 0..lags {
        if k > 0 {
            window += samples[k + l - 1].norm_sqr() - samples[k - 1].norm_sqr();
        }
        if window <= floor {
            continue;
        }
        let c = a[k].norm();
        if c > peak {
            peak = c;
            offset = k;
        }
        sum += c;
        count += 1;
    }
    if count == 0 || sum <= 0.0 {
        return Ok(None);
    }
    let mean = sum / count as f64;
    let metric = peak / mean;
    if metric < DETECTION_THRESHOLD {
        return Ok(None);
    }
    let gain = a[offset] * scale / energy_s;
    Ok(Some(SyncOutcome { offset, metric, gain }))
}

fn tag_bits(tag: u32) -> Vec<u8> {
    u32_to_bits(tag, TAG_BITS).collect()
}

fn tag_bins(fft_size: usize) -> impl Iterator<Item = usize> {
    let half = (TAG_SUBCARRIERS / 2) as isize;
    (-half..0).chain(1..=half).map(move |f| centered_bin(fft_size, f))
}

/// Sync symbol followed by a symbol carrying `tag` (QPSK, repeated over the
/// 72 subcarriers around DC), both without cyclic prefix.
pub fn build_beacon(seq: &SyncSequence, tag: u32, num: &Numerology) -> Result<Vec<Complex64>> {
    if tag >= 1 << TAG_BITS {
        return invalid(format!("tag {tag:#x} does not fit in {TAG_BITS} bits"));
    }
    if seq.len() != num.fft_size {
        return invalid("sync sequence does not match the numerology");
    }
    let bits = tag_bits(tag);
    let rep: Vec<u8> = (0..2 * TAG_SUBCARRIERS).map(|i| bits[i % TAG_BITS]).collect();
    let qpsk = modulate_bits(&rep, 2)?;
    let mut freq = vec![Complex64::new(0.0, 0.0); num.fft_size];
    for (bin, s) in tag_bins(num.fft_size).zip(&qpsk) {
        freq[bin] = *s;
    }
    inverse_unitary(&mut freq);
    let p = (TAG_SUBCARRIERS as f64 / num.fft_size as f64).sqrt();
    let mut out = seq.samples.clone();
    out.extend(freq.into_iter().map(|x| x / p));
    Ok(out)
}

/// Reads the tag following a detected sync symbol, using the correlation
/// gain as the channel estimate. `None` if the capture is too short.
pub fn read_beacon_tag(samples: &[Complex64], found: &SyncOutcome, num: &Numerology) -> Option<u32> {
    let start = found.offset + num.fft_size;
    let sym = samples.get(start..start + num.fft_size)?;
    if found.gain.norm_sqr() == 0.0 {
        return None;
    }
    let mut freq = sym.to_vec();
    forward_unitary(&mut freq);
    let p = (TAG_SUBCARRIERS as f64 / num.fft_size as f64).sqrt();
    let mut combined = [0.0f64; TAG_BITS];
    for (i, bin) in tag_bins(num.fft_size).enumerate() {
        let y = freq[bin] * p / found.gain;
        // QPSK Gray map: bit 0 on I, bit 1 on Q, 0 -> positive.
        combined[(2 * i) % TAG_BITS] += y.re;
        combined[(2 * i + 1) % TAG_BITS] += y.im;
    }
    Some(bits_to_u32(&hard_decisions(&combined)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(rng: &mut ChaCha8Rng, n: usize, var: f64) -> Vec<Complex64> {
        let s = (var / 2.0).sqrt();
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re * s, im * s)
            })
            .collect()
    }

    fn embed(seq: &[Complex64], at: usize, len: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[at..at + seq.len()].copy_from_slice(seq);
        buf
    }

    #[test]
    fn zc_is_constant_amplitude_with_dc_nulled() {
        let num = Numerology::default();
        let seq = SyncSequence::for_link(LinkType::Sidelink, &num);
        for (n, z) in seq.zc.iter().enumerate() {
            let expect = if n == 31 { 0.0 } else { 1.0 };
            assert!((z.norm() - expect).abs() < 1e-12);
        }
        let p = seq.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / 512.0;
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_autocorrelation_peak_to_sidelobe() {
        let num = Numerology::default();
        for link in [LinkType::Downlink, LinkType::Sidelink] {
            let s = SyncSequence::for_link(link, &num).zc;
            let n = s.len();
            let corr = |lag: usize| -> f64 { (0..n).map(|i| s[(i + lag) % n] * s[i].conj()).sum::<Complex64>().norm() };
            let peak = corr(0);
            let side = (1..n).map(corr).fold(0.0, f64::max);
            assert!(20.0 * (peak / side).log10() >= 10.0, "{link}");
        }
    }

    #[test]
    fn invalid_roots_and_short_input() {
        let num = Numerology::default();
        assert!(generate_sync(LinkType::Downlink, 0, &num).is_err());
        assert!(generate_sync(LinkType::Downlink, 21, &num).is_err());
        assert!(generate_sync(LinkType::Downlink, 63, &num).is_err());
        let seq = SyncSequence::for_link(LinkType::Downlink, &num);
        assert!(detect_sync(&seq.samples, &seq).is_err());
    }

    #[test]
    fn noiseless_offset_is_exact() {
        let num = Numerology::default();
        for link in [LinkType::Downlink, LinkType::Sidelink] {
            let seq = SyncSequence::for_link(link, &num);
            for k in [0, 1, 777, 7680 - 512] {
                let found = detect_sync(&embed(&seq.samples, k, 7680), &seq).unwrap().unwrap();
                assert_eq!(found.offset, k);
                assert!((found.gain - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn links_do_not_cross_detect() {
        let num = Numerology::default();
        let dl = SyncSequence::for_link(LinkType::Downlink, &num);
        let sl = SyncSequence::for_link(LinkType::Sidelink, &num);
        for k in [0, 1000, 5000] {
            assert!(detect_sync(&embed(&sl.samples, k, 7680), &dl).unwrap().is_none());
            assert!(detect_sync(&embed(&dl.samples, k, 7680), &sl).unwrap().is_none());
        }
    }

    #[test]
    fn zero_db_offset_recovery() {
        let num = Numerology::default();
        let seq = SyncSequence::for_link(LinkType::Downlink, &num);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut exact = 0;
        for t in 0..200 {
            let k = (t * 37) % (7680 - 512);
            let mut buf = noise(&mut rng, 7680, 1.0);
            buf[k..k + 512].iter_mut().zip(&seq.samples).for_each(|(x, s)| *x += s);
            if detect_sync(&buf, &seq).unwrap().is_some_and(|o| o.offset == k) {
                exact += 1;
            }
        }
        assert!(exact >= 198, "{exact}");
    }

    #[test]
    fn beacon_tag_round_trip_and_noise_rejection() {
        let num = Numerology::default();
        let seq = SyncSequence::for_link(LinkType::Sidelink, &num);
        let beacon = build_beacon(&seq, SIDELINK_TAG, &num).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut buf = noise(&mut rng, 7680, 0.5);
        let rot = Complex64::from_polar(0.7, 1.1);
        buf[2000..3024].iter_mut().zip(&beacon).for_each(|(x, s)| *x += s * rot);
        let found = detect_sync(&buf, &seq).unwrap().unwrap();
        assert_eq!(found.offset, 2000);
        assert_eq!(read_beacon_tag(&buf, &found, &num), Some(SIDELINK_TAG));

        let mut accepted = 0;
        for _ in 0..100 {
            let buf = noise(&mut rng, 7680, 1.0);
            if let Some(o) = detect_sync(&buf, &seq).unwrap() {
                if read_beacon_tag(&buf, &o, &num) == Some(SIDELINK_TAG) {
                    accepted += 1;
                }
            }
        }
        assert_eq!(accepted, 0);
        assert!(build_beacon(&seq, 1 << 24, &num).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn offset_is_shift_equivariant(k in 0usize..3000, s in 0usize..3000, seed in 0u64..1000) {
            let num = Numerology::default();
            let seq = SyncSequence::for_link(LinkType::Sidelink, &num);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut base = noise(&mut rng, 4096, 0.3);
            base[k..k + 512].iter_mut().zip(&seq.samples).for_each(|(x, v)| *x += v);
            let mut shifted = noise(&mut rng, s, 0.3);
            shifted.extend_from_slice(&base);
            let a = detect_sync(&base, &seq).unwrap().unwrap();
            let b = detect_sync(&shifted, &seq).unwrap().unwrap();
            proptest::prop_assert_eq!(b.offset, a.offset + s);
        }
    }
}
