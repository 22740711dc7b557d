use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::channels::ChannelSet;
use super::config::{Fidelity, RadioParams, WorldConfig};
use super::mode::{select_mode, Mode};
use crate::channel::apply_awgn;
use crate::error::Result;
use crate::link::{LinkType, McsTable};
use crate::phy::sync::{DOWNLINK_TAG, SIDELINK_TAG};
use crate::phy::{
    attach_crc, build_beacon, build_pdsch_subframe, build_pssch_subframe, decode_pdsch_subframe, decode_pssch_subframe,
    detect_sync, ofdm_demodulate, ofdm_modulate, read_beacon_tag, Complex64, Numerology, SampleBuffer, Sci,
    SyncSequence, TransportBlock,
};

const STREAM_PAYLOAD: u64 = 0;
const STREAM_RELAY_DL_SNR: u64 = 1;
const STREAM_REMOTE_DL_SNR: u64 = 2;
const STREAM_REMOTE_SL_SNR: u64 = 3;
const STREAM_RELAY_DL_RX: u64 = 4;
const STREAM_REMOTE_RX: u64 = 5;
const STREAM_RELAY_SYNC: u64 = 6;
const STREAM_REMOTE_SYNC: u64 = 7;

/// Generator for one random process in one subframe, independent of how
/// many draws other processes made.
fn subframe_rng(seed: u64, subframe: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((subframe << 8) | stream);
    rng
}

fn random_bits(rng: &mut impl RngCore, n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(n + 63);
    while out.len() < n {
        let w = rng.next_u64();
        out.extend((0..64).map(|i| ((w >> i) & 1) as u8));
    }
    out.truncate(n);
    out
}

/// Receiver synchronization state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SyncState {
    /// Receiver program starting; nothing is received.
    Booting {
        remaining: u64,
    },
    Searching,
    Synchronized {
        offset: usize,
    },
}

/// Runs the sync detector for `link` over `samples` and validates the tag
/// that follows. Returns the timing offset on success.
pub fn acquire_sync(link: LinkType, samples: &[Complex64], num: &Numerology) -> Result<Option<usize>> {
    let seq = SyncSequence::for_link(link, num);
    let Some(found) = detect_sync(samples, &seq)? else {
        return Ok(None);
    };
    let want = match link {
        LinkType::Downlink => DOWNLINK_TAG,
        LinkType::Sidelink => SIDELINK_TAG,
    };
    Ok((read_beacon_tag(samples, &found, num) == Some(want)).then_some(found.offset))
}

/// A received capture of 4 symbol lengths with the beacon for `link` at a
/// random offset, or noise only when `snr_db` is `None`.
fn sync_capture(link: LinkType, snr_db: Option<f64>, num: &Numerology, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    let mut iq = vec![Complex64::new(0.0, 0.0); 4 * num.fft_size];
    let snr = match snr_db {
        Some(snr) => {
            let seq = SyncSequence::for_link(link, num);
            let tag = match link {
                LinkType::Downlink => DOWNLINK_TAG,
                LinkType::Sidelink => SIDELINK_TAG,
            };
            let beacon = build_beacon(&seq, tag, num)?;
            let offset = rng.random_range(0..=iq.len() - beacon.len());
            iq[offset..offset + beacon.len()].copy_from_slice(&beacon);
            snr
        }
        None => 0.0,
    };
    Ok(apply_awgn(&SampleBuffer::new(iq, num.sample_rate_hz), snr, 1.0, rng)?.iq)
}

/// Part of a downlink transport block carried in a sidelink block.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Segment {
    id: u64,
    offset: usize,
    bits: Vec<u8>,
    total: usize,
}

#[derive(Debug, Clone)]
struct Queued {
    id: u64,
    payload: Vec<u8>,
    sent: usize,
}

/// A downlink transport block that reached the remote UE intact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Delivered {
    /// Subframe in which the eNodeB sent it.
    pub id: u64,
    pub payload: Vec<u8>,
}

/// What the remote UE got in a subframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemoteRx {
    Booting,
    Unsynchronized,
    /// Synchronized but the active link sent nothing.
    Idle,
    Ok,
    Error,
}

/// Cumulative transport block counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub tb_ok: u64,
    pub tb_err: u64,
}

impl Counters {
    fn record(&mut self, ok: bool) {
        if ok {
            self.tb_ok += 1;
        } else {
            self.tb_err += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.tb_ok + self.tb_err
    }
}

/// Cumulative counters of a world since construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WorldCounters {
    pub subframes: u64,
    pub emitted_tbs: u64,
    pub emitted_bits: u64,
    pub relay_dl: Counters,
    pub sidelink_tx: u64,
    pub queue_drops: u64,
    pub remote_dl: Counters,
    pub remote_sl: Counters,
    pub delivered_tbs: u64,
    /// Downlink payload bits that reached the remote UE.
    pub bits_delivered: u64,
    pub mode_switches: u64,
}

/// Outcome of one subframe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub subframe: u64,
    pub mode: Mode,
    /// SNR of the downlink and sidelink at the remote UE.
    pub dl_snr_db: Option<f64>,
    pub sl_snr_db: Option<f64>,
    pub relay_dl_snr_db: Option<f64>,
    pub enodeb_mcs: u8,
    pub sidelink_mcs: u8,
    #[serde(skip)]
    pub emitted: TransportBlock,
    /// Whether the relay decoded the downlink block (`None` while unsynchronized).
    pub relay_dl_ok: Option<bool>,
    pub sidelink_sent: bool,
    pub remote_rx: RemoteRx,
    pub bits_delivered: u64,
    #[serde(skip)]
    pub delivered: Vec<Delivered>,
    pub queue_len: usize,
}

/// eNodeB, relay UE and remote UE on a 1 ms subframe clock.
#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    table: McsTable,
    channels: ChannelSet,
    subframe: u64,
    mode: Mode,
    relay_sync: SyncState,
    remote_sync: SyncState,
    queue: VecDeque<Queued>,
    reassembly: Option<Queued>,
    stall_sidelink: bool,
    counters: WorldCounters,
    window: [(f64, u64); 2],
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let table = config.mcs_table()?;
        let channels = ChannelSet::new(&config)?;
        Ok(Self {
            mode: config.initial_mode,
            table,
            channels,
            subframe: 0,
            relay_sync: SyncState::Searching,
            remote_sync: SyncState::Searching,
            queue: VecDeque::new(),
            reassembly: None,
            stall_sidelink: false,
            counters: WorldCounters::default(),
            window: [(0.0, 0); 2],
            config,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn table(&self) -> &McsTable {
        &self.table
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    /// Index of the next subframe to run.
    pub fn subframe(&self) -> u64 {
        self.subframe
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn counters(&self) -> &WorldCounters {
        &self.counters
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn relay_sync(&self) -> SyncState {
        self.relay_sync
    }

    pub fn remote_sync(&self) -> SyncState {
        self.remote_sync
    }

    /// Holds the sidelink transmitter: the queue keeps filling while the
    /// downlink receiver runs on.
    pub fn stall_sidelink(&mut self, stall: bool) {
        self.stall_sidelink = stall;
    }

    pub fn sidelink_stalled(&self) -> bool {
        self.stall_sidelink
    }

    /// Replaces the radio settings of every node; takes effect next subframe.
    pub fn set_params(&mut self, target: super::Target, params: RadioParams) {
        *self.config.params_mut(target) = params;
    }

    /// Moves the remote UE.
    pub fn set_remote_position(&mut self, pos_cm: f64) {
        self.config.remote_position_cm = pos_cm;
    }

    /// Restarts the remote receiver on `mode`. Returns `false` (and does
    /// nothing) if `mode` is already active.
    pub fn switch_mode(&mut self, mode: Mode) -> bool {
        if mode == self.mode {
            return false;
        }
        self.mode = mode;
        self.reassembly = None;
        self.counters.mode_switches += 1;
        self.remote_sync = if self.config.boot_latency == 0 {
            SyncState::Searching
        } else {
            SyncState::Booting { remaining: self.config.boot_latency }
        };
        true
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        subframe_rng(self.config.seed, self.subframe, stream)
    }

    fn numerology(n_prb: usize) -> Numerology {
        Numerology::lte(n_prb).expect("n_prb validated")
    }

    /// Whether a receiver tuned to `rx` can hear a transmitter set to `tx`.
    fn tuned(tx: &RadioParams, rx: &RadioParams) -> bool {
        tx.frequency_hz == rx.frequency_hz && tx.n_prb == rx.n_prb
    }

    fn adapted_mcs(&self, snr: Option<f64>, tx: &RadioParams, link: LinkType) -> u8 {
        if !self.config.link_adaptation {
            return tx.mcs_index;
        }
        snr.and_then(|s| self.table.max_throughput(s, tx.n_prb, link)).map_or(0, |r| r.mcs)
    }

    /// Advances `state` by one acquisition attempt; `snr` is `None` when
    /// nothing the receiver can hear is on the air.
    fn try_sync(
        state: SyncState,
        link: LinkType,
        snr: Option<f64>,
        num: &Numerology,
        mut rng: ChaCha8Rng,
    ) -> Result<SyncState> {
        Ok(match state {
            SyncState::Booting { remaining } if remaining > 1 => SyncState::Booting { remaining: remaining - 1 },
            SyncState::Booting { .. } => SyncState::Searching,
            SyncState::Searching => {
                let capture = sync_capture(link, snr, num, &mut rng)?;
                match acquire_sync(link, &capture, num)? {
                    Some(offset) => SyncState::Synchronized { offset },
                    None => SyncState::Searching,
                }
            }
            s => s,
        })
    }

    /// Transfers one block; abstract fidelity draws against the BLER model,
    /// bit-true runs the waveform chain.
    #[allow(clippy::too_many_arguments)]
    fn transfer(
        &self,
        link: LinkType,
        tb: &TransportBlock,
        mcs: u8,
        snr: Option<f64>,
        tx: &RadioParams,
        rx: &RadioParams,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool> {
        let Some(snr) = snr else { return Ok(false) };
        if !Self::tuned(tx, rx) {
            return Ok(false);
        }
        if link == LinkType::Downlink && tx.rnti != rx.rnti {
            return Ok(false);
        }
        match self.config.fidelity {
            Fidelity::Abstract => {
                let bler = self.table.bler_for(snr, mcs, link)?;
                let ok = rng.random::<f64>() >= bler;
                Ok(ok && (link == LinkType::Sidelink || tx.cell_id == rx.cell_id))
            }
            Fidelity::BitTrue => {
                let num = Self::numerology(tx.n_prb);
                let grid = match link {
                    LinkType::Downlink => build_pdsch_subframe(tb, mcs, tx.cell_id, &num, &self.table)?,
                    LinkType::Sidelink => {
                        build_pssch_subframe(tb, &Sci::full_allocation(mcs, 0, tx.n_prb), &num, &self.table)?
                    }
                };
                let samples = ofdm_modulate(&grid, &num)?;
                let rx_grid = ofdm_demodulate(&apply_awgn(&samples, snr, 1.0, rng)?, &num)?;
                let decoded = match link {
                    LinkType::Downlink => {
                        decode_pdsch_subframe(&rx_grid, rx.cell_id, &num, &self.table).map(|d| d.crc_ok && d.tb == *tb)
                    }
                    LinkType::Sidelink => {
                        decode_pssch_subframe(&rx_grid, &num, &self.table).map(|d| d.crc_ok && d.tb == *tb)
                    }
                };
                match decoded {
                    Ok(ok) => Ok(ok),
                    Err(crate::Error::Decode(_)) => Ok(false),
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Packs queued downlink blocks into `capacity` payload bits, oldest
    /// first, splitting a block across sidelink blocks when needed.
    fn pack_sidelink(&mut self, capacity: usize) -> Vec<Segment> {
        let mut segments = Vec::new();
        let mut room = capacity;
        while room > 0 {
            let Some(head) = self.queue.front_mut() else { break };
            let take = room.min(head.payload.len() - head.sent);
            segments.push(Segment {
                id: head.id,
                offset: head.sent,
                bits: head.payload[head.sent..head.sent + take].to_vec(),
                total: head.payload.len(),
            });
            head.sent += take;
            room -= take;
            if head.sent == head.payload.len() {
                self.queue.pop_front();
            }
        }
        segments
    }

    fn reassemble(&mut self, segments: Vec<Segment>, delivered: &mut Vec<Delivered>) {
        for seg in segments {
            let current = match self.reassembly.take() {
                Some(r) if r.id == seg.id && r.sent == seg.offset => Some(r),
                _ if seg.offset == 0 => Some(Queued { id: seg.id, payload: Vec::with_capacity(seg.total), sent: 0 }),
                _ => None,
            };
            let Some(mut r) = current else { continue };
            r.payload.extend_from_slice(&seg.bits);
            r.sent += seg.bits.len();
            if r.sent == seg.total {
                delivered.push(Delivered { id: r.id, payload: r.payload });
            } else {
                self.reassembly = Some(r);
            }
        }
    }

    fn evaluate_mode(&mut self) {
        let mean = |(sum, n): (f64, u64)| (n > 0).then(|| sum / n as f64);
        let (dl, sl) = (mean(self.window[0]), mean(self.window[1]));
        self.window = [(0.0, 0); 2];
        if let Some(m) = select_mode(dl, sl, self.mode, self.config.hysteresis_db) {
            self.switch_mode(m);
        }
    }

    /// Runs one subframe: the relay transmits the head of its queue on the
    /// sidelink while decoding the eNodeB's block, which it then enqueues;
    /// the remote UE receives on its active link.
    pub fn step(&mut self) -> Result<StepReport> {
        let c = self.config.clone();
        let pos = c.remote_position_cm;
        let dl_snr = self.channels.sample(LinkType::Downlink, pos, &c.enodeb, &mut self.rng(STREAM_REMOTE_DL_SNR));
        let sl_snr = self.channels.sample(LinkType::Sidelink, pos, &c.relay_sl, &mut self.rng(STREAM_REMOTE_SL_SNR));
        let relay_dl_snr = self.channels.sample(
            LinkType::Downlink,
            c.relay_position_cm,
            &c.enodeb,
            &mut self.rng(STREAM_RELAY_DL_SNR),
        );

        // eNodeB
        let dl_target_snr = match self.mode {
            Mode::Downlink => dl_snr,
            Mode::Sidelink => relay_dl_snr,
        };
        let enodeb_mcs = self.adapted_mcs(dl_target_snr, &c.enodeb, LinkType::Downlink);
        let dl_tbs = self.table.transport_block_bits(enodeb_mcs, c.enodeb.n_prb, LinkType::Downlink)?;
        let emitted = attach_crc(&random_bits(&mut self.rng(STREAM_PAYLOAD), dl_tbs));
        self.counters.emitted_tbs += 1;
        self.counters.emitted_bits += dl_tbs as u64;

        // Relay sidelink transmitter: sends what was queued before this subframe.
        let sidelink_mcs = self.adapted_mcs(sl_snr, &c.relay_sl, LinkType::Sidelink);
        let mut sidelink = None;
        if !self.stall_sidelink && !self.queue.is_empty() {
            let sl_tbs = self.table.transport_block_bits(sidelink_mcs, c.relay_sl.n_prb, LinkType::Sidelink)?;
            let segments = self.pack_sidelink(sl_tbs);
            let mut bits: Vec<u8> = segments.iter().flat_map(|s| s.bits.iter().copied()).collect();
            bits.resize(sl_tbs, 0);
            self.counters.sidelink_tx += 1;
            sidelink = Some((attach_crc(&bits), segments));
        }
        let sidelink_sent = sidelink.is_some();

        // Relay downlink receiver, independent of the sidelink side.
        let relay_heard = Self::tuned(&c.enodeb, &c.relay_dl).then_some(relay_dl_snr).flatten();
        let relay_num = Self::numerology(c.relay_dl.n_prb);
        self.relay_sync =
            Self::try_sync(self.relay_sync, LinkType::Downlink, relay_heard, &relay_num, self.rng(STREAM_RELAY_SYNC))?;
        let mut relay_dl_ok = None;
        if matches!(self.relay_sync, SyncState::Synchronized { .. }) {
            let mut rng = self.rng(STREAM_RELAY_DL_RX);
            let ok = self.transfer(
                LinkType::Downlink,
                &emitted,
                enodeb_mcs,
                relay_dl_snr,
                &c.enodeb,
                &c.relay_dl,
                &mut rng,
            )?;
            self.counters.relay_dl.record(ok);
            relay_dl_ok = Some(ok);
            if ok {
                if self.queue.len() >= c.queue_depth {
                    self.queue.pop_front();
                    self.counters.queue_drops += 1;
                }
                self.queue.push_back(Queued { id: self.subframe, payload: emitted.payload.clone(), sent: 0 });
            }
        }

        // Remote UE.
        let (link, snr, tx) = match self.mode {
            Mode::Downlink => (LinkType::Downlink, dl_snr, &c.enodeb),
            Mode::Sidelink => (LinkType::Sidelink, sl_snr, &c.relay_sl),
        };
        let heard = Self::tuned(tx, &c.remote).then_some(snr).flatten();
        let remote_num = Self::numerology(c.remote.n_prb);
        let was_booting = matches!(self.remote_sync, SyncState::Booting { .. });
        self.remote_sync = Self::try_sync(self.remote_sync, link, heard, &remote_num, self.rng(STREAM_REMOTE_SYNC))?;
        let mut delivered = Vec::new();
        let mut bits_delivered = 0u64;
        let remote_rx = if was_booting {
            RemoteRx::Booting
        } else if !matches!(self.remote_sync, SyncState::Synchronized { .. }) {
            RemoteRx::Unsynchronized
        } else {
            let mut rng = self.rng(STREAM_REMOTE_RX);
            match self.mode {
                Mode::Downlink => {
                    let ok = self.transfer(
                        LinkType::Downlink,
                        &emitted,
                        enodeb_mcs,
                        dl_snr,
                        &c.enodeb,
                        &c.remote,
                        &mut rng,
                    )?;
                    self.counters.remote_dl.record(ok);
                    if ok {
                        bits_delivered = emitted.payload.len() as u64;
                        delivered.push(Delivered { id: self.subframe, payload: emitted.payload.clone() });
                    }
                    if ok {
                        RemoteRx::Ok
                    } else {
                        RemoteRx::Error
                    }
                }
                Mode::Sidelink => match sidelink.take() {
                    None => RemoteRx::Idle,
                    Some((tb, segments)) => {
                        let ok = self.transfer(
                            LinkType::Sidelink,
                            &tb,
                            sidelink_mcs,
                            sl_snr,
                            &c.relay_sl,
                            &c.remote,
                            &mut rng,
                        )?;
                        self.counters.remote_sl.record(ok);
                        if ok {
                            bits_delivered = segments.iter().map(|s| s.bits.len() as u64).sum();
                            self.reassemble(segments, &mut delivered);
                            RemoteRx::Ok
                        } else {
                            self.reassembly = None;
                            RemoteRx::Error
                        }
                    }
                },
            }
        };
        self.counters.bits_delivered += bits_delivered;
        self.counters.delivered_tbs += delivered.len() as u64;

        let report = StepReport {
            subframe: self.subframe,
            mode: self.mode,
            dl_snr_db: dl_snr,
            sl_snr_db: sl_snr,
            relay_dl_snr_db: relay_dl_snr,
            enodeb_mcs,
            sidelink_mcs,
            emitted,
            relay_dl_ok,
            sidelink_sent,
            remote_rx,
            bits_delivered,
            delivered,
            queue_len: self.queue.len(),
        };

        for (slot, snr) in self.window.iter_mut().zip([dl_snr, sl_snr]) {
            if let Some(s) = snr {
                slot.0 += s;
                slot.1 += 1;
            }
        }
        self.subframe += 1;
        self.counters.subframes += 1;
        if c.auto_mode && self.subframe.is_multiple_of(c.mode_window) {
            self.evaluate_mode();
        }
        Ok(report)
    }

    pub fn run(&mut self, subframes: u64) -> Result<Vec<StepReport>> {
        (0..subframes).map(|_| self.step()).collect()
    }
}
