//! Network topology, noise profile and Rayleigh block-fading channels.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::seed::{self, tag};
use crate::{Error, Result};

/// Hop structure of a multi-hop network with a single source.
///
/// `hop_sizes[b]` is the number of receiving nodes at hop `b`; the last entry
/// is the number of end users, which is also the number of messages.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    hop_sizes: Vec<usize>,
}

impl Topology {
    pub fn new(hop_sizes: Vec<usize>) -> Result<Self> {
        if hop_sizes.len() < 2 {
            return Err(Error::InvalidTopology(format!("need at least 2 hops, got {}", hop_sizes.len())));
        }
        if hop_sizes.contains(&0) {
            return Err(Error::InvalidTopology("every hop needs at least one node".into()));
        }
        Ok(Topology { hop_sizes })
    }

    /// Parses the `1x2x2` notation (leading `1` is the source).
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.split(['x', 'X', '×']);
        if parts.next().map(str::trim) != Some("1") {
            return Err(Error::InvalidTopology(format!("'{spec}' must start with the source '1'")));
        }
        let sizes = parts
            .map(|p| p.trim().parse::<usize>())
            .collect::<core::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidTopology(format!("cannot parse '{spec}'")))?;
        Topology::new(sizes)
    }

    pub fn num_hops(&self) -> usize {
        self.hop_sizes.len()
    }

    pub fn hop_sizes(&self) -> &[usize] {
        &self.hop_sizes
    }

    pub fn hop_size(&self, hop: usize) -> usize {
        self.hop_sizes[hop]
    }

    pub fn end_users(&self) -> usize {
        self.hop_sizes[self.hop_sizes.len() - 1]
    }

    /// Transmitters feeding hop `hop`: the source for hop 0, otherwise the
    /// relays of the previous hop.
    pub fn transmitters(&self, hop: usize) -> usize {
        if hop == 0 {
            1
        } else {
            self.hop_sizes[hop - 1]
        }
    }

    /// Rows of the stacked power matrix: one per relay plus the source.
    pub fn stacked_rows(&self) -> usize {
        1 + self.hop_sizes[..self.hop_sizes.len() - 1].iter().sum::<usize>()
    }

    /// First row of the power block used by the transmitters of `hop`.
    pub fn block_offset(&self, hop: usize) -> usize {
        if hop == 0 {
            self.stacked_rows() - 1
        } else {
            self.hop_sizes[..hop - 1].iter().sum()
        }
    }

    pub fn link_count(&self) -> usize {
        (0..self.num_hops()).map(|b| self.transmitters(b) * self.hop_sizes[b]).sum()
    }

    pub fn fingerprint(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("1")?;
        for m in &self.hop_sizes {
            write!(f, "x{m}")?;
        }
        Ok(())
    }
}

/// Per-hop receiver noise variances and the prior channel variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    hop_noise_vars: Vec<f64>,
    channel_var: f64,
}

impl NoiseProfile {
    pub fn new(hop_noise_vars: Vec<f64>, channel_var: f64) -> Result<Self> {
        if hop_noise_vars.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("noise variances must be finite and positive".into()));
        }
        Self::checked(hop_noise_vars, channel_var)
    }

    /// Zero receiver noise. Only meaningful for estimation-limit checks; rates
    /// of zero-gain links are reported as 0 in that case.
    pub fn noiseless(num_hops: usize, channel_var: f64) -> Result<Self> {
        Self::checked(alloc::vec![0.0; num_hops], channel_var)
    }

    fn checked(hop_noise_vars: Vec<f64>, channel_var: f64) -> Result<Self> {
        if !(channel_var.is_finite() && channel_var > 0.0) {
            return Err(Error::Config("channel variance must be finite and positive".into()));
        }
        Ok(NoiseProfile { hop_noise_vars, channel_var })
    }

    /// Same noise level on every hop, `σ² = 10^(dB/10)`.
    pub fn uniform_db(num_hops: usize, db: f64, channel_var: f64) -> Result<Self> {
        Self::new(alloc::vec![db_to_linear(db); num_hops], channel_var)
    }

    pub fn hop_noise_vars(&self) -> &[f64] {
        &self.hop_noise_vars
    }

    pub fn hop_var(&self, hop: usize) -> f64 {
        self.hop_noise_vars[hop]
    }

    pub fn channel_var(&self) -> f64 {
        self.channel_var
    }

    /// Every hop variance multiplied by `factor` (`factor = 0` gives a
    /// noiseless profile).
    pub fn scaled(&self, factor: f64) -> NoiseProfile {
        NoiseProfile {
            hop_noise_vars: self.hop_noise_vars.iter().map(|v| v * factor).collect(),
            channel_var: self.channel_var,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Coefficients of one multiple-access hop, `coeffs[m * receivers + i]` is
/// the channel from transmitter `m` to receiver `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HopChannel {
    transmitters: usize,
    receivers: usize,
    coeffs: Vec<Complex64>,
}

impl HopChannel {
    pub fn new(transmitters: usize, receivers: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != transmitters * receivers {
            return Err(Error::Dimension(format!(
                "{} coefficients for a {transmitters}x{receivers} hop",
                coeffs.len()
            )));
        }
        Ok(HopChannel { transmitters, receivers, coeffs })
    }

    pub fn transmitters(&self) -> usize {
        self.transmitters
    }

    pub fn receivers(&self) -> usize {
        self.receivers
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize) -> Complex64 {
        self.coeffs[m * self.receivers + i]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Channel coefficients of every link for one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    first_hop: Vec<Complex64>,
    later_hops: Vec<HopChannel>,
    block_index: u64,
}

impl ChannelRealization {
    pub fn new(
        topology: &Topology,
        first_hop: Vec<Complex64>,
        later_hops: Vec<HopChannel>,
        block_index: u64,
    ) -> Result<Self> {
        if first_hop.len() != topology.hop_size(0) {
            return Err(Error::Dimension(format!(
                "first hop has {} links, topology {topology} needs {}",
                first_hop.len(),
                topology.hop_size(0)
            )));
        }
        if later_hops.len() != topology.num_hops() - 1 {
            return Err(Error::Dimension(format!(
                "{} multiple-access hops, topology {topology} needs {}",
                later_hops.len(),
                topology.num_hops() - 1
            )));
        }
        for (b, hop) in later_hops.iter().enumerate() {
            let b = b + 1;
            if hop.transmitters != topology.transmitters(b) || hop.receivers != topology.hop_size(b) {
                return Err(Error::Dimension(format!(
                    "hop {b} is {}x{}, topology {topology} needs {}x{}",
                    hop.transmitters,
                    hop.receivers,
                    topology.transmitters(b),
                    topology.hop_size(b)
                )));
            }
        }
        let h = ChannelRealization { first_hop, later_hops, block_index };
        if h.links().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("channel coefficients"));
        }
        Ok(h)
    }

    /// Rebuilds a realization from coefficients in hop-major,
    /// transmitter-major, receiver-major order.
    pub fn from_links(topology: &Topology, links: &[Complex64], block_index: u64) -> Result<Self> {
        if links.len() != topology.link_count() {
            return Err(Error::Dimension(format!(
                "{} links, topology {topology} has {}",
                links.len(),
                topology.link_count()
            )));
        }
        let m1 = topology.hop_size(0);
        let mut at = m1;
        let mut later = Vec::with_capacity(topology.num_hops() - 1);
        for b in 1..topology.num_hops() {
            let (tx, rx) = (topology.transmitters(b), topology.hop_size(b));
            later.push(HopChannel::new(tx, rx, links[at..at + tx * rx].to_vec())?);
            at += tx * rx;
        }
        Self::new(topology, links[..m1].to_vec(), later, block_index)
    }

    pub fn zeros(topology: &Topology) -> Self {
        let links = alloc::vec![Complex64::new(0.0, 0.0); topology.link_count()];
        Self::from_links(topology, &links, 0).expect("shape derived from topology")
    }

    pub fn topology(&self) -> Topology {
        let mut sizes = Vec::with_capacity(1 + self.later_hops.len());
        sizes.push(self.first_hop.len());
        sizes.extend(self.later_hops.iter().map(|h| h.receivers));
        Topology { hop_sizes: sizes }
    }

    pub fn num_hops(&self) -> usize {
        1 + self.later_hops.len()
    }

    /// Number of messages (= end users).
    pub fn messages(&self) -> usize {
        self.later_hops.last().map_or(self.first_hop.len(), |h| h.receivers)
    }

    pub fn first_hop(&self) -> &[Complex64] {
        &self.first_hop
    }

    /// Multiple-access hop `hop` (`hop >= 1`).
    pub fn hop(&self, hop: usize) -> &HopChannel {
        &self.later_hops[hop - 1]
    }

    pub fn later_hops(&self) -> &[HopChannel] {
        &self.later_hops
    }

    pub fn block_index(&self) -> u64 {
        self.block_index
    }

    /// All coefficients in hop-major, transmitter-major, receiver-major order.
    pub fn links(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.first_hop.iter().chain(self.later_hops.iter().flat_map(|h| h.coeffs.iter())).copied()
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        ChannelRealization {
            first_hop: self.first_hop.iter().map(|h| h * c).collect(),
            later_hops: self
                .later_hops
                .iter()
                .map(|h| HopChannel {
                    transmitters: h.transmitters,
                    receivers: h.receivers,
                    coeffs: h.coeffs.iter().map(|x| x * c).collect(),
                })
                .collect(),
            block_index: self.block_index,
        }
    }
}

/// One circularly-symmetric complex Gaussian draw with `E|z|² = var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = libm::sqrt(var / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws every link i.i.d. `CN(0, channel_var)` in storage order.
pub fn sample_channel<R: Rng + ?Sized>(
    topology: &Topology,
    channel_var: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(channel_var.is_finite() && channel_var > 0.0) {
        return Err(Error::Config("channel variance must be finite and positive".into()));
    }
    let links: Vec<Complex64> = (0..topology.link_count()).map(|_| complex_gaussian(rng, channel_var)).collect();
    ChannelRealization::from_links(topology, &links, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub channel: ChannelRealization,
    pub noise: NoiseProfile,
}

/// Offline set of past channel realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDataset {
    topology: Topology,
    entries: Vec<DatasetEntry>,
    seed: u64,
}

impl ChannelDataset {
    pub fn new(topology: Topology, entries: Vec<DatasetEntry>, seed: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for e in &entries {
            if e.channel.topology() != topology {
                return Err(Error::Dimension(format!(
                    "entry topology {} differs from dataset topology {topology}",
                    e.channel.topology()
                )));
            }
            if e.noise.hop_noise_vars().len() != topology.num_hops() {
                return Err(Error::Dimension("noise profile hop count".into()));
            }
        }
        Ok(ChannelDataset { topology, entries, seed })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same channels paired with a different noise profile.
    pub fn with_noise(&self, noise: &NoiseProfile) -> Result<Self> {
        let entries =
            self.entries.iter().map(|e| DatasetEntry { channel: e.channel.clone(), noise: noise.clone() }).collect();
        Self::new(self.topology.clone(), entries, self.seed)
    }

    /// The first `count` entries.
    pub fn head(&self, count: usize) -> Result<Self> {
        Self::new(self.topology.clone(), self.entries[..count.min(self.len())].to_vec(), self.seed)
    }
}

/// `count` independent channels, entry `t` drawn from its own stream so the
/// result does not depend on generation order.
pub fn build_dataset(topology: &Topology, noise: &NoiseProfile, count: usize, seed: u64) -> Result<ChannelDataset> {
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    if noise.hop_noise_vars().len() != topology.num_hops() {
        return Err(Error::Dimension("noise profile hop count".into()));
    }
    let entries = (0..count)
        .map(|t| {
            let mut rng = seed::stream(seed, &[tag::CHANNEL, t as u64]);
            let mut channel = sample_channel(topology, noise.channel_var(), &mut rng)?;
            channel.block_index = t as u64;
            Ok(DatasetEntry { channel, noise: noise.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelDataset::new(topology.clone(), entries, seed)
}
