//! Experiment configuration, scheme manifests and the batch commands behind
//! the CLI.
//!
//! A config is `key = value` lines; `#` starts a comment. Keys:
//!
//! | key | value |
//! |-----|-------|
//! | `scheme` | `degraded`, `interleaved` or `nonbinary` |
//! | `channels` | comma list of `bec:ε`, `bsc:p`, `noiseless`, `file:path` |
//! | `n` | block length, a power of two |
//! | `m` | field degree (default: smallest with `2^m - 1 >= S`) |
//! | `rates` / `thresholds` / `rate_backoff` | per-channel targets, exactly one |
//! | `construction` | `auto`, `surrogate` or `exact` |
//! | `family` | `grs` or `spc` |
//! | `degradation` | `verify` or `surrogate` (degraded scheme only) |
//! | `trials`, `seed`, `permutations`, `workers` | simulation controls |
//! | `depth`, `merge_tol`, `max_classes` | bound computation controls |
//! | `out` | output path |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::DiscreteChannel;
use crate::compound::{
    ascending_capacity_order, compound_lower_bound, erasure_surrogate_sets, parallel_rate_lower,
    parallel_rate_upper, TreeOptions,
};
use crate::error::{usage, Error, Result};
use crate::gf::{FieldSpec, Symbol};
use crate::mds::{FamilyKind, MdsFamily};
use crate::parallel::{
    default_degree, DegradedScheme, InterleavedScheme, NonBinaryScheme, Scheme, SchemeKind,
};
use crate::polar::{Construction, DegradationCheck, InformationSet, Target};
use crate::sim::{evaluate, reports_to_csv, EvalOptions, PermutationSet, TrialReport};

const KEYS: &[&str] = &[
    "scheme",
    "channels",
    "n",
    "m",
    "rates",
    "thresholds",
    "rate_backoff",
    "construction",
    "family",
    "degradation",
    "trials",
    "seed",
    "permutations",
    "workers",
    "depth",
    "merge_tol",
    "max_classes",
    "out",
];

/// How the per-channel targets are given.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Rates(Vec<f64>),
    Thresholds(Vec<f64>),
    /// Rate `C_s - δ` on each channel, floored at zero.
    Backoff(f64),
}

/// Set design for the degraded scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradationMode {
    /// Verify each adjacent pair with a degradation witness.
    Verify,
    /// Design on erasure surrogates ordered by Bhattacharyya parameter.
    Surrogate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SchemeKind,
    pub channel_labels: Vec<String>,
    pub channels: Vec<DiscreteChannel>,
    pub n: usize,
    pub m: Option<u32>,
    pub targets: TargetSpec,
    pub construction: Construction,
    pub family: FamilyKind,
    pub degradation: DegradationMode,
    pub trials: u64,
    pub seed: u64,
    pub permutations: PermutationSet,
    pub workers: usize,
    pub depth: usize,
    pub merge_tol: f64,
    pub max_classes: usize,
    pub out: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Parse(format!("bad value '{v}' for {key}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|t| parse_value(key, t)).collect()
}

/// Parses a channel such as `bec:0.3`; `file:` paths resolve against `base`.
pub fn parse_channel(text: &str, base: &Path) -> Result<DiscreteChannel> {
    let text = text.trim();
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    let num = || parse_value::<f64>("channel parameter", arg);
    let ch = match kind {
        "bec" => DiscreteChannel::bec(num()?),
        "bsc" => DiscreteChannel::bsc(num()?),
        "noiseless" => DiscreteChannel::noiseless(2),
        "file" => {
            let path = base.join(arg);
            let body = std::fs::read_to_string(&path)
                .map_err(|e| Error::Parse(format!("cannot read channel file {}: {e}", path.display())))?;
            return DiscreteChannel::from_text(&body);
        }
        _ => return Err(Error::Parse(format!("unknown channel '{text}'"))),
    };
    ch.map_err(|e| Error::Parse(e.to_string()))
}

impl ExperimentConfig {
    /// Parses a config; `base` anchors relative `file:` channel paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Parse(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            if pairs.iter().any(|(p, _)| p == k) {
                return Err(Error::Parse(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
            pairs.push((k.to_string(), v.trim().to_string()));
        }
        let get = |k: &str| pairs.iter().find(|(p, _)| p == k).map(|(_, v)| v.as_str());
        let need = |k: &str| get(k).ok_or_else(|| Error::Parse(format!("missing key '{k}'")));

        let scheme_text = get("scheme").unwrap_or("degraded");
        let scheme = SchemeKind::parse(scheme_text)
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{scheme_text}'")))?;
        let channel_labels: Vec<String> = need("channels")?.split(',').map(|s| s.trim().to_string()).collect();
        let channels = channel_labels.iter().map(|c| parse_channel(c, base)).collect::<Result<Vec<_>>>()?;
        let n = parse_value("n", need("n")?)?;
        let m = get("m").map(|v| parse_value("m", v)).transpose()?;

        let given: Vec<&str> = ["rates", "thresholds", "rate_backoff"].into_iter().filter(|k| get(k).is_some()).collect();
        if given.len() != 1 {
            return Err(Error::Parse("give exactly one of rates, thresholds, rate_backoff".into()));
        }
        let targets = match given[0] {
            "rates" => TargetSpec::Rates(parse_list("rates", get("rates").unwrap())?),
            "thresholds" => TargetSpec::Thresholds(parse_list("thresholds", get("thresholds").unwrap())?),
            _ => TargetSpec::Backoff(parse_value("rate_backoff", get("rate_backoff").unwrap())?),
        };
        let construction_text = get("construction").unwrap_or("auto");
        let construction = Construction::parse(construction_text)
            .ok_or_else(|| Error::Parse(format!("unknown construction '{construction_text}'")))?;
        let family_text = get("family").unwrap_or("grs");
        let family = FamilyKind::parse(family_text)
            .ok_or_else(|| Error::Parse(format!("unknown family '{family_text}'")))?;
        let degradation = match get("degradation").unwrap_or("verify") {
            "verify" => DegradationMode::Verify,
            "surrogate" => DegradationMode::Surrogate,
            other => return Err(Error::Parse(format!("unknown degradation mode '{other}'"))),
        };
        let defaults = TreeOptions::default();
        let cfg = Self {
            scheme,
            channel_labels,
            channels,
            n,
            m,
            targets,
            construction,
            family,
            degradation,
            trials: get("trials").map(|v| parse_value("trials", v)).transpose()?.unwrap_or(1000),
            seed: get("seed").map(|v| parse_value("seed", v)).transpose()?.unwrap_or(1),
            permutations: get("permutations").map(PermutationSet::parse).transpose()?.unwrap_or(PermutationSet::All),
            workers: get("workers").map(|v| parse_value("workers", v)).transpose()?.unwrap_or(0),
            depth: get("depth").map(|v| parse_value("depth", v)).transpose()?.unwrap_or(4),
            merge_tol: get("merge_tol").map(|v| parse_value("merge_tol", v)).transpose()?.unwrap_or(defaults.merge_tol),
            max_classes: get("max_classes")
                .map(|v| parse_value("max_classes", v))
                .transpose()?
                .unwrap_or(defaults.max_classes),
            out: get("out").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        let s = self.channels.len();
        let check_len = |v: &[f64]| {
            if v.len() != s {
                return Err(Error::Parse(format!("{} targets for {s} channels", v.len())));
            }
            Ok(())
        };
        match &self.targets {
            TargetSpec::Rates(v) | TargetSpec::Thresholds(v) => check_len(v)?,
            TargetSpec::Backoff(d) if !(d.is_finite() && *d >= 0.0) => {
                return Err(Error::Parse(format!("rate_backoff {d} must be nonnegative")))
            }
            TargetSpec::Backoff(_) => {}
        }
        if self.trials == 0 {
            return Err(Error::Parse("trials must be positive".into()));
        }
        if !(self.merge_tol.is_finite() && self.merge_tol >= 0.0) || self.max_classes == 0 {
            return Err(Error::Parse("merge_tol must be nonnegative and max_classes positive".into()));
        }
        Ok(())
    }

    /// Targets per channel in config order.
    pub fn target_list(&self) -> Vec<Target> {
        match &self.targets {
            TargetSpec::Rates(v) => v.iter().map(|&r| Target::Rate(r)).collect(),
            TargetSpec::Thresholds(v) => v.iter().map(|&t| Target::Threshold(t)).collect(),
            TargetSpec::Backoff(d) => self
                .channels
                .iter()
                .map(|c| Target::Rate((c.capacity_uniform() - d).max(0.0)))
                .collect(),
        }
    }

    pub fn tree_options(&self) -> TreeOptions {
        TreeOptions { merge_tol: self.merge_tol, max_classes: self.max_classes, ..TreeOptions::default() }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            permutations: self.permutations.clone(),
            trials: self.trials,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

/// Builds the scheme a config describes.
pub fn build_scheme(cfg: &ExperimentConfig) -> Result<Scheme> {
    let targets = cfg.target_list();
    let s = cfg.channels.len();
    if s == 0 {
        return usage("no channels given");
    }
    let m = cfg.m.unwrap_or_else(|| default_degree(s));
    let family = |spec_s: usize| MdsFamily::new(FieldSpec::new(m)?, spec_s, cfg.family);
    match cfg.scheme {
        SchemeKind::Degraded => {
            let scheme = match cfg.degradation {
                DegradationMode::Verify => {
                    DegradedScheme::build(&cfg.channels, cfg.n, &targets, cfg.construction, Some(m), DegradationCheck::Verify)?.0
                }
                DegradationMode::Surrogate => {
                    let b: Vec<f64> = cfg.channels.iter().map(DiscreteChannel::bhattacharyya).collect();
                    let mut order: Vec<usize> = (0..s).collect();
                    order.sort_by(|&x, &y| b[x].total_cmp(&b[y]).then(x.cmp(&y)));
                    let chans: Vec<DiscreteChannel> = order.iter().map(|&i| cfg.channels[i].clone()).collect();
                    let ts: Vec<Target> = order.iter().map(|&i| targets[i]).collect();
                    let sets = erasure_surrogate_sets(&chans, cfg.n, &ts, m as usize)?;
                    let frozen = vec![0; cfg.n - sets[0].len()];
                    DegradedScheme::new(chans, sets, m, FamilyKind::Grs, frozen)?
                }
            };
            Ok(Scheme::Degraded(scheme.with_family(family(s)?)?))
        }
        SchemeKind::Interleaved => {
            let scheme = InterleavedScheme::build(&cfg.channels, cfg.n, &targets, cfg.construction, Some(m))?;
            Ok(Scheme::Interleaved(scheme.with_family(family(s)?)?))
        }
        SchemeKind::NonBinary => {
            let scheme = NonBinaryScheme::build(&cfg.channels, cfg.n, &targets, cfg.construction, Some(m))?;
            Ok(Scheme::NonBinary(scheme.with_family(family(s)?)?))
        }
    }
}

const MANIFEST_MAGIC: &str = "parpolar-manifest 1";

/// Text form of a scheme. Probabilities use the shortest round-trip
/// representation, so [`read_manifest`] rebuilds the scheme exactly.
pub fn write_manifest(scheme: &Scheme) -> String {
    let family = scheme.family();
    let spec = family.spec();
    let mut s = String::new();
    let _ = writeln!(s, "{MANIFEST_MAGIC}");
    let _ = writeln!(s, "scheme {}", scheme.kind().name());
    let _ = writeln!(s, "channels {}", scheme.num_channels());
    let _ = writeln!(s, "n {}", scheme.block_len());
    let _ = writeln!(s, "m {}", spec.degree());
    let _ = writeln!(s, "poly {}", spec.poly());
    let _ = writeln!(s, "family {}", family.kind().name());
    let points: Vec<String> = family.points().iter().map(Symbol::to_string).collect();
    let _ = writeln!(s, "points {}", points.join(" "));
    if let Scheme::Degraded(d) = scheme {
        let bits: String = d.frozen().iter().map(|b| char::from(b'0' + b)).collect();
        let _ = writeln!(s, "frozen {}", if bits.is_empty() { "-" } else { &bits });
    }
    for (t, ch) in scheme.channels().iter().enumerate() {
        let _ = writeln!(s, "channel {t} {}", ch.to_text().split_whitespace().collect::<Vec<_>>().join(" "));
    }
    for (t, set) in scheme.sets().iter().enumerate() {
        let _ = writeln!(s, "set {t} {}", set.to_text());
    }
    s
}

pub fn read_manifest(text: &str) -> Result<Scheme> {
    let bad = |msg: String| Error::Parse(format!("manifest: {msg}"));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(MANIFEST_MAGIC) {
        return Err(bad("missing header".into()));
    }
    let mut field = |name: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad(format!("missing '{name}'")))?;
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        if k != name {
            return Err(bad(format!("expected '{name}', found '{k}'")));
        }
        Ok(v.trim().to_string())
    };
    let num = |name: &str, v: &str| -> Result<u64> { v.parse().map_err(|_| bad(format!("bad {name} '{v}'"))) };
    let kind_text = field("scheme")?;
    let kind = SchemeKind::parse(&kind_text).ok_or_else(|| bad(format!("unknown scheme '{kind_text}'")))?;
    let s = num("channels", &field("channels")?)? as usize;
    let n = num("n", &field("n")?)? as usize;
    let m = num("m", &field("m")?)? as u32;
    let poly = num("poly", &field("poly")?)? as u32;
    let family_text = field("family")?;
    let family_kind = FamilyKind::parse(&family_text).ok_or_else(|| bad(format!("unknown family '{family_text}'")))?;
    let points = field("points")?
        .split_whitespace()
        .map(|t| num("point", t).map(|v| v as Symbol))
        .collect::<Result<Vec<_>>>()?;
    let frozen = if kind == SchemeKind::Degraded {
        let f = field("frozen")?;
        if f == "-" {
            Vec::new()
        } else {
            f.bytes()
                .map(|b| match b {
                    b'0' => Ok(0),
                    b'1' => Ok(1),
                    _ => Err(bad("frozen bits must be 0 or 1".into())),
                })
                .collect::<Result<Vec<u8>>>()?
        }
    } else {
        Vec::new()
    };
    let mut channels = Vec::with_capacity(s);
    for t in 0..s {
        let v = field("channel")?;
        let (idx, body) = v.split_once(' ').ok_or_else(|| bad("empty channel line".into()))?;
        if num("channel index", idx)? as usize != t {
            return Err(bad(format!("channel {t} out of order")));
        }
        channels.push(DiscreteChannel::from_text(body)?);
    }
    let mut sets = Vec::with_capacity(s);
    for t in 0..s {
        let v = field("set")?;
        let (idx, body) = v.split_once(' ').ok_or_else(|| bad("empty set line".into()))?;
        if num("set index", idx)? as usize != t {
            return Err(bad(format!("set {t} out of order")));
        }
        let set = InformationSet::from_text(body)?;
        if set.block_len() != n {
            return Err(bad(format!("set {t} has block length {}, expected {n}", set.block_len())));
        }
        sets.push(set);
    }
    if lines.next().is_some() {
        return Err(bad("trailing content".into()));
    }
    let spec = FieldSpec::with_poly(m, poly)?;
    let family = MdsFamily::with_points(spec, points, family_kind)?;
    let build = || -> Result<Scheme> {
        Ok(match kind {
            SchemeKind::Degraded => {
                Scheme::Degraded(DegradedScheme::new(channels, sets, m, family_kind, frozen)?.with_family(family)?)
            }
            SchemeKind::Interleaved => {
                Scheme::Interleaved(InterleavedScheme::new(channels, sets, m, family_kind)?.with_family(family)?)
            }
            SchemeKind::NonBinary => {
                Scheme::NonBinary(NonBinaryScheme::new(channels, sets, m, family_kind)?.with_family(family)?)
            }
        })
    };
    build().map_err(|e| match e {
        Error::Usage(msg) => bad(msg),
        other => other,
    })
}

/// One line per channel plus the total.
pub fn scheme_summary(scheme: &Scheme) -> String {
    let mut s = format!(
        "scheme {} S={} n={} m={}\n",
        scheme.kind().name(),
        scheme.num_channels(),
        scheme.block_len(),
        scheme.spec().degree()
    );
    for (t, (set, ch)) in scheme.sets().iter().zip(scheme.channels()).enumerate() {
        let _ = writeln!(
            s,
            "channel {t}: |A| = {} capacity = {:.6} bhattacharyya = {:.6}",
            set.len(),
            ch.capacity_uniform(),
            ch.bhattacharyya()
        );
    }
    let _ = writeln!(s, "rate {:.6}", scheme.rate());
    s
}

/// Builds the scheme and returns it together with its manifest text.
pub fn cmd_construct(cfg: &ExperimentConfig) -> Result<(Scheme, String)> {
    let scheme = build_scheme(cfg)?;
    let text = write_manifest(&scheme);
    Ok((scheme, text))
}

fn channel_key(ch: &DiscreteChannel) -> String {
    ch.to_text()
}

/// Checks the manifest against the config: scheme kind, block length and the
/// channel list up to order.
pub fn check_manifest(cfg: &ExperimentConfig, scheme: &Scheme) -> Result<()> {
    if scheme.kind() != cfg.scheme {
        return usage(format!("manifest is a {} scheme, config asks for {}", scheme.kind().name(), cfg.scheme.name()));
    }
    if scheme.block_len() != cfg.n {
        return usage(format!("manifest block length {} differs from config n = {}", scheme.block_len(), cfg.n));
    }
    let mut a: Vec<String> = scheme.channels().iter().map(channel_key).collect();
    let mut b: Vec<String> = cfg.channels.iter().map(channel_key).collect();
    a.sort();
    b.sort();
    if a != b {
        return usage("manifest channels differ from config channels");
    }
    Ok(())
}

/// Simulates the manifest's scheme over its own channels.
pub fn cmd_simulate(cfg: &ExperimentConfig, scheme: &Scheme) -> Result<(Vec<TrialReport>, String)> {
    check_manifest(cfg, scheme)?;
    let reports = evaluate(scheme, scheme.channels(), &cfg.eval_options())?;
    let csv = reports_to_csv(&reports);
    Ok((reports, csv))
}

pub const BOUNDS_HEADER: &str = "k,compound_lower,parallel_lower,parallel_upper,merge_tol,merge_slack";

/// Bound table for every depth `0..=cfg.depth`, channels in ascending
/// capacity order.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<String> {
    let opts = cfg.tree_options();
    if cfg.depth > opts.depth_cap {
        return Err(Error::Resource(format!("depth {} exceeds the cap {}", cfg.depth, opts.depth_cap)));
    }
    let order = ascending_capacity_order(&cfg.channels);
    let ordered: Vec<DiscreteChannel> = order.iter().map(|&i| cfg.channels[i].clone()).collect();
    let mut s = String::from(BOUNDS_HEADER);
    s.push('\n');
    for k in 0..=cfg.depth {
        let lower = compound_lower_bound(&ordered, k, &opts)?;
        let plower = parallel_rate_lower(&ordered, k, &opts)?;
        let upper = parallel_rate_upper(&ordered, k, &opts)?;
        let _ = writeln!(s, "{k},{lower:.9},{plower:.9},{:.9},{:e},{:.3e}", upper.value, cfg.merge_tol, upper.slack);
    }
    Ok(s)
}

/// Short end-to-end check: noiseless round trips of all three schemes over
/// every permutation of three channels, and manifest round trips. Returns
/// one line per check.
pub fn selftest() -> Result<Vec<(String, bool)>> {
    let mut out = Vec::new();
    let base = Path::new(".");
    for (kind, extra) in [("degraded", "rates = 0.75, 0.5, 0.25"), ("interleaved", "rates = 0.5, 0.75, 0.25"), ("nonbinary", "rates = 0.5, 0.25, 0.75")] {
        let text = format!("scheme = {kind}\nchannels = noiseless, noiseless, noiseless\nn = 16\n{extra}\ntrials = 8\nseed = 3\n");
        let cfg = ExperimentConfig::parse(&text, base)?;
        let (scheme, manifest) = cmd_construct(&cfg)?;
        let reread = read_manifest(&manifest)?;
        out.push((format!("{kind} manifest round trip"), reread == scheme && write_manifest(&reread) == manifest));
        let (reports, _) = cmd_simulate(&cfg, &scheme)?;
        out.push((format!("{kind} noiseless over all permutations"), reports.len() == 6 && reports.iter().all(|r| r.errors == 0)));
    }
    Ok(out)
}
