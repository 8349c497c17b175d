//! CSV persistence of clusters, impulse responses and statistics, and
//! ingestion of MPC tables.
//!
//! Every file starts with a `# config_hash=<hash> seed=<seed>` comment line
//! followed by a header row. Floats are written in shortest round-trip
//! form, so re-reading a file reproduces the exact values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analytics::MpcSample;
use crate::coeff::{ChannelRealization, EchoGeometry};
use crate::config::Output;
use crate::error::{Error, Result};
use crate::pipeline::SimulationOutput;
use crate::validation::{stats_cdf, LinkStats};
use crate::SPEED_OF_LIGHT;

pub const CLUSTERS_HEADER: [&str; 13] = [
    "link_id",
    "cluster_id",
    "kind",
    "x",
    "y",
    "z",
    "delay_s",
    "power_lin",
    "rcs_dBsm",
    "aoa_rad",
    "zoa_rad",
    "aod_rad",
    "zod_rad",
];
pub const CIR_HEADER: [&str; 7] = [
    "link_id",
    "tap_id",
    "channel",
    "delay_s",
    "re",
    "im",
    "pathloss_dB",
];
pub const STATS_HEADER: [&str; 4] = ["link_id", "rms_ds_s", "rms_asa_rad", "rms_zsa_rad"];
pub const CDF_HEADER: [&str; 3] = ["metric", "value", "probability"];

/// Provenance line written before the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn of(out: &SimulationOutput) -> Self {
        Self {
            config_hash: out.config_hash.clone(),
            seed: out.seed,
        }
    }

    fn line(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }

    /// Parses the first line of an exported file.
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix("# config_hash=")?;
        let (hash, seed) = rest.split_once(" seed=")?;
        Some(Self {
            config_hash: hash.to_string(),
            seed: seed.trim().parse().ok()?,
        })
    }
}

/// CSV writer that has already emitted the provenance line.
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, provenance: Option<&Provenance>, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = BufWriter::new(file);
        if let Some(p) = provenance {
            buf.write_all(p.line().as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Shortest round-trip form; exponent notation for very small or large
/// magnitudes (delays, linear powers).
fn f(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn write_clusters(out: &SimulationOutput, path: &Path) -> Result<()> {
    let mut sink = CsvSink::create(path, Some(&Provenance::of(out)), &CLUSTERS_HEADER)?;
    for r in &out.realizations {
        write_link_clusters(r, &mut sink)?;
    }
    sink.finish()
}

fn write_link_clusters(r: &ChannelRealization, sink: &mut CsvSink) -> Result<()> {
    let id = r.link_id.to_string();
    for (i, m) in r.mapped.iter().enumerate() {
        let p = m.fbs_global();
        let c = &m.base;
        sink.row([
            id.clone(),
            i.to_string(),
            "comm".to_string(),
            f(p.x),
            f(p.y),
            f(p.z),
            f(m.path_length() / SPEED_OF_LIGHT),
            f(c.power),
            String::new(),
            f(c.arrival.azimuth),
            f(c.arrival.zenith),
            f(c.departure.azimuth),
            f(c.departure.zenith),
        ])?;
    }
    let tx = r.mapped.first().map(|m| m.origin);
    for t in &r.targets {
        let c = &t.cluster;
        let p = c.position;
        let mean_rcs = 10.0
            * (t.ray_rcs_dbsm
                .iter()
                .map(|v| 10f64.powf(v / 10.0))
                .sum::<f64>()
                / t.ray_rcs_dbsm.len().max(1) as f64)
                .log10();
        let power: f64 = r
            .sensing_taps
            .iter()
            .filter(|s| r.targets[s.target].global_id == t.global_id)
            .map(|s| s.values[0].norm_sqr())
            .sum();
        // echo directions from the sensing node, when known
        let echo = tx.and_then(|tx| EchoGeometry::new(tx, tx, p).ok());
        let (delay, aoa, zoa, aod, zod) = match echo {
            Some(e) => (
                e.delay(),
                e.directions.arrival.azimuth,
                e.directions.arrival.zenith,
                e.directions.departure.azimuth,
                e.directions.departure.zenith,
            ),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        sink.row([
            id.clone(),
            t.global_id.to_string(),
            c.kind.to_string(),
            f(p.x),
            f(p.y),
            f(p.z),
            f(delay),
            f(power),
            f(mean_rcs),
            f(aoa),
            f(zoa),
            f(aod),
            f(zod),
        ])?;
    }
    Ok(())
}

pub fn write_cir(out: &SimulationOutput, path: &Path) -> Result<()> {
    let mut sink = CsvSink::create(path, Some(&Provenance::of(out)), &CIR_HEADER)?;
    for r in &out.realizations {
        let id = r.link_id.to_string();
        let comm = r
            .comm_taps
            .iter()
            .map(|t| ("comm", t.delay, t.values[0], t.pathloss_db));
        let sens = r
            .sensing_taps
            .iter()
            .map(|t| ("sens", t.delay, t.values[0], t.pathloss_db));
        for (i, (ch, delay, v, pl)) in comm.chain(sens).enumerate() {
            sink.row([
                id.clone(),
                i.to_string(),
                ch.to_string(),
                f(delay),
                f(v.re),
                f(v.im),
                f(pl),
            ])?;
        }
    }
    sink.finish()
}

pub fn link_stats(out: &SimulationOutput) -> Result<Vec<(String, LinkStats)>> {
    out.realizations
        .iter()
        .map(|r| Ok((r.link_id.to_string(), LinkStats::from_realization(r)?)))
        .collect()
}

pub fn write_stats(
    stats: &[(String, LinkStats)],
    provenance: Option<&Provenance>,
    path: &Path,
) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::EmptyInput("link statistics"));
    }
    let mut sink = CsvSink::create(path, provenance, &STATS_HEADER)?;
    for (id, s) in stats {
        sink.row([id.clone(), f(s.rms_ds), f(s.rms_asa), f(s.rms_zsa)])?;
    }
    sink.finish()
}

pub fn write_cdf(stats: &[LinkStats], provenance: Option<&Provenance>, path: &Path) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::EmptyInput("link statistics"));
    }
    let mut sink = CsvSink::create(path, provenance, &CDF_HEADER)?;
    for (metric, v, p) in stats_cdf(stats)? {
        sink.row([metric.to_string(), f(v), f(p)])?;
    }
    sink.finish()
}

/// Writes the requested outputs into `dir`, returning the written paths.
///
/// Statistics files are skipped when the run produced no links.
pub fn export(out: &SimulationOutput, what: &[Output], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let prov = Provenance::of(out);
    let stats = if what
        .iter()
        .any(|o| matches!(o, Output::Stats | Output::Cdf))
        && !out.realizations.is_empty()
    {
        link_stats(out)?
    } else {
        Vec::new()
    };
    let mut written = Vec::new();
    for &o in what {
        let path = dir.join(o.file_name());
        match o {
            Output::Clusters => write_clusters(out, &path)?,
            Output::Cir => write_cir(out, &path)?,
            Output::Stats if !stats.is_empty() => write_stats(&stats, Some(&prov), &path)?,
            Output::Cdf if !stats.is_empty() => {
                let s: Vec<LinkStats> = stats.iter().map(|(_, s)| *s).collect();
                write_cdf(&s, Some(&prov), &path)?
            }
            Output::Stats | Output::Cdf => continue,
        }
        written.push(path);
    }
    Ok(written)
}

/// One row of an MPC table.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcRow {
    /// Group key (`link_id` column, empty if absent).
    pub link_id: String,
    pub sample: MpcSample,
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MalformedTable(format!("MPC table is missing column `{name}`")))
}

/// Reads an MPC table by column name (`delay_s`, `power_lin`, `aoa_rad`,
/// `zoa_rad`, optional `link_id`). Exported cluster tables qualify; rows
/// with non-finite values are rejected.
pub fn read_mpc_csv(path: &Path) -> Result<Vec<MpcRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let idx = [
        column(&headers, "delay_s")?,
        column(&headers, "power_lin")?,
        column(&headers, "aoa_rad")?,
        column(&headers, "zoa_rad")?,
    ];
    let link = headers.iter().position(|h| h.trim() == "link_id");
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut v = [0.0; 4];
        for (slot, &i) in v.iter_mut().zip(&idx) {
            let raw = record.get(i).unwrap_or("").trim();
            *slot = raw.parse::<f64>().map_err(|_| {
                Error::MalformedTable(format!("row {}: `{raw}` is not a number", line + 1))
            })?;
        }
        rows.push(MpcRow {
            link_id: link.and_then(|i| record.get(i)).unwrap_or("").to_string(),
            sample: MpcSample {
                delay: v[0],
                power: v[1],
                azimuth: v[2],
                zenith: v[3],
            },
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("MPC table"));
    }
    Ok(rows)
}

/// Reads the provenance line of an exported file, if present.
pub fn read_provenance(path: &Path) -> Result<Option<Provenance>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().next().and_then(Provenance::parse))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        let p = Provenance {
            config_hash: "0123456789abcdef".into(),
            seed: 42,
        };
        assert_eq!(Provenance::parse(&p.line()), Some(p));
        assert_eq!(Provenance::parse("link_id,x"), None);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [1.0 / 3.0, 2.0e-9 + 1e-24, -0.0, 123456.789e-12, 3e20, 7.0] {
            assert_eq!(f(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
