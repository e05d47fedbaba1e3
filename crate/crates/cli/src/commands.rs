use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use fairrank_core::audit::run_audit;
use fairrank_core::dataset::{
    generate_synthetic, load_dataset, read_identities, split_probe_gallery, validate, write_embeddings,
    write_identities, DemographicScheme,
};
use fairrank_core::metrics::{write_distributions_csv, write_hit_ratio_csv, write_matrix_csv};
use fairrank_core::ranker::{
    build_gallery, calibrate_scores, cosine, rank_all, read_rankings, write_rankings, GalleryEntry,
    ThresholdCalibration,
};
use fairrank_core::{EmbeddingRecord, GroupIndex, Metric, RangeTag};

use crate::config::{AuditConfig, Format};
use crate::error::CliError;
use crate::report::{digest, AuditReport, ToolInfo, SCHEMA_VERSION};

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::write(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::write(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn require(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} file {} does not exist", path.display())))
    }
}

fn load_scheme(cfg: &AuditConfig) -> Result<DemographicScheme, CliError> {
    let path = cfg.scheme_path();
    require(&path, "scheme")?;
    DemographicScheme::load(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writes `embeddings.jsonl`, `identities.csv` and `scheme.toml` into the
/// output directory.
pub fn cmd_synth(cfg: &AuditConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.synthetic_spec();
    let ds = generate_synthetic(&spec)?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let paths = [
        dir.join("embeddings.jsonl"),
        dir.join("identities.csv"),
        dir.join("scheme.toml"),
    ];
    write_file(&paths[0], |w| write_embeddings(w, &ds.records))?;
    write_file(&paths[1], |w| write_identities(w, &ds.scheme, ds.identities.values()))?;
    write_file(&paths[2], |w| w.write_all(ds.scheme.to_toml_string().as_bytes()))?;
    info!(
        "synthesized {} identities, {} images",
        ds.identities.len(),
        ds.records.len()
    );
    Ok(paths.to_vec())
}

#[derive(Serialize)]
struct ProbeRef<'a> {
    image_id: &'a str,
    identity_id: &'a str,
}

#[derive(Serialize)]
struct SplitManifest<'a> {
    seed: u64,
    l: usize,
    probe_frac: f64,
    gallery_range: Option<RangeTag>,
    eligible_identities: Vec<&'a str>,
    probes: Vec<ProbeRef<'a>>,
    /// Gallery image ids per enrolled identity, after range filtering.
    gallery: BTreeMap<&'a str, Vec<&'a str>>,
}

#[derive(Serialize)]
struct CalibrationRecord {
    #[serde(flatten)]
    calibration: ThresholdCalibration,
    genuine_pairs: usize,
    impostor_pairs: usize,
}

/// Probe against every enrolled identity; genuine when the identities match.
fn calibrate(
    probes: &[EmbeddingRecord],
    gallery: &[GalleryEntry],
    grid: usize,
) -> Result<Option<CalibrationRecord>, CliError> {
    let mut scored = Vec::with_capacity(probes.len() * gallery.len());
    for p in probes {
        for g in gallery {
            scored.push((cosine(&p.vector, &g.vector)?, p.identity_id == g.identity_id));
        }
    }
    let genuine_pairs = scored.iter().filter(|s| s.1).count();
    let impostor_pairs = scored.len() - genuine_pairs;
    if genuine_pairs == 0 || impostor_pairs == 0 {
        warn!("skipping threshold calibration: {genuine_pairs} genuine and {impostor_pairs} impostor pairs");
        return Ok(None);
    }
    Ok(Some(CalibrationRecord {
        calibration: calibrate_scores(&scored, grid)?,
        genuine_pairs,
        impostor_pairs,
    }))
}

/// Split, enroll and rank. Writes `rankings.jsonl`, `split_manifest.json`
/// and `calibration.json`.
pub fn cmd_rank(cfg: &AuditConfig) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let scheme = load_scheme(cfg)?;
    let (emb, ids) = (cfg.embeddings_path(), cfg.identities_path());
    require(&emb, "embeddings")?;
    require(&ids, "identities")?;
    let ds = load_dataset(&emb, &ids, scheme, cfg.data.normalize)?;
    if let Some(v) = validate(&ds).first() {
        return Err(CliError::Data(format!("{}: {}", v.code.as_str(), v.locator)));
    }
    let split = split_probe_gallery(&ds, &cfg.split)?;
    let gallery_images = split.gallery_in_range(cfg.rank.gallery_range);
    let gallery = build_gallery(&gallery_images)?;
    let depth = cfg.depth();
    if depth > gallery.len() {
        warn!(
            "ranking depth {depth} exceeds the gallery size {}; rankings hold {} entries",
            gallery.len(),
            gallery.len()
        );
    }
    let mut rs = rank_all(&split, &gallery, depth)?;
    rs.gallery_range = cfg.rank.gallery_range;

    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let rankings_path = cfg.rankings_path();
    if let Some(parent) = rankings_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(&rankings_path, |w| write_rankings(w, &rs))?;

    let manifest = SplitManifest {
        seed: cfg.split.seed,
        l: cfg.split.l,
        probe_frac: cfg.split.probe_frac,
        gallery_range: cfg.rank.gallery_range,
        eligible_identities: split.eligible_identities.iter().map(String::as_str).collect(),
        probes: split
            .probes
            .iter()
            .map(|p| ProbeRef {
                image_id: &p.image_id,
                identity_id: &p.identity_id,
            })
            .collect(),
        gallery: gallery_images
            .iter()
            .map(|(id, imgs)| (id.as_str(), imgs.iter().map(|r| r.image_id.as_str()).collect()))
            .collect(),
    };
    write_json(&dir.join("split_manifest.json"), &manifest)?;
    if let Some(cal) = calibrate(&split.probes, &gallery, cfg.rank.calibration_grid)? {
        write_json(&dir.join("calibration.json"), &cal)?;
    }
    info!("ranked {} probes against {} gallery identities", rs.len(), gallery.len());
    Ok(rankings_path)
}

/// Computes the audit report from the rankings file, ranking first if the
/// file is missing.
pub fn cmd_audit(cfg: &AuditConfig) -> Result<AuditReport, CliError> {
    cfg.validate()?;
    let rankings_path = cfg.rankings_path();
    if !rankings_path.exists() {
        info!("{} not found, ranking first", rankings_path.display());
        cmd_rank(cfg)?;
    }
    let scheme = load_scheme(cfg)?;
    let ids_path = cfg.identities_path();
    require(&ids_path, "identities")?;
    let file = File::open(&ids_path).map_err(|e| CliError::read(&ids_path, e))?;
    let infos = read_identities(BufReader::new(file), &scheme)?;
    let index = GroupIndex::new(&scheme, infos.iter())?;

    let file = File::open(&rankings_path).map_err(|e| CliError::read(&rankings_path, e))?;
    let rs = read_rankings(BufReader::new(file), cfg.depth(), cfg.rank.gallery_range)
        .map_err(|e| CliError::Data(format!("{}: {e}", rankings_path.display())))?;
    let results = run_audit(&rs, &index, &cfg.audit_settings())?;

    let mut inputs = BTreeMap::new();
    for (name, path) in [
        ("embeddings", cfg.embeddings_path()),
        ("identities", ids_path),
        ("scheme", cfg.scheme_path()),
        ("rankings", rankings_path),
    ] {
        if path.is_file() {
            inputs.insert(name.to_owned(), digest(&path)?);
        }
    }
    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::current(),
        config: cfg.clone(),
        inputs,
        results,
    };
    create_dir(&cfg.output.dir)?;
    if cfg.output.formats.contains(&Format::Json) {
        write_json(&cfg.report_path(), &report)?;
    }
    if cfg.output.formats.contains(&Format::Csv) {
        write_tables(&cfg.output.dir, &report)?;
    }
    Ok(report)
}

/// Emits plot-ready CSV tables from an existing report.
pub fn cmd_report(cfg: &AuditConfig) -> Result<Vec<PathBuf>, CliError> {
    let report = AuditReport::load(&cfg.report_path())?;
    create_dir(&cfg.output.dir)?;
    write_tables(&cfg.output.dir, &report)
}

/// `exposure_distribution.csv`, `hit_ratio.csv` and one
/// `{metric}_matrix.csv` per metric, using the report's mate setting.
pub fn write_tables(dir: &Path, report: &AuditReport) -> Result<Vec<PathBuf>, CliError> {
    let r = &report.results;
    let mut written = Vec::new();
    let path = dir.join("exposure_distribution.csv");
    write_file(&path, |w| write_distributions_csv(w, &r.exposure_distributions))?;
    written.push(path);
    let path = dir.join("hit_ratio.csv");
    write_file(&path, |w| write_hit_ratio_csv(w, &r.hit_ratio))?;
    written.push(path);
    let exclude = report.config.metrics.exclude_mates;
    for metric in [Metric::Visibility, Metric::Exposure] {
        let m = r
            .matrix(metric, exclude)
            .ok_or_else(|| CliError::Data(format!("report has no {metric} matrix (exclude_mates = {exclude})")))?;
        let path = dir.join(format!("{metric}_matrix.csv"));
        write_file(&path, |w| write_matrix_csv(w, m))?;
        written.push(path);
    }
    Ok(written)
}
