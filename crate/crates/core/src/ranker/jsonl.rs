//! Rankings as JSONL, one probe per line, scores at 9 significant digits.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::{RankError, Ranking, RankingSet, Result};
use crate::dataset::RangeTag;

/// Shortest decimal form of `x` rounded to 9 significant digits, in the
/// style of C's `%.9g`.
pub fn format_score(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_owned()))
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn write_rankings<W: Write>(mut w: W, rs: &RankingSet) -> std::io::Result<()> {
    let quote = |s: &str| serde_json::to_string(s).expect("strings serialize");
    for r in &rs.rankings {
        write!(
            w,
            "{{\"probe_image_id\":{},\"probe_identity_id\":{},\"entries\":[",
            quote(&r.probe_image_id),
            quote(&r.probe_identity_id)
        )?;
        for (i, e) in r.entries.iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(
                w,
                "{{\"identity_id\":{},\"score\":{}}}",
                quote(&e.identity_id),
                format_score(e.score)
            )?;
        }
        w.write_all(b"]}\n")?;
    }
    w.flush()
}

/// Reads rankings written by [`write_rankings`]. The cutoff `k` is not part
/// of the file, so callers pass it; every ranking must have at most `k`
/// entries, distinct identities and non-increasing scores in `[-1, 1]`.
pub fn read_rankings<R: BufRead>(reader: R, k: usize, gallery_range: Option<RangeTag>) -> Result<RankingSet> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    let mut rankings = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| RankError::Parse { line: line_no, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Ranking = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        if r.entries.len() > k {
            return Err(err(format!("{} entries exceed k = {k}", r.entries.len())));
        }
        let mut seen = HashSet::new();
        for (pos, e) in r.entries.iter().enumerate() {
            if !(-1.0..=1.0).contains(&e.score) {
                return Err(err(format!("score {} outside [-1, 1]", e.score)));
            }
            if pos > 0 && e.score > r.entries[pos - 1].score {
                return Err(err(format!("scores increase at position {}", pos + 1)));
            }
            if !seen.insert(e.identity_id.as_str()) {
                return Err(err(format!("identity_id={} ranked twice", e.identity_id)));
            }
        }
        rankings.push(r);
    }
    Ok(RankingSet {
        rankings,
        k,
        gallery_range,
    })
}
