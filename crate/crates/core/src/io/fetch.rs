//! SuiteSparse download helper.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Environment variable holding the download URL template.
pub const URL_TEMPLATE_ENV: &str = "STABLEIR_SUITESPARSE_URL";

/// `{group}` and `{name}` are substituted.
pub const DEFAULT_URL_TEMPLATE: &str = "https://sparse.tamu.edu/MM/{group}/{name}.tar.gz";

/// Upper bound on a downloaded archive.
#[cfg(feature = "fetch")]
const MAX_DOWNLOAD_BYTES: u64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    pub name: &'static str,
    pub group: &'static str,
    pub rows: usize,
    pub cols: usize,
    /// Pinned SHA-256 of the downloaded file, lowercase hex.
    pub sha256: Option<&'static str>,
}

/// Matrices known to the fetcher.
pub const MATRIX_INDEX: [IndexEntry; 4] = [
    IndexEntry { name: "rdb1250l", group: "Bai", rows: 1250, cols: 1250, sha256: None },
    IndexEntry { name: "qc2534", group: "Bai", rows: 2534, cols: 2534, sha256: None },
    IndexEntry { name: "heart3", group: "Norris", rows: 2339, cols: 2339, sha256: None },
    IndexEntry { name: "west2021", group: "HB", rows: 2021, cols: 2021, sha256: None },
];

pub fn index_entry(name: &str) -> Result<&'static IndexEntry> {
    MATRIX_INDEX
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::NotInIndex(name.to_string()))
}

#[derive(Clone, Debug, Default)]
pub struct FetchOptions {
    /// Overrides both the environment variable and the default template.
    pub url_template: Option<String>,
    /// Overrides the digest pinned in the index.
    pub sha256: Option<String>,
    /// Use this local file (`.mtx`, `.mtx.gz` or `.tar.gz`) instead of the
    /// network.
    pub offline_fixture: Option<PathBuf>,
    /// Re-download even when the destination file exists.
    pub force: bool,
}

impl FetchOptions {
    pub fn url_for(&self, entry: &IndexEntry) -> String {
        let template = self
            .url_template
            .clone()
            .or_else(|| std::env::var(URL_TEMPLATE_ENV).ok())
            .unwrap_or_else(|| DEFAULT_URL_TEMPLATE.to_string());
        template.replace("{group}", entry.group).replace("{name}", entry.name)
    }
}

/// Reads the size line of a MatrixMarket file without parsing entries.
pub fn matrix_market_dims(path: &Path) -> Result<(usize, usize)> {
    let rd = BufReader::new(std::fs::File::open(path)?);
    for (i, line) in rd.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace().map(str::parse::<usize>);
        return match (it.next(), it.next()) {
            (Some(Ok(r)), Some(Ok(c))) => Ok((r, c)),
            _ => Err(Error::Parse { line: i + 1, msg: "bad size line".into() }),
        };
    }
    Err(Error::Parse { line: 1, msg: "missing size line".into() })
}

#[cfg(feature = "fetch")]
fn verify_dims(path: &Path, entry: &IndexEntry) -> Result<()> {
    let (r, c) = matrix_market_dims(path)?;
    if (r, c) != (entry.rows, entry.cols) {
        return Err(Error::InvalidInput(format!(
            "{} is {r}x{c}, expected {}x{}",
            entry.name, entry.rows, entry.cols
        )));
    }
    Ok(())
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Makes `dest_dir/<name>.mtx` available and returns its path.
///
/// An existing file with the right dimensions is reused. Otherwise the
/// archive is taken from the offline fixture or downloaded, checked against
/// the pinned digest if there is one, unpacked, and its dimensions checked
/// against the index.
#[cfg(feature = "fetch")]
pub fn fetch_suitesparse(name: &str, dest_dir: &Path, opts: &FetchOptions) -> Result<PathBuf> {
    let entry = index_entry(name)?;
    let dest = dest_dir.join(format!("{}.mtx", entry.name));
    if !opts.force && opts.offline_fixture.is_none() && dest.exists() && verify_dims(&dest, entry).is_ok() {
        return Ok(dest);
    }
    let (bytes, source) = match &opts.offline_fixture {
        Some(p) => (std::fs::read(p)?, p.display().to_string()),
        None => {
            let url = opts.url_for(entry);
            log::info!("downloading {url}");
            (download(&url)?, url)
        }
    };
    if let Some(want) = opts.sha256.as_deref().or(entry.sha256) {
        let got = sha256_hex(&bytes);
        if !got.eq_ignore_ascii_case(want) {
            return Err(Error::ChecksumMismatch { path: PathBuf::from(source), expected: want.to_string(), actual: got });
        }
    }
    let mtx = unpack(&bytes, entry.name)?;
    std::fs::create_dir_all(dest_dir)?;
    super::atomic_write(&dest, &mtx)?;
    if let Err(e) = verify_dims(&dest, entry) {
        let _ = std::fs::remove_file(&dest);
        return Err(e);
    }
    Ok(dest)
}

#[cfg(feature = "fetch")]
fn download(url: &str) -> Result<Vec<u8>> {
    if let Some(path) = url.strip_prefix("file://") {
        return Ok(std::fs::read(path)?);
    }
    let mut resp = ureq::get(url).call().map_err(|e| Error::Network(format!("{url}: {e}")))?;
    resp.body_mut()
        .with_config()
        .limit(MAX_DOWNLOAD_BYTES)
        .read_to_vec()
        .map_err(|e| Error::Network(format!("{url}: {e}")))
}

/// Extracts `<name>.mtx` from a `.tar.gz`, gunzips a `.mtx.gz`, or passes
/// plain MatrixMarket text through.
#[cfg(feature = "fetch")]
fn unpack(bytes: &[u8], name: &str) -> Result<Vec<u8>> {
    use std::io::Read;

    let gz = bytes.starts_with(&[0x1f, 0x8b]);
    let raw = if gz {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(bytes).read_to_end(&mut out)?;
        out
    } else {
        bytes.to_vec()
    };
    if raw.starts_with(b"%%MatrixMarket") {
        return Ok(raw);
    }
    let wanted = format!("{name}.mtx");
    let mut archive = tar::Archive::new(raw.as_slice());
    for file in archive.entries()? {
        let mut file = file?;
        let path = file.path()?.into_owned();
        if path.file_name().and_then(|f| f.to_str()) == Some(wanted.as_str()) {
            let mut out = Vec::new();
            file.read_to_end(&mut out)?;
            return Ok(out);
        }
    }
    Err(Error::InvalidInput(format!("archive does not contain {wanted}")))
}
