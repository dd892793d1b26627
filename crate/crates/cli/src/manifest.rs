//! Flat key=value run manifests, written next to every output.
//!
//! Keys are sorted, values are the shortest round-trip decimal form, lines
//! end in `\n`. A manifest is sufficient to re-run its command; the wall-time
//! keys are informational and ignored on replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;

pub type Manifest = BTreeMap<String, String>;

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn write(path: &Path, entries: &Manifest) -> anyhow::Result<()> {
    let mut body = String::new();
    for (k, v) in entries {
        body.push_str(k);
        body.push('=');
        body.push_str(v);
        body.push('\n');
    }
    fs::write(path, body).with_context(|| format!("writing manifest {}", path.display()))
}

pub fn read(path: &Path) -> anyhow::Result<Manifest> {
    let body =
        fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let mut map = Manifest::new();
    for (lineno, line) in body.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

pub fn get<'a>(map: &'a Manifest, key: &str) -> anyhow::Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .with_context(|| format!("manifest is missing the `{key}` key"))
}

pub fn get_parsed<T: std::str::FromStr>(map: &Manifest, key: &str) -> anyhow::Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    get(map, key)?
        .parse::<T>()
        .with_context(|| format!("manifest key `{key}` has an unparsable value"))
}
