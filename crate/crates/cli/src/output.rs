//! Output helpers: fixed numeric formatting and stdout-or-file writing.

use std::io::Write;
use std::path::Path;

/// Format with 12 significant digits (stable CSV schema contract).
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write `text` to `path`, or to stdout when no path is given. A trailing
/// newline is appended to JSON-style payloads that lack one.
pub fn write_text(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    let mut owned;
    let text = if text.ends_with('\n') {
        text
    } else {
        owned = String::with_capacity(text.len() + 1);
        owned.push_str(text);
        owned.push('\n');
        &owned
    };
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(p, text)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
        }
    }
}
