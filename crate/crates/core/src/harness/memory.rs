//! Peak resident set size of the current process, from `/proc/self/status`.

use std::fs;

/// Resets the kernel's high-water mark to the current RSS. Returns false
/// where that is unsupported, in which case peaks are process-lifetime.
pub fn reset_peak() -> bool {
    fs::write("/proc/self/clear_refs", "5").is_ok()
}

/// `VmHWM` in bytes, if available.
pub fn peak_rss_bytes() -> Option<u64> {
    status_field("VmHWM:")
}

/// `VmRSS` in bytes, if available.
pub fn current_rss_bytes() -> Option<u64> {
    status_field("VmRSS:")
}

fn status_field(name: &str) -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with(name))?;
    let kb: u64 = line[name.len()..]
        .trim()
        .trim_end_matches("kB")
        .trim()
        .parse()
        .ok()?;
    Some(kb * 1024)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_is_at_least_current() {
        if let (Some(peak), Some(cur)) = (peak_rss_bytes(), current_rss_bytes()) {
            assert!(peak >= cur / 2);
            assert!(peak > 0);
        }
    }
}
