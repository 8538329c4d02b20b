//! Process-wide resource limits read from the environment.

/// Environment variable holding the memory cap in bytes.
pub const MEMORY_CAP_ENV: &str = "STPROBE_MEMORY_CAP";
/// Environment variable holding the worker-thread cap.
pub const THREADS_ENV: &str = "STPROBE_THREADS";

const DEFAULT_MEMORY_CAP: usize = 2 << 30;

/// Memory budget for large working sets (Krylov bases, profile coefficient
/// vectors). Accepts a plain byte count or a `K`/`M`/`G` suffix.
pub fn memory_cap() -> usize {
    std::env::var(MEMORY_CAP_ENV)
        .ok()
        .and_then(|v| parse_bytes(&v))
        .unwrap_or(DEFAULT_MEMORY_CAP)
}

/// Thread cap from the environment, if set.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

pub fn parse_bytes(text: &str) -> Option<usize> {
    let t = text.trim();
    let (digits, mult) = match t.chars().last()?.to_ascii_uppercase() {
        'K' => (&t[..t.len() - 1], 1usize << 10),
        'M' => (&t[..t.len() - 1], 1 << 20),
        'G' => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    digits.trim().parse::<usize>().ok()?.checked_mul(mult)
}
