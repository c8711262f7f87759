//! Named parameter matrices used by the bundled configs and the CLI.

use rwa_core::RwaSpec;

/// `(name, rows)` for every built-in fixture.
pub const FIXTURES: [(&str, &[&[f64]]); 5] = [
    ("van-assche", &[&[0.5, 0.5], &[0.5, 0.5]]),
    ("johnson-kotz", &[&[2.0, 2.0], &[2.0, 2.0]]),
    ("corollary", &[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]),
    ("asymmetric", &[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]),
    ("half-integer", &[&[0.5, 1.0], &[2.0, 0.5], &[1.0, 3.0]]),
];

pub fn named(name: &str) -> Option<RwaSpec> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, rows)| RwaSpec::new(rows.iter().map(|r| r.to_vec()).collect()).expect("built-in fixtures are valid"))
}

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

/// Parses `"a,b;c,d"` into rows separated by `;`.
pub fn parse_alphas(text: &str) -> Result<Vec<Vec<f64>>, String> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", v.trim())))
                .collect()
        })
        .collect()
}
