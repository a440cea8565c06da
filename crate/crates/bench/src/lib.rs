//! Fixtures shared by the benchmarks.

/// Points of `scale * Z^2` inside the disc of radius `r`.
pub fn lattice_disc(scale: f64, r: f64) -> Vec<[f64; 2]> {
    let n = (r / scale).ceil() as i64;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let p = [i as f64 * scale, j as f64 * scale];
            if p[0] * p[0] + p[1] * p[1] <= r * r {
                out.push(p);
            }
        }
    }
    out
}
