//! CSV tables and greyscale raster previews.

use std::fmt::Write as _;

use crate::attractor::PointCloud;
use crate::boxdim::BoxCountSeries;
use crate::error::{Error, Result};
use crate::measure::MeasureSample;
use crate::model::{GdSystem, Point};
use crate::spectral::PerronData;

const AXES: [&str; 3] = ["x", "y", "z"];

fn point_rows(out: &mut String, points: &[Point], dim: usize) {
    out.push_str(&AXES[..dim].join(","));
    out.push('\n');
    for p in points {
        let row: Vec<String> = p[..dim].iter().map(|c| format!("{c:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

/// One row per point, columns `x[,y[,z]]`.
pub fn cloud_csv(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 24 * cloud.dim + 8);
    point_rows(&mut out, &cloud.points, cloud.dim);
    out
}

pub fn samples_csv(sample: &MeasureSample, dim: usize) -> String {
    let mut out = String::new();
    point_rows(&mut out, &sample.points, dim);
    out
}

/// Columns `delta,count,log_inv_delta,log_count`.
pub fn series_csv(series: &BoxCountSeries) -> String {
    let mut out = String::from("delta,count,log_inv_delta,log_count\n");
    for (&d, &n) in series.deltas.iter().zip(&series.counts) {
        let _ = writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e}",
            d,
            n,
            -d.ln(),
            (n as f64).ln()
        );
    }
    out
}

/// Columns `vertex,weight`.
pub fn perron_csv(sys: &GdSystem, data: &PerronData) -> String {
    let mut out = String::from("vertex,weight\n");
    for (v, w) in sys.vertices().zip(&data.vector) {
        let _ = writeln!(out, "{},{:.16e}", sys.vertex_name(v), w);
    }
    out
}

/// Binary greyscale PGM of a planar or linear cloud. Pixels darken with the
/// logarithm of the number of points they hold, the fullest one black; square
/// pixels, 5% padding around the bounding box. Clouds on the line are
/// drawn as a strip `pixels` wide and a tenth as tall.
pub fn render_pgm(cloud: &PointCloud, pixels: usize) -> Result<Vec<u8>> {
    if pixels < 64 {
        return Err(Error::InvalidParameter(format!(
            "image size {pixels} below 64 pixels"
        )));
    }
    if cloud.dim == 3 {
        return Err(Error::UnsupportedDimension(3));
    }
    let (lo, hi) = cloud.bounds().ok_or(Error::EmptyCloud)?;
    let span_x = hi[0] - lo[0];
    let span_y = if cloud.dim == 2 { hi[1] - lo[1] } else { 0.0 };
    let mut span = span_x.max(span_y);
    if span == 0.0 {
        span = 1.0;
    }
    let pad = 0.05 * span;
    let full = span + 2.0 * pad;
    let scale = pixels as f64 / full;
    let (w, h) = if cloud.dim == 1 {
        (pixels, (pixels / 10).max(1))
    } else {
        let w = ((span_x + 2.0 * pad) * scale).ceil().max(1.0) as usize;
        let h = ((span_y + 2.0 * pad) * scale).ceil().max(1.0) as usize;
        (w.min(pixels), h.min(pixels))
    };
    let mut bins = vec![0u64; w * h];
    for p in &cloud.points {
        let col = (((p[0] - lo[0] + pad) * scale) as usize).min(w - 1);
        if cloud.dim == 1 {
            for row in 0..h {
                bins[row * w + col] += 1;
            }
        } else {
            let up = (((p[1] - lo[1] + pad) * scale) as usize).min(h - 1);
            bins[(h - 1 - up) * w + col] += 1;
        }
    }
    let top = (1.0 + *bins.iter().max().unwrap_or(&1) as f64).ln();
    let raster: Vec<u8> = bins
        .iter()
        .map(|&c| (255.0 * (1.0 - (1.0 + c as f64).ln() / top)).round() as u8)
        .collect();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&raster);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor::CloudRole;

    fn cloud(dim: usize, points: Vec<Point>) -> PointCloud {
        PointCloud::new(None, dim, 0.1, CloudRole::Homogeneous, points)
    }

    #[test]
    fn csv_header_and_precision() {
        let c = cloud(2, vec![[0.5, 0.25, 0.0], [1.0 / 3.0, 0.0, 0.0]]);
        let text = cloud_csv(&c);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![1.0 / 3.0, 0.0]);
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn series_columns() {
        let s = BoxCountSeries {
            deltas: vec![0.5, 0.25],
            counts: vec![3, 5],
            source: crate::boxdim::SeriesSource::Cloud,
            ambient_dim: 1,
        };
        let text = series_csv(&s);
        assert!(text.starts_with("delta,count,"));
        assert!(text.lines().nth(2).unwrap().starts_with("2.5000000000000000e-1,5,"));
    }

    #[test]
    fn pgm_layout() {
        let c = cloud(2, vec![[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]]);
        let img = render_pgm(&c, 100).unwrap();
        assert!(img.starts_with(b"P5\n100 100\n255\n"));
        let body = &img[b"P5\n100 100\n255\n".len()..];
        assert_eq!(body.len(), 100 * 100);
        assert_eq!(body.iter().filter(|&&b| b == 0).count(), 2);
        assert_eq!(body.iter().filter(|&&b| b == 255).count(), 100 * 100 - 2);
        // bottom-left point lands at the padded corner
        let row = 100 - 1 - 4;
        assert_eq!(body[row * 100 + 4], 0);
    }

    #[test]
    fn pgm_density() {
        let c = cloud(2, vec![[0.0, 0.0, 0.0], [1e-6, 0.0, 0.0], [1.0, 1.0, 0.0]]);
        let img = render_pgm(&c, 64).unwrap();
        let mut shades: Vec<u8> = img[b"P5\n64 64\n255\n".len()..].to_vec();
        shades.sort();
        shades.dedup();
        assert_eq!(shades, vec![0, 94, 255]);
    }

    #[test]
    fn pgm_rejects() {
        assert!(matches!(render_pgm(&cloud(2, vec![]), 100), Err(Error::EmptyCloud)));
        assert!(matches!(
            render_pgm(&cloud(3, vec![[0.0; 3]]), 100),
            Err(Error::UnsupportedDimension(3))
        ));
        assert!(render_pgm(&cloud(1, vec![[0.0; 3]]), 10).is_err());
        let strip = render_pgm(&cloud(1, vec![[0.0; 3], [1.0, 0.0, 0.0]]), 64).unwrap();
        assert!(strip.starts_with(b"P5\n64 6\n255\n"));
    }
}
