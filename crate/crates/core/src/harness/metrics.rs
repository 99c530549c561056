//! Scalar comparison metrics: RMS, relative error, amplitude spectrum.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{FricdynError, Result};

/// Root mean square of a series.
pub fn rms(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(FricdynError::EmptySeries);
    }
    let sum: f64 = series.iter().map(|v| v * v).sum();
    Ok((sum / series.len() as f64).sqrt())
}

/// `100 |value - reference| / |reference|`, in percent.
pub fn relative_error(value: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(FricdynError::ZeroReference);
    }
    Ok(100.0 * (value - reference).abs() / reference.abs())
}

/// Single-sided amplitude spectrum with mean removal, no windowing.
/// Returns (frequency, amplitude) pairs up to the Nyquist frequency.
pub fn spectrum(series: &[f64], dt: f64) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 2 {
        return Err(FricdynError::EmptySeries);
    }
    if dt <= 0.0 {
        return Err(FricdynError::InvalidConfig("dt must be positive".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let out = (1..=half)
        .map(|k| {
            let freq = k as f64 / (n as f64 * dt);
            let amp = 2.0 * buf[k].norm() / n as f64;
            (freq, amp)
        })
        .collect();
    Ok(out)
}

/// Local maxima above `rel_threshold` times the tallest peak, in frequency
/// order.
pub fn spectral_peaks(spec: &[(f64, f64)], rel_threshold: f64) -> Vec<(f64, f64)> {
    let max_amp = spec.iter().fold(0.0_f64, |m, &(_, a)| m.max(a));
    let floor = rel_threshold * max_amp;
    let mut peaks = Vec::new();
    for i in 1..spec.len().saturating_sub(1) {
        let (_, a) = spec[i];
        if a >= floor && a > spec[i - 1].1 && a >= spec[i + 1].1 {
            peaks.push(spec[i]);
        }
    }
    peaks
}

/// Writes a spectrum CSV (`frequency,amplitude`).
pub fn write_spectrum_csv(spec: &[(f64, f64)], path: &std::path::Path) -> Result<()> {
    use std::io::Write as _;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "frequency,amplitude")?;
    for (f, a) in spec {
        writeln!(out, "{f:.12e},{a:.12e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rms_examples() {
        assert_relative_eq!(rms(&[3.0; 17]).unwrap(), 3.0);
        assert_relative_eq!(rms(&[-2.5; 5]).unwrap(), 2.5);
        assert_relative_eq!(rms(&[3.0, 4.0]).unwrap(), 12.5_f64.sqrt());
        // sine over whole periods approaches amplitude / sqrt(2)
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 4.0 * i as f64 / n as f64).sin())
            .collect();
        assert!((rms(&xs).unwrap() - 1.0 / 2.0_f64.sqrt()).abs() < 1e-3);
        assert!(rms(&[]).is_err());
    }

    #[test]
    fn rms_is_absolutely_homogeneous() {
        let xs = [1.0, -2.0, 0.5, 3.0];
        let scaled: Vec<f64> = xs.iter().map(|v| -2.5 * v).collect();
        assert_relative_eq!(rms(&scaled).unwrap(), 2.5 * rms(&xs).unwrap());
    }

    #[test]
    fn relative_error_examples() {
        // the reported contact-force rows
        let e = relative_error(1716.0, 1790.0).unwrap();
        assert!((e - 4.13).abs() < 0.005, "{e}");
        let e = relative_error(1786.0, 1790.0).unwrap();
        assert!((e - 0.22).abs() < 0.005, "{e}");
        assert_eq!(relative_error(7.0, 7.0).unwrap(), 0.0);
        assert!(relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn spectrum_finds_pure_and_mixed_tones() {
        let dt = 0.01;
        let n = 4096;
        let f0 = 1.5;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (2.0 * std::f64::consts::PI * f0 * t).sin()
            })
            .collect();
        let spec = spectrum(&xs, dt).unwrap();
        let peaks = spectral_peaks(&spec, 0.05);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].0 - f0).abs() < 0.05);

        let xs2: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (2.0 * std::f64::consts::PI * f0 * t).sin()
                    + 0.5 * (2.0 * std::f64::consts::PI * 3.0 * f0 * t).sin()
            })
            .collect();
        let peaks2 = spectral_peaks(&spectrum(&xs2, dt).unwrap(), 0.05);
        assert_eq!(peaks2.len(), 2);
        assert!((peaks2[1].0 - 3.0 * f0).abs() < 0.05);
    }
}
